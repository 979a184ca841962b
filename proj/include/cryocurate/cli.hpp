#pragma once

// The cryocurate command line: fetch, clean, search, download, dataset and
// info subcommands over one configuration. `run` is the whole program minus
// process plumbing, so tests can drive it in-process.

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cryocurate/error.hpp"

namespace cryocurate::cli {

// sysexits-style process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,       // transport errors, partial downloads
  kNotFound = 2,      // id, entry, directory or class does not exist
  kEmpty = 3,         // nothing matched
  kUsage = 64,        // bad flags or arguments
  kDataError = 65,    // malformed input data
  kNoInput = 66,      // an input file is missing
  kCantCreate = 73,   // output location not writable
  kIoError = 74,
};

int exit_code_for(ErrorCode code);

using Environment = std::map<std::string, std::string>;

/// The calling process's environment.
Environment process_environment();

struct CliConfig {
  std::string archive_url;
  std::string pdb_url;
  std::string alphafold_url;
  std::string uniprot_url;
  std::filesystem::path cache_dir;  // empty: the fetcher's default
  int verbosity = 0;
  std::chrono::milliseconds connect_timeout{10000};
  std::chrono::milliseconds read_timeout{60000};
  /// Where each key's value came from: "flag", "env", "file <path>" or "default".
  std::map<std::string, std::string> sources;

  /// One "key = value  (source)" line per key, in a fixed order.
  std::string describe() const;
};

/// Values given on the command line; unset members fall through.
struct ConfigOverrides {
  std::optional<std::string> archive_url, pdb_url, alphafold_url, uniprot_url;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<int> verbosity;
  std::optional<double> connect_timeout, read_timeout;  // seconds
};

/// Precedence is flags, then CRYOCURATE_* environment variables, then the
/// INI file, then built-in defaults. The file is `config_file` if given,
/// else $CRYOCURATE_CONFIG, else ~/.config/cryocurate/config.ini when it
/// exists. Raises InvalidArgument for relative URLs or bad numbers.
CliConfig resolve_config(const ConfigOverrides& flags, const Environment& env,
                         const std::optional<std::filesystem::path>& config_file = std::nullopt);

/// `args` excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Environment& env = process_environment());

}  // namespace cryocurate::cli
