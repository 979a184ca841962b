#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cli_internal.hpp"
#include "cryocurate/archive.hpp"
#include "cryocurate/cli.hpp"
#include "cryocurate/fetcher.hpp"
#include "cryocurate/net.hpp"

extern char** environ;

namespace cryocurate::cli {
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnrecognizedIdFormat:
    case ErrorCode::InvalidRange:
    case ErrorCode::BadPattern:
    case ErrorCode::InvalidTransform:
      return kUsage;
    case ErrorCode::PermissionDenied:
      return kCantCreate;
    case ErrorCode::IoError:
      return kIoError;
    case ErrorCode::TransportError:
      return kFailure;
    case ErrorCode::NotFoundInAnyDatabase:
    case ErrorCode::NotFetched:
    case ErrorCode::EntryNotFound:
    case ErrorCode::DirectoryNotFound:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::UnknownClassInStrictMode:
      return kNotFound;
    case ErrorCode::NoMatches:
    case ErrorCode::EmptyDataset:
      return kEmpty;
    case ErrorCode::MalformedStructure:
    case ErrorCode::XmlParseError:
    case ErrorCode::DecodeError:
    case ErrorCode::BadMagic:
    case ErrorCode::UnsupportedMode:
    case ErrorCode::TruncatedData:
    case ErrorCode::UnsupportedDtype:
    case ErrorCode::StarSyntaxError:
    case ErrorCode::BadNpyHeader:
    case ErrorCode::FortranOrderUnsupported:
    case ErrorCode::ClassTooSmall:
    case ErrorCode::ShapeMismatch:
      return kDataError;
  }
  return kFailure;
}

Environment process_environment() {
  Environment env;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    const auto eq = kv.find('=');
    if (eq != std::string::npos) env.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return env;
}

fs::path expand_home(const std::string& path, const Environment& env) {
  if (path == "~" || path.rfind("~/", 0) == 0) {
    const auto home = env.find("HOME");
    if (home != env.end() && !home->second.empty()) return fs::path(home->second) / path.substr(std::min<std::size_t>(2, path.size()));
  }
  return path;
}

namespace {

struct Layer {
  std::string name;
  std::map<std::string, std::string> values;
};

double parse_seconds(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v > 0) || !std::isfinite(v))
    raise(ErrorCode::InvalidArgument, key + " must be a positive number of seconds, got '" + text + "'");
  return v;
}

}  // namespace

CliConfig resolve_config(const ConfigOverrides& flags, const Environment& env,
                         const std::optional<fs::path>& config_file) {
  Layer flag_layer{"flag", {}};
  auto put_flag = [&](const char* key, const auto& v) {
    if (v) {
      std::ostringstream s;
      s << *v;
      flag_layer.values[key] = s.str();
    }
  };
  put_flag("archive_url", flags.archive_url);
  put_flag("pdb_url", flags.pdb_url);
  put_flag("alphafold_url", flags.alphafold_url);
  put_flag("uniprot_url", flags.uniprot_url);
  if (flags.cache_dir) flag_layer.values["cache_dir"] = flags.cache_dir->string();
  put_flag("verbosity", flags.verbosity);
  put_flag("connect_timeout", flags.connect_timeout);
  put_flag("read_timeout", flags.read_timeout);

  Layer env_layer{"env", {}};
  const std::pair<const char*, const char*> env_keys[] = {{"CRYOCURATE_ARCHIVE_URL", "archive_url"},
                                                          {"CRYOCURATE_PDB_URL", "pdb_url"},
                                                          {"CRYOCURATE_ALPHAFOLD_URL", "alphafold_url"},
                                                          {"CRYOCURATE_UNIPROT_URL", "uniprot_url"},
                                                          {"CRYOCURATE_CACHE_DIR", "cache_dir"}};
  for (const auto& [var, key] : env_keys)
    if (const auto it = env.find(var); it != env.end() && !it->second.empty()) env_layer.values[key] = it->second;

  std::optional<fs::path> file = config_file;
  if (!file) {
    if (const auto it = env.find("CRYOCURATE_CONFIG"); it != env.end() && !it->second.empty()) {
      file = expand_home(it->second, env);
    } else {
      const auto fallback = expand_home("~/.config/cryocurate/config.ini", env);
      std::error_code ec;
      if (fallback.is_absolute() && fs::is_regular_file(fallback, ec)) file = fallback;
    }
  }
  Layer file_layer;
  if (file) {
    file_layer.name = "file " + file->string();
    pt::ptree tree;
    try {
      pt::read_ini(file->string(), tree);
    } catch (const pt::ini_parser_error& e) {
      std::error_code ec;
      raise(fs::exists(*file, ec) ? ErrorCode::InvalidArgument : ErrorCode::IoError,
            "config file " + file->string() + ": " + e.message());
    }
    const std::pair<const char*, const char*> file_keys[] = {
        {"urls.archive", "archive_url"},       {"urls.pdb", "pdb_url"},
        {"urls.alphafold", "alphafold_url"},   {"urls.uniprot", "uniprot_url"},
        {"cache.dir", "cache_dir"},            {"output.verbosity", "verbosity"},
        {"network.connect_timeout", "connect_timeout"}, {"network.read_timeout", "read_timeout"}};
    for (const auto& [path, key] : file_keys)
      if (const auto v = tree.get_optional<std::string>(path)) file_layer.values[key] = *v;
  }

  const fetcher::Endpoints endpoints;
  Layer defaults{"default",
                 {{"archive_url", archive::kDefaultBaseUrl},
                  {"pdb_url", endpoints.pdb},
                  {"alphafold_url", endpoints.alphafold},
                  {"uniprot_url", endpoints.uniprot},
                  {"cache_dir", ""},
                  {"verbosity", "0"},
                  {"connect_timeout", "10"},
                  {"read_timeout", "60"}}};

  CliConfig c;
  auto pick = [&](const std::string& key) {
    for (const Layer* layer : {&flag_layer, &env_layer, &file_layer, &defaults}) {
      if (const auto it = layer->values.find(key); it != layer->values.end()) {
        c.sources[key] = layer->name;
        return it->second;
      }
    }
    return std::string();
  };
  auto url = [&](const char* key) {
    std::string v = pick(key);
    const auto u = net::parse_url(v);
    if (u.scheme != "http" && u.scheme != "https" && u.scheme != "ftp")
      raise(ErrorCode::InvalidArgument, std::string(key) + " must be an absolute http, https or ftp URL");
    return v;
  };
  c.archive_url = url("archive_url");
  c.pdb_url = url("pdb_url");
  c.alphafold_url = url("alphafold_url");
  c.uniprot_url = url("uniprot_url");
  const std::string cache = pick("cache_dir");
  c.cache_dir = cache.empty() ? fs::path() : expand_home(cache, env);
  const std::string verbosity = pick("verbosity");
  try {
    std::size_t used = 0;
    c.verbosity = std::stoi(verbosity, &used);
    if (used != verbosity.size()) throw std::invalid_argument(verbosity);
  } catch (const std::exception&) {
    raise(ErrorCode::InvalidArgument, "verbosity must be an integer, got '" + verbosity + "'");
  }
  c.connect_timeout = std::chrono::milliseconds(
      static_cast<long long>(std::llround(parse_seconds("connect_timeout", pick("connect_timeout")) * 1000)));
  c.read_timeout = std::chrono::milliseconds(
      static_cast<long long>(std::llround(parse_seconds("read_timeout", pick("read_timeout")) * 1000)));
  return c;
}

std::string CliConfig::describe() const {
  std::ostringstream s;
  auto line = [&](const char* key, const std::string& value) {
    const auto src = sources.find(key);
    s << key << " = " << value << "  (" << (src == sources.end() ? "default" : src->second) << ")\n";
  };
  line("archive_url", archive_url);
  line("pdb_url", pdb_url);
  line("alphafold_url", alphafold_url);
  line("uniprot_url", uniprot_url);
  line("cache_dir", cache_dir.empty() ? "(fetcher default)" : cache_dir.string());
  line("verbosity", std::to_string(verbosity));
  auto seconds = [](std::chrono::milliseconds ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%gs", static_cast<double>(ms.count()) / 1000.0);
    return std::string(buf);
  };
  line("connect_timeout", seconds(connect_timeout));
  line("read_timeout", seconds(read_timeout));
  return s.str();
}

}  // namespace cryocurate::cli
