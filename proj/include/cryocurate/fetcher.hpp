#pragma once

// Structure retrieval from the PDB and the AlphaFold database with fallback
// between the two, an on-disk cache and a per-session search history.
//
// Cache layout under the save directory:
//   <dir>/pdb/<PDBID>.<ext>, <dir>/alphafold/<ACCESSION>.<ext>
//   <dir>/uniprot/<ACCESSION>.json   UniProt entries used for cross references
//   <dir>/cache_index.json           resolutions, so repeats need no network
// Files saved with filesave=true are copies placed directly in <dir>.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cryocurate/net.hpp"
#include "cryocurate/structure.hpp"
#include "json.hpp"

namespace cryocurate::fetcher {

enum class DatabaseId { Pdb, Alphafold };

std::string_view to_string(DatabaseId db);
/// Accepts "pdb" and "alphafold" (any case); raises InvalidArgument otherwise.
DatabaseId parse_database(std::string_view name);
DatabaseId other(DatabaseId db);

enum class FileType { Cif, Pdb, Any };

std::string_view to_string(FileType type);
/// Accepts "cif", "pdb" and "any" (any case).
FileType parse_filetype(std::string_view name);

enum class IdKind { PdbId, UniprotAccession };

/// Classifies an identifier: four alphanumerics are a PDB ID, otherwise it
/// must look like a UniProt accession. Raises UnrecognizedIdFormat.
IdKind classify_id(std::string_view id);

struct Endpoints {
  std::string pdb = "https://files.rcsb.org/download";
  std::string alphafold = "https://alphafold.ebi.ac.uk/files";
  std::string uniprot = "https://rest.uniprot.org";
};

struct FetchResult {
  std::optional<std::string> filename;  // set exactly when filesave was requested
  std::string filedata;
  DatabaseId source_db = DatabaseId::Pdb;
  structmodel::StructureFormat actual_filetype = structmodel::StructureFormat::Cif;
  std::filesystem::path cache_path;
};

/// Ids in the order they were first resolved, each with the databases that
/// hold it (PDB listed before AlphaFold).
class SearchHistory {
 public:
  using Entry = std::pair<std::string, std::vector<DatabaseId>>;

  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<DatabaseId>* find(std::string_view id) const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  void record(const std::string& id, const std::vector<DatabaseId>& dbs);

  /// Python-dict style: {'7U6Q': ['pdb'], 'F4HvG8': ['alphafold']}
  std::string to_string() const;

  /// Order-insensitive, like dictionary equality.
  friend bool operator==(const SearchHistory& a, const SearchHistory& b);

 private:
  std::vector<Entry> entries_;
};

struct Resolution {
  DatabaseId db;
  std::string canonical_id;

  friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct ResidueRange {
  int start = 0;
  int end = 0;

  friend bool operator==(const ResidueRange&, const ResidueRange&) = default;
};

struct RemoveOptions {
  bool signal_peptides = false;
  bool hydrogens = false;
  bool water = false;
  bool hetatoms = false;
  std::optional<std::string> output_filename;
};

struct RemoveResult {
  std::filesystem::path output;
  std::size_t atoms_before = 0;
  std::size_t atoms_after = 0;
  /// Options that turned out to be no-ops, with the reason.
  std::vector<std::string> notes;
};

/// "<stem>[_nosignal<A>to<B>][_nohydrogens][_nowater][_nohetatm].<ext>"; a
/// request with nothing to add yields "<stem>_copy.<ext>".
std::string cleaned_filename(const std::string& base_filename, const RemoveOptions& options,
                             std::optional<ResidueRange> signal);

class Fetcher {
 public:
  struct Options {
    DatabaseId default_db = DatabaseId::Pdb;
    std::filesystem::path save_directory;  // empty: ~/.cryocurate/structures
    Endpoints endpoints;
    net::RetryPolicy retry;
    std::shared_ptr<net::Transport> transport;  // null: the default transport
  };

  Fetcher();
  explicit Fetcher(Options options);

  FetchResult get_file(const std::string& id, FileType filetype = FileType::Any, bool filesave = false);
  /// Same as get_file but trying `db` first, whatever the default.
  FetchResult get_file(const std::string& id, FileType filetype, bool filesave, DatabaseId db);

  SearchHistory search_history() const;

  void set_default_db(DatabaseId db);
  DatabaseId default_db() const;

  /// Creates the directory (recursively) and makes it the cache and save
  /// target. Raises PermissionDenied when it cannot be written.
  void set_directory(const std::filesystem::path& path);
  std::filesystem::path directory() const;

  /// Database/ID pairs that may hold `id`, default database first. A
  /// UniProt accession maps to AlphaFold directly and to PDB entries through
  /// its UniProt cross references.
  std::vector<Resolution> resolve_id(const std::string& id);

  /// Signal peptide interval annotated in UniProt, if any.
  std::optional<ResidueRange> fetch_signal_peptide_range(const std::string& accession);

  /// Cleans the structure most recently fetched for `id` and writes the
  /// result next to the saved files. Raises NotFetched when `id` was never
  /// fetched into this directory.
  RemoveResult remove(const std::string& id, const RemoveOptions& options);

 private:
  struct Candidate {
    DatabaseId db;
    std::string canonical_id;
    std::string filename_stem;
  };

  std::optional<Candidate> candidate(DatabaseId db, IdKind kind, const std::string& canon);
  std::string file_url(DatabaseId db, const std::string& canonical_id, structmodel::StructureFormat f) const;
  bool probe(DatabaseId db, IdKind kind, const std::string& canon);
  const nlohmann::json* uniprot_entry(const std::string& accession);
  std::vector<std::string> pdb_cross_references(const std::string& accession);

  nlohmann::json load_index() const;
  void update_index(const std::function<void(nlohmann::json&)>& edit);
  FetchResult from_record(const nlohmann::json& record, const std::string& id, bool filesave);

  mutable std::mutex mutex_;
  Options options_;
  std::filesystem::path directory_;
  SearchHistory history_;
  std::map<std::string, std::optional<nlohmann::json>> uniprot_memo_;
};

}  // namespace cryocurate::fetcher
