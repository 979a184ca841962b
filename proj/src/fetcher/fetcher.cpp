#include "cryocurate/fetcher.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>

#include "cryocurate/error.hpp"
#include "../util/files.hpp"

namespace cryocurate::fetcher {
namespace fs = std::filesystem;
using json = nlohmann::json;
using structmodel::StructureFormat;

namespace {

constexpr const char* kIndexFile = "cache_index.json";

std::vector<StructureFormat> formats_for(FileType t) {
  if (t == FileType::Pdb) return {StructureFormat::Pdb, StructureFormat::Cif};
  return {StructureFormat::Cif, StructureFormat::Pdb};
}

StructureFormat sniff(std::string_view data) {
  const auto first = data.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && data.substr(first, 5) == "data_") return StructureFormat::Cif;
  return StructureFormat::Pdb;
}

fs::path default_directory() {
  const char* home = std::getenv("HOME");
  return fs::path(home ? home : ".") / ".cryocurate" / "structures";
}

std::string index_key(const std::string& canon, FileType t, DatabaseId first) {
  return canon + "|" + std::string(to_string(t)) + "|" + std::string(to_string(first));
}

std::vector<DatabaseId> canonical_order(std::vector<DatabaseId> dbs) {
  std::sort(dbs.begin(), dbs.end());
  dbs.erase(std::unique(dbs.begin(), dbs.end()), dbs.end());
  return dbs;
}

}  // namespace

std::string_view to_string(DatabaseId db) { return db == DatabaseId::Pdb ? "pdb" : "alphafold"; }

DatabaseId parse_database(std::string_view name) {
  const auto n = util::lower(name);
  if (n == "pdb") return DatabaseId::Pdb;
  if (n == "alphafold") return DatabaseId::Alphafold;
  raise(ErrorCode::InvalidArgument, "unknown database '" + std::string(name) + "' (expected pdb or alphafold)");
}

DatabaseId other(DatabaseId db) { return db == DatabaseId::Pdb ? DatabaseId::Alphafold : DatabaseId::Pdb; }

std::string_view to_string(FileType type) {
  switch (type) {
    case FileType::Cif:
      return "cif";
    case FileType::Pdb:
      return "pdb";
    case FileType::Any:
      return "any";
  }
  return "any";
}

FileType parse_filetype(std::string_view name) {
  const auto n = util::lower(name);
  if (n == "cif" || n == "mmcif") return FileType::Cif;
  if (n == "pdb") return FileType::Pdb;
  if (n == "any") return FileType::Any;
  raise(ErrorCode::InvalidArgument, "unknown file type '" + std::string(name) + "' (expected cif, pdb or any)");
}

IdKind classify_id(std::string_view id) {
  static const std::regex pdb("[0-9A-Za-z]{4}");
  static const std::regex uniprot("[OPQopq][0-9][A-Za-z0-9]{3}[0-9]|[A-NR-Za-nr-z][0-9]([A-Za-z][A-Za-z0-9]{2}[0-9]){1,2}");
  const std::string s(id);
  if (std::regex_match(s, pdb)) return IdKind::PdbId;
  if (std::regex_match(s, uniprot)) return IdKind::UniprotAccession;
  raise(ErrorCode::UnrecognizedIdFormat,
        "'" + s + "' is neither a PDB ID nor a UniProt accession");
}

// ------------------------------------------------------------ history ---

const std::vector<DatabaseId>* SearchHistory::find(std::string_view id) const {
  for (const auto& [k, v] : entries_)
    if (k == id) return &v;
  return nullptr;
}

void SearchHistory::record(const std::string& id, const std::vector<DatabaseId>& dbs) {
  for (auto& [k, v] : entries_) {
    if (k == id) {
      auto merged = v;
      merged.insert(merged.end(), dbs.begin(), dbs.end());
      v = canonical_order(std::move(merged));
      return;
    }
  }
  entries_.emplace_back(id, canonical_order(dbs));
}

std::string SearchHistory::to_string() const {
  std::string out = "{";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) out += ", ";
    out += "'" + entries_[i].first + "': [";
    for (std::size_t j = 0; j < entries_[i].second.size(); ++j) {
      if (j) out += ", ";
      out += "'" + std::string(fetcher::to_string(entries_[i].second[j])) + "'";
    }
    out += "]";
  }
  return out + "}";
}

bool operator==(const SearchHistory& a, const SearchHistory& b) {
  auto sorted = [](std::vector<SearchHistory::Entry> e) {
    std::sort(e.begin(), e.end());
    return e;
  };
  return sorted(a.entries_) == sorted(b.entries_);
}

std::string cleaned_filename(const std::string& base_filename, const RemoveOptions& options,
                             std::optional<ResidueRange> signal) {
  const fs::path base(base_filename);
  std::string name = base.stem().string();
  const std::string ext = base.extension().string();
  std::string suffix;
  if (options.signal_peptides && signal)
    suffix += "_nosignal" + std::to_string(signal->start) + "to" + std::to_string(signal->end);
  if (options.hydrogens) suffix += "_nohydrogens";
  if (options.water) suffix += "_nowater";
  if (options.hetatoms) suffix += "_nohetatm";
  if (suffix.empty()) suffix = "_copy";
  return name + suffix + ext;
}

// ------------------------------------------------------------ fetcher ---

Fetcher::Fetcher() : Fetcher(Options{}) {}

Fetcher::Fetcher(Options options) : options_(std::move(options)) {
  if (!options_.transport) options_.transport = net::make_transport();
  set_directory(options_.save_directory.empty() ? default_directory() : options_.save_directory);
}

void Fetcher::set_default_db(DatabaseId db) {
  std::lock_guard lock(mutex_);
  options_.default_db = db;
}

DatabaseId Fetcher::default_db() const {
  std::lock_guard lock(mutex_);
  return options_.default_db;
}

void Fetcher::set_directory(const fs::path& path) {
  util::ensure_writable_directory(path);
  std::lock_guard lock(mutex_);
  directory_ = path;
}

fs::path Fetcher::directory() const {
  std::lock_guard lock(mutex_);
  return directory_;
}

SearchHistory Fetcher::search_history() const {
  std::lock_guard lock(mutex_);
  return history_;
}

json Fetcher::load_index() const {
  const fs::path p = directory() / kIndexFile;
  std::error_code ec;
  if (!fs::exists(p, ec)) return json::object();
  try {
    json j = json::parse(util::read_file(p));
    if (j.is_object()) return j;
  } catch (const std::exception&) {
    // an unreadable index only costs a re-download
  }
  return json::object();
}

void Fetcher::update_index(const std::function<void(json&)>& edit) {
  std::lock_guard lock(mutex_);
  const fs::path p = directory_ / kIndexFile;
  json j = json::object();
  std::error_code ec;
  if (fs::exists(p, ec)) {
    try {
      j = json::parse(util::read_file(p));
      if (!j.is_object()) j = json::object();
    } catch (const std::exception&) {
      j = json::object();
    }
  }
  edit(j);
  util::atomic_write(p, j.dump(1) + "\n");
}

const json* Fetcher::uniprot_entry(const std::string& accession) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = uniprot_memo_.find(accession); it != uniprot_memo_.end())
      return it->second ? &*it->second : nullptr;
  }
  const fs::path cached = directory() / "uniprot" / (accession + ".json");
  std::optional<json> entry;
  std::error_code ec;
  if (fs::exists(cached, ec)) {
    try {
      entry = json::parse(util::read_file(cached));
    } catch (const std::exception&) {
    }
  }
  if (!entry) {
    const std::string url = options_.endpoints.uniprot + "/uniprotkb/" + accession + ".json";
    const auto r = net::request_with_retry(*options_.transport, net::Method::Get, url, options_.retry);
    if (r.status == 200) {
      try {
        entry = json::parse(r.body);
      } catch (const std::exception& e) {
        raise(ErrorCode::TransportError, url + ": malformed UniProt response: " + e.what());
      }
      util::atomic_write(cached, r.body);
    } else if (r.status != 404 && r.status != 400) {
      raise(ErrorCode::TransportError, url + ": unexpected status " + std::to_string(r.status));
    }
  }
  std::lock_guard lock(mutex_);
  const auto [it, inserted] = uniprot_memo_.emplace(accession, std::move(entry));
  return it->second ? &*it->second : nullptr;
}

std::vector<std::string> Fetcher::pdb_cross_references(const std::string& accession) {
  std::vector<std::string> out;
  const json* entry = uniprot_entry(accession);
  if (!entry) return out;
  const auto refs = entry->find("uniProtKBCrossReferences");
  if (refs == entry->end() || !refs->is_array()) return out;
  for (const auto& r : *refs) {
    if (r.value("database", "") != "PDB") continue;
    const std::string id = util::upper(r.value("id", ""));
    if (id.size() == 4 && std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  return out;
}

std::optional<ResidueRange> Fetcher::fetch_signal_peptide_range(const std::string& accession) {
  if (classify_id(accession) != IdKind::UniprotAccession)
    raise(ErrorCode::UnrecognizedIdFormat, "'" + accession + "' is not a UniProt accession");
  const json* entry = uniprot_entry(util::upper(accession));
  if (!entry) return std::nullopt;
  const auto features = entry->find("features");
  if (features == entry->end() || !features->is_array()) return std::nullopt;
  for (const auto& f : *features) {
    if (f.value("type", "") != "Signal") continue;
    try {
      const auto& loc = f.at("location");
      return ResidueRange{loc.at("start").at("value").get<int>(), loc.at("end").at("value").get<int>()};
    } catch (const json::exception&) {
      return std::nullopt;  // unknown boundaries ("?") give nothing to remove
    }
  }
  return std::nullopt;
}

std::vector<Resolution> Fetcher::resolve_id(const std::string& id) {
  const IdKind kind = classify_id(id);
  const std::string canon = util::upper(id);
  if (kind == IdKind::PdbId) return {{DatabaseId::Pdb, canon}};
  std::vector<Resolution> af{{DatabaseId::Alphafold, canon}};
  std::vector<Resolution> pdb;
  for (auto& x : pdb_cross_references(canon)) pdb.push_back({DatabaseId::Pdb, x});
  std::vector<Resolution> out;
  auto append = [&out](const std::vector<Resolution>& v) { out.insert(out.end(), v.begin(), v.end()); };
  if (default_db() == DatabaseId::Alphafold) {
    append(af);
    append(pdb);
  } else {
    append(pdb);
    append(af);
  }
  return out;
}

std::optional<Fetcher::Candidate> Fetcher::candidate(DatabaseId db, IdKind kind, const std::string& canon) {
  if (db == DatabaseId::Alphafold) {
    if (kind == IdKind::PdbId) return std::nullopt;
    return Candidate{db, canon, util::lower(canon)};
  }
  if (kind == IdKind::PdbId) return Candidate{db, canon, util::lower(canon)};
  const auto refs = pdb_cross_references(canon);
  if (refs.empty()) return std::nullopt;
  return Candidate{db, refs.front(), util::lower(canon) + "_" + util::lower(refs.front())};
}

std::string Fetcher::file_url(DatabaseId db, const std::string& id, StructureFormat f) const {
  const std::string ext(structmodel::extension(f));
  if (db == DatabaseId::Pdb) return options_.endpoints.pdb + "/" + id + "." + ext;
  return options_.endpoints.alphafold + "/AF-" + id + "-F1-model_v4." + ext;
}

bool Fetcher::probe(DatabaseId db, IdKind kind, const std::string& canon) {
  try {
    const auto c = candidate(db, kind, canon);
    if (!c) return false;
    for (auto f : {StructureFormat::Cif, StructureFormat::Pdb}) {
      const auto r = net::request_with_retry(*options_.transport, net::Method::Head,
                                             file_url(db, c->canonical_id, f), options_.retry);
      if (r.ok()) return true;
      if (r.status != 404) return false;
    }
  } catch (const Error&) {
    // availability is informational; an outage elsewhere must not fail the fetch
  }
  return false;
}

FetchResult Fetcher::from_record(const json& record, const std::string& id, bool filesave) {
  const fs::path dir = directory();
  FetchResult result;
  result.source_db = parse_database(record.at("db").get<std::string>());
  result.cache_path = dir / record.at("path").get<std::string>();
  result.filedata = util::read_file(result.cache_path);
  result.actual_filetype = sniff(result.filedata);
  std::vector<DatabaseId> available;
  for (const auto& a : record.at("available")) available.push_back(parse_database(a.get<std::string>()));
  {
    std::lock_guard lock(mutex_);
    history_.record(id, available);
  }
  if (filesave) {
    const std::string filename = record.at("filename").get<std::string>();
    util::atomic_write(dir / filename, result.filedata);
    result.filename = filename;
  }
  return result;
}

FetchResult Fetcher::get_file(const std::string& id, FileType filetype, bool filesave) {
  return get_file(id, filetype, filesave, default_db());
}

FetchResult Fetcher::get_file(const std::string& id, FileType filetype, bool filesave, DatabaseId first) {
  if (id.empty()) raise(ErrorCode::InvalidArgument, "empty structure id");
  const IdKind kind = classify_id(id);
  const std::string canon = util::upper(id);
  const std::string key = index_key(canon, filetype, first);

  {
    const json index = load_index();
    const auto res = index.find("resolutions");
    if (res != index.end() && res->contains(key)) {
      const json& record = (*res)[key];
      std::error_code ec;
      const fs::path p = directory() / record.value("path", "");
      if (fs::is_regular_file(p, ec) && fs::file_size(p, ec) == record.value("size", std::uintmax_t{0}))
        return from_record(record, id, filesave);
    }
  }

  const DatabaseId order[2] = {first, other(first)};
  std::optional<Candidate> hit;
  std::string payload;
  for (std::size_t i = 0; i < 2 && !hit; ++i) {
    const auto c = candidate(order[i], kind, canon);
    if (!c) continue;
    for (auto f : formats_for(filetype)) {
      const std::string url = file_url(c->db, c->canonical_id, f);
      auto r = net::request_with_retry(*options_.transport, net::Method::Get, url, options_.retry);
      if (r.status == 404 || (r.ok() && r.body.empty())) continue;
      if (!r.ok()) raise(ErrorCode::TransportError, url + ": unexpected status " + std::to_string(r.status));
      hit = c;
      payload = std::move(r.body);
      break;
    }
  }
  if (!hit)
    raise(ErrorCode::NotFoundInAnyDatabase, "'" + id + "' was found in neither " +
                                                std::string(to_string(order[0])) + " nor " +
                                                std::string(to_string(order[1])));

  std::vector<DatabaseId> available{hit->db};
  // a hit in the first database leaves the other one unexamined
  if (hit->db == first && probe(other(first), kind, canon)) available.push_back(other(first));
  available = canonical_order(available);

  const StructureFormat format = sniff(payload);
  const std::string ext(structmodel::extension(format));
  const std::string rel = std::string(to_string(hit->db)) + "/" + hit->canonical_id + "." + ext;
  util::atomic_write(directory() / rel, payload);

  json record{{"db", to_string(hit->db)},
              {"canonical", hit->canonical_id},
              {"path", rel},
              {"filename", hit->filename_stem + "." + ext},
              {"size", payload.size()},
              {"available", json::array()}};
  for (auto db : available) record["available"].push_back(to_string(db));
  update_index([&](json& index) {
    index["version"] = 1;
    index["resolutions"][key] = record;
    index["latest"][canon] = key;
  });
  return from_record(record, id, filesave);
}

RemoveResult Fetcher::remove(const std::string& id, const RemoveOptions& options) {
  const IdKind kind = classify_id(id);
  const std::string canon = util::upper(id);
  const json index = load_index();
  const json* record = nullptr;
  if (const auto latest = index.find("latest"); latest != index.end() && latest->contains(canon)) {
    const std::string key = (*latest)[canon].get<std::string>();
    if (index.contains("resolutions") && index["resolutions"].contains(key)) record = &index["resolutions"][key];
  }
  if (!record) raise(ErrorCode::NotFetched, "'" + id + "' has not been fetched into " + directory().string());

  const fs::path dir = directory();
  const fs::path cached = dir / record->at("path").get<std::string>();
  std::error_code ec;
  if (!fs::is_regular_file(cached, ec)) raise(ErrorCode::NotFetched, "cached file " + cached.string() + " is gone");
  auto s = structmodel::parse_structure(util::read_file(cached));

  RemoveResult result;
  if (!options.signal_peptides && !options.hydrogens && !options.water && !options.hetatoms)
    result.notes.push_back("no removal options given; writing an unchanged copy");
  result.atoms_before = s.atom_count();
  std::optional<ResidueRange> signal;
  if (options.signal_peptides) {
    if (kind != IdKind::UniprotAccession) {
      result.notes.push_back("signal peptides kept: " + canon + " is a PDB ID, not a UniProt accession");
    } else if ((signal = fetch_signal_peptide_range(canon))) {
      s = structmodel::remove_residue_range(s, std::nullopt, signal->start, signal->end);
    } else {
      result.notes.push_back("signal peptides kept: UniProt has no signal peptide annotation for " + canon);
    }
  }
  if (options.hydrogens) s = structmodel::remove_hydrogens(s);
  if (options.water) s = structmodel::remove_water(s);
  if (options.hetatoms) s = structmodel::remove_hetatoms(s);
  result.atoms_after = s.atom_count();

  const std::string name = options.output_filename
                               ? *options.output_filename
                               : cleaned_filename(record->at("filename").get<std::string>(), options, signal);
  result.output = fs::path(name).is_absolute() ? fs::path(name) : dir / name;
  util::atomic_write(result.output, structmodel::serialize(s));
  return result;
}

}  // namespace cryocurate::fetcher
