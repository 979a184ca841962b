#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "cryocurate/archive.hpp"
#include "cryocurate/error.hpp"
#include "cryocurate/formats.hpp"
#include "../util/files.hpp"

namespace cryocurate::archive {
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim_slashes(std::string_view dir) {
  while (!dir.empty() && dir.front() == '/') dir.remove_prefix(1);
  while (!dir.empty() && dir.back() == '/') dir.remove_suffix(1);
  return std::string(dir);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string last_segment(const std::string& url) {
  auto path = net::parse_url(url).path;
  if (const auto q = path.find('?'); q != std::string::npos) path.erase(q);
  if (path.empty() || path.back() == '/') return {};
  std::string name = path.substr(path.rfind('/') + 1);
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] == '%' && i + 2 < name.size()) {
      out.push_back(static_cast<char>(std::stoi(name.substr(i + 1, 2), nullptr, 16)));
      i += 2;
    } else {
      out.push_back(name[i]);
    }
  }
  return out;
}

std::string fetch_with(const ArchiveConfig& config, const std::string& url) {
  auto r = net::request_with_retry(*config.transport, net::Method::Get, url, config.retry);
  if (!r.ok()) raise(ErrorCode::TransportError, url + ": server answered " + std::to_string(r.status));
  return std::move(r.body);
}

void collect_directories(const pt::ptree& node, std::vector<std::string>& out) {
  for (const auto& [key, child] : node) {
    if (key == "<xmlattr>" || key == "<xmlcomment>") continue;
    std::string text = trim(child.data());
    while (!text.empty() && text.front() == '/') text.erase(0, 1);
    if ((text == "data" || text.rfind("data/", 0) == 0) && child.empty()) {
      while (!text.empty() && text.back() == '/') text.pop_back();
      if (std::find(out.begin(), out.end(), text) == out.end()) out.push_back(text);
    }
    collect_directories(child, out);
  }
}

}  // namespace

std::string format_verbose(const SearchResult& result) {
  std::string out;
  auto block = [&](const std::string& header, const std::string& url) {
    if (!out.empty()) out += '\n';
    out += header + "\n" + url + "\n";
  };
  for (std::size_t k = 0; k < result.matched_paths.size(); ++k)
    block("Matching path #" + std::to_string(k) + ":", result.matched_paths[k]);
  for (const auto& d : result.subdirectories) block("Subdirectories are:", d);
  return out;
}

std::size_t save_search(const SearchResult& result, const fs::path& out) {
  std::string text;
  for (const auto& url : result.matched_paths) text += url + "\n";
  util::atomic_write(out, text);
  return result.matched_paths.size();
}

std::vector<std::string> read_url_list(const fs::path& path) {
  std::istringstream in(util::read_file(path));
  std::vector<std::string> urls;
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (!line.empty() && line[0] != '#') urls.push_back(line);
  }
  return urls;
}

std::size_t DownloadReport::succeeded() const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const auto& i) { return i.ok; }));
}

// ------------------------------------------------------------ Archive ---

Archive::Archive() : Archive(ArchiveConfig{}) {}

Archive::Archive(ArchiveConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty() || config_.base_url.back() != '/') config_.base_url += '/';
  net::parse_url(config_.base_url);
  if (!config_.transport) config_.transport = net::make_transport();
  if (config_.download_workers == 0) config_.download_workers = 1;
}

std::string Archive::directory_url(int entry, std::string_view dir) const {
  return config_.base_url + std::to_string(entry) + "/" + trim_slashes(dir);
}

std::string Archive::listing_url(int entry, std::string_view dir) const {
  const std::string d = trim_slashes(dir);
  return config_.base_url + std::to_string(entry) + "/" + (d.empty() ? "" : d + "/");
}

std::vector<ListingEntry> Archive::list(int entry, std::string_view dir) const {
  if (entry <= 0) raise(ErrorCode::InvalidArgument, "entry ids are positive integers");
  const std::string url = listing_url(entry, dir);
  const auto r = net::request_with_retry(*config_.transport, net::Method::Get, url, config_.retry);
  if (r.status == 404)
    raise(ErrorCode::DirectoryNotFound, "no directory '" + trim_slashes(dir) + "' in entry " + std::to_string(entry) +
                                            " (" + url + ")");
  if (!r.ok()) raise(ErrorCode::TransportError, url + ": server answered " + std::to_string(r.status));
  auto entries = net::parse_url(url).scheme == "ftp" ? parse_ftp_listing(r.body) : parse_html_listing(r.body);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return entries;
}

EntryCatalog Archive::load_catalog(int entry) const {
  if (entry <= 0) raise(ErrorCode::InvalidArgument, "entry ids are positive integers");
  EntryCatalog c;
  c.entry_id = entry;
  c.xml_url = config_.base_url + std::to_string(entry) + "/" + std::to_string(entry) + ".xml";
  const auto r = net::request_with_retry(*config_.transport, net::Method::Get, c.xml_url, config_.retry);
  if (r.status == 404) raise(ErrorCode::EntryNotFound, "entry " + std::to_string(entry) + " has no " + c.xml_url);
  if (!r.ok()) raise(ErrorCode::TransportError, c.xml_url + ": server answered " + std::to_string(r.status));
  auto tree = std::make_shared<pt::ptree>();
  try {
    std::istringstream in(r.body);
    pt::read_xml(in, *tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    raise(ErrorCode::XmlParseError, c.xml_url + ": " + e.what());
  }
  collect_directories(*tree, c.default_directories);
  c.raw_metadata = std::move(tree);
  return c;
}

SearchResult Archive::search(int entry, std::string_view dir, const std::string& select, bool is_regex) const {
  const Pattern pattern = is_regex ? Pattern::regex(select) : Pattern::glob(select);
  const auto entries = list(entry, dir);
  const std::string base = directory_url(entry, dir);
  SearchResult result;
  result.subdirectories.push_back(base.back() == '/' ? base.substr(0, base.size() - 1) : base);
  for (const auto& e : entries) {
    if (pattern.matches(e.name)) result.matched_paths.push_back(base + "/" + e.href);
    if (e.is_directory) result.subdirectories.push_back(base + "/" + e.name);
  }
  return result;
}

ArchiveSource Archive::make_source(int entry, std::string_view directory, const std::string& pattern_text,
                                   bool is_regex) const {
  Pattern pattern = is_regex ? Pattern::regex(pattern_text) : Pattern::glob(pattern_text);
  const auto entries = list(entry, directory);
  const std::string base = directory_url(entry, directory);
  std::vector<std::string> files;
  std::size_t candidates = 0;
  for (const auto& e : entries) {
    if (e.is_directory) continue;
    ++candidates;
    if (pattern.matches(e.name)) files.push_back(base + "/" + e.href);
  }
  if (files.empty())
    raise(ErrorCode::NoMatches, "none of the " + std::to_string(candidates) + " files in " + base + " match '" +
                                    pattern_text + "'" + (is_regex ? " (regex)" : " (glob)"));
  return ArchiveSource(config_, entry, trim_slashes(directory), std::move(pattern), std::move(files));
}

ArchiveSource Archive::catalog_source(const EntryCatalog& catalog, const std::string& directory) const {
  return make_source(catalog.entry_id, directory, "*", false);
}

std::string Archive::fetch(const std::string& url) const { return fetch_with(config_, url); }

DownloadReport Archive::download(const fs::path& url_list, const fs::path& save_dir,
                                 const std::function<void(const DownloadItem&)>& on_done) const {
  return download(read_url_list(url_list), save_dir, on_done);
}

DownloadReport Archive::download(const std::vector<std::string>& urls, const fs::path& save_dir,
                                 const std::function<void(const DownloadItem&)>& on_done) const {
  DownloadReport report;
  report.items.resize(urls.size());
  if (urls.empty()) return report;
  util::ensure_writable_directory(save_dir);

  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < urls.size(); i = next++) {
      DownloadItem& item = report.items[i];
      item.index = i;
      item.url = urls[i];
      try {
        const std::string name = last_segment(item.url);
        if (name.empty() || name == "." || name == "..")
          raise(ErrorCode::InvalidArgument, "URL does not name a file");
        const std::string body = fetch_with(config_, item.url);
        const fs::path target = save_dir / name;
        util::atomic_write(target, body);
        item.path = target;
        item.bytes = body.size();
        item.ok = true;
      } catch (const Error& e) {
        item.error = e.what();
      }
      if (on_done) {
        std::lock_guard lock(callback_mutex);
        on_done(item);
      }
    }
  };
  const std::size_t n = std::min(config_.download_workers, urls.size());
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return report;
}

// ------------------------------------------------------- ArchiveSource ---

ArchiveSource::ArchiveSource(ArchiveConfig config, int entry, std::string directory, Pattern pattern,
                             std::vector<std::string> files)
    : config_(std::move(config)),
      entry_(entry),
      directory_(std::move(directory)),
      pattern_(std::move(pattern)),
      files_(std::move(files)),
      counter_(std::make_shared<std::atomic<std::size_t>>(0)) {}

std::string ArchiveSource::read_bytes(std::size_t index) const {
  if (index >= files_.size())
    raise(ErrorCode::IndexOutOfRange,
          "partition " + std::to_string(index) + " out of range (" + std::to_string(files_.size()) + " files)");
  const std::string& url = files_[index];
  if (config_.cache_directory.empty()) {
    ++*counter_;
    return fetch_with(config_, url);
  }

  char key[32];
  std::snprintf(key, sizeof key, "%016zx", std::hash<std::string>{}(url));
  const fs::path body_path = config_.cache_directory / (std::string(key) + ".body");
  const fs::path etag_path = config_.cache_directory / (std::string(key) + ".etag");
  std::error_code ec;
  if (fs::exists(body_path, ec) && fs::exists(etag_path, ec)) {
    const std::string stored = util::read_file(etag_path);
    const auto head = net::request_with_retry(*config_.transport, net::Method::Head, url, config_.retry);
    if (head.ok() && !stored.empty() && head.header("etag") == stored) return util::read_file(body_path);
  }
  ++*counter_;
  auto r = net::request_with_retry(*config_.transport, net::Method::Get, url, config_.retry);
  if (!r.ok()) raise(ErrorCode::TransportError, url + ": server answered " + std::to_string(r.status));
  if (const auto etag = r.header("etag"); !etag.empty()) {
    util::atomic_write(body_path, r.body);
    util::atomic_write(etag_path, etag);
  }
  return std::move(r.body);
}

ImageArray ArchiveSource::read_partition(std::size_t index) const {
  const std::string payload = read_bytes(index);
  const auto* p = reinterpret_cast<const std::byte*>(payload.data());
  return decode_image(std::span<const std::byte>(p, payload.size()), last_segment(files_[index]));
}

}  // namespace cryocurate::archive
