#pragma once

// Read access to an EMPIAR-style archive: per-entry directory trees served
// as HTML index pages (or FTP listings) plus one XML metadata file per
// entry. Listings are fetched eagerly, payloads only on demand.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree_fwd.hpp>

#include "cryocurate/image.hpp"
#include "cryocurate/net.hpp"

namespace cryocurate::archive {

inline constexpr const char* kDefaultBaseUrl = "https://ftp.ebi.ac.uk/empiar/world_availability/";

struct ListingEntry {
  std::string href;  // as written in the listing, e.g. "data/"
  std::string name;  // decoded, without the trailing slash
  bool is_directory = false;

  friend bool operator==(const ListingEntry&, const ListingEntry&) = default;
};

/// Relative links of an HTML index page. Sorting links, the parent link and
/// anything absolute are skipped.
std::vector<ListingEntry> parse_html_listing(std::string_view html);
/// Unix-style FTP LIST output.
std::vector<ListingEntry> parse_ftp_listing(std::string_view text);

/// fnmatch-style wildcard match: * ? [set] [!set] [a-z]. An unterminated
/// '[' is a literal character.
bool glob_match(std::string_view pattern, std::string_view name);
/// ECMAScript regex accepting exactly the names glob_match accepts.
std::string glob_to_regex(std::string_view pattern);

class Pattern {
 public:
  static Pattern glob(std::string text);
  /// Whole-name match. Raises BadPattern for invalid expressions.
  static Pattern regex(std::string text);

  bool matches(std::string_view name) const;
  const std::string& text() const { return text_; }
  bool is_regex() const { return regex_.has_value(); }

 private:
  std::string text_;
  std::optional<std::regex> regex_;
};

struct SearchResult {
  std::vector<std::string> matched_paths;
  std::vector<std::string> subdirectories;
};

/// The layout printed by `search --verbose`: one "Matching path #k:" block
/// per match, then one "Subdirectories are:" block per directory, blocks
/// separated by blank lines.
std::string format_verbose(const SearchResult& result);

/// One URL per line, LF-terminated; overwrites `out`. Returns the number of
/// lines written.
std::size_t save_search(const SearchResult& result, const std::filesystem::path& out);

/// Non-empty, non-comment lines of a URL list file. Raises IoError.
std::vector<std::string> read_url_list(const std::filesystem::path& path);

struct DownloadItem {
  std::size_t index = 0;  // position in the URL list
  std::string url;
  std::filesystem::path path;  // empty on failure
  bool ok = false;
  std::size_t bytes = 0;
  std::string error;
};

struct DownloadReport {
  std::vector<DownloadItem> items;  // in list order

  std::size_t succeeded() const;
  std::size_t failed() const { return items.size() - succeeded(); }
  bool all_ok() const { return failed() == 0; }
};

struct ArchiveConfig {
  std::string base_url = kDefaultBaseUrl;
  net::RetryPolicy retry;
  std::shared_ptr<net::Transport> transport;  // null: the default transport
  std::size_t download_workers = 4;
  /// Payload cache keyed by URL and ETag; disabled when empty.
  std::filesystem::path cache_directory;
};

class ArchiveSource;

struct EntryCatalog {
  int entry_id = 0;
  std::string xml_url;
  /// Paths under data/ named in the XML, in document order, no leading '/'.
  std::vector<std::string> default_directories;
  std::shared_ptr<const boost::property_tree::ptree> raw_metadata;

  const std::vector<std::string>& keys() const { return default_directories; }
};

class Archive {
 public:
  Archive();
  explicit Archive(ArchiveConfig config);

  const std::string& base_url() const { return config_.base_url; }

  /// base + entry + "/" + dir, exactly as displayed in search output.
  std::string directory_url(int entry, std::string_view dir = {}) const;

  /// Raises DirectoryNotFound when the server has no such directory.
  std::vector<ListingEntry> list(int entry, std::string_view dir = {}) const;

  /// Raises EntryNotFound or XmlParseError.
  EntryCatalog load_catalog(int entry) const;

  /// Lists one directory (the entry root when `dir` is empty). Raises
  /// BadPattern or DirectoryNotFound.
  SearchResult search(int entry, std::string_view dir, const std::string& select, bool is_regex) const;

  /// Issues exactly one listing request. Raises DirectoryNotFound, or
  /// NoMatches when no file matches.
  ArchiveSource make_source(int entry, std::string_view directory, const std::string& pattern, bool is_regex) const;
  /// Every file in a catalog directory.
  ArchiveSource catalog_source(const EntryCatalog& catalog, const std::string& directory) const;

  /// Downloads every URL into `save_dir` under its last path segment, with a
  /// bounded worker pool. Failures are recorded per file.
  DownloadReport download(const std::vector<std::string>& urls, const std::filesystem::path& save_dir,
                          const std::function<void(const DownloadItem&)>& on_done = {}) const;
  DownloadReport download(const std::filesystem::path& url_list, const std::filesystem::path& save_dir,
                          const std::function<void(const DownloadItem&)>& on_done = {}) const;

  /// One GET with retries; raises TransportError for anything but 2xx.
  std::string fetch(const std::string& url) const;

 private:
  std::string listing_url(int entry, std::string_view dir) const;

  ArchiveConfig config_;
};

/// Pattern-selected files of one archive directory, read one at a time.
/// Copies share the fetch counter.
class ArchiveSource {
 public:
  int entry_id() const { return entry_; }
  const std::string& directory() const { return directory_; }
  const Pattern& pattern() const { return pattern_; }
  /// URLs, ordered by filename.
  const std::vector<std::string>& matched_files() const { return files_; }
  std::size_t size() const { return files_.size(); }

  /// Payload downloads made so far through this source.
  std::size_t fetch_counter() const { return counter_->load(); }

  /// Downloads file `index` and decodes it as MRC or NPY. Raises
  /// IndexOutOfRange, TransportError or DecodeError.
  ImageArray read_partition(std::size_t index) const;
  /// Raw payload of file `index`.
  std::string read_bytes(std::size_t index) const;

 private:
  friend class Archive;
  ArchiveSource(ArchiveConfig config, int entry, std::string directory, Pattern pattern, std::vector<std::string> files);

  ArchiveConfig config_;
  int entry_ = 0;
  std::string directory_;
  Pattern pattern_;
  std::vector<std::string> files_;
  std::shared_ptr<std::atomic<std::size_t>> counter_;
};

}  // namespace cryocurate::archive
