#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <regex>

#include "cryocurate/archive.hpp"
#include "cryocurate/error.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/mock_server.hpp"

using namespace cryocurate;
using namespace cryocurate::archive;
using namespace cryocurate::testing;
using namespace std::chrono_literals;

namespace {

ArchiveConfig mock_config(const std::string& base) {
  ArchiveConfig c;
  c.base_url = base;
  c.retry = {3, 1ms};
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("wildcards agree with fnmatch") {
  const auto& cases = expected()["glob_cases"];
  REQUIRE(cases.size() > 1000);
  std::size_t mismatches = 0;
  for (const auto& c : cases) {
    const std::string pattern = c[0], name = c[1];
    const bool want = c[2];
    const bool got = glob_match(pattern, name);
    const bool via_regex = std::regex_match(name, std::regex(glob_to_regex(pattern), std::regex::ECMAScript));
    if (got != want || via_regex != want) {
      ++mismatches;
      MESSAGE("pattern '" << pattern << "' name '" << name << "' expected " << want);
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("patterns") {
  CHECK(Pattern::glob("*gain.tiff.bz2").matches("x_gain.tiff.bz2"));
  CHECK_FALSE(Pattern::glob("*gain.tiff.bz2").matches("x_gain.tiff.bz2.xml"));
  const auto re = Pattern::regex(R"(FoilHole_\d+_Data_\d+_[0-6]_EER\.mrc)");
  CHECK(re.is_regex());
  CHECK(re.matches("FoilHole_11160000_Data_11150_0_EER.mrc"));
  // Whole-name semantics, not search.
  CHECK_FALSE(Pattern::regex("EER").matches("FoilHole_EER.mrc"));
  CHECK(code_of([] { Pattern::regex("([unclosed"); }) == ErrorCode::BadPattern);
}

TEST_CASE("HTML and FTP listings") {
  const std::string html =
      "<html><body><h1>Index of /x</h1><pre>"
      "<a href=\"?C=N;O=D\">Name</a> <a href=\"?C=M;O=A\">Last modified</a>\n"
      "<a href=\"/empiar/\">Parent Directory</a>\n"
      "<a href=\"data/\">data/</a> 2021-01-01 -\n"
      "<A HREF='a%20b.mrc'>a b.mrc</A> 1K\n"
      "<a href=\"https://elsewhere/\">x</a><a href=\"../\">up</a>\n"
      "<a href=\"x&amp;y.txt\">x&amp;y.txt</a>\n"
      "</pre></body></html>";
  const auto e = parse_html_listing(html);
  REQUIRE(e.size() == 3);
  CHECK(e[0] == ListingEntry{"data/", "data", true});
  CHECK(e[1] == ListingEntry{"a%20b.mrc", "a b.mrc", false});
  CHECK(e[2] == ListingEntry{"x&y.txt", "x&y.txt", false});

  const std::string ftp =
      "drwxr-xr-x    2 ftp      ftp          4096 Nov 06  2020 data\r\n"
      "-rw-r--r--    1 ftp      ftp          1234 Nov 06 12:00 10934.xml\r\n"
      "lrwxrwxrwx    1 ftp      ftp             9 Nov 06 12:00 latest -> data/x\r\n"
      "total 12\r\n";
  const auto f = parse_ftp_listing(ftp);
  REQUIRE(f.size() == 3);
  CHECK(f[0] == ListingEntry{"data/", "data", true});
  CHECK(f[1] == ListingEntry{"10934.xml", "10934.xml", false});
  CHECK(f[2].name == "latest");
}

TEST_CASE("verbose search reproduces the published layout") {
  MockHttpServer server;
  Archive a(mock_config(server.archive_url()));
  const std::string published =
      "Matching path #0:\n"
      "https://ftp.ebi.ac.uk/empiar/world_availability/10934//10934.xml\n"
      "\n"
      "Matching path #1:\n"
      "https://ftp.ebi.ac.uk/empiar/world_availability/10934//data/\n"
      "\n"
      "Subdirectories are:\n"
      "https://ftp.ebi.ac.uk/empiar/world_availability/10934\n"
      "\n"
      "Subdirectories are:\n"
      "https://ftp.ebi.ac.uk/empiar/world_availability/10934//data\n";
  const auto got = format_verbose(a.search(10934, "", "*", false));
  CHECK(got == replace_all(published, "https://ftp.ebi.ac.uk/empiar/world_availability/", server.archive_url()));
  CHECK(a.directory_url(10934, "/data/") == server.archive_url() + "10934/data");
}

TEST_CASE("search, save and download the gain references") {
  MockHttpServer server;
  TempDir dir;
  Archive a(mock_config(server.archive_url()));
  const std::string gain_dir = expected()["gain_dir"];
  const auto r = a.search(10934, gain_dir, "*gain.tiff.bz2", false);
  const auto& want = expected()["gain_files"];
  REQUIRE(r.matched_paths.size() == want.size());
  CHECK(r.subdirectories.size() == 1);

  const auto list = dir / "saved_search.txt";
  CHECK(save_search(r, list) == 3);
  CHECK(read_url_list(list) == r.matched_paths);

  std::size_t callbacks = 0;
  const auto report = a.download(list, dir / "new_dir", [&](const DownloadItem&) { ++callbacks; });
  CHECK(callbacks == 3);
  CHECK(report.all_ok());
  for (const auto& [name, digest] : want.items()) {
    const auto path = dir / "new_dir" / name;
    REQUIRE(std::filesystem::exists(path));
    CHECK(sha256_hex(read_text(path)) == digest.get<std::string>());
  }

  // A missing file is reported without stopping the others.
  auto urls = r.matched_paths;
  urls.insert(urls.begin() + 1, a.directory_url(10934, gain_dir) + "/missing_gain.tiff.bz2");
  const auto partial = a.download(urls, dir / "partial");
  CHECK(partial.succeeded() == 3);
  CHECK(partial.failed() == 1);
  CHECK_FALSE(partial.items[1].ok);
  CHECK(partial.items[1].error.find("404") != std::string::npos);
  CHECK(partial.items[2].ok);
}

TEST_CASE("sources are lazy") {
  MockHttpServer server;
  Archive a(mock_config(server.archive_url()));
  const std::string eer_dir = expected()["eer_dir"];
  server.reset_log();
  const auto src = a.make_source(10943, eer_dir, "*EER.mrc", false);
  CHECK(server.count(RequestKind::Listing) == 1);
  CHECK(server.count(RequestKind::Payload) == 0);
  REQUIRE(src.size() == 50);
  std::vector<std::string> names;
  for (const auto& url : src.matched_files()) names.push_back(url.substr(url.rfind('/') + 1));
  CHECK(names == expected()["eer_files"].get<std::vector<std::string>>());

  // Seven partitions ask for exactly seven payloads.
  for (std::size_t i : {0, 3, 10, 17, 28, 41, 49}) {
    const auto img = src.read_partition(i);
    CHECK(img.shape() == std::vector<std::size_t>{1, 8, 8});
    const double offset = expected()["eer_offsets"][i];
    const auto v = img.to_double();
    CHECK(v.front() == offset);
    CHECK(v.back() == offset + 63.0);
  }
  CHECK(server.count(RequestKind::Payload) == 7);
  CHECK(server.count(RequestKind::Listing) == 1);
  CHECK(src.fetch_counter() == 7);
  const auto copy = src;
  copy.read_bytes(1);
  CHECK(src.fetch_counter() == 8);
  CHECK(code_of([&] { src.read_partition(50); }) == ErrorCode::IndexOutOfRange);
  CHECK(server.count(RequestKind::Payload) == 8);

  // A regex selecting one seventh of the files.
  const auto sevens = a.make_source(10943, eer_dir, R"(.*_Data_11150_3_EER\.mrc)", true);
  CHECK(sevens.size() == 7);
}

TEST_CASE("payload cache revalidates by ETag") {
  MockHttpServer server;
  TempDir dir;
  auto config = mock_config(server.archive_url());
  config.cache_directory = dir / "cache";
  Archive a(config);
  const auto src = a.make_source(10943, expected()["eer_dir"].get<std::string>(), "*", false);
  const auto first = src.read_bytes(5);
  server.reset_log();
  CHECK(src.read_bytes(5) == first);
  CHECK(server.count(RequestKind::Payload) == 1);  // the HEAD probe
  CHECK(src.fetch_counter() == 1);
  CHECK(server.log().at(0).method == "HEAD");
}

TEST_CASE("catalog and errors") {
  MockHttpServer server;
  Archive a(mock_config(server.archive_url()));
  const auto cat = a.load_catalog(10934);
  CHECK(cat.xml_url == server.archive_url() + "10934/10934.xml");
  REQUIRE(cat.keys().size() == 1);
  CHECK(cat.keys()[0] == expected()["gain_dir"].get<std::string>());
  CHECK(cat.raw_metadata != nullptr);
  CHECK(a.catalog_source(cat, cat.keys()[0]).size() == 5);

  CHECK(code_of([&] { a.load_catalog(99999); }) == ErrorCode::EntryNotFound);
  CHECK(code_of([&] { a.list(10934, "data/nope"); }) == ErrorCode::DirectoryNotFound);
  CHECK(code_of([&] { a.make_source(10934, expected()["gain_dir"].get<std::string>(), "*.mrc", false); }) ==
        ErrorCode::NoMatches);
  CHECK(code_of([&] { a.search(10934, "", "(", true); }) == ErrorCode::BadPattern);
  CHECK(code_of([&] { a.list(0); }) == ErrorCode::InvalidArgument);

  server.put("/empiar/world_availability/777/777.xml", "<entry><unclosed></entry>");
  CHECK(code_of([&] { a.load_catalog(777); }) == ErrorCode::XmlParseError);

  // Transient outages are retried.
  server.fail_next("/empiar/world_availability/10934/", 2);
  CHECK(a.list(10934).size() == 2);
  server.fail_next("/empiar/world_availability/10934/", 3);
  CHECK(code_of([&] { a.list(10934); }) == ErrorCode::TransportError);
}

TEST_CASE("the same tree over FTP") {
  MockFtpServer ftp;
  Archive a(mock_config(ftp.base() + "/empiar/world_availability"));
  const auto r = a.search(10943, expected()["eer_dir"].get<std::string>(), "*_0_EER.mrc", false);
  CHECK(r.matched_paths.size() == 8);
  const auto src = a.make_source(10943, expected()["eer_dir"].get<std::string>(), "*EER.mrc", false);
  CHECK(ftp.listings() == 2);
  CHECK(ftp.retrievals() == 0);
  const auto img = src.read_partition(10);
  CHECK(img.to_double().front() == expected()["eer_offsets"][10].get<double>());
  CHECK(ftp.retrievals() == 1);
}
