#include <chrono>

#include "cryocurate/error.hpp"
#include "cryocurate/net.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/mock_server.hpp"

using namespace cryocurate;
using namespace cryocurate::testing;
using namespace std::chrono_literals;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

const net::RetryPolicy kFast{3, 1ms};

}  // namespace

TEST_CASE("URL parsing") {
  const auto u = net::parse_url("https://ftp.ebi.ac.uk/empiar/world_availability/10934//10934.xml");
  CHECK(u.scheme == "https");
  CHECK(u.host == "ftp.ebi.ac.uk");
  CHECK(u.port == 443);
  CHECK(u.path == "/empiar/world_availability/10934//10934.xml");
  CHECK(u.origin() == "https://ftp.ebi.ac.uk");

  const auto local = net::parse_url("http://127.0.0.1:8123");
  CHECK(local.port == 8123);
  CHECK(local.path == "/");
  CHECK(local.origin() == "http://127.0.0.1:8123");

  CHECK(net::parse_url("ftp://user@[::1]:2121/pub/").host == "::1");
  CHECK(net::parse_url("HTTP://h?q=1").path == "/?q=1");
  CHECK(code_of([] { net::parse_url("files.rcsb.org/download"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { net::parse_url("gopher://x/"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { net::parse_url("http://h:99999/"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { net::parse_url("http:///x"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("HTTP transport against the mock server") {
  MockHttpServer server;
  auto t = net::make_transport();

  const auto ok = t->get(server.pdb_url() + "/4V1W.cif");
  CHECK(ok.status == 200);
  CHECK(ok.body.rfind("data_4V1W", 0) == 0);
  CHECK_FALSE(ok.header("ETag").empty());

  CHECK(t->get(server.pdb_url() + "/ZZZZ.cif").status == 404);
  CHECK(t->head(server.pdb_url() + "/4V1W.cif").status == 200);

  // directories without the trailing slash redirect
  const auto listing = t->get(server.archive_url() + "10934");
  CHECK(listing.status == 200);
  CHECK(listing.body.find("href=\"10934.xml\"") != std::string::npos);
}

TEST_CASE("retries cover 5xx answers only") {
  MockHttpServer server;
  auto t = net::make_transport();
  const std::string url = server.pdb_url() + "/7U6Q.pdb";

  server.fail_next("/pdb/7U6Q", 2, 503);
  CHECK(net::request_with_retry(*t, net::Method::Get, url, kFast).status == 200);
  CHECK(server.count_prefix("/pdb/7U6Q") == 3);

  server.reset_log();
  server.fail_next("/pdb/7U6Q", 3, 500);
  CHECK(code_of([&] { net::request_with_retry(*t, net::Method::Get, url, kFast); }) == ErrorCode::TransportError);
  CHECK(server.count_prefix("/pdb/7U6Q") == 3);

  server.reset_log();
  server.fail_next("/pdb/7U6Q", 1, 403);
  CHECK(net::request_with_retry(*t, net::Method::Get, url, kFast).status == 403);
  CHECK(server.requests() == 1);

  server.reset_log();
  CHECK(net::request_with_retry(*t, net::Method::Get, server.pdb_url() + "/NONE.pdb", kFast).status == 404);
  CHECK(server.requests() == 1);
}

TEST_CASE("backoff doubles between attempts") {
  MockHttpServer server;
  auto t = net::make_transport();
  server.fail_next("/pdb/", 3, 502);
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(net::request_with_retry(*t, net::Method::Get, server.pdb_url() + "/4V1W.cif", {3, 40ms}), Error);
  // 40 ms then 80 ms
  CHECK(std::chrono::steady_clock::now() - start >= 120ms);
}

TEST_CASE("unreachable host is a transport error") {
  int port = 0;
  {
    MockHttpServer gone;
    port = net::parse_url(gone.base()).port;
  }
  auto t = net::make_transport({std::chrono::milliseconds(500), std::chrono::milliseconds(500)});
  CHECK(code_of([&] { t->get("http://127.0.0.1:" + std::to_string(port) + "/x"); }) == ErrorCode::TransportError);
}

TEST_CASE("FTP transport") {
  MockFtpServer server;
  auto t = net::make_transport();
  const auto file = t->get(server.base() + "/pdb/4V1W.cif");
  CHECK(file.status == 200);
  CHECK(file.body == read_text(server_root() / "pdb/4V1W.cif"));
  CHECK(server.retrievals() == 1);

  const auto listing = t->get(server.base() + "/empiar/world_availability/10934/");
  CHECK(listing.status == 200);
  CHECK(listing.body.find(" 10934.xml\r\n") != std::string::npos);
  CHECK(listing.body.find("drwxr-xr-x") != std::string::npos);

  CHECK(t->get(server.base() + "/pdb/NOPE.cif").status == 404);
  CHECK(t->head(server.base() + "/pdb/4V1W.cif").status == 200);
  CHECK(t->head(server.base() + "/pdb/4V1W.cif").header("content-length") ==
        std::to_string(file.body.size()));
  CHECK(t->head(server.base() + "/nowhere/").status == 404);
}
