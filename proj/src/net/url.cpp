#include <algorithm>
#include <cctype>
#include <charconv>

#include "cryocurate/error.hpp"
#include "cryocurate/net.hpp"

namespace cryocurate::net {

std::string Url::origin() const {
  const bool default_port = (scheme == "http" && port == 80) || (scheme == "https" && port == 443) ||
                            (scheme == "ftp" && port == 21);
  std::string out = scheme + "://" + host;
  if (!default_port) out += ":" + std::to_string(port);
  return out;
}

Url parse_url(std::string_view url) {
  auto bad = [&](const char* why) {
    raise(ErrorCode::InvalidArgument, "bad URL '" + std::string(url) + "': " + why);
  };
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) bad("not absolute");
  Url u;
  u.scheme = std::string(url.substr(0, sep));
  std::transform(u.scheme.begin(), u.scheme.end(), u.scheme.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (u.scheme == "http")
    u.port = 80;
  else if (u.scheme == "https")
    u.port = 443;
  else if (u.scheme == "ftp")
    u.port = 21;
  else
    bad("unsupported scheme");

  std::string_view rest = url.substr(sep + 3);
  const auto slash = rest.find_first_of("/?");
  std::string_view authority = rest.substr(0, slash);
  u.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (u.path[0] == '?') u.path.insert(0, "/");
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  if (authority.empty()) bad("missing host");

  std::string_view host = authority;
  if (authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) bad("unterminated IPv6 literal");
    host = authority.substr(1, close - 1);
    authority.remove_prefix(close + 1);
    if (!authority.empty() && authority.front() != ':') bad("junk after IPv6 literal");
  } else if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    authority.remove_prefix(colon);
  } else {
    authority = {};
  }
  if (!authority.empty()) {
    const auto digits = authority.substr(1);
    int port = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc() || p != digits.data() + digits.size() || port <= 0 || port > 65535) bad("bad port");
    u.port = port;
  }
  if (host.empty()) bad("missing host");
  u.host = std::string(host);
  return u;
}

std::string Response::header(const std::string& name) const {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto it = headers.find(key);
  return it == headers.end() ? std::string() : it->second;
}

}  // namespace cryocurate::net
