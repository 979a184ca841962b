#pragma once

// Minimal client side of the remote protocols: HTTP(S) through cpp-httplib
// and anonymous FTP over plain sockets. Everything above this layer talks
// to the Transport interface so tests can point it at local servers.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace cryocurate::net {

struct Url {
  std::string scheme;  // "http", "https" or "ftp"
  std::string host;
  int port = 0;
  std::string path;  // always begins with '/', includes any query

  std::string origin() const;  // scheme://host[:port]
};

/// Raises InvalidArgument for anything that is not an absolute
/// http/https/ftp URL.
Url parse_url(std::string_view url);

struct Response {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;  // keys lower-cased

  bool ok() const { return status >= 200 && status < 300; }
  std::string header(const std::string& name) const;
};

struct TransportOptions {
  std::chrono::milliseconds connect_timeout{10000};
  std::chrono::milliseconds read_timeout{60000};
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Returns whatever status the server sent; raises TransportError only
  /// when no response was received at all. For ftp:// URLs ending in '/'
  /// the body is the server's LIST output.
  virtual Response get(const std::string& url) = 0;
  virtual Response head(const std::string& url) = 0;
};

/// Default transport for http, https and ftp URLs. Follows redirects.
std::unique_ptr<Transport> make_transport(const TransportOptions& options = {});

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};  // doubled after each failure
};

enum class Method { Get, Head };

/// Issues the request, retrying 5xx answers and connection failures with
/// exponential backoff. Any other status is returned to the caller. Raises
/// TransportError once the attempts are used up.
Response request_with_retry(Transport& transport, Method method, const std::string& url,
                            const RetryPolicy& policy);

}  // namespace cryocurate::net
