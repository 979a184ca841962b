#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include "cryocurate/error.hpp"
#include "cryocurate/net.hpp"
#include "httplib.h"

namespace cryocurate::net {
namespace {

[[noreturn]] void transport_error(const std::string& url, const std::string& what) {
  raise(ErrorCode::TransportError, url + ": " + what);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Response from_httplib(const httplib::Result& res, const std::string& url) {
  if (!res) transport_error(url, httplib::to_string(res.error()));
  Response r;
  r.status = res->status;
  r.body = res->body;
  for (const auto& [k, v] : res->headers) r.headers[lower(k)] = v;
  return r;
}

// ---------------------------------------------------------------- FTP ---

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { close(); }
  int fd() const { return fd_; }
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

Socket connect_to(const std::string& host, int port, const TransportOptions& opt, const std::string& url) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* list = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &list); rc != 0)
    transport_error(url, std::string("cannot resolve host: ") + ::gai_strerror(rc));
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(list, ::freeaddrinfo);
  for (addrinfo* ai = list; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (s.fd() < 0) continue;
    timeval tv{};
    tv.tv_sec = static_cast<long>(opt.read_timeout.count() / 1000);
    tv.tv_usec = static_cast<long>((opt.read_timeout.count() % 1000) * 1000);
    ::setsockopt(s.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(s.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) return s;
  }
  transport_error(url, "cannot connect to " + host + ":" + std::to_string(port));
}

class FtpSession {
 public:
  FtpSession(const Url& u, const std::string& url, const TransportOptions& opt)
      : url_(url), host_(u.host), opt_(opt), control_(connect_to(u.host, u.port, opt, url)) {
    expect(reply(), 2, "greeting");
    auto r = command("USER anonymous");
    if (r.first == 331) r = command("PASS anonymous@");
    if (r.first / 100 != 2) fail(r);
    expect(command("TYPE I"), 2, "TYPE I");
  }

  ~FtpSession() {
    try {
      send("QUIT");
    } catch (...) {
    }
  }

  // Runs a transfer command; returns the body, or the FTP reply code when
  // the server refused.
  std::pair<int, std::string> transfer(const std::string& cmd) {
    const auto pasv = command("PASV");
    if (pasv.first != 227) return {pasv.first, {}};
    const auto open = pasv.second.find('(');
    int h[4], p[2];
    if (open == std::string::npos ||
        std::sscanf(pasv.second.c_str() + open, "(%d,%d,%d,%d,%d,%d)", &h[0], &h[1], &h[2], &h[3], &p[0], &p[1]) != 6)
      transport_error(url_, "unparsable PASV reply: " + pasv.second);
    Socket data = connect_to(host_, p[0] * 256 + p[1], opt_, url_);
    const auto start = command(cmd);
    if (start.first != 150 && start.first != 125) return {start.first, {}};
    std::string body;
    char buf[65536];
    while (true) {
      const auto n = ::recv(data.fd(), buf, sizeof buf, 0);
      if (n < 0) transport_error(url_, "data connection failed");
      if (n == 0) break;
      body.append(buf, static_cast<std::size_t>(n));
    }
    data.close();
    const auto done = reply();
    if (done.first / 100 != 2) return {done.first, {}};
    return {226, std::move(body)};
  }

  std::pair<int, std::string> command(const std::string& line) {
    send(line);
    return reply();
  }

 private:
  void send(const std::string& line) {
    const std::string msg = line + "\r\n";
    if (::send(control_.fd(), msg.data(), msg.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(msg.size()))
      transport_error(url_, "control connection write failed");
  }

  std::string read_line() {
    std::string line;
    while (true) {
      const auto nl = pending_.find('\n');
      if (nl != std::string::npos) {
        line = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char buf[4096];
      const auto n = ::recv(control_.fd(), buf, sizeof buf, 0);
      if (n <= 0) transport_error(url_, "control connection closed");
      pending_.append(buf, static_cast<std::size_t>(n));
    }
  }

  std::pair<int, std::string> reply() {
    std::string line = read_line();
    if (line.size() < 3) transport_error(url_, "bad FTP reply: " + line);
    const int code = std::atoi(line.substr(0, 3).c_str());
    if (line.size() > 3 && line[3] == '-') {
      const std::string end = line.substr(0, 3) + " ";
      do line = read_line();
      while (line.rfind(end, 0) != 0);
    }
    return {code, line};
  }

  [[noreturn]] void fail(const std::pair<int, std::string>& r) { transport_error(url_, "FTP: " + r.second); }

  void expect(const std::pair<int, std::string>& r, int klass, const char* what) {
    if (r.first / 100 != klass) transport_error(url_, std::string("FTP ") + what + " refused: " + r.second);
  }

  std::string url_;
  std::string host_;
  TransportOptions opt_;
  Socket control_;
  std::string pending_;
};

int ftp_status(int code) {
  if (code == 550 || code == 450) return 404;
  if (code == 530 || code == 532) return 403;
  if (code / 100 == 4) return 503;  // transient
  return 400;
}

std::string percent_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

class DefaultTransport final : public Transport {
 public:
  explicit DefaultTransport(TransportOptions opt) : opt_(opt) {}

  Response get(const std::string& url) override {
    const Url u = parse_url(url);
    if (u.scheme == "ftp") return ftp(u, url, false);
    auto client = http_client(u);
    return from_httplib(client->Get(u.path), url);
  }

  Response head(const std::string& url) override {
    const Url u = parse_url(url);
    if (u.scheme == "ftp") return ftp(u, url, true);
    auto client = http_client(u);
    return from_httplib(client->Head(u.path), url);
  }

 private:
  std::unique_ptr<httplib::Client> http_client(const Url& u) const {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (u.scheme == "https") raise(ErrorCode::TransportError, "built without TLS support: " + u.origin());
#endif
    auto c = std::make_unique<httplib::Client>(u.scheme + "://" + u.host + ":" + std::to_string(u.port));
    c->set_follow_location(true);
    const auto ct = opt_.connect_timeout.count();
    const auto rt = opt_.read_timeout.count();
    c->set_connection_timeout(ct / 1000, (ct % 1000) * 1000);
    c->set_read_timeout(rt / 1000, (rt % 1000) * 1000);
    return c;
  }

  Response ftp(const Url& u, const std::string& url, bool head_only) {
    FtpSession session(u, url, opt_);
    const std::string path = percent_decode(u.path);
    Response r;
    if (path.back() == '/') {
      if (head_only) {
        const auto cwd = session.command("CWD " + path);
        r.status = cwd.first / 100 == 2 ? 200 : ftp_status(cwd.first);
        return r;
      }
      auto [code, body] = session.transfer("LIST " + path);
      r.status = code == 226 ? 200 : ftp_status(code);
      r.body = std::move(body);
      r.headers["content-type"] = "text/x-ftp-list";
      return r;
    }
    if (head_only) {
      const auto size = session.command("SIZE " + path);
      r.status = size.first == 213 ? 200 : ftp_status(size.first);
      if (size.first == 213 && size.second.size() > 4) r.headers["content-length"] = size.second.substr(4);
      return r;
    }
    auto [code, body] = session.transfer("RETR " + path);
    r.status = code == 226 ? 200 : ftp_status(code);
    r.body = std::move(body);
    return r;
  }

  TransportOptions opt_;
};

}  // namespace

std::unique_ptr<Transport> make_transport(const TransportOptions& options) {
  return std::make_unique<DefaultTransport>(options);
}

}  // namespace cryocurate::net
