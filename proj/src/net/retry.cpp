#include <thread>

#include "cryocurate/error.hpp"
#include "cryocurate/net.hpp"

namespace cryocurate::net {

Response request_with_retry(Transport& transport, Method method, const std::string& url,
                            const RetryPolicy& policy) {
  const int attempts = std::max(1, policy.attempts);
  auto backoff = policy.initial_backoff;
  std::string last;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    try {
      Response r = method == Method::Get ? transport.get(url) : transport.head(url);
      if (r.status < 500) return r;
      last = "server answered " + std::to_string(r.status);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError) throw;
      last = e.what();
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  raise(ErrorCode::TransportError,
        url + ": " + last + " (gave up after " + std::to_string(attempts) + " attempts)");
}

}  // namespace cryocurate::net
