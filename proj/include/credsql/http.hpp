#pragma once

#include <atomic>
#include <string>
#include <utility>
#include <vector>

namespace credsql {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POST-only transport seam shared by the chat and embedding clients.
/// Implementations must allow concurrent in-flight requests.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws Error(ProviderUnavailable) when no response could be obtained.
  virtual HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                            int timeout_seconds) = 0;
};

/// cpp-httplib backed transport; http:// and https:// URLs.
class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                    int timeout_seconds) override;
};

/// Refuses every request and counts the attempts. Used to prove offline runs
/// never reach the network.
class FailOnConnectTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                    int timeout_seconds) override;
  int attempts() const noexcept { return attempts_.load(); }

 private:
  std::atomic<int> attempts_{0};
};

}  // namespace credsql
