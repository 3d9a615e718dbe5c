#include "credsql/http.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "credsql/error.hpp"

namespace credsql {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "URL without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse HttplibTransport::post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                                    int timeout_seconds) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(parts.path, h, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::ProviderUnavailable, "POST " + url + " failed: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

HttpResponse FailOnConnectTransport::post(const std::string& url, const HttpHeaders&, const std::string&, int) {
  ++attempts_;
  throw Error(ErrorCode::ProviderUnavailable, "network access refused (offline run): " + url);
}

}  // namespace credsql
