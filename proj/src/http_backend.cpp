#include "drivevqa/vlm_gateway.hpp"

#include <fmt/format.h>

// httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen headers, so it
// goes last and stays confined to this translation unit.
#include <httplib.h>

namespace drivevqa {

namespace {

class HttplibTransport : public Transport {
 public:
  HttpResponse post(const std::string& url, const std::string& body, const std::string& api_key,
                    double timeout_s) override {
    // Split "scheme://host[:port]/path" for httplib's client.
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) return {0, "", fmt::format("bad URL '{}'", url)};
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
  }
};

}  // namespace

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

}  // namespace drivevqa
