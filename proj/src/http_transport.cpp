#include <httplib.h>

#include "srbench/gateway.hpp"

namespace srbench {

namespace {

class HttplibTransport final : public Transport {
 public:
  HttpReply post(const HttpRequest& req) override {
    httplib::Client client(req.endpoint.origin());
    const auto seconds = static_cast<time_t>(req.timeout_s);
    const auto micros = static_cast<time_t>((req.timeout_s - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [name, value] : req.headers) {
      if (name == "Content-Type") {
        content_type = value;
      } else {
        headers.emplace(name, value);
      }
    }

    HttpReply reply;
    auto res = client.Post(req.endpoint.path, headers, req.body, content_type);
    if (!res) {
      reply.error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace srbench
