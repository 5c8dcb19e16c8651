#include "studio/http.hpp"

#include <httplib.h>

#include "common/error.hpp"
#include "studio/service.hpp"

namespace gm::studio {

HttpServer::HttpServer(StudioService& service) : server_(std::make_unique<httplib::Server>()) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    const Response out = service.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Put(".*", handler);
  server_->Patch(".*", handler);
  server_->Delete(".*", handler);
  server_->set_payload_max_length(64u << 20);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::wait_until_ready() { server_->wait_until_ready(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace gm::studio
