#pragma once

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace gm::studio {

class StudioService;

/// Serves a StudioService over HTTP/1.1.
class HttpServer {
 public:
  explicit HttpServer(StudioService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  /// Accepts requests until stop() is called. Call bind() first.
  void listen();
  /// Blocks until a listen() running on another thread accepts requests.
  void wait_until_ready();
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace gm::studio
