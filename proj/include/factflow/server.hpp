#pragma once

#include <memory>
#include <string>

#include "factflow/service.hpp"

namespace factflow::server {

// HTTP front end of a SheetService. Errors come back as
// {"error": <kind>, "message": ...} with 400/404/409/422/500 by kind.
class HttpServer {
 public:
  explicit HttpServer(service::SheetService& svc);
  ~HttpServer();

  // Binds and serves until stop(); returns false when the bind fails.
  bool listen(const std::string& host, int port);
  // Binds to a free port and returns it, or -1.
  int bind_any_port(const std::string& host);
  // Serves after bind_any_port; blocks until stop().
  bool serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status(ErrorKind kind);

}  // namespace factflow::server
