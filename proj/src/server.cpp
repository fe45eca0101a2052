#include "factflow/server.hpp"

#include <fmt/format.h>

#include <atomic>
#include <filesystem>

#include "httplib.h"

namespace factflow::server {

using nlohmann::json;

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::csv_parse:
    case ErrorKind::validation:
    case ErrorKind::schema:
      return 400;
    case ErrorKind::not_found:
      return 404;
    case ErrorKind::conflict:
      return 409;
    case ErrorKind::unsupported:
    case ErrorKind::extraction:
    case ErrorKind::generation:
      return 422;
    case ErrorKind::transport:
    case ErrorKind::fixture_missing:
      return 502;
    default:
      return 500;
  }
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorKind kind, const std::string& message) {
  send_json(res, {{"error", std::string(to_string(kind))}, {"message", message}}, http_status(kind));
}

json parse_body(const httplib::Request& req) {
  try {
    auto j = json::parse(req.body.empty() ? "{}" : req.body);
    if (!j.is_object()) throw Error(ErrorKind::validation, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, fmt::format("request body is not JSON: {}", e.what()));
  }
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorKind::validation, fmt::format("\"{}\" must be a string", key));
  return it->get<std::string>();
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.kind(), e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorKind::io, e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  service::SheetService& svc;
  httplib::Server http;

  explicit Impl(service::SheetService& s) : svc(s) { routes(); }

  void routes() {
    http.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
               res.set_content("ok", "text/plain");
             }));

    http.Post("/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
                std::string csv, name;
                if (req.is_multipart_form_data()) {
                  if (!req.has_file("file")) throw Error(ErrorKind::validation, "multipart field \"file\" is missing");
                  auto f = req.get_file_value("file");
                  csv = f.content;
                  name = std::filesystem::path(f.filename).stem().string();
                } else {
                  csv = req.body;
                }
                if (req.has_param("name")) name = req.get_param_value("name");
                auto rec = svc.add_dataset(csv, name);
                send_json(res, {{"dataset_id", rec.id}, {"name", rec.name}, {"schema", rec.schema}}, 201);
              }));

    http.Post("/sheets", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                auto ds = optional_string(body, "dataset_id");
                if (!ds) throw Error(ErrorKind::validation, "\"dataset_id\" is required");
                std::optional<std::uint64_t> seed;
                if (auto it = body.find("seed"); it != body.end() && !it->is_null()) {
                  if (!it->is_number_unsigned()) throw Error(ErrorKind::validation, "\"seed\" must be a non-negative integer");
                  seed = it->get<std::uint64_t>();
                }
                auto id = svc.start_generation(*ds, optional_string(body, "request"), seed);
                send_json(res, {{"sheet_id", id}}, 202);
              }));

    http.Get(R"(/sheets/([^/]+)/status)", guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto st = svc.status(req.matches[1]);
               json j{{"stage", st.stage}, {"done", st.done}};
               if (st.error_kind) j["error"] = {{"error", std::string(to_string(*st.error_kind))}, {"message", st.error}};
               send_json(res, j);
             }));

    http.Get(R"(/sheets/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto format = req.has_param("format") ? req.get_param_value("format") : std::string("svg");
               auto bytes = svc.export_sheet(req.matches[1], format);
               res.set_content(bytes, format == "pdf" ? "application/pdf" : "image/svg+xml");
             }));

    http.Get(R"(/sheets/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, sheet::to_json(svc.load(req.matches[1])));
             }));

    http.Patch(R"(/sheets/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto body = parse_body(req);
                 auto rev = body.find("revision");
                 if (rev == body.end() || !rev->is_number_integer())
                   throw Error(ErrorKind::validation, "\"revision\" must be an integer");
                 auto ops_j = body.find("ops");
                 if (ops_j == body.end() || !ops_j->is_array())
                   throw Error(ErrorKind::validation, "\"ops\" must be an array");
                 std::vector<sheet::EditOp> ops;
                 for (const auto& o : *ops_j) ops.push_back(sheet::edit_from_json(o));
                 send_json(res, sheet::to_json(svc.edit(req.matches[1], rev->get<std::int64_t>(), ops)));
               }));

    http.Post(R"(/sheets/([^/]+)/facts)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                auto text = optional_string(body, "request");
                send_json(res, sheet::to_json(svc.add_fact(req.matches[1], text.value_or(""))));
              }));
  }
};

HttpServer::HttpServer(service::SheetService& svc) : impl_(std::make_unique<Impl>(svc)) {}
HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }
int HttpServer::bind_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }
bool HttpServer::serve() { return impl_->http.listen_after_bind(); }
void HttpServer::stop() { impl_->http.stop(); }
bool HttpServer::running() const { return impl_->http.is_running(); }

}  // namespace factflow::server
