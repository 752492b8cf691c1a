#pragma once

// HTTP/JSON binding of Service:
//
//   POST /sessions?filename=<name>             raw upload body → Session
//   GET  /sessions/{id}                        → Session
//   POST /sessions/{id}/analyze                → per-line verdicts
//   GET  /sessions/{id}/results                → per-line verdicts
//   GET  /sessions/{id}/lines/{n}/attention    → tokens + [L][H][S][S] tensor
//   GET  /sessions/{id}/lines/{n}/report       → report text + JSON documents
//   POST /feedback                             → ack
//
// Errors are {"code": ..., "message": ...}.

#include "logxai/service/service.hpp"

#include "httplib.h"

#include <atomic>
#include <string>
#include <thread>

namespace logxai::service {

class HttpServer {
public:
  explicit HttpServer(Service& service) : service_(service) {
    // Let oversized uploads reach the handler so they get a JSON 413.
    server_.set_payload_max_length(service.config().max_upload_bytes * 2 + 4096);
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    routes();
  }

  ~HttpServer() { stop(); }

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  /// Serves until stop(); blocks the calling thread.
  void run() { server_.listen_after_bind(); }

  void start_background() {
    worker_ = std::thread([this] { run(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (worker_.joinable()) worker_.join();
  }

private:
  static void send(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }

  static bool parse_line_no(const std::string& text, std::size_t& out) {
    if (text.empty() || text.size() > 9) return false;
    out = std::stoul(text);
    return true;
  }

  void routes() {
    server_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type, X-Filename");
      res.status = 204;
    });

    server_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      std::string name = req.get_param_value("filename");
      if (name.empty()) name = req.get_header_value("X-Filename");
      send(res, service_.create_session(req.body, name));
    });

    server_.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, service_.get_session(req.matches[1]));
    });

    server_.Post(R"(/sessions/([^/]+)/analyze)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   send(res, service_.analyze_session(req.matches[1]));
                 });

    server_.Get(R"(/sessions/([^/]+)/results)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  send(res, service_.get_results(req.matches[1]));
                });

    server_.Get(R"(/sessions/([^/]+)/lines/([0-9]+)/attention)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  std::size_t n = 0;
                  if (!parse_line_no(req.matches[2], n))
                    return send(res, detail::error(404, "not_found", "no such line"));
                  send(res, service_.get_line_attention(req.matches[1], n));
                });

    server_.Get(R"(/sessions/([^/]+)/lines/([0-9]+)/report)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  std::size_t n = 0;
                  if (!parse_line_no(req.matches[2], n))
                    return send(res, detail::error(404, "not_found", "no such line"));
                  send(res, service_.get_line_report(req.matches[1], n));
                });

    server_.Post("/feedback", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, service_.post_feedback(req.body));
    });

    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      const std::string code = res.status == 413 ? "payload_too_large"
                               : res.status == 404 ? "not_found"
                                                   : "error";
      res.set_content(nlohmann::json{{"code", code}, {"message", httplib::status_message(res.status)}}.dump(),
                      "application/json");
    });

    server_.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          std::string what = "internal error";
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            what = e.what();
          } catch (...) {
          }
          res.status = 500;
          res.set_content(nlohmann::json{{"code", "internal_error"}, {"message", what}}.dump(),
                          "application/json");
        });
  }

  Service& service_;
  httplib::Server server_;
  std::thread worker_;
};

} // namespace logxai::service
