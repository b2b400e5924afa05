#include <httplib.h>

#include "ctxbrowse/service.hpp"

namespace ctxbrowse {

using nlohmann::json;

struct HttpServer::Impl {
  SearchService& service;
  httplib::Server server;

  explicit Impl(SearchService& s) : service(s) {}
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Handler>
void guarded(httplib::Response& res, Handler&& handler) {
  try {
    handler();
  } catch (const ServiceError& e) {
    reply(res, e.status(), {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  try {
    const long long v = std::stoll(req.get_param_value(name));
    if (v < 1) throw ServiceError(400, std::string(name) + " must be >= 1");
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw ServiceError(400, std::string("bad ") + name);
  }
}

std::optional<TimestampMs> ts_param(const httplib::Request& req) {
  if (!req.has_param("ts")) return std::nullopt;
  try {
    return std::stoll(req.get_param_value("ts"));
  } catch (const std::logic_error&) {
    throw ServiceError(400, "bad ts");
  }
}

}  // namespace

HttpServer::HttpServer(SearchService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;

  srv.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}, {"documents", svc.index().doc_count()}});
  });

  srv.Get("/search", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto response = svc.search(
          req.get_param_value("session"), req.get_param_value("q"),
          size_param(req, "page", 1), size_param(req, "page_size", kDefaultPageSize),
          ts_param(req));
      reply(res, 200, response.to_json());
    });
  });

  srv.Get(R"(/doc/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string session = req.get_param_value("session");
      const auto view = svc.view_document(session, req.matches[1].str(), ts_param(req));
      reply(res, 200, view.to_json(session));
    });
  });

  srv.Post("/browse", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto request = BrowseRequest::from_json(json::parse(req.body));
      reply(res, 200, svc.browse(request).to_json());
    });
  });

  srv.Post("/event", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const RecordAck ack = svc.post_event(json::parse(req.body));
      reply(res, 200, {{"accepted", ack.accepted},
                       {"duplicate", ack.duplicate},
                       {"monotonicity_violation", ack.monotonicity_violation}});
    });
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace ctxbrowse
