#pragma once

// HTTP API under /api/v1 over an Engine.

#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "reviewkit/engine.hpp"
#include "reviewkit/evaluation.hpp"
#include "reviewkit/http_backend.hpp"

namespace reviewkit::service {

using json = nlohmann::json;

inline constexpr std::string_view kVersion = "0.1.0";

struct ServiceConfig {
  std::optional<std::filesystem::path> data_dir;
  std::string backend = "template";  // template | http
  std::string llm_url;
  std::string credential_env = "LLM_API_KEY";  // name of the variable, never the value
  std::uint64_t seed = 7;
  std::string host = "127.0.0.1";
  int port = 8080;
  double alpha = 0.5;
  std::size_t max_topics = 10;
  std::size_t similar_k = 10;
  generation::ValidationLimits limits{};

  void validate() const {
    if (port < 0 || port > 65535) throw InvalidArgument("port outside 0..65535");
    if (backend != "template" && backend != "http") throw InvalidArgument("BACKEND must be template or http");
    if (backend == "http" && llm_url.empty()) throw InvalidArgument("BACKEND=http needs LLM_URL");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha outside [0, 1]");
  }
};

/// Reads DATA_DIR, BACKEND, LLM_URL, SEED and PORT over the given defaults.
/// LLM_API_KEY is only ever read by the HTTP backend at call time.
inline ServiceConfig config_from_env(ServiceConfig c = {}) {
  const auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("DATA_DIR")) c.data_dir = *v;
  if (auto v = env("BACKEND")) c.backend = *v;
  if (auto v = env("LLM_URL")) c.llm_url = *v;
  try {
    if (auto v = env("SEED")) c.seed = std::stoull(*v);
    if (auto v = env("PORT")) c.port = std::stoi(*v);
  } catch (const std::exception&) {
    throw InvalidArgument("SEED and PORT must be integers");
  }
  return c;
}

/// Primary backend plus, for http, the template backend as fallback.
inline std::pair<std::unique_ptr<GenerationBackend>, std::unique_ptr<GenerationBackend>> make_backends(
    const ServiceConfig& c) {
  auto tmpl = std::make_unique<generation::TemplateBackend>(c.seed);
  if (c.backend == "http") return {std::make_unique<HttpBackend>(c.llm_url, c.credential_env), std::move(tmpl)};
  return {std::move(tmpl), nullptr};
}

inline std::unique_ptr<Engine> make_engine(const ServiceConfig& c) {
  c.validate();
  EngineConfig ec;
  ec.data_dir = c.data_dir;
  ec.alpha = c.alpha;
  ec.max_topics = c.max_topics;
  ec.similar_k = c.similar_k;
  ec.limits = c.limits;
  auto [primary, fallback] = make_backends(c);
  return std::make_unique<Engine>(ec, std::move(primary), std::move(fallback));
}

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::contract_violation: return 400;
    case ErrorCode::not_found:
    case ErrorCode::catalog_miss: return 404;
    case ErrorCode::invalid_state: return 409;
    case ErrorCode::backend_error:
    case ErrorCode::empty_response:
    case ErrorCode::format_error: return 502;
    default: return 500;
  }
}

inline json error_body(std::string code, std::string message, std::string detail = {}) {
  return json{{"code", std::move(code)}, {"message", std::move(message)}, {"detail", std::move(detail)}};
}

class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)), engine_(make_engine(config_)) { routes(); }

  Engine& engine() { return *engine_; }
  httplib::Server& server() { return server_; }

  /// Binds the configured port (0 picks a free one) and returns it. Throws
  /// IoError when the port is busy.
  int bind() {
    if (config_.port == 0) {
      port_ = server_.bind_to_any_port(config_.host);
    } else {
      port_ = server_.bind_to_port(config_.host, config_.port) ? config_.port : -1;
    }
    if (port_ < 0) throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port) + " (port busy?)");
    return port_;
  }

  /// Serves until stop(); flushes the session journal on the way out.
  void run() {
    server_.listen_after_bind();
    engine_->sessions().flush();
  }

  void stop() { server_.stop(); }
  int port() const { return port_; }

 private:
  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::exception& e) {
      throw InvalidArgument("request body is not valid JSON", e.what());
    }
  }

  json session_body(const session::ReviewSession& s) {
    json j = session::to_json(s);
    j["session_version"] = s.version;
    j["catalog_version"] = engine_->catalog().snapshot()->version;
    return j;
  }

  template <class Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send(res, http_status(e.code()), error_body(std::string(to_string(e.code())), e.what(), e.detail()));
      } catch (const json::exception& e) {
        send(res, 400, error_body("invalid_argument", "malformed request field", e.what()));
      } catch (const std::exception& e) {
        send(res, 500, error_body("internal", e.what()));
      }
    };
  }

  void routes() {
    const std::string p = "/api/v1";

    server_.Get(p + "/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
      send(res, 200,
           json{{"status", "ok"},
                {"version", kVersion},
                {"backend", std::string(engine_->backend().kind())},
                {"catalog_version", engine_->catalog().snapshot()->version}});
    }));

    server_.Post(p + "/catalog/reviews", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::istringstream in(req.body);
      const auto summary = engine_->catalog().ingest(in);
      if (req.has_param("rebuild") && req.get_param_value("rebuild") == "true") engine_->catalog().rebuild();
      json body = catalog::to_json(summary);
      body["catalog_version"] = engine_->catalog().snapshot()->version;
      send(res, 200, body);
    }));

    server_.Get(p + "/product-types", guarded([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      const auto snapshot = engine_->catalog().snapshot();
      for (const auto& pt : engine_->product_types()) {
        json j = catalog::to_json(pt);
        j["has_topics"] = snapshot->find(pt.id) != nullptr;
        list.push_back(std::move(j));
      }
      send(res, 200, json{{"product_types", list}, {"catalog_version", snapshot->version}});
    }));

    server_.Get(p + R"(/product-types/([^/]+)/topics)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string pt = req.matches[1];
                  const bool fallback = !req.has_param("fallback") || req.get_param_value("fallback") != "false";
                  const auto r = engine_->topics(pt, fallback);
                  json topics = json::array();
                  for (const auto& t : r.topics) topics.push_back(catalog::to_json(t));
                  send(res, 200,
                       json{{"product_type", pt},
                            {"topics", topics},
                            {"provenance", std::string(catalog::to_string(r.provenance))},
                            {"detail", r.detail},
                            {"catalog_version", r.catalog_version}});
                }));

    server_.Get(p + R"(/product-types/([^/]+)/similar)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string pt = req.matches[1];
                  similarity::SimilarityMethod m;
                  if (req.has_param("method")) m.kind = similarity::method_from_string(req.get_param_value("method"));
                  try {
                    if (req.has_param("k")) m.k = std::stoul(req.get_param_value("k"));
                    if (req.has_param("threshold")) m.threshold = std::stod(req.get_param_value("threshold"));
                  } catch (const std::exception&) {
                    throw InvalidArgument("k and threshold must be numeric");
                  }
                  json results = json::array();
                  for (const auto& s : engine_->similar(pt, m))
                    results.push_back({{"product_type", s.id}, {"name", s.name}, {"score", s.score}});
                  send(res, 200,
                       json{{"product_type", pt},
                            {"method", std::string(similarity::to_string(m.kind))},
                            {"k", m.k},
                            {"similar", results},
                            {"catalog_version", engine_->catalog().snapshot()->version}});
                }));

    server_.Post(p + "/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      std::string key = req.get_header_value("Idempotency-Key");
      if (key.empty()) key = body.value("idempotency_key", std::string{});
      const auto s = engine_->sessions().create(body.at("product_type").get<std::string>(),
                                                body.value("product_name", std::string{}), key);
      send(res, 201, session_body(s));
    }));

    server_.Get(p + R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send(res, 200, session_body(engine_->sessions().get(req.matches[1])));
    }));

    server_.Post(p + R"(/sessions/([^/]+)/ratings)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   const auto body = parse_body(req);
                   const json& list = body.is_array() ? body : body.at("ratings");
                   std::vector<generation::TopicRating> ratings;
                   for (const auto& r : list)
                     ratings.push_back({r.at("topic").get<std::string>(), r.at("stars").get<int>()});
                   send(res, 200, session_body(engine_->sessions().rate_topics(req.matches[1], ratings)));
                 }));

    server_.Post(p + R"(/sessions/([^/]+)/suggestions)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send(res, 200,
                        session_body(engine_->sessions().suggest_phrases(req.matches[1], engine_->backend())));
                 }));

    server_.Put(p + R"(/sessions/([^/]+)/draft)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      send(res, 200, session_body(engine_->sessions().update_draft(req.matches[1], body.at("text").get<std::string>())));
    }));

    server_.Post(p + R"(/sessions/([^/]+)/finalize)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send(res, 200, session_body(engine_->sessions().finalize(req.matches[1])));
                 }));

    server_.Post(p + "/eval/bleu", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::vector<evaluation::BleuPair> pairs;
      bool eligibility = false;
      evaluation::BleuOptions opts;
      const auto body = parse_body(req);
      eligibility = body.value("eligibility", false);
      opts.smoothing = body.value("smoothing", false);
      for (const auto& j : body.at("pairs")) {
        evaluation::BleuPair p;
        p.id = j.value("id", std::to_string(pairs.size() + 1));
        p.candidate = j.at("candidate").get<std::string>();
        p.references = j.at("references").get<std::vector<std::string>>();
        pairs.push_back(std::move(p));
      }
      auto report = evaluation::corpus_bleu(pairs, eligibility, opts, body.value("method", std::string("candidate")));
      json out = evaluation::to_json(report);
      out["eligibility"] = eligibility;
      out["catalog_version"] = engine_->catalog().snapshot()->version;
      send(res, 200, out);
    }));
  }

  ServiceConfig config_;
  std::unique_ptr<Engine> engine_;
  httplib::Server server_;
  int port_ = -1;
};

}  // namespace reviewkit::service
