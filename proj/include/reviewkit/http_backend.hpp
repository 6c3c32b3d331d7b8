#pragma once

// Plain-HTTP text generation backend: POST {"prompt": ...}, read {"text": ...}.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "reviewkit/backend.hpp"
#include "reviewkit/error.hpp"

namespace reviewkit {

struct HttpEndpoint {
  std::string origin;  // "http://host:port"
  std::string path;    // "/v1/generate"
};

/// Splits "http://host[:port]/path". Only plain http is supported.
inline HttpEndpoint parse_http_url(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) {
    if (url.substr(0, 8) == "https://")
      throw InvalidArgument("https endpoints are not supported; put a TLS-terminating proxy in front", std::string(url));
    throw InvalidArgument("endpoint must start with http://", std::string(url));
  }
  const auto rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  HttpEndpoint e;
  e.origin = std::string(url.substr(0, scheme.size() + (slash == std::string_view::npos ? rest.size() : slash)));
  e.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (e.origin.size() == scheme.size()) throw InvalidArgument("endpoint has no host", std::string(url));
  return e;
}

/// Pulls the generated text out of a provider response. The default reads
/// "text" and falls back to a few common shapes.
using ResponseAdapter = std::function<std::string(const nlohmann::json&)>;

inline std::string default_response_adapter(const nlohmann::json& j) {
  if (j.contains("text") && j["text"].is_string()) return j["text"].get<std::string>();
  if (j.contains("generated_text") && j["generated_text"].is_string()) return j["generated_text"].get<std::string>();
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& c = j["choices"][0];
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
    if (c.contains("message") && c["message"].contains("content")) return c["message"]["content"].get<std::string>();
  }
  throw BackendError("response has no text field", j.dump().substr(0, 200));
}

class HttpBackend final : public GenerationBackend {
 public:
  /// The bearer token is read from the environment variable `token_env` on
  /// every call; it is never stored in configuration.
  explicit HttpBackend(std::string url, std::string token_env = "LLM_API_KEY",
                       std::chrono::seconds timeout = std::chrono::seconds(30),
                       ResponseAdapter adapter = default_response_adapter)
      : endpoint_(parse_http_url(url)),
        token_env_(std::move(token_env)),
        timeout_(timeout),
        adapter_(std::move(adapter)) {}

  std::string complete(const std::string& prompt, int attempt) override {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (const char* token = std::getenv(token_env_.c_str()); token != nullptr && *token != '\0')
      headers.emplace("Authorization", std::string("Bearer ") + token);
    const nlohmann::json body{{"prompt", prompt}, {"attempt", attempt}};
    auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res) throw BackendError("request to " + endpoint_.origin + " failed", httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw BackendError("backend returned HTTP " + std::to_string(res->status), res->body.substr(0, 200));
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw BackendError("backend response is not JSON", res->body.substr(0, 200));
    }
    return adapter_(parsed);
  }

  std::string_view kind() const override { return "http_llm"; }

 private:
  HttpEndpoint endpoint_;
  std::string token_env_;
  std::chrono::seconds timeout_;
  ResponseAdapter adapter_;
};

}  // namespace reviewkit
