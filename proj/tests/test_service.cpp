#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "reviewkit/service.hpp"

using namespace reviewkit;
using namespace reviewkit::service;
using json = nlohmann::json;

namespace {

// Runs a Service on a free port for the lifetime of the object.
class Running {
 public:
  explicit Running(ServiceConfig c) {
    c.port = 0;
    service_ = std::make_unique<Service>(std::move(c));
    service_->bind();
    thread_ = std::thread([this] { service_->run(); });
    service_->server().wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", service_->port());
  }
  ~Running() {
    service_->stop();
    thread_.join();
  }
  httplib::Client& client() { return *client_; }

 private:
  std::unique_ptr<Service> service_;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

json body_of(const httplib::Result& r) {
  EXPECT_TRUE(r);
  return json::parse(r->body);
}

std::string path(const std::string& tail) { return "/api/v1" + tail; }

}  // namespace

TEST(Service, HealthAndProductTypes) {
  Running svc(ServiceConfig{});
  auto r = svc.client().Get(path("/healthz"));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const auto h = body_of(r);
  EXPECT_EQ(h["status"], "ok");
  EXPECT_EQ(h["backend"], "template");

  const auto pts = body_of(svc.client().Get(path("/product-types")));
  bool straps = false;
  for (const auto& p : pts["product_types"]) straps = straps || (p["id"] == "Camera Straps" && p["has_topics"] == true);
  EXPECT_TRUE(straps);

  r = svc.client().Get(path("/product-types/Garbage%20Bags/topics"));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const auto topics = json::parse(r->body);
  EXPECT_EQ(topics["provenance"], "catalog");
  EXPECT_EQ(topics["topics"][0]["label"], "sturdiness");

  r = svc.client().Get(path("/product-types/Moon%20Rocks/topics"));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(json::parse(r->body)["code"], "not_found");

  r = svc.client().Get(path("/product-types/Wine%20Glasses/similar?method=levenshtein&k=3&threshold=0.6"));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_LE(json::parse(r->body)["similar"].size(), 3u);
  r = svc.client().Get(path("/product-types/Wine%20Glasses/similar?k=zero"));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST(Service, SessionFlowAndErrorMapping) {
  Running svc(ServiceConfig{});
  auto& c = svc.client();
  auto r = c.Post(path("/sessions"), R"({"product_type":"Camera Straps"})", "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 201);
  const auto created = json::parse(r->body);
  const std::string id = created["id"];
  EXPECT_EQ(created["state"], "TOPICS_PRESENTED");

  httplib::Headers key{{"Idempotency-Key", "abc"}};
  const auto a = body_of(c.Post(path("/sessions"), key, R"({"product_type":"Perfumes"})", "application/json"));
  const auto b = body_of(c.Post(path("/sessions"), key, R"({"product_type":"Perfumes"})", "application/json"));
  EXPECT_EQ(a["id"], b["id"]);

  r = c.Post(path("/sessions/" + id + "/finalize"), "", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);  // empty draft

  r = c.Put(path("/sessions/" + id + "/draft"), R"({"text":"early"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(json::parse(r->body)["code"], "invalid_state");

  r = c.Post(path("/sessions/" + id + "/ratings"), R"({"ratings":[{"topic":"waterproof","stars":3}]})",
             "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  r = c.Post(path("/sessions/" + id + "/ratings"), "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);

  const auto rated = body_of(c.Post(
      path("/sessions/" + id + "/ratings"),
      R"({"ratings":[{"topic":"Feel","stars":2},{"topic":"features","stars":1},{"topic":"strap","stars":4},{"topic":"price","stars":2}]})",
      "application/json"));
  EXPECT_EQ(rated["state"], "RATED");
  const auto suggested = body_of(c.Post(path("/sessions/" + id + "/suggestions"), "", "application/json"));
  EXPECT_EQ(suggested["state"], "PHRASES_SUGGESTED");
  EXPECT_EQ(suggested["suggestions"].size(), 4u);
  const auto drafted = body_of(c.Put(path("/sessions/" + id + "/draft"),
                                     R"({"text":"The strap is sturdy. The price was too high."})", "application/json"));
  EXPECT_EQ(drafted["coverage"]["covered"], (json{"strap", "price"}));
  const auto final = body_of(c.Post(path("/sessions/" + id + "/finalize"), "", "application/json"));
  EXPECT_EQ(final["state"], "FINALIZED");
  EXPECT_EQ(final["final"]["topic_average_stars"], 2);

  r = c.Put(path("/sessions/" + id + "/draft"), R"({"text":"again"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);
  r = c.Get(path("/sessions/s999999"));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
}

TEST(Service, EvalBleu) {
  Running svc(ServiceConfig{});
  const auto out = body_of(svc.client().Post(
      path("/eval/bleu"),
      R"({"pairs":[{"candidate":"wide leather strap feels comfortable sturdy","references":["wide leather strap feels comfortable sturdy"]}]})",
      "application/json"));
  EXPECT_DOUBLE_EQ(out["cumulative"]["4"].get<double>(), 1.0);
  auto r = svc.client().Post(path("/eval/bleu"), R"({"pairs":[{"candidate":"x"}]})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST(Service, ConfigRejectsBadValues) {
  ServiceConfig c;
  c.backend = "magic";
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.backend = "http";
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.llm_url = "https://example.invalid/v1";
  EXPECT_THROW(Service{c}, InvalidArgument);
  c = ServiceConfig{};
  c.port = 70000;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(HttpBackend, SendsBearerFromEnvironment) {
  // Stand-in provider that answers with template text for the posted prompt.
  httplib::Server mock;
  std::mutex mu;
  std::vector<std::string> auth;
  generation::TemplateBackend text(11);
  mock.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    std::lock_guard lock(mu);
    auth.push_back(req.get_header_value("Authorization"));
    res.set_content(json{{"text", text.complete(body.at("prompt"), body.value("attempt", 0))}}.dump(),
                    "application/json");
  });
  const int port = mock.bind_to_any_port("127.0.0.1");
  std::thread t([&] { mock.listen_after_bind(); });
  mock.wait_until_ready();

  ::setenv("REVIEWKIT_TEST_TOKEN", "test-token-123", 1);
  ServiceConfig c;
  c.backend = "http";
  c.llm_url = "http://127.0.0.1:" + std::to_string(port) + "/generate";
  c.credential_env = "REVIEWKIT_TEST_TOKEN";
  {
    Running svc(c);
    const auto h = body_of(svc.client().Get(path("/healthz")));
    EXPECT_EQ(h["backend"], "http_llm");
    const auto s = body_of(svc.client().Post(path("/sessions"), R"({"product_type":"Perfumes"})", "application/json"));
    const std::string id = s["id"];
    svc.client().Post(path("/sessions/" + id + "/ratings"), R"([{"topic":"smell","stars":1}])", "application/json");
    const auto suggested = body_of(svc.client().Post(path("/sessions/" + id + "/suggestions"), "", "application/json"));
    EXPECT_EQ(suggested["suggestions"].size(), 1u);
  }
  ::unsetenv("REVIEWKIT_TEST_TOKEN");
  mock.stop();
  t.join();
  ASSERT_FALSE(auth.empty());
  for (const auto& a : auth) EXPECT_EQ(a, "Bearer test-token-123");

  HttpBackend down("http://127.0.0.1:1/none", "REVIEWKIT_TEST_TOKEN", std::chrono::seconds(1));
  EXPECT_THROW(down.complete("hi", 0), BackendError);
  EXPECT_THROW(parse_http_url("ftp://x"), InvalidArgument);
  EXPECT_EQ(parse_http_url("http://h:9/a/b").path, "/a/b");
}
