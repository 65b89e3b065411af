#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include "cqe/service.hpp"

namespace fs = std::filesystem;

namespace {

// Fresh copy of the wedding bundle; the pool file is written during tests.
class bundle {
 public:
  bundle() {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("cqe-svc-" + std::to_string(rd()));
    fs::create_directories(dir_);
    fs::copy(fs::path(CQE_FIXTURES) / "wedding", dir_, fs::copy_options::recursive);
  }
  ~bundle() { fs::remove_all(dir_); }
  const fs::path& dir() const { return dir_; }
  cqe::app_config config() const { return cqe::load_config(dir_ / "cqe.conf"); }

 private:
  fs::path dir_;
};

cqe::expansion_service make_service(const bundle& b) {
  return cqe::expansion_service(b.config(), nullptr, [] { return std::string("2026-01-01T00:00:00Z"); });
}

}  // namespace

TEST(Service, ExpandReturnsAscendingCandidates) {
  bundle b;
  auto svc = make_service(b);
  const auto r = svc.expand({{"query", "Wedding"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["query"], "wedding");
  EXPECT_FALSE(r.body["exact"].get<bool>());
  const auto& c = r.body["candidates"];
  ASSERT_GE(c.size(), 5u);
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    EXPECT_LE(c[i]["distance"].get<double>(), c[i + 1]["distance"].get<double>());
  for (const auto& x : c) {
    EXPECT_GE(x["distance"].get<double>(), 0.0);
    EXPECT_LE(x["distance"].get<double>(), 1.0);
    EXPECT_EQ(x["expanded_query"].get<std::string>(),
              r.body["matched_query"].get<std::string>() + " " + x["term"].get<std::string>());
  }
  EXPECT_TRUE(svc.pool().entries().empty());
}

TEST(Service, ExpandValidation) {
  bundle b;
  auto svc = make_service(b);
  EXPECT_EQ(svc.expand({{"query", "!!!"}}).status, 400);
  EXPECT_EQ(svc.expand({{"q", "wedding"}}).status, 400);
  EXPECT_EQ(svc.expand({{"query", "wedding"}, {"limit", -1}}).status, 400);
  EXPECT_EQ(svc.expand({{"query", "wedding"}, {"limit", 0}}).status, 400);
  EXPECT_EQ(svc.expand({{"query", "wedding"}, {"limit", "3"}}).status, 400);
  EXPECT_EQ(svc.expand({{"query", "wedding"}, {"source_filter", "bogus"}}).status, 400);
  const auto r = svc.expand({{"query", "wedding"}, {"limit", 3}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["candidates"].size(), 3u);
}

TEST(Service, SourceFilter) {
  bundle b;
  auto svc = make_service(b);
  const auto r = svc.expand({{"query", "wedding"}, {"source_filter", {"lexical_graph"}}});
  ASSERT_EQ(r.status, 200);
  for (const auto& x : r.body["candidates"]) EXPECT_EQ(x["source"], "lexical_graph");
  EXPECT_EQ(svc.expand({{"query", "wedding"}, {"source_filter", "pool_learned"}}).status, 404);
}

TEST(Service, ExpandIsRepeatable) {
  bundle b;
  auto svc = make_service(b);
  const auto a = svc.expand({{"query", "wedding"}});
  const auto c = svc.expand({{"query", "wedding"}});
  EXPECT_EQ(a.body.dump(), c.body.dump());
}

TEST(Service, ChooseAccumulatesAndPersists) {
  bundle b;
  {
    auto svc = make_service(b);
    ASSERT_EQ(svc.choose({{"query", "wedding"}, {"term", "planner"}}).status, 200);
    const auto r = svc.choose({{"query", "wedding"}, {"term", "Planner"}});
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body["entry"]["choices"]["planner"], 2);

    const auto e = svc.expand({{"query", "wedding"}});
    ASSERT_EQ(e.status, 200);
    EXPECT_TRUE(e.body["exact"].get<bool>());
    bool learned = false;
    for (const auto& x : e.body["candidates"])
      if (x["term"] == "planner") learned = x["source"] == "pool_learned";
    EXPECT_TRUE(learned);
  }
  auto again = make_service(b);
  ASSERT_TRUE(again.pool().find("wedding"));
  EXPECT_EQ(again.pool().find("wedding")->choices.at("planner"), 2u);
}

TEST(Service, ChooseOnUnseenQueryCreatesEntry) {
  bundle b;
  auto svc = make_service(b);
  const auto r = svc.choose({{"query", "beach wedding"}, {"term", "dress"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["entry"]["canonical"], "beach wedding");
  EXPECT_EQ(r.body["entry"]["choices"]["dress"], 1);
  EXPECT_EQ(svc.pool_snapshot().body["entries"].size(), 1u);
}

TEST(Service, ChooseValidation) {
  bundle b;
  auto svc = make_service(b);
  EXPECT_EQ(svc.choose({{"query", "wedding"}}).status, 400);
  EXPECT_EQ(svc.choose({{"term", "dress"}}).status, 400);
  EXPECT_EQ(svc.choose({{"query", "wedding"}, {"term", "  "}}).status, 400);
  EXPECT_EQ(svc.choose({{"query", "???"}, {"term", "dress"}}).status, 400);
}

TEST(Service, Health) {
  bundle b;
  auto svc = make_service(b);
  const auto h = svc.health().body;
  EXPECT_EQ(h["status"], "ok");
  EXPECT_EQ(h["engine"], "replay");
  EXPECT_EQ(h["counts"], "engine");
  EXPECT_TRUE(h["graph"].get<bool>());
}

TEST(Service, HttpRoundTrip) {
  bundle b;
  auto svc = make_service(b);
  httplib::Server server;
  cqe::bind_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto expand = client.Post("/api/expand", R"({"query":"wedding","limit":2})", "application/json");
  ASSERT_TRUE(expand);
  EXPECT_EQ(expand->status, 200);
  EXPECT_EQ(nlohmann::json::parse(expand->body)["candidates"].size(), 2u);
  EXPECT_EQ(expand->get_header_value("Content-Type"), "application/json");

  auto bad = client.Post("/api/expand", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  auto choose = client.Post("/api/choose", R"({"query":"wedding","term":"rings"})", "application/json");
  ASSERT_TRUE(choose);
  EXPECT_EQ(choose->status, 200);

  auto pool = client.Get("/api/pool");
  ASSERT_TRUE(pool);
  EXPECT_EQ(nlohmann::json::parse(pool->body)["entries"][0]["choices"]["rings"], 1);

  server.stop();
  t.join();
}

TEST(Config, ParsesKeysRelativeToFile) {
  std::istringstream is("# comment\ngraph = g.txt\nrho = 0.4\nengine.mode = live\n"
                        "relations = is_a\nmax_depth = 3  # trailing\n");
  const auto c = cqe::parse_config(is, "/base");
  EXPECT_EQ(c.graph, fs::path("/base/g.txt"));
  EXPECT_EQ(c.rho, 0.4);
  EXPECT_TRUE(c.engine_enabled);
  EXPECT_EQ(c.engine.mode, cqe::engine_mode::live);
  EXPECT_EQ(c.policy.max_depth, 3);
}

TEST(Config, Errors) {
  std::istringstream unknown("graph = g\nbogus = 1\n");
  try {
    cqe::parse_config(unknown);
    FAIL();
  } catch (const cqe::parse_error& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream nonnum("rho = high\n");
  EXPECT_THROW(cqe::parse_config(nonnum), cqe::parse_error);
  std::istringstream noeq("graph\n");
  EXPECT_THROW(cqe::parse_config(noeq), cqe::parse_error);
  EXPECT_THROW(cqe::load_config("/nonexistent/cqe.conf"), cqe::config_error);
}

TEST(Config, EnvironmentKeyOverridesFile) {
  std::istringstream is("engine.api_key = from-file\n");
  ::setenv("ENGINE_API_KEY", "from-env", 1);
  const auto c = cqe::parse_config(is);
  ::unsetenv("ENGINE_API_KEY");
  EXPECT_EQ(c.engine.api_key, "from-env");
  std::istringstream again("engine.api_key = from-file\n");
  EXPECT_EQ(cqe::parse_config(again).engine.api_key, "from-file");
}
