#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "ctxbrowse/service.hpp"
#include "fixtures.hpp"

using namespace ctxbrowse;
using nlohmann::json;

namespace {

std::shared_ptr<const CorpusIndex> corpus() {
  return std::make_shared<const CorpusIndex>(fx::make_index({
      {"d1", "Football violence in the Balkans", {"sport", "violence", "football", "youth"},
       {"Sociology"}, {"Meyer, K.", "Smith, J."}, "hooligans", {}, std::string("Journal A"), 1998},
      {"d2", "Sport and youth", {"sport"}, {"Sociology"}, {"Smith, J."}, "youth clubs", {}, {}, 2005},
      {"d3", "Sport media", {"sport", "media"}, {"History"}, {"Rossi, L."}, "coverage", {}, {}, 2011},
      {"d4", "Sport history", {"sport"}, {"History"}, {"Meyer, K."}, "history", {}, {}, 2003},
      {"d5", "Gewalt", {"gewalt"}, {"Sociology"}, {"Novak, P."}, "stadion", {}, {}, 2008},
  }));
}

/// Fixture where B's similarity reorders A's default list: the filter
/// scores tie, and only "near" shares the seed's other features.
std::shared_ptr<const CorpusIndex> near_duplicate_corpus() {
  return std::make_shared<const CorpusIndex>(fx::make_index({
      {"seed", "s", {"sport", "rare topic"}, {"Sociology"}, {"Lone, A."}, "unusual words here"},
      {"a-far", "x", {"sport"}, {"History"}, {"Other, B."}, "nothing alike"},
      {"b-far", "y", {"sport"}, {"History"}, {"Other, B."}, "nothing alike"},
      {"z-near", "z", {"sport", "rare topic"}, {"Sociology"}, {"Lone, A."}, "unusual words here"},
  }));
}

struct Harness {
  EventStore store;
  SearchService service;
  explicit Harness(std::optional<ExperimentArm> arm = std::nullopt,
                   std::shared_ptr<const CorpusIndex> idx = corpus())
      : service(std::move(idx), {}, {}, store, {0, arm, [] { return TimestampMs{1000}; }}) {}
};

BrowseRequest browse_req(const std::string& session, const std::string& value,
                         const std::string& seed) {
  BrowseRequest r;
  r.session_id = session;
  r.kind = StratagemKind::keyword;
  r.value = value;
  r.seed_doc_id = seed;
  return r;
}

std::vector<std::string> ids(const BrowseResponse& r) {
  std::vector<std::string> out;
  for (const auto& s : r.results) out.push_back(s.doc_id);
  return out;
}

}  // namespace

TEST_CASE("search logs one query and one result list") {
  Harness h;
  const auto r = h.service.search("s1", "violence sports");
  CHECK(r.total >= 1);
  const auto events = h.store.events("s1");
  REQUIRE(events.size() == 2);
  CHECK(events[0].type() == EventType::query);
  CHECK(events[1].type() == EventType::view_results);
  CHECK(events[1].as<ResultsPayload>()->origin == ResultOrigin::search);
  CHECK(h.store.arm_of("s1").has_value());

  const auto none = h.service.search("s1", "zzzz qqqq");
  CHECK(none.total == 0);
  CHECK(none.results.empty());
  CHECK_THROWS_AS(h.service.search("s1", "   "), ServiceError);
}

TEST_CASE("document views carry stratagem descriptors") {
  Harness h;
  const auto v = h.service.view_document("s", "d1");
  CHECK(v.stratagems.size() == 8);  // 4 keywords, 2 authors, 1 category, 1 journal
  h.service.view_document("s", "d1");
  CHECK(h.store.events("s").size() == 2);
  const auto v2 = h.service.view_document("s", "d2");
  for (const auto& link : v2.stratagems) CHECK(link.kind != StratagemKind::journal);
  try {
    h.service.view_document("s", "missing");
    FAIL("expected 404");
  } catch (const ServiceError& e) {
    CHECK(e.status() == 404);
  }
}

TEST_CASE("browse under arm A equals the default ranking") {
  Harness h(ExperimentArm::A_baseline);
  const auto resp = h.service.browse(browse_req("s", "sport", "d1"));
  const auto want = rank_default(expand_filter({StratagemKind::keyword, "sport", "d1"}, {}),
                                 h.service.index());
  CHECK(ids(resp) == fx::ids_of(want));
  const auto events = h.store.events("s");
  REQUIRE(events.size() == 2);
  CHECK(events[0].type() == EventType::browse_stratagem);
  CHECK(events[1].as<ResultsPayload>()->origin == ResultOrigin::stratagem);
}

TEST_CASE("similarity reorders the near-duplicate fixture") {
  Harness a(ExperimentArm::A_baseline, near_duplicate_corpus());
  Harness b(ExperimentArm::B_similarity, near_duplicate_corpus());
  const auto ra = a.service.browse(browse_req("s", "sport", "seed"));
  const auto rb = b.service.browse(browse_req("s", "sport", "seed"));
  REQUIRE(!ra.results.empty());
  REQUIRE(!rb.results.empty());
  CHECK(ra.results[0].doc_id == "a-far");
  CHECK(rb.results[0].doc_id == "z-near");
  CHECK_THROWS_AS(b.service.browse(browse_req("s", "sport", "ghost")), ServiceError);
}

TEST_CASE("year filter keeps rank order among the survivors") {
  Harness h(ExperimentArm::A_baseline);
  const auto all = ids(h.service.browse(browse_req("s", "sport", "")));
  auto req = browse_req("s", "sport", "");
  req.year_from = 2000;
  req.year_to = 2010;
  const auto filtered = h.service.browse(req);
  std::vector<std::string> want;
  for (const auto& id : all) {
    const int y = *h.service.index().document(id).year;
    if (y >= 2000 && y <= 2010) want.push_back(id);
  }
  CHECK(ids(filtered) == want);
  for (const auto& r : filtered.results) {
    CHECK(*r.year >= 2000);
    CHECK(*r.year <= 2010);
  }
}

TEST_CASE("pagination") {
  Harness h(ExperimentArm::A_baseline);
  auto req = browse_req("s", "sport", "");
  req.page_size = 2;
  req.page = 2;
  const auto resp = h.service.browse(req);
  CHECK(resp.total == 4);
  CHECK(resp.results.size() == 2);
  const auto events = h.store.events("s");
  CHECK(events.back().as<ResultsPayload>()->offset == 2);
}

TEST_CASE("posted events take the session's arm") {
  Harness h(ExperimentArm::C_session_context);
  const auto ack = h.service.post_event(
      {{"session_id", "s"}, {"type", "click_result"}, {"doc_id", "d2"}, {"rank", 43}, {"result_size", 60}});
  CHECK(ack.accepted);
  const auto events = h.store.events("s");
  REQUIRE(events.size() == 1);
  CHECK(events[0].arm == ExperimentArm::C_session_context);
  CHECK(events[0].as<ClickPayload>()->rank == 43);
  CHECK_THROWS_AS(h.service.post_event({{"session_id", "s"}, {"type", "signal"}, {"signal", "bogus"},
                                        {"doc_id", "d1"}}),
                  ServiceError);
  CHECK_THROWS_AS(h.service.post_event({{"session_id", "s"}, {"arm", "A"}, {"type", "query"},
                                        {"query", "q"}}),
                  ServiceError);
}

TEST_CASE("forced arm applies to every new session") {
  Harness h(ExperimentArm::B_similarity);
  for (int i = 0; i < 20; ++i) {
    CHECK(h.service.session_arm("s" + std::to_string(i)) == ExperimentArm::B_similarity);
  }
}

TEST_CASE("service config: file, relative paths and environment") {
  const auto dir = std::filesystem::temp_directory_path() / "ctxbrowse-config-test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "service.json") << R"({"port": 9123, "corpus": "c.jsonl", "arm_force": "b"})";
  }
  auto cfg = ServiceConfig::load(dir / "service.json");
  CHECK(cfg.port == 9123);
  CHECK(cfg.corpus == dir / "c.jsonl");
  CHECK(cfg.forced_arm == ExperimentArm::B_similarity);
  ::setenv("CTXBROWSE_PORT", "9200", 1);
  cfg.apply_environment();
  CHECK(cfg.port == 9200);
  ::setenv("CTXBROWSE_PORT", "not-a-number", 1);
  CHECK_THROWS_AS(cfg.apply_environment(), std::invalid_argument);
  ::unsetenv("CTXBROWSE_PORT");
  CHECK_THROWS_AS(ServiceConfig::from_json({{"arm_force", "Q"}}), std::invalid_argument);
  CHECK_THROWS_AS(ServiceConfig::load(dir / "missing.json"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

// ------------------------------------------------------------------ HTTP

namespace {

struct LiveServer {
  EventStore store;
  SearchService service;
  HttpServer server;
  int port;
  std::thread thread;

  explicit LiveServer(std::optional<ExperimentArm> arm = std::nullopt)
      : service(corpus(), {}, {}, store, {0, arm, system_clock_ms}), server(service) {
    port = server.bind("127.0.0.1", 0);
    thread = std::thread([this] { server.listen(); });
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_connection_timeout(5);
    return c;
  }
};

bool mentions_arm(const json& j) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (k == "arm" || mentions_arm(v)) return true;
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (mentions_arm(v)) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("HTTP API") {
  LiveServer live;
  REQUIRE(live.port > 0);
  auto c = live.client();

  const auto health = c.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["documents"] == 5);

  const auto search = c.Get("/search?q=violence%20sports&session=h1");
  REQUIRE(search);
  CHECK(search->status == 200);
  const auto sj = json::parse(search->body);
  CHECK(sj["total"].get<int>() >= 1);
  CHECK_FALSE(mentions_arm(sj));
  CHECK(live.store.events("h1").size() == 2);

  const auto empty = c.Get("/search?q=&session=h1");
  REQUIRE(empty);
  CHECK(empty->status == 400);
  CHECK(json::parse(empty->body).contains("error"));
  const auto bad_page = c.Get("/search?q=sport&session=h1&page=0");
  REQUIRE(bad_page);
  CHECK(bad_page->status == 400);

  const auto doc = c.Get("/doc/d1?session=h1");
  REQUIRE(doc);
  CHECK(doc->status == 200);
  const auto dj = json::parse(doc->body);
  CHECK(dj["stratagems"].size() == 8);
  CHECK_FALSE(mentions_arm(dj));
  const auto missing = c.Get("/doc/nope?session=h1");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  json req = {{"session_id", "h1"}, {"kind", "keyword"}, {"value", "sport"}, {"seed", "d1"},
              {"year_from", 2000}, {"year_to", 2010}};
  const auto br = c.Post("/browse", req.dump(), "application/json");
  REQUIRE(br);
  CHECK(br->status == 200);
  const auto bj = json::parse(br->body);
  CHECK_FALSE(mentions_arm(bj));
  for (const auto& r : bj["results"]) {
    CHECK(r["year"].get<int>() >= 2000);
    CHECK(r["year"].get<int>() <= 2010);
    CHECK(r["id"] != "d1");
  }
  const auto malformed = c.Post("/browse", "{not json", "application/json");
  REQUIRE(malformed);
  CHECK(malformed->status == 400);

  const json click = {{"session_id", "h1"}, {"type", "click_result"}, {"doc_id", "d2"},
                      {"rank", 1}, {"result_size", 3}};
  const auto ev = c.Post("/event", click.dump(), "application/json");
  REQUIRE(ev);
  CHECK(ev->status == 200);
  CHECK(json::parse(ev->body)["accepted"] == true);
  CHECK_FALSE(mentions_arm(json::parse(ev->body)));
  const json bad = {{"session_id", "h1"}, {"type", "signal"}, {"signal", "nope"}, {"doc_id", "d2"}};
  const auto ev2 = c.Post("/event", bad.dump(), "application/json");
  REQUIRE(ev2);
  CHECK(ev2->status == 400);

  const json fav = {{"session_id", "h1"}, {"type", "signal"}, {"signal", "add_to_favourites"},
                    {"doc_id", bj["results"].empty() ? "d2" : bj["results"][0]["id"]}};
  CHECK(c.Post("/event", fav.dump(), "application/json")->status == 200);
  CHECK(live.store.events("h1").size() == 7);
}

TEST_CASE("HTTP sessions under a forced arm") {
  LiveServer live(ExperimentArm::C_session_context);
  auto c = live.client();
  for (int i = 0; i < 5; ++i) {
    const std::string s = "f" + std::to_string(i);
    REQUIRE(c.Get(("/search?q=sport&session=" + s).c_str()));
    CHECK(live.store.arm_of(s) == ExperimentArm::C_session_context);
  }
}

TEST_CASE("concurrent HTTP clients") {
  LiveServer live;
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&live, &ok, t] {
      auto c = live.client();
      for (int i = 0; i < 10; ++i) {
        const std::string path = "/search?q=sport&session=c" + std::to_string(t);
        if (auto r = c.Get(path.c_str()); r && r->status == 200) ++ok;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(ok == 80);
  CHECK(live.store.all_events().size() == 160);
}
