#include <doctest.h>

#include <sstream>

#include "ctxbrowse/ranking.hpp"
#include "ctxbrowse/text.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ctxbrowse;

namespace {

void check_same(const RankedList& got, const std::vector<oracle::Scored>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(got.entries[i].doc_id == want[i].doc_id);
    CHECK(got.entries[i].score == want[i].score);
  }
}

// Ten documents around a "sport" / "violence" browse.
CorpusIndex ten_docs() {
  return fx::make_index({
      {"d01", "Football violence in the Balkans", {"Sport", "Violence"}, {"Political Sociology"},
       {"Meyer, K."}, "hooligans and clubs in southeastern europe"},
      {"d02", "Sport and youth", {"sport"}, {"Sociology"}, {"Smith, J."},
       "youth clubs and football"},
      {"d03", "Radicalism among fans", {"Radicalism", "Football"}, {"Political Sociology"},
       {"Meyer, K."}, "fans clubs violence", {"sport"}},
      {"d04", "Violence sports history", {"Violence"}, {"History"}, {"Rossi, L."},
       "sports violence history"},
      {"d05", "Decision making in clubs", {"Football"}, {"Decision Making"}, {"Novak, P."},
       "clubs management", {"sport"}},
      {"d06", "Ethnic conflict and football", {"Ethnic Conflict", "sport"},
       {"Political Sociology", "Sociology"}, {"Meyer, K."}, "conflict football balkans"},
      {"d07", "Gewalt im Stadion", {"Gewalt"}, {"Sociology"}, {"Novak, P."}, "stadion gewalt fans"},
      {"d08", "Media and sport", {"Media", "sport"}, {"Decision Making"}, {"Smith, J."},
       "media coverage football"},
      {"d09", "Unrelated study", {"Migration"}, {"History"}, {"Rossi, L."}, "migration flows"},
      {"d10", "Sport violence again", {"sport", "violence"}, {"Sociology"}, {"Smith, J."},
       "violence sport fans clubs"},
  });
}

SessionContext listing3_context() {
  SessionContext ctx;
  ctx.queries = {"violence sports"};
  ctx.keywords = {{"football", 1.0}, {"radicalism", 0.5}, {"ethnic conflict", 0.5}};
  ctx.categories = {{"political sociology", 1.0},
                    {"decision making", 2.0 / 3.0},
                    {"sociology", 2.0 / 3.0}};
  return ctx;
}

}  // namespace

TEST_CASE("expand_filter with a thesaurus entry") {
  Thesaurus th;
  th.add("violence", "gewalt");
  const auto eq = expand_filter({StratagemKind::keyword, "violence", ""}, th);
  const std::vector<QueryClause> want = {{FieldKind::keyword, "violence", 400},
                                         {FieldKind::keyword, "gewalt", 400},
                                         {FieldKind::keyword_free, "violence", 250},
                                         {FieldKind::keyword_free, "gewalt", 250}};
  CHECK(eq.clauses == want);
}

TEST_CASE("expand_filter without thesaurus") {
  const auto eq = expand_filter({StratagemKind::keyword, "Sport", ""}, {});
  const std::vector<QueryClause> want = {{FieldKind::keyword, "sport", 400},
                                         {FieldKind::keyword_free, "sport", 250}};
  CHECK(eq.clauses == want);
}

TEST_CASE("expand_filter on a journal has no related field") {
  const auto eq = expand_filter({StratagemKind::journal, "Südosteuropäische Hefte", ""}, {});
  REQUIRE(eq.clauses.size() == 1);
  CHECK(eq.clauses[0].field == FieldKind::journal);
  CHECK(eq.clauses[0].term == normalize_value("Südosteuropäische Hefte"));
  CHECK(eq.clauses[0].boost == 400);
  CHECK_THROWS_AS(expand_filter({StratagemKind::author, "   ", ""}, {}), std::invalid_argument);
}

TEST_CASE("thesaurus file format") {
  std::istringstream in("# comment\nViolence\tGewalt\tViolencia\n\nsport\tSport\n");
  const auto th = Thesaurus::load(in);
  CHECK(th.expansions("violence") == std::vector<std::string>{"gewalt", "violencia"});
  CHECK(th.expansions("sport").empty());
  CHECK(th.expansions("missing").empty());
  const auto sym = th.symmetric_closure();
  CHECK(sym.expansions("gewalt") == std::vector<std::string>{"violence"});
}

TEST_CASE("ranking config parsing") {
  const auto cfg = RankingConfig::from_json(
      {{"filter", {{"primary_boost", 100.0}}}, {"context", {{"keyword", 50.0}}}});
  CHECK(cfg.primary_boost == 100.0);
  CHECK(cfg.keyword_boost == 50.0);
  CHECK(cfg.title_boost == 1700.0);
  const auto round = RankingConfig::from_json(cfg.to_json());
  CHECK(round.primary_boost == 100.0);
  CHECK(round.related.at(StratagemKind::keyword).boost == 250.0);
  CHECK_THROWS_AS(RankingConfig::from_json({{"context", {{"title", 0.0}}}}),
                  std::invalid_argument);
  const auto s = RankingConfig{}.scaled(7.0);
  CHECK(s.primary_boost == 2800.0);
  CHECK(s.category_boost == 5600.0);
}

TEST_CASE("rank_default with no match is empty") {
  const auto idx = ten_docs();
  const auto eq = expand_filter({StratagemKind::keyword, "nothing here", ""}, {});
  CHECK(rank_default(eq, idx).empty());
}

TEST_CASE("keyword match outranks keyword_free match") {
  const auto idx = fx::make_index({{"a", "x", {}, {}, {}, "", {"sport"}},
                                   {"b", "y", {"sport"}},
                                   {"c", "z", {"other"}, {}, {}, "", {"other"}}});
  const auto list = rank_default(expand_filter({StratagemKind::keyword, "sport", ""}, {}), idx);
  CHECK(fx::ids_of(list) == std::vector<std::string>{"b", "a"});
  CHECK(list.entries[0].score > list.entries[1].score);
}

TEST_CASE("rank_default matches the rescoring oracle") {
  const auto idx = ten_docs();
  const oracle::BruteCorpus brute(idx);
  Thesaurus th;
  th.add("violence", "gewalt");
  for (const auto& q : {StratagemQuery{StratagemKind::keyword, "sport", "d02"},
                        StratagemQuery{StratagemKind::keyword, "violence", ""},
                        StratagemQuery{StratagemKind::author, "Meyer, K.", "d01"},
                        StratagemQuery{StratagemKind::category, "Sociology", ""}}) {
    const auto eq = expand_filter(q, th);
    check_same(rank_default(eq, idx), oracle::rank_default(brute, eq));
  }
}

TEST_CASE("ties are broken by ascending doc_id") {
  const auto idx = fx::make_index({{"c", "t", {"sport"}}, {"a", "t", {"sport"}}, {"b", "t", {"sport"}}});
  const auto list = rank_default(expand_filter({StratagemKind::keyword, "sport", ""}, {}), idx);
  CHECK(fx::ids_of(list) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("similarity terms come only from author, keyword, journal and abstract") {
  const auto idx = fx::make_index({{"s", "title words only", {}, {"Sociology"}, {"Smith, J."}, "",
                                    {}, std::string("Journal A")},
                                   {"t", "title words", {}, {"Sociology"}, {"Smith, J."}, "", {},
                                    std::string("Journal A")},
                                   {"u", "words only", {}, {}, {"Meyer, K."}}});
  const auto terms = select_similarity_terms(idx.document("s"), idx);
  REQUIRE(terms.size() == 2);
  for (const auto& t : terms) {
    CHECK((t.field == FieldKind::author || t.field == FieldKind::journal));
  }
}

TEST_CASE("rare terms are preferred over ubiquitous ones") {
  std::vector<fx::Doc> docs;
  for (int i = 0; i < 10; ++i) {
    docs.push_back({"d" + std::to_string(i), "t", {"common"}, {}, {}, i < 2 ? "rare" : ""});
  }
  docs[0].keywords.push_back("rare key");
  docs[1].keywords.push_back("rare key");
  const auto idx = fx::make_index(docs);
  const auto terms = select_similarity_terms(idx.document("d0"), idx);
  REQUIRE(terms.size() >= 2);
  CHECK(terms.front().term != "common");
  CHECK(terms.back().term == "common");
}

TEST_CASE("similarity term selection matches exhaustive enumeration") {
  simlab::Rng rng(11);
  const auto idx = fx::random_corpus(rng, 20);
  const oracle::BruteCorpus brute(idx);
  for (const auto& doc : idx.documents()) {
    CHECK(select_similarity_terms(doc, idx) == oracle::similarity_terms(brute, doc.doc_id, {}));
    SimilarityParams few;
    few.max_terms = 3;
    CHECK(select_similarity_terms(doc, idx, few) ==
          oracle::similarity_terms(brute, doc.doc_id, few));
  }
}

TEST_CASE("rank_similar: disjoint candidate keeps only its filter score") {
  const auto idx = fx::make_index({{"seed", "s", {"sport", "media"}, {"sociology"}, {"Smith, J."}},
                                   {"x", "x", {"youth"}, {"sociology"}, {"Meyer, K."}},
                                   {"y", "y", {"sport", "media"}, {"sociology"}, {"Smith, J."}}});
  const auto eq = expand_filter({StratagemKind::category, "sociology", "seed"}, {});
  const auto list = rank_similar(eq, idx.document("seed"), idx);
  REQUIRE(list.size() == 2);
  CHECK(list.entries[0].doc_id == "y");
  CHECK(list.entries[1].parts.similarity == 0.0);
  CHECK(list.entries[1].score == list.entries[1].parts.filter);
  CHECK_THROWS_AS(rank_similar(eq, fx::Doc{"ghost", "g"}.record(), idx), UnknownDocument);
}

TEST_CASE("a near-duplicate of the seed ranks first among equal filter scores") {
  simlab::Rng rng(5);
  auto corpus = fx::planted(3, 30, 3);
  auto docs = corpus.documents;
  DocumentRecord seed = docs[0];
  DocumentRecord dup = seed;
  dup.doc_id = "zz-duplicate";  // sorts last, so only similarity can lift it
  dup.title = "copy";
  docs.push_back(dup);
  const auto idx = fx::from_records(docs);
  REQUIRE(!seed.categories.empty());
  const auto eq = expand_filter({StratagemKind::category, seed.categories[0], seed.doc_id}, {});
  const auto list = rank_similar(eq, idx.document(seed.doc_id), idx);
  REQUIRE(!list.empty());
  CHECK(list.entries[0].doc_id == "zz-duplicate");
  for (const auto& e : list.entries) CHECK(e.doc_id != seed.doc_id);
}

TEST_CASE("rank_similar matches the rescoring oracle") {
  const auto idx = ten_docs();
  const oracle::BruteCorpus brute(idx);
  for (const char* seed : {"d01", "d03", "d06", "d10"}) {
    const auto eq = expand_filter({StratagemKind::keyword, "sport", seed}, {});
    check_same(rank_similar(eq, idx.document(seed), idx),
               oracle::rank_similar(brute, eq, seed, {}));
  }
}

TEST_CASE("context boosts from the example context") {
  SessionContext ctx;
  ctx.queries = {"violence sports"};
  ctx.keywords = {{"football", 1.0}, {"radicalism", 0.5}, {"ethnic conflict", 0.5}};
  ctx.categories = {{"political sociology", 1.0}, {"decision making", 0.66}, {"sociology", 0.66}};
  const auto b = build_context_boosts(ctx);
  REQUIRE(b.titles.size() == 1);
  CHECK(b.titles[0].boost == 1700);
  CHECK(b.titles[0].text == "violence sports");
  REQUIRE(b.keywords.size() == 3);
  CHECK(b.keywords[0].boost == doctest::Approx(1200));
  CHECK(b.keywords[1].boost == doctest::Approx(600));
  CHECK(b.keywords[2].boost == doctest::Approx(600));
  REQUIRE(b.categories.size() == 3);
  CHECK(b.categories[0].boost == doctest::Approx(800));
  CHECK(b.categories[1].boost == doctest::Approx(528));
  CHECK(b.categories[2].boost == doctest::Approx(528));

  CHECK(build_context_boosts({}).empty());
  SessionContext single;
  single.keywords = {{"football", 1.0}};
  const auto one = build_context_boosts(single);
  REQUIRE(one.keywords.size() == 1);
  CHECK(one.keywords[0].boost == 1200);
  CHECK(one.titles.empty());
  CHECK(one.categories.empty());
}

TEST_CASE("context keyword outweighs context category at equal idf") {
  const auto idx = fx::make_index({{"a", "x", {"sport", "other"}, {"sociology"}},
                                   {"b", "y", {"sport", "football"}, {"history"}},
                                   {"c", "z", {"misc"}, {"misc"}}});
  SessionContext ctx;
  ctx.keywords = {{"football", 1.0}};
  ctx.categories = {{"sociology", 0.66}};
  const auto list = rank_contextual(expand_filter({StratagemKind::keyword, "sport", ""}, {}), ctx, idx);
  CHECK(fx::ids_of(list) == std::vector<std::string>{"b", "a"});
}

TEST_CASE("empty context leaves the default order") {
  const auto idx = ten_docs();
  for (const char* value : {"sport", "violence", "football"}) {
    const auto eq = expand_filter({StratagemKind::keyword, value, "d01"}, {});
    const auto a = rank_default(eq, idx);
    const auto c = rank_contextual(eq, {}, idx);
    CHECK(fx::ids_of(a) == fx::ids_of(c));
  }
}

TEST_CASE("rank_contextual matches the rescoring oracle") {
  const auto idx = ten_docs();
  const oracle::BruteCorpus brute(idx);
  const auto ctx = listing3_context();
  for (const auto& q : {StratagemQuery{StratagemKind::keyword, "sport", "d02"},
                        StratagemQuery{StratagemKind::category, "Sociology", ""},
                        StratagemQuery{StratagemKind::author, "Smith, J.", "d08"}}) {
    const auto eq = expand_filter(q, {});
    check_same(rank_contextual(eq, ctx, idx), oracle::rank_contextual(brute, eq, ctx, {}));
  }
}

TEST_CASE("seed never appears in any ranked list") {
  const auto idx = ten_docs();
  const auto ctx = listing3_context();
  for (const auto& doc : idx.documents()) {
    for (const auto& link : stratagem_links(doc)) {
      const auto eq = expand_filter({link.kind, link.value, doc.doc_id}, {});
      for (const auto& list : {rank_default(eq, idx), rank_similar(eq, doc, idx),
                               rank_contextual(eq, ctx, idx)}) {
        for (const auto& e : list.entries) CHECK(e.doc_id != doc.doc_id);
      }
    }
  }
}
