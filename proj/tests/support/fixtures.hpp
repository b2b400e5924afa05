#pragma once

// Small builders shared by the test binaries.

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "ctxbrowse/corpus_index.hpp"
#include "ctxbrowse/ranking.hpp"
#include "ctxbrowse/service.hpp"
#include "ctxbrowse/session.hpp"
#include "ctxbrowse/simlab.hpp"
#include "ctxbrowse/text.hpp"

namespace fx {

using namespace ctxbrowse;

struct Doc {
  std::string id;
  std::string title;
  std::vector<std::string> keywords = {};
  std::vector<std::string> categories = {};
  std::vector<std::string> authors = {};
  std::string abstract = {};
  std::vector<std::string> keywords_free = {};
  std::optional<std::string> journal = {};
  std::optional<int> year = {};

  DocumentRecord record() const {
    DocumentRecord r;
    r.doc_id = id;
    r.title = title;
    if (!abstract.empty()) r.abstracts["en"] = abstract;
    r.authors = authors;
    r.keywords = keywords;
    r.keywords_free = keywords_free;
    r.categories = categories;
    r.journal = journal;
    r.year = year;
    return r;
  }
};

inline CorpusIndex make_index(const std::vector<Doc>& docs) {
  std::vector<DocumentRecord> records;
  for (const auto& d : docs) records.push_back(normalize_record(d.record()));
  return CorpusIndex::build(std::move(records));
}

inline CorpusIndex from_records(std::vector<DocumentRecord> docs) {
  for (auto& d : docs) d = normalize_record(std::move(d));
  return CorpusIndex::build(std::move(docs));
}

/// Planted-topic corpus from the simulator's generator.
inline simlab::GeneratedCorpus planted(std::size_t topics, std::size_t per_topic,
                                       std::uint64_t seed) {
  simlab::SyntheticCorpusSpec spec;
  spec.topics = topics;
  spec.docs_per_topic = per_topic;
  spec.seed = seed;
  return simlab::generate_corpus(spec);
}

inline CorpusIndex planted_index(std::size_t topics, std::size_t per_topic,
                                 std::uint64_t seed) {
  return from_records(planted(topics, per_topic, seed).documents);
}

/// Dense random corpus over a tiny vocabulary, so scores tie often.
inline CorpusIndex random_corpus(simlab::Rng& rng, std::size_t n) {
  static const std::vector<std::string> kWords = {"alpha", "beta", "gamma", "delta",
                                                  "epsilon", "zeta", "eta", "theta"};
  static const std::vector<std::string> kKeys = {"sport", "violence", "football", "youth",
                                                 "media", "migration"};
  static const std::vector<std::string> kCats = {"sociology", "politics", "history"};
  static const std::vector<std::string> kAuthors = {"Smith, J.", "Meyer, K.", "Rossi, L.",
                                                    "Novak, P."};
  static const std::vector<std::string> kJournals = {"Journal A", "Journal B"};
  std::vector<DocumentRecord> docs;
  for (std::size_t i = 0; i < n; ++i) {
    DocumentRecord d;
    d.doc_id = "R" + std::to_string(1000 + rng.below(100000)) + "-" + std::to_string(i);
    auto words = [&](std::size_t k) {
      std::string s;
      for (std::size_t j = 0; j < k; ++j) {
        if (j > 0) s += ' ';
        s += kWords[rng.below(kWords.size())];
      }
      return s;
    };
    d.title = words(rng.between(1, 4));
    if (rng.chance(0.7)) d.abstracts["en"] = words(rng.between(2, 8));
    for (std::size_t j = rng.between(0, 3); j > 0; --j) d.keywords.push_back(kKeys[rng.below(kKeys.size())]);
    for (std::size_t j = rng.between(0, 2); j > 0; --j) {
      d.keywords_free.push_back(kKeys[rng.below(kKeys.size())]);
    }
    for (std::size_t j = rng.between(0, 2); j > 0; --j) d.categories.push_back(kCats[rng.below(kCats.size())]);
    for (std::size_t j = rng.between(1, 2); j > 0; --j) d.authors.push_back(kAuthors[rng.below(kAuthors.size())]);
    if (rng.chance(0.8)) d.journal = kJournals[rng.below(kJournals.size())];
    docs.push_back(std::move(d));
  }
  return from_records(std::move(docs));
}

/// A stratagem taken from a random document's own links, seeded by it.
inline std::optional<StratagemQuery> random_query(const CorpusIndex& index, simlab::Rng& rng) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    const auto& seed = index.document(static_cast<DocOrdinal>(rng.below(index.doc_count())));
    const auto links = stratagem_links(seed);
    if (links.empty()) continue;
    const auto& link = links[rng.below(links.size())];
    return StratagemQuery{link.kind, link.value, seed.doc_id};
  }
  return std::nullopt;
}

/// Random session context drawn from the index vocabulary.
inline SessionContext random_context(const CorpusIndex& index, simlab::Rng& rng) {
  SessionContext ctx;
  const auto& a = index.document(static_cast<DocOrdinal>(rng.below(index.doc_count())));
  const auto& b = index.document(static_cast<DocOrdinal>(rng.below(index.doc_count())));
  ctx.queries.push_back(a.title);
  if (rng.chance(0.5)) ctx.queries.push_back(b.title);
  const double ranks[] = {1.0, 0.5, 2.0 / 3.0};
  std::size_t r = 0;
  for (const auto& k : b.keywords) {
    if (r < 3) ctx.keywords.push_back({normalize_value(k), ranks[r++]});
  }
  r = 0;
  for (const auto& c : a.categories) {
    if (r < 3) ctx.categories.push_back({normalize_value(c), ranks[r++]});
  }
  return ctx;
}

// --------------------------------------------------------------- events

inline SessionEvent event(const std::string& session, TimestampMs ts, EventPayload payload,
                          ExperimentArm arm = ExperimentArm::A_baseline) {
  SessionEvent e;
  e.session_id = session;
  e.timestamp = ts;
  e.arm = arm;
  e.payload = std::move(payload);
  return e;
}

inline EventPayload query(std::string text) { return QueryPayload{std::move(text)}; }
inline EventPayload view(std::string id) { return DocViewPayload{std::move(id)}; }
inline EventPayload browse(StratagemKind kind, std::string value, std::string seed = "") {
  return BrowsePayload{{kind, std::move(value), std::move(seed)}};
}
inline EventPayload results(std::vector<std::string> ids, std::size_t total,
                            ResultOrigin origin = ResultOrigin::stratagem,
                            std::size_t offset = 0) {
  return ResultsPayload{std::move(ids), origin, total, offset};
}
inline EventPayload click(std::string id, std::size_t rank, std::size_t size) {
  return ClickPayload{std::move(id), rank, size};
}
inline EventPayload signal(SignalKind kind, std::string id) {
  return SignalPayload{kind, std::move(id)};
}

/// Random merge of the sessions in a log. Each session keeps its own event
/// order; only the interleaving across sessions changes.
inline std::vector<SessionEvent> interleave(const std::vector<SessionEvent>& log,
                                            simlab::Rng& rng) {
  std::map<std::string, std::deque<SessionEvent>> queues;
  for (const auto& e : log) queues[e.session_id].push_back(e);
  std::vector<std::deque<SessionEvent>*> live;
  for (auto& [id, q] : queues) live.push_back(&q);
  std::vector<SessionEvent> out;
  out.reserve(log.size());
  while (!live.empty()) {
    const auto k = rng.below(live.size());
    out.push_back(std::move(live[k]->front()));
    live[k]->pop_front();
    if (live[k]->empty()) {
      live[k] = live.back();
      live.pop_back();
    }
  }
  return out;
}

inline std::vector<std::string> ids_of(const RankedList& list) {
  std::vector<std::string> out;
  for (const auto& e : list.entries) out.push_back(e.doc_id);
  return out;
}

}  // namespace fx
