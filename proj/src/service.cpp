#include "ctxbrowse/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>

#include "ctxbrowse/text.hpp"

namespace ctxbrowse {

using nlohmann::json;

namespace {

std::string utf8_prefix(const std::string& text, std::size_t max_codepoints) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0U) != 0x80U) {
      if (count == max_codepoints) return text.substr(0, i);
      ++count;
    }
  }
  return text;
}

DocSummary summarize_doc(const DocumentRecord& doc) {
  DocSummary s{doc.doc_id, doc.title, doc.authors, doc.year, doc.journal, {}};
  if (!doc.abstracts.empty()) s.snippet = utf8_prefix(doc.abstracts.begin()->second, 200);
  return s;
}

std::optional<TimestampMs> optional_ts(const json& j) {
  if (const auto it = j.find("ts"); it != j.end() && it->is_number_integer()) {
    return it->get<TimestampMs>();
  }
  return std::nullopt;
}

}  // namespace

// ------------------------------------------------------------ wire types

BrowseRequest BrowseRequest::from_json(const json& j) {
  if (!j.is_object()) throw ServiceError(400, "browse request must be an object");
  BrowseRequest r;
  try {
    r.session_id = j.at("session_id").get<std::string>();
    const auto kind = parse_stratagem(j.at("kind").get<std::string>());
    if (!kind) throw ServiceError(400, "unknown stratagem kind");
    r.kind = *kind;
    r.value = j.at("value").get<std::string>();
    r.seed_doc_id = j.at("seed").get<std::string>();
    r.page = j.value("page", std::size_t{1});
    r.page_size = j.value("page_size", kDefaultPageSize);
    if (j.contains("year_from") && !j.at("year_from").is_null()) {
      r.year_from = j.at("year_from").get<int>();
    }
    if (j.contains("year_to") && !j.at("year_to").is_null()) {
      r.year_to = j.at("year_to").get<int>();
    }
    if (j.contains("language") && !j.at("language").is_null()) {
      r.language = j.at("language").get<std::string>();
    }
    r.timestamp = optional_ts(j);
  } catch (const json::exception& e) {
    throw ServiceError(400, std::string("malformed browse request: ") + e.what());
  }
  if (r.session_id.empty()) throw ServiceError(400, "session_id is required");
  if (normalize_value(r.value).empty()) throw ServiceError(400, "value is required");
  if (r.page < 1 || r.page_size < 1) throw ServiceError(400, "page and page_size must be >= 1");
  return r;
}

json BrowseRequest::to_json() const {
  json j = {{"session_id", session_id},
            {"kind", std::string(stratagem_name(kind))},
            {"value", value},
            {"seed", seed_doc_id},
            {"page", page},
            {"page_size", page_size}};
  if (year_from) j["year_from"] = *year_from;
  if (year_to) j["year_to"] = *year_to;
  if (language) j["language"] = *language;
  if (timestamp) j["ts"] = *timestamp;
  return j;
}

json BrowseResponse::to_json() const {
  json items = json::array();
  for (const auto& s : results) {
    items.push_back({{"id", s.doc_id},
                     {"title", s.title},
                     {"authors", s.authors},
                     {"year", s.year ? json(*s.year) : json(nullptr)},
                     {"journal", s.journal ? json(*s.journal) : json(nullptr)},
                     {"snippet", s.snippet}});
  }
  return {{"results", items}, {"total", total}, {"page", page}, {"page_size", page_size}};
}

BrowseResponse BrowseResponse::from_json(const json& j) {
  BrowseResponse r;
  r.total = j.at("total").get<std::size_t>();
  r.page = j.at("page").get<std::size_t>();
  r.page_size = j.at("page_size").get<std::size_t>();
  for (const auto& item : j.at("results")) {
    DocSummary s;
    s.doc_id = item.at("id").get<std::string>();
    s.title = item.value("title", "");
    s.authors = item.value("authors", std::vector<std::string>{});
    if (item.contains("year") && !item["year"].is_null()) s.year = item["year"].get<int>();
    if (item.contains("journal") && !item["journal"].is_null()) {
      s.journal = item["journal"].get<std::string>();
    }
    s.snippet = item.value("snippet", "");
    r.results.push_back(std::move(s));
  }
  return r;
}

std::vector<StratagemLink> stratagem_links(const DocumentRecord& doc) {
  std::vector<StratagemLink> links;
  for (const auto& k : doc.keywords) links.push_back({StratagemKind::keyword, k});
  for (const auto& a : doc.authors) links.push_back({StratagemKind::author, a});
  for (const auto& c : doc.categories) links.push_back({StratagemKind::category, c});
  if (doc.journal) links.push_back({StratagemKind::journal, *doc.journal});
  return links;
}

json DocumentView::to_json(const std::string& session_id) const {
  json j;
  j["id"] = doc->doc_id;
  j["title"] = doc->title;
  j["abstracts"] = doc->abstracts;
  j["authors"] = doc->authors;
  j["keywords"] = doc->keywords;
  j["keywords_free"] = doc->keywords_free;
  j["categories"] = doc->categories;
  j["journal"] = doc->journal ? json(*doc->journal) : json(nullptr);
  j["year"] = doc->year ? json(*doc->year) : json(nullptr);
  j["language"] = doc->language ? json(*doc->language) : json(nullptr);
  json links = json::array();
  for (const auto& link : stratagems) {
    links.push_back({{"kind", std::string(stratagem_name(link.kind))},
                     {"value", link.value},
                     {"seed", doc->doc_id},
                     {"session_id", session_id}});
  }
  j["stratagems"] = std::move(links);
  json signals = json::array();
  for (const auto kind : kAllSignals) signals.push_back(std::string(signal_name(kind)));
  j["signals"] = std::move(signals);
  return j;
}

// ---------------------------------------------------------------- ranking

RankedList search_free_text(std::string_view text, const CorpusIndex& index) {
  std::vector<double> score(index.doc_count(), 0.0);
  std::vector<char> hit(index.doc_count(), 0);
  std::vector<DocOrdinal> hits;
  for (const auto& token : tokenize(text)) {
    for (const FieldKind field : {FieldKind::title, FieldKind::abstract}) {
      const double idf = index.idf(field, token);
      for (const Posting& p : index.postings(field, token)) {
        if (!hit[p.doc]) {
          hit[p.doc] = 1;
          hits.push_back(p.doc);
        }
        score[p.doc] += static_cast<double>(p.tf) * idf;
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [&](DocOrdinal a, DocOrdinal b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  RankedList out;
  out.entries.reserve(hits.size());
  for (const DocOrdinal d : hits) {
    out.entries.push_back({index.document(d).doc_id, score[d], {score[d], 0.0, 0.0}});
  }
  return out;
}

RankedList rank_for_arm(ExperimentArm arm, const StratagemQuery& query,
                        std::span<const SessionEvent> history,
                        const CorpusIndex& index, const Thesaurus& thesaurus,
                        const RankingConfig& config) {
  const ExpandedQuery expanded = expand_filter(query, thesaurus, config);
  switch (arm) {
    case ExperimentArm::A_baseline:
      return rank_default(expanded, index);
    case ExperimentArm::B_similarity:
      return rank_similar(expanded, index.document(query.seed_doc_id), index,
                          config.similarity);
    case ExperimentArm::C_session_context: {
      const auto segment = current_segment(history);
      const SessionContext ctx =
          build_session_context(segment, index, std::string_view(query.seed_doc_id));
      return rank_contextual(expanded, ctx, index, config);
    }
  }
  return rank_default(expanded, index);
}

TimestampMs system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------- service

SearchService::SearchService(std::shared_ptr<const CorpusIndex> index,
                             Thesaurus thesaurus, RankingConfig config,
                             EventStore& store, Options options)
    : index_(std::move(index)),
      thesaurus_(std::move(thesaurus)),
      config_(std::move(config)),
      store_(store),
      options_(std::move(options)) {
  if (!options_.clock) options_.clock = system_clock_ms;
}

ExperimentArm SearchService::session_arm(const std::string& session_id) {
  if (const auto arm = store_.arm_of(session_id)) return *arm;
  const ExperimentArm fresh =
      options_.forced_arm.value_or(assign_arm(session_id, options_.seed));
  return store_.ensure_session(session_id, fresh);
}

TimestampMs SearchService::stamp(std::optional<TimestampMs> ts) const {
  return ts.value_or(options_.clock());
}

void SearchService::log(SessionEvent event) {
  const RecordAck ack = store_.record(std::move(event));
  if (!ack.accepted) throw ServiceError(400, ack.error);
}

namespace {

BrowseResponse paginate(const std::vector<const DocumentRecord*>& docs,
                        std::size_t page, std::size_t page_size) {
  BrowseResponse out;
  out.total = docs.size();
  out.page = page;
  out.page_size = page_size;
  const std::size_t begin = std::min(docs.size(), (page - 1) * page_size);
  const std::size_t end = std::min(docs.size(), begin + page_size);
  for (std::size_t i = begin; i < end; ++i) out.results.push_back(summarize_doc(*docs[i]));
  return out;
}

std::vector<std::string> page_ids(const BrowseResponse& r) {
  std::vector<std::string> ids;
  ids.reserve(r.results.size());
  for (const auto& s : r.results) ids.push_back(s.doc_id);
  return ids;
}

}  // namespace

BrowseResponse SearchService::search(const std::string& session_id,
                                     const std::string& text, std::size_t page,
                                     std::size_t page_size,
                                     std::optional<TimestampMs> timestamp) {
  if (session_id.empty()) throw ServiceError(400, "session is required");
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ServiceError(400, "query must not be empty");
  }
  if (page < 1 || page_size < 1) throw ServiceError(400, "page and page_size must be >= 1");

  const ExperimentArm arm = session_arm(session_id);
  const TimestampMs ts = stamp(timestamp);

  const RankedList ranked = search_free_text(text, *index_);
  std::vector<const DocumentRecord*> docs;
  docs.reserve(ranked.size());
  for (const auto& e : ranked.entries) docs.push_back(index_->find(e.doc_id));
  BrowseResponse response = paginate(docs, page, page_size);

  log({std::nullopt, session_id, ts, arm, QueryPayload{text}});
  log({std::nullopt, session_id, ts, arm,
       ResultsPayload{page_ids(response), ResultOrigin::search, response.total,
                      (page - 1) * page_size}});
  return response;
}

DocumentView SearchService::view_document(const std::string& session_id,
                                          const std::string& doc_id,
                                          std::optional<TimestampMs> timestamp) {
  if (session_id.empty()) throw ServiceError(400, "session is required");
  const DocumentRecord* doc = index_->find(doc_id);
  if (doc == nullptr) throw ServiceError(404, "unknown document: " + doc_id);
  const ExperimentArm arm = session_arm(session_id);
  log({std::nullopt, session_id, stamp(timestamp), arm, DocViewPayload{doc_id}});
  return {doc, stratagem_links(*doc)};
}

BrowseResponse SearchService::browse(const BrowseRequest& request) {
  const ExperimentArm arm = session_arm(request.session_id);
  const TimestampMs ts = stamp(request.timestamp);
  const StratagemQuery query{request.kind, request.value, request.seed_doc_id};

  if (arm == ExperimentArm::B_similarity && index_->find(request.seed_doc_id) == nullptr) {
    throw ServiceError(404, "unknown seed document: " + request.seed_doc_id);
  }
  const auto history = store_.events(request.session_id);
  RankedList ranked;
  try {
    ranked = rank_for_arm(arm, query, history, *index_, thesaurus_, config_);
  } catch (const std::invalid_argument& e) {
    throw ServiceError(400, e.what());
  }

  // Facet filters never influence the ranking, only what is shown.
  std::vector<const DocumentRecord*> docs;
  docs.reserve(ranked.size());
  for (const auto& e : ranked.entries) {
    const DocumentRecord* doc = index_->find(e.doc_id);
    if (request.year_from && (!doc->year || *doc->year < *request.year_from)) continue;
    if (request.year_to && (!doc->year || *doc->year > *request.year_to)) continue;
    if (request.language && doc->language != request.language) continue;
    docs.push_back(doc);
  }
  BrowseResponse response = paginate(docs, request.page, request.page_size);

  log({std::nullopt, request.session_id, ts, arm, BrowsePayload{query}});
  log({std::nullopt, request.session_id, ts, arm,
       ResultsPayload{page_ids(response), ResultOrigin::stratagem, response.total,
                      (request.page - 1) * request.page_size}});
  return response;
}

RecordAck SearchService::post_event(const json& body) {
  if (!body.is_object()) throw ServiceError(400, "event must be an object");
  json full = body;
  const auto session = body.value("session_id", std::string{});
  if (session.empty()) throw ServiceError(400, "session_id is required");
  const ExperimentArm arm = session_arm(session);
  if (!full.contains("arm")) full["arm"] = std::string(arm_label(arm));
  if (!full.contains("ts")) full["ts"] = options_.clock();

  SessionEvent event;
  try {
    event = event_from_json(full);
  } catch (const std::invalid_argument& e) {
    throw ServiceError(400, e.what());
  }
  RecordAck ack = store_.record(std::move(event));
  if (!ack.accepted) throw ServiceError(400, ack.error);
  return ack;
}

// ----------------------------------------------------------------- config

ServiceConfig ServiceConfig::from_json(const json& j,
                                       const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  ServiceConfig cfg;
  try {
    cfg.host = j.value("host", cfg.host);
    cfg.port = j.value("port", cfg.port);
    if (j.contains("corpus")) cfg.corpus = resolve(j.at("corpus").get<std::string>());
    if (j.contains("thesaurus")) cfg.thesaurus = resolve(j.at("thesaurus").get<std::string>());
    if (j.contains("ranking")) cfg.ranking = resolve(j.at("ranking").get<std::string>());
    if (j.contains("transaction_log")) {
      cfg.transaction_log = resolve(j.at("transaction_log").get<std::string>());
    }
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("arm_force") && !j.at("arm_force").is_null()) {
      cfg.forced_arm = parse_arm(j.at("arm_force").get<std::string>());
      if (!cfg.forced_arm) throw std::invalid_argument("unknown arm_force value");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad service config: ") + e.what());
  }
  return cfg;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j, path.parent_path());
}

void ServiceConfig::apply_environment() {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  try {
    if (auto v = env("CTXBROWSE_HOST")) host = *v;
    if (auto v = env("CTXBROWSE_PORT")) port = std::stoi(*v);
    if (auto v = env("CTXBROWSE_CORPUS")) corpus = *v;
    if (auto v = env("CTXBROWSE_THESAURUS")) thesaurus = *v;
    if (auto v = env("CTXBROWSE_RANKING")) ranking = *v;
    if (auto v = env("CTXBROWSE_LOG")) transaction_log = *v;
    if (auto v = env("CTXBROWSE_SEED")) seed = std::stoull(*v);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("unparsable environment override");
  }
  if (auto v = env("CTXBROWSE_ARM_FORCE")) {
    forced_arm = parse_arm(*v);
    if (!forced_arm) throw std::invalid_argument("unknown CTXBROWSE_ARM_FORCE value");
  }
}

void ServiceConfig::validate() const {
  if (corpus.empty()) throw std::invalid_argument("config has no corpus path");
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
}

}  // namespace ctxbrowse
