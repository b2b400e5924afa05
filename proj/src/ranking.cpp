#include "ctxbrowse/ranking.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "ctxbrowse/text.hpp"

namespace ctxbrowse {

std::string_view stratagem_name(StratagemKind kind) {
  switch (kind) {
    case StratagemKind::keyword: return "keyword";
    case StratagemKind::author: return "author";
    case StratagemKind::category: return "category";
    case StratagemKind::journal: return "journal";
  }
  return "unknown";
}

std::optional<StratagemKind> parse_stratagem(std::string_view text) {
  for (const auto kind : {StratagemKind::keyword, StratagemKind::author,
                          StratagemKind::category, StratagemKind::journal}) {
    if (stratagem_name(kind) == text) return kind;
  }
  if (text == "classification") return StratagemKind::category;
  return std::nullopt;
}

FieldKind primary_field(StratagemKind kind) {
  switch (kind) {
    case StratagemKind::keyword: return FieldKind::keyword;
    case StratagemKind::author: return FieldKind::author;
    case StratagemKind::category: return FieldKind::category;
    case StratagemKind::journal: return FieldKind::journal;
  }
  return FieldKind::keyword;
}

// ---------------------------------------------------------------- thesaurus

Thesaurus Thesaurus::load(std::istream& in) {
  Thesaurus th;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream cols(line);
    std::string key;
    std::getline(cols, key, '\t');
    std::string expansion;
    while (std::getline(cols, expansion, '\t')) th.add(key, expansion);
  }
  return th;
}

Thesaurus Thesaurus::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open thesaurus: " + path.string());
  return load(in);
}

void Thesaurus::add(std::string_view term, std::string_view expansion) {
  std::string key = normalize_value(term);
  std::string value = normalize_value(expansion);
  if (key.empty() || value.empty() || key == value) return;
  auto& list = entries_[std::move(key)];
  if (std::find(list.begin(), list.end(), value) == list.end()) {
    list.push_back(std::move(value));
  }
}

const std::vector<std::string>& Thesaurus::expansions(
    std::string_view term) const {
  static const std::vector<std::string> kNone;
  const auto it = entries_.find(term);
  return it == entries_.end() ? kNone : it->second;
}

Thesaurus Thesaurus::symmetric_closure() const {
  Thesaurus out = *this;
  for (const auto& [key, list] : entries_) {
    for (const auto& value : list) out.add(value, key);
  }
  return out;
}

// ------------------------------------------------------------------- config

RankingConfig RankingConfig::scaled(double factor) const {
  RankingConfig out = *this;
  out.primary_boost *= factor;
  for (auto& [kind, rel] : out.related) rel.boost *= factor;
  out.title_boost *= factor;
  out.keyword_boost *= factor;
  out.category_boost *= factor;
  out.similarity.boost *= factor;
  return out;
}

RankingConfig RankingConfig::from_json(const nlohmann::json& j) {
  RankingConfig cfg;
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    cfg.primary_boost = f.value("primary_boost", cfg.primary_boost);
    if (f.contains("related")) {
      cfg.related.clear();
      for (const auto& [kind_name, rel] : f.at("related").items()) {
        const auto kind = parse_stratagem(kind_name);
        const auto field = parse_field(rel.at("field").get<std::string>());
        if (!kind || !field) {
          throw std::invalid_argument("bad related-field entry: " + kind_name);
        }
        cfg.related[*kind] = {*field, rel.at("boost").get<double>()};
      }
    }
  }
  if (j.contains("context")) {
    const auto& c = j.at("context");
    cfg.title_boost = c.value("title", cfg.title_boost);
    cfg.keyword_boost = c.value("keyword", cfg.keyword_boost);
    cfg.category_boost = c.value("category", cfg.category_boost);
  }
  if (j.contains("similarity")) {
    const auto& s = j.at("similarity");
    cfg.similarity.boost = s.value("boost", cfg.similarity.boost);
    cfg.similarity.min_df = s.value("min_df", cfg.similarity.min_df);
    cfg.similarity.max_terms = s.value("max_terms", cfg.similarity.max_terms);
    cfg.similarity.min_token_length =
        s.value("min_token_length", cfg.similarity.min_token_length);
  }
  const double boosts[] = {cfg.primary_boost, cfg.title_boost,
                           cfg.keyword_boost, cfg.category_boost,
                           cfg.similarity.boost};
  for (const double b : boosts) {
    if (!(b > 0.0)) throw std::invalid_argument("boosts must be positive");
  }
  for (const auto& [kind, rel] : cfg.related) {
    if (!(rel.boost > 0.0)) throw std::invalid_argument("boosts must be positive");
  }
  return cfg;
}

nlohmann::json RankingConfig::to_json() const {
  nlohmann::json related_json = nlohmann::json::object();
  for (const auto& [kind, rel] : related) {
    related_json[std::string(stratagem_name(kind))] = {
        {"field", std::string(field_name(rel.field))}, {"boost", rel.boost}};
  }
  return {
      {"filter", {{"primary_boost", primary_boost}, {"related", related_json}}},
      {"context",
       {{"title", title_boost},
        {"keyword", keyword_boost},
        {"category", category_boost}}},
      {"similarity",
       {{"boost", similarity.boost},
        {"min_df", similarity.min_df},
        {"max_terms", similarity.max_terms},
        {"min_token_length", similarity.min_token_length}}},
  };
}

RankingConfig RankingConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ranking config: " + path.string());
  return from_json(nlohmann::json::parse(in));
}

// ------------------------------------------------------------------ scoring

namespace {

/// Dense per-document score accumulators over one ranking call.
class ScoreBoard {
 public:
  explicit ScoreBoard(std::size_t doc_count)
      : filter_(doc_count, 0.0),
        similarity_(doc_count, 0.0),
        context_(doc_count, 0.0),
        candidate_(doc_count, 0) {}

  void add_filter(DocOrdinal doc, double value) {
    if (!candidate_[doc]) {
      candidate_[doc] = 1;
      candidates_.push_back(doc);
    }
    filter_[doc] += value;
  }
  bool is_candidate(DocOrdinal doc) const { return candidate_[doc] != 0; }
  void add_similarity(DocOrdinal doc, double value) { similarity_[doc] += value; }
  void add_context(DocOrdinal doc, double value) { context_[doc] += value; }

  RankedList finish(const CorpusIndex& index, const StratagemQuery& query,
                    ExperimentArm arm) const {
    const auto seed = query.seed_doc_id.empty()
                          ? std::nullopt
                          : index.ordinal(query.seed_doc_id);
    struct Row {
      DocOrdinal doc;
      double total;
    };
    std::vector<Row> rows;
    rows.reserve(candidates_.size());
    for (const DocOrdinal doc : candidates_) {
      if (seed && doc == *seed) continue;
      rows.push_back({doc, filter_[doc] + similarity_[doc] + context_[doc]});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.total != b.total) return a.total > b.total;
      return a.doc < b.doc;
    });

    RankedList out;
    out.query = query;
    out.arm = arm;
    out.entries.reserve(rows.size());
    for (const Row& row : rows) {
      out.entries.push_back({index.document(row.doc).doc_id, row.total,
                             {filter_[row.doc], similarity_[row.doc],
                              context_[row.doc]}});
    }
    return out;
  }

 private:
  std::vector<double> filter_;
  std::vector<double> similarity_;
  std::vector<double> context_;
  std::vector<char> candidate_;
  std::vector<DocOrdinal> candidates_;
};

void apply_filter(const ExpandedQuery& query, const CorpusIndex& index,
                  ScoreBoard& board) {
  for (const QueryClause& clause : query.clauses) {
    const double idf = index.idf(clause.field, clause.term);
    for (const Posting& p : index.postings(clause.field, clause.term)) {
      const double weight =
          is_free_text(clause.field) ? static_cast<double>(p.tf) * idf : idf;
      board.add_filter(p.doc, clause.boost * weight);
    }
  }
}

}  // namespace

ExpandedQuery expand_filter(const StratagemQuery& query,
                            const Thesaurus& thesaurus,
                            const RankingConfig& config) {
  const std::string value = normalize_value(query.value);
  if (value.empty()) {
    throw std::invalid_argument("stratagem value is empty");
  }
  std::vector<std::string> terms{value};
  for (const auto& expansion : thesaurus.expansions(value)) {
    if (std::find(terms.begin(), terms.end(), expansion) == terms.end()) {
      terms.push_back(expansion);
    }
  }

  ExpandedQuery out;
  out.query = query;
  const FieldKind primary = primary_field(query.kind);
  for (const auto& term : terms) {
    out.clauses.push_back({primary, term, config.primary_boost});
  }
  if (const auto it = config.related.find(query.kind);
      it != config.related.end() && it->second.field != primary) {
    for (const auto& term : terms) {
      out.clauses.push_back({it->second.field, term, it->second.boost});
    }
  }
  return out;
}

RankedList rank_default(const ExpandedQuery& query, const CorpusIndex& index) {
  ScoreBoard board(index.doc_count());
  apply_filter(query, index, board);
  return board.finish(index, query.query, ExperimentArm::A_baseline);
}

std::vector<SimilarityTerm> select_similarity_terms(
    const DocumentRecord& seed, const CorpusIndex& index,
    const SimilarityParams& params) {
  const auto ord = index.ordinal(seed.doc_id);
  if (!ord) throw UnknownDocument(seed.doc_id);

  struct Candidate {
    SimilarityTerm term;
    double score;
  };
  std::vector<Candidate> candidates;

  constexpr FieldKind kSources[] = {FieldKind::author, FieldKind::keyword,
                                    FieldKind::journal, FieldKind::abstract};
  for (const FieldKind field : kSources) {
    std::vector<std::string> seen;
    for (const auto& raw : field_values(seed, field)) {
      for (auto& term : normalize_term(raw, field)) {
        if (std::find(seen.begin(), seen.end(), term) != seen.end()) continue;
        seen.push_back(term);
        if (codepoint_length(term) < params.min_token_length) continue;
        if (index.df(field, term) < params.min_df) continue;
        const double idf = index.idf(field, term);
        const double score = static_cast<double>(index.tf(field, term, *ord)) * idf;
        candidates.push_back({{field, std::move(term), idf}, score});
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.term.field != b.term.field) return a.term.field < b.term.field;
              return a.term.term < b.term.term;
            });
  if (candidates.size() > params.max_terms) candidates.resize(params.max_terms);

  std::vector<SimilarityTerm> out;
  out.reserve(candidates.size());
  for (auto& c : candidates) out.push_back(std::move(c.term));
  return out;
}

RankedList rank_similar(const ExpandedQuery& query, const DocumentRecord& seed,
                        const CorpusIndex& index,
                        const SimilarityParams& params) {
  const auto terms = select_similarity_terms(seed, index, params);

  ScoreBoard board(index.doc_count());
  apply_filter(query, index, board);
  for (const SimilarityTerm& t : terms) {
    const double idf = index.idf(t.field, t.term);
    for (const Posting& p : index.postings(t.field, t.term)) {
      if (!board.is_candidate(p.doc)) continue;
      board.add_similarity(
          p.doc, params.boost * (t.weight * (static_cast<double>(p.tf) * idf)));
    }
  }

  StratagemQuery with_seed = query.query;
  with_seed.seed_doc_id = seed.doc_id;
  return board.finish(index, with_seed, ExperimentArm::B_similarity);
}

ContextBoosts build_context_boosts(const SessionContext& context,
                                   const RankingConfig& config) {
  ContextBoosts out;
  for (const auto& q : context.queries) {
    out.titles.push_back({FieldKind::title, q, config.title_boost});
  }
  for (const auto& k : context.keywords) {
    out.keywords.push_back({FieldKind::keyword, k.term, config.keyword_boost * k.rank});
  }
  for (const auto& c : context.categories) {
    out.categories.push_back(
        {FieldKind::category, c.term, config.category_boost * c.rank});
  }
  return out;
}

RankedList rank_contextual(const ExpandedQuery& query,
                           const SessionContext& context,
                           const CorpusIndex& index,
                           const RankingConfig& config) {
  ScoreBoard board(index.doc_count());
  apply_filter(query, index, board);

  const ContextBoosts boosts = build_context_boosts(context, config);

  // Title clauses: boost × Σ over the query's tokens of tf-idf in the title.
  std::vector<double> clause_value(index.doc_count(), 0.0);
  std::vector<DocOrdinal> touched;
  for (const ContextClause& clause : boosts.titles) {
    for (const auto& token : tokenize(clause.text)) {
      const double idf = index.idf(FieldKind::title, token);
      for (const Posting& p : index.postings(FieldKind::title, token)) {
        if (!board.is_candidate(p.doc)) continue;
        if (clause_value[p.doc] == 0.0) touched.push_back(p.doc);
        clause_value[p.doc] += static_cast<double>(p.tf) * idf;
      }
    }
    for (const DocOrdinal doc : touched) {
      board.add_context(doc, clause.boost * clause_value[doc]);
      clause_value[doc] = 0.0;
    }
    touched.clear();
  }

  for (const auto* group : {&boosts.keywords, &boosts.categories}) {
    for (const ContextClause& clause : *group) {
      const double idf = index.idf(clause.field, clause.text);
      for (const Posting& p : index.postings(clause.field, clause.text)) {
        if (board.is_candidate(p.doc)) board.add_context(p.doc, clause.boost * idf);
      }
    }
  }

  return board.finish(index, query.query, ExperimentArm::C_session_context);
}

}  // namespace ctxbrowse
