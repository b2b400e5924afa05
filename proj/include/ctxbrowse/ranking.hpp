#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxbrowse/arm.hpp"
#include "ctxbrowse/corpus_index.hpp"
#include "ctxbrowse/session_context.hpp"

namespace ctxbrowse {

/// Browsing activities available from a seed document.
enum class StratagemKind : std::uint8_t { keyword, author, category, journal };

std::string_view stratagem_name(StratagemKind kind);
std::optional<StratagemKind> parse_stratagem(std::string_view text);
FieldKind primary_field(StratagemKind kind);

struct StratagemQuery {
  StratagemKind kind = StratagemKind::keyword;
  std::string value;
  std::string seed_doc_id;
};

/// Synonym and translation table keyed by normalized term.
class Thesaurus {
 public:
  /// Tab-separated: first column the term, remaining columns expansions.
  /// Blank lines and lines starting with '#' are skipped.
  static Thesaurus load(std::istream& in);
  static Thesaurus load_file(const std::filesystem::path& path);

  void add(std::string_view term, std::string_view expansion);
  /// Expansions in insertion order; never contains the key itself.
  const std::vector<std::string>& expansions(std::string_view term) const;
  /// Copy in which every expansion also maps back to its key.
  Thesaurus symmetric_closure() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

struct RelatedField {
  FieldKind field;
  double boost;
};

struct SimilarityParams {
  double boost = 1.0;
  std::size_t min_df = 2;
  std::size_t max_terms = 25;
  std::size_t min_token_length = 2;
};

/// Boost bases and similarity parameters; loaded from a JSON file.
struct RankingConfig {
  double primary_boost = 400.0;
  std::map<StratagemKind, RelatedField> related = {
      {StratagemKind::keyword, {FieldKind::keyword_free, 250.0}}};
  double title_boost = 1700.0;
  double keyword_boost = 1200.0;
  double category_boost = 800.0;
  SimilarityParams similarity;

  /// Every boost base multiplied by `factor`.
  RankingConfig scaled(double factor) const;

  static RankingConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static RankingConfig load_file(const std::filesystem::path& path);
};

struct QueryClause {
  FieldKind field;
  std::string term;
  double boost;

  friend bool operator==(const QueryClause&, const QueryClause&) = default;
};

struct ExpandedQuery {
  std::vector<QueryClause> clauses;
  StratagemQuery query;
};

/// Title clauses carry a query text (tokenized at scoring time); keyword
/// and category clauses carry an exact normalized value.
struct ContextClause {
  FieldKind field;
  std::string text;
  double boost;
};

struct ContextBoosts {
  std::vector<ContextClause> titles;
  std::vector<ContextClause> keywords;
  std::vector<ContextClause> categories;

  bool empty() const {
    return titles.empty() && keywords.empty() && categories.empty();
  }
};

struct SimilarityTerm {
  FieldKind field;
  std::string term;
  double weight;  // idf

  friend bool operator==(const SimilarityTerm&, const SimilarityTerm&) = default;
};

struct ComponentScores {
  double filter = 0.0;
  double similarity = 0.0;
  double context = 0.0;
};

struct RankedEntry {
  std::string doc_id;
  double score = 0.0;
  ComponentScores parts;
};

/// Ordered by score descending, ties by ascending doc_id. Never contains
/// the query's seed document.
struct RankedList {
  std::vector<RankedEntry> entries;
  StratagemQuery query;
  ExperimentArm arm = ExperimentArm::A_baseline;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

/// Stratagem value plus thesaurus expansions on the primary field, then
/// the same terms on the related field if one is configured.
ExpandedQuery expand_filter(const StratagemQuery& query,
                            const Thesaurus& thesaurus,
                            const RankingConfig& config = {});

RankedList rank_default(const ExpandedQuery& query, const CorpusIndex& index);

std::vector<SimilarityTerm> select_similarity_terms(
    const DocumentRecord& seed, const CorpusIndex& index,
    const SimilarityParams& params = {});

/// Throws UnknownDocument when the seed is not indexed.
RankedList rank_similar(const ExpandedQuery& query, const DocumentRecord& seed,
                        const CorpusIndex& index,
                        const SimilarityParams& params = {});

ContextBoosts build_context_boosts(const SessionContext& context,
                                   const RankingConfig& config = {});

RankedList rank_contextual(const ExpandedQuery& query,
                           const SessionContext& context,
                           const CorpusIndex& index,
                           const RankingConfig& config = {});

}  // namespace ctxbrowse
