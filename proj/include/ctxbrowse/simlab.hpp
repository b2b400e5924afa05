#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxbrowse/metrics.hpp"
#include "ctxbrowse/ranking.hpp"
#include "ctxbrowse/service.hpp"

namespace ctxbrowse::simlab {

/// Deterministic random source. Uses mt19937_64 (fully specified by the
/// standard) with hand-written reductions so streams do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : engine_() % n; }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }

  template <typename T>
  const T& pick(std::span<const T> items) { return items[below(items.size())]; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct SyntheticCorpusSpec {
  std::size_t topics = 5;
  std::size_t docs_per_topic = 200;
  std::size_t title_words_per_topic = 30;
  std::size_t abstract_words_per_topic = 60;
  std::size_t general_words = 80;
  std::size_t keywords_per_topic = 8;
  std::size_t shared_keywords = 12;
  std::size_t free_keywords_per_topic = 10;
  std::size_t categories_per_topic = 2;
  std::size_t shared_categories = 6;
  std::size_t authors_per_topic = 40;
  std::size_t journals = 8;
  /// Probability that a keyword slot draws from the shared pool instead of
  /// the document's topic pool. 0 keeps keyword vocabularies disjoint.
  double keyword_overlap = 0.3;
  double category_overlap = 0.5;
  double second_abstract_rate = 0.3;
  std::uint64_t seed = 1;

  static SyntheticCorpusSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Throws std::invalid_argument on zero counts or bad probabilities.
  void validate() const;
};

struct GeneratedCorpus {
  std::vector<DocumentRecord> documents;  // in generation order
  std::vector<std::size_t> topics;        // ground truth, parallel to documents
  std::vector<std::vector<std::string>> topic_title_words;

  void write_corpus(std::ostream& out) const;
  /// Sidecar of "doc_id<TAB>topic" lines, never read by the indexer.
  void write_labels(std::ostream& out) const;
};

GeneratedCorpus generate_corpus(const SyntheticCorpusSpec& spec);

/// Reads a labels sidecar written by GeneratedCorpus::write_labels.
std::unordered_map<std::string, std::size_t> read_labels(std::istream& in);

struct SimUserProfile {
  std::string name = "default";
  double weight = 1.0;  // share within a profile mix
  bool cold_start = false;  // enters at a document, as from a web search engine
  // Budgets are upper bounds; each session draws its own count from [1, budget].
  std::size_t query_budget = 2;
  std::size_t query_terms = 2;
  std::size_t view_budget = 2;  // document views per result list of a search
  std::size_t browse_budget = 3;
  /// Per-browse probability of each stratagem kind (keyword, author,
  /// category, journal); the remainder means no browse.
  std::array<double, 4> stratagem_propensity = {0.4, 0.2, 0.2, 0.2};
  double p_rel = 0.9;
  std::size_t patience = 20;
  std::array<double, 6> signal_probability = {0.15, 0.05, 0.05, 0.1, 0.05, 0.05};
  double search_signal_probability = 0.1;  // signal on a doc found via search
  double long_pause_probability = 0.03;    // a >20 minute pause in the session
  double followup_search_probability = 0.3;  // return to search after browsing

  static SimUserProfile from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

/// The only component that consults ground-truth topics: scans a ranked
/// page in order and clicks the first document on the target topic with
/// probability p_rel, giving up after `patience` ranks.
class ClickModel {
 public:
  ClickModel(const std::unordered_map<std::string, std::size_t>& labels,
             std::size_t target_topic, double p_rel, std::size_t patience);

  /// Index into `doc_ids` of the clicked document, scanning from `start`.
  std::optional<std::size_t> choose(std::span<const std::string> doc_ids, Rng& rng,
                                    std::size_t start = 0) const;
  /// A random document of the target topic (entry from a web search engine).
  const std::string& entry_document(Rng& rng) const;
  /// Re-targets the model to the topic of `doc_id`.
  void adopt_topic_of(const std::string& doc_id);
  std::size_t target_topic() const { return target_; }

 private:
  const std::unordered_map<std::string, std::size_t>* labels_;
  std::vector<std::vector<std::string>> docs_by_topic_;
  std::size_t target_;
  double p_rel_;
  std::size_t patience_;
};

struct SessionPlan {
  std::string session_id;
  TimestampMs start = 0;
  std::vector<std::string> topic_words;  // the user's information need
};

/// Plays the browse loop (query, results, document, stratagem, click,
/// signals) against the service. The session is bound to `arm` up front.
void simulate_session(const SimUserProfile& profile, SearchService& service,
                      ExperimentArm arm, ClickModel& clicks, const SessionPlan& plan,
                      Rng& rng);

struct ExperimentConfig {
  std::size_t sessions = 3000;
  std::uint64_t seed = 42;
  SyntheticCorpusSpec corpus;
  std::vector<SimUserProfile> profiles{SimUserProfile{}};
  RankingConfig ranking;
  std::optional<std::filesystem::path> thesaurus;
  std::optional<std::filesystem::path> corpus_file;  // use instead of generating
  std::optional<std::filesystem::path> labels_file;

  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
};

struct ExperimentResult {
  std::vector<SessionEvent> events;  // sorted by session_id, timestamp
  MetricReport report;
  std::size_t doc_count = 0;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace ctxbrowse::simlab
