#include "ctxbrowse/simlab.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ctxbrowse/corpus_format.hpp"
#include "ctxbrowse/text.hpp"

namespace ctxbrowse::simlab {

using nlohmann::json;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// ------------------------------------------------------------ corpus spec

SyntheticCorpusSpec SyntheticCorpusSpec::from_json(const json& j) {
  SyntheticCorpusSpec s;
  s.topics = j.value("topics", s.topics);
  s.docs_per_topic = j.value("docs_per_topic", s.docs_per_topic);
  s.title_words_per_topic = j.value("title_words_per_topic", s.title_words_per_topic);
  s.abstract_words_per_topic = j.value("abstract_words_per_topic", s.abstract_words_per_topic);
  s.general_words = j.value("general_words", s.general_words);
  s.keywords_per_topic = j.value("keywords_per_topic", s.keywords_per_topic);
  s.shared_keywords = j.value("shared_keywords", s.shared_keywords);
  s.free_keywords_per_topic = j.value("free_keywords_per_topic", s.free_keywords_per_topic);
  s.categories_per_topic = j.value("categories_per_topic", s.categories_per_topic);
  s.shared_categories = j.value("shared_categories", s.shared_categories);
  s.authors_per_topic = j.value("authors_per_topic", s.authors_per_topic);
  s.journals = j.value("journals", s.journals);
  s.keyword_overlap = j.value("keyword_overlap", s.keyword_overlap);
  s.category_overlap = j.value("category_overlap", s.category_overlap);
  s.second_abstract_rate = j.value("second_abstract_rate", s.second_abstract_rate);
  s.seed = j.value("seed", s.seed);
  return s;
}

json SyntheticCorpusSpec::to_json() const {
  return {{"topics", topics},
          {"docs_per_topic", docs_per_topic},
          {"title_words_per_topic", title_words_per_topic},
          {"abstract_words_per_topic", abstract_words_per_topic},
          {"general_words", general_words},
          {"keywords_per_topic", keywords_per_topic},
          {"shared_keywords", shared_keywords},
          {"free_keywords_per_topic", free_keywords_per_topic},
          {"categories_per_topic", categories_per_topic},
          {"shared_categories", shared_categories},
          {"authors_per_topic", authors_per_topic},
          {"journals", journals},
          {"keyword_overlap", keyword_overlap},
          {"category_overlap", category_overlap},
          {"second_abstract_rate", second_abstract_rate},
          {"seed", seed}};
}

void SyntheticCorpusSpec::validate() const {
  const std::size_t counts[] = {topics,           docs_per_topic,     title_words_per_topic,
                                abstract_words_per_topic, general_words, keywords_per_topic,
                                shared_keywords,  free_keywords_per_topic,
                                categories_per_topic, shared_categories, authors_per_topic,
                                journals};
  for (const auto c : counts) {
    if (c < 1) throw std::invalid_argument("corpus spec counts must be >= 1");
  }
  for (const double p : {keyword_overlap, category_overlap, second_abstract_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("corpus spec probabilities must lie in [0, 1]");
    }
  }
}

// -------------------------------------------------------------- generator

namespace {

class WordFactory {
 public:
  explicit WordFactory(Rng& rng) : rng_(rng) {}

  std::string word() {
    static constexpr std::string_view kOnsets[] = {
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st", "kl"};
    static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
    for (;;) {
      std::string w;
      const std::size_t syllables = rng_.between(2, 3);
      for (std::size_t i = 0; i < syllables; ++i) {
        w += kOnsets[rng_.below(std::size(kOnsets))];
        w += kVowels[rng_.below(std::size(kVowels))];
      }
      if (rng_.chance(0.4)) w += "n";
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> words(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(word());
    return out;
  }

  std::string phrase(std::size_t max_words) {
    const std::size_t n = rng_.between(1, max_words);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) out += ' ';
      out += capitalized(word());
    }
    return out;
  }

  std::vector<std::string> phrases(std::size_t n, std::size_t max_words) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(phrase(max_words));
    return out;
  }

  static std::string capitalized(std::string w) {
    if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    return w;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

struct TopicPools {
  std::vector<std::string> title_words;
  std::vector<std::string> abstract_words;
  std::vector<std::string> keywords;
  std::vector<std::string> free_keywords;
  std::vector<std::string> categories;
  std::vector<std::string> authors;
};

template <typename T>
void push_unique(std::vector<T>& list, T value) {
  if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(std::move(value));
}

std::string sentence(Rng& rng, std::size_t length,
                     std::initializer_list<std::pair<double, const std::vector<std::string>*>> mix) {
  std::string out;
  for (std::size_t i = 0; i < length; ++i) {
    double u = rng.uniform();
    const std::vector<std::string>* pool = mix.begin()->second;
    for (const auto& [share, candidate] : mix) {
      pool = candidate;
      if (u < share) break;
      u -= share;
    }
    if (i > 0) out += ' ';
    out += rng.pick(std::span<const std::string>(*pool));
  }
  return out;
}

}  // namespace

GeneratedCorpus generate_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  WordFactory factory(rng);

  const auto general = factory.words(spec.general_words);
  const auto shared_keywords = factory.phrases(spec.shared_keywords, 2);
  const auto shared_free = factory.phrases(spec.shared_keywords, 2);
  const auto shared_categories = factory.phrases(spec.shared_categories, 2);
  std::vector<std::string> journals;
  for (std::size_t i = 0; i < spec.journals; ++i) {
    journals.push_back("Journal of " + factory.phrase(2));
  }

  std::vector<TopicPools> pools(spec.topics);
  for (auto& p : pools) {
    p.title_words = factory.words(spec.title_words_per_topic);
    p.abstract_words = factory.words(spec.abstract_words_per_topic);
    p.keywords = factory.phrases(spec.keywords_per_topic, 2);
    p.free_keywords = factory.phrases(spec.free_keywords_per_topic, 2);
    p.categories = factory.phrases(spec.categories_per_topic, 2);
    for (std::size_t i = 0; i < spec.authors_per_topic; ++i) {
      const std::string first = WordFactory::capitalized(factory.word());
      p.authors.push_back(WordFactory::capitalized(factory.word()) + ", " + first.substr(0, 1) + ".");
    }
  }

  const std::size_t total = spec.topics * spec.docs_per_topic;
  std::vector<std::size_t> id_numbers(total);
  for (std::size_t i = 0; i < total; ++i) id_numbers[i] = i;
  for (std::size_t i = total; i > 1; --i) std::swap(id_numbers[i - 1], id_numbers[rng.below(i)]);

  GeneratedCorpus out;
  out.documents.reserve(total);
  out.topics.reserve(total);
  for (const auto& p : pools) out.topic_title_words.push_back(p.title_words);

  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t topic = i / spec.docs_per_topic;
    const TopicPools& tp = pools[topic];
    DocumentRecord doc;

    std::ostringstream id;
    id << 'D' << std::setw(6) << std::setfill('0') << id_numbers[i];
    doc.doc_id = id.str();

    doc.title = WordFactory::capitalized(
        sentence(rng, rng.between(4, 8), {{0.7, &tp.title_words}, {0.3, &general}}));
    doc.abstracts["en"] = sentence(
        rng, rng.between(25, 50),
        {{0.5, &tp.abstract_words}, {0.15, &tp.title_words}, {0.35, &general}});
    if (rng.chance(spec.second_abstract_rate)) {
      doc.abstracts["de"] = sentence(
          rng, rng.between(20, 40),
          {{0.5, &tp.abstract_words}, {0.15, &tp.title_words}, {0.35, &general}});
    }

    const std::size_t n_authors = rng.between(1, 3);
    for (std::size_t a = 0; a < n_authors; ++a) {
      push_unique(doc.authors, rng.pick(std::span<const std::string>(tp.authors)));
    }
    const std::size_t n_keywords = rng.between(2, 4);
    for (std::size_t k = 0; k < n_keywords; ++k) {
      const auto& pool = rng.chance(spec.keyword_overlap) ? shared_keywords : tp.keywords;
      push_unique(doc.keywords, rng.pick(std::span<const std::string>(pool)));
    }
    const std::size_t n_free = rng.between(1, 2);
    for (std::size_t k = 0; k < n_free; ++k) {
      const auto& pool = rng.chance(spec.keyword_overlap) ? shared_free : tp.free_keywords;
      push_unique(doc.keywords_free, rng.pick(std::span<const std::string>(pool)));
    }
    const std::size_t n_categories = rng.between(1, 3);
    for (std::size_t c = 0; c < n_categories; ++c) {
      const auto& pool = rng.chance(spec.category_overlap) ? shared_categories : tp.categories;
      push_unique(doc.categories, rng.pick(std::span<const std::string>(pool)));
    }
    if (rng.chance(0.95)) doc.journal = rng.pick(std::span<const std::string>(journals));
    doc.year = 1990 + static_cast<int>(rng.below(28));
    doc.language = rng.chance(0.8) ? "en" : "de";

    out.documents.push_back(std::move(doc));
    out.topics.push_back(topic);
  }
  return out;
}

void GeneratedCorpus::write_corpus(std::ostream& out) const {
  for (const auto& doc : documents) out << record_to_json(doc).dump() << '\n';
}

void GeneratedCorpus::write_labels(std::ostream& out) const {
  for (std::size_t i = 0; i < documents.size(); ++i) {
    out << documents[i].doc_id << '\t' << topics[i] << '\n';
  }
}

std::unordered_map<std::string, std::size_t> read_labels(std::istream& in) {
  std::unordered_map<std::string, std::size_t> labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    labels[line.substr(0, tab)] = std::stoul(line.substr(tab + 1));
  }
  return labels;
}

// --------------------------------------------------------------- profiles

SimUserProfile SimUserProfile::from_json(const json& j) {
  SimUserProfile p;
  p.name = j.value("name", p.name);
  p.weight = j.value("weight", p.weight);
  p.cold_start = j.value("cold_start", p.cold_start);
  p.query_budget = j.value("query_budget", p.query_budget);
  p.query_terms = j.value("query_terms", p.query_terms);
  p.view_budget = j.value("view_budget", p.view_budget);
  p.browse_budget = j.value("browse_budget", p.browse_budget);
  if (j.contains("stratagem_propensity")) {
    const auto& sp = j.at("stratagem_propensity");
    for (const auto kind : {StratagemKind::keyword, StratagemKind::author,
                            StratagemKind::category, StratagemKind::journal}) {
      const std::string key(stratagem_name(kind));
      p.stratagem_propensity[static_cast<std::size_t>(kind)] =
          sp.value(key, p.stratagem_propensity[static_cast<std::size_t>(kind)]);
    }
  }
  p.p_rel = j.value("p_rel", p.p_rel);
  p.patience = j.value("patience", p.patience);
  if (j.contains("signal_probability")) {
    const auto& sp = j.at("signal_probability");
    for (const auto kind : kAllSignals) {
      const auto slot = static_cast<std::size_t>(kind);
      p.signal_probability[slot] =
          sp.value(std::string(signal_name(kind)), p.signal_probability[slot]);
    }
  }
  p.search_signal_probability = j.value("search_signal_probability", p.search_signal_probability);
  p.long_pause_probability = j.value("long_pause_probability", p.long_pause_probability);
  p.followup_search_probability =
      j.value("followup_search_probability", p.followup_search_probability);
  p.validate();
  return p;
}

json SimUserProfile::to_json() const {
  json propensity;
  for (const auto kind : {StratagemKind::keyword, StratagemKind::author,
                          StratagemKind::category, StratagemKind::journal}) {
    propensity[std::string(stratagem_name(kind))] =
        stratagem_propensity[static_cast<std::size_t>(kind)];
  }
  json signals;
  for (const auto kind : kAllSignals) {
    signals[std::string(signal_name(kind))] = signal_probability[static_cast<std::size_t>(kind)];
  }
  return {{"name", name},
          {"weight", weight},
          {"cold_start", cold_start},
          {"query_budget", query_budget},
          {"query_terms", query_terms},
          {"view_budget", view_budget},
          {"browse_budget", browse_budget},
          {"stratagem_propensity", propensity},
          {"p_rel", p_rel},
          {"patience", patience},
          {"signal_probability", signals},
          {"search_signal_probability", search_signal_probability},
          {"long_pause_probability", long_pause_probability},
          {"followup_search_probability", followup_search_probability}};
}

void SimUserProfile::validate() const {
  auto check = [](double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("profile probabilities must lie in [0, 1]");
  };
  double propensity = 0.0;
  for (const double p : stratagem_propensity) {
    check(p);
    propensity += p;
  }
  if (propensity > 1.0 + 1e-12) throw std::invalid_argument("stratagem propensities sum above 1");
  for (const double p : signal_probability) check(p);
  check(p_rel);
  check(search_signal_probability);
  check(long_pause_probability);
  check(followup_search_probability);
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(weight >= 0.0)) throw std::invalid_argument("profile weight must be >= 0");
}

// ------------------------------------------------------------ click model

ClickModel::ClickModel(const std::unordered_map<std::string, std::size_t>& labels,
                       std::size_t target_topic, double p_rel, std::size_t patience)
    : labels_(&labels), target_(target_topic), p_rel_(p_rel), patience_(patience) {
  for (const auto& [id, topic] : labels) {
    if (docs_by_topic_.size() <= topic) docs_by_topic_.resize(topic + 1);
    docs_by_topic_[topic].push_back(id);
  }
  for (auto& list : docs_by_topic_) std::sort(list.begin(), list.end());
}

std::optional<std::size_t> ClickModel::choose(std::span<const std::string> doc_ids, Rng& rng,
                                              std::size_t start) const {
  const std::size_t end = std::min(doc_ids.size(), start + patience_);
  for (std::size_t i = start; i < end; ++i) {
    const auto it = labels_->find(doc_ids[i]);
    if (it == labels_->end() || it->second != target_) continue;
    if (rng.chance(p_rel_)) return i;
  }
  return std::nullopt;
}

const std::string& ClickModel::entry_document(Rng& rng) const {
  if (target_ >= docs_by_topic_.size() || docs_by_topic_[target_].empty()) {
    throw std::invalid_argument("target topic has no documents");
  }
  return rng.pick(std::span<const std::string>(docs_by_topic_[target_]));
}

void ClickModel::adopt_topic_of(const std::string& doc_id) {
  if (const auto it = labels_->find(doc_id); it != labels_->end()) target_ = it->second;
}

// -------------------------------------------------------------- sessions

namespace {

class SessionDriver {
 public:
  SessionDriver(const SimUserProfile& profile, SearchService& service, ClickModel& clicks,
                const SessionPlan& plan, Rng& rng)
      : profile_(profile), service_(service), clicks_(clicks), plan_(plan), rng_(rng),
        now_(plan.start) {}

  void run() {
    std::optional<std::string> seed;
    if (profile_.cold_start) {
      const std::string entry = clicks_.entry_document(rng_);
      view(entry);
      seed = entry;
    } else {
      seed = search_phase();
    }
    if (!seed) return;
    const std::size_t browses = rng_.between(1, std::max<std::size_t>(1, profile_.browse_budget));
    for (std::size_t b = 0; b < browses && profile_.browse_budget > 0; ++b) {
      if (auto next = browse_once(*seed)) seed = std::move(next);
    }
    if (rng_.chance(profile_.followup_search_probability)) search_round();
  }

 private:
  void tick() {
    now_ += static_cast<TimestampMs>(rng_.between(5, 60)) * 1000;
    if (rng_.chance(profile_.long_pause_probability)) {
      now_ += static_cast<TimestampMs>(rng_.between(21, 30)) * 60 * 1000;
    }
  }

  void view(const std::string& doc_id) {
    tick();
    service_.view_document(plan_.session_id, doc_id, now_);
  }

  void click(const std::string& doc_id, std::size_t rank, std::size_t result_size) {
    tick();
    service_.post_event({{"session_id", plan_.session_id},
                         {"ts", now_},
                         {"type", "click_result"},
                         {"doc_id", doc_id},
                         {"rank", rank},
                         {"result_size", result_size}});
  }

  void signal(SignalKind kind, const std::string& doc_id) {
    tick();
    service_.post_event({{"session_id", plan_.session_id},
                         {"ts", now_},
                         {"type", "signal"},
                         {"signal", std::string(signal_name(kind))},
                         {"doc_id", doc_id}});
  }

  std::string make_query() {
    std::string q;
    for (std::size_t i = 0; i < profile_.query_terms; ++i) {
      if (i > 0) q += ' ';
      q += rng_.pick(std::span<const std::string>(plan_.topic_words));
    }
    return q;
  }

  std::optional<std::string> search_phase() {
    std::optional<std::string> last_viewed;
    const std::size_t queries = rng_.between(1, std::max<std::size_t>(1, profile_.query_budget));
    for (std::size_t q = 0; q < queries && profile_.query_budget > 0; ++q) {
      if (auto viewed = search_round()) last_viewed = std::move(viewed);
    }
    return last_viewed;
  }

  /// One query with up to view_budget document views from its results.
  std::optional<std::string> search_round() {
    std::optional<std::string> last_viewed;
    {
      tick();
      const auto response = service_.search(plan_.session_id, make_query(), 1,
                                            kDefaultPageSize, now_);
      std::vector<std::string> ids;
      for (const auto& r : response.results) ids.push_back(r.doc_id);

      std::size_t start = 0;
      const std::size_t views = rng_.between(1, std::max<std::size_t>(1, profile_.view_budget));
      for (std::size_t v = 0; v < views && profile_.view_budget > 0 && start < ids.size(); ++v) {
        const auto chosen = clicks_.choose(ids, rng_, start);
        if (!chosen) break;
        click(ids[*chosen], *chosen + 1, response.total);
        view(ids[*chosen]);
        if (rng_.chance(profile_.search_signal_probability)) {
          signal(kAllSignals[rng_.below(kAllSignals.size())], ids[*chosen]);
        }
        last_viewed = ids[*chosen];
        start = *chosen + 1;
      }
    }
    return last_viewed;
  }

  std::optional<StratagemKind> choose_kind() {
    double u = rng_.uniform();
    for (const auto kind : {StratagemKind::keyword, StratagemKind::author,
                            StratagemKind::category, StratagemKind::journal}) {
      const double p = profile_.stratagem_propensity[static_cast<std::size_t>(kind)];
      if (u < p) return kind;
      u -= p;
    }
    return std::nullopt;
  }

  std::optional<std::string> browse_once(const std::string& seed) {
    const auto kind = choose_kind();
    if (!kind) return std::nullopt;
    std::vector<std::string> values;
    for (const auto& link : stratagem_links(service_.index().document(seed))) {
      if (link.kind == *kind) values.push_back(link.value);
    }
    if (values.empty()) return std::nullopt;

    tick();
    BrowseRequest request;
    request.session_id = plan_.session_id;
    request.kind = *kind;
    request.value = rng_.pick(std::span<const std::string>(values));
    request.seed_doc_id = seed;
    request.timestamp = now_;
    const auto response = service_.browse(request);

    std::vector<std::string> ids;
    for (const auto& r : response.results) ids.push_back(r.doc_id);
    const auto chosen = clicks_.choose(ids, rng_);
    if (!chosen) return std::nullopt;

    const std::string& doc = ids[*chosen];
    click(doc, *chosen + 1, response.total);
    view(doc);
    for (const auto kind_signal : kAllSignals) {
      if (rng_.chance(profile_.signal_probability[static_cast<std::size_t>(kind_signal)])) {
        signal(kind_signal, doc);
      }
    }
    return doc;
  }

  const SimUserProfile& profile_;
  SearchService& service_;
  ClickModel& clicks_;
  const SessionPlan& plan_;
  Rng& rng_;
  TimestampMs now_;
};

}  // namespace

void simulate_session(const SimUserProfile& profile, SearchService& service,
                      ExperimentArm arm, ClickModel& clicks, const SessionPlan& plan,
                      Rng& rng) {
  service.store().ensure_session(plan.session_id, arm);
  SessionDriver(profile, service, clicks, plan, rng).run();
}

// ------------------------------------------------------------ experiment

ExperimentConfig ExperimentConfig::from_json(const json& j,
                                             const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  ExperimentConfig cfg;
  cfg.sessions = j.value("sessions", cfg.sessions);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("corpus")) cfg.corpus = SyntheticCorpusSpec::from_json(j.at("corpus"));
  if (j.contains("profiles")) {
    cfg.profiles.clear();
    for (const auto& p : j.at("profiles")) cfg.profiles.push_back(SimUserProfile::from_json(p));
  }
  if (j.contains("ranking")) cfg.ranking = RankingConfig::from_json(j.at("ranking"));
  if (j.contains("thesaurus")) cfg.thesaurus = resolve(j.at("thesaurus").get<std::string>());
  if (j.contains("corpus_file")) cfg.corpus_file = resolve(j.at("corpus_file").get<std::string>());
  if (j.contains("labels_file")) cfg.labels_file = resolve(j.at("labels_file").get<std::string>());
  if (cfg.profiles.empty()) throw std::invalid_argument("experiment needs at least one profile");
  if (cfg.corpus_file.has_value() != cfg.labels_file.has_value()) {
    throw std::invalid_argument("corpus_file and labels_file must be given together");
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open experiment config: " + path.string());
  return from_json(json::parse(in), path.parent_path());
}

namespace {

/// Most frequent title tokens of each topic; models what a user on that
/// topic would type.
std::vector<std::vector<std::string>> topic_words_from_labels(
    const CorpusIndex& index, const std::unordered_map<std::string, std::size_t>& labels) {
  std::vector<std::map<std::string, std::size_t>> counts;
  for (const auto& doc : index.documents()) {
    const auto it = labels.find(doc.doc_id);
    if (it == labels.end()) continue;
    if (counts.size() <= it->second) counts.resize(it->second + 1);
    for (const auto& token : tokenize(doc.title)) ++counts[it->second][token];
  }
  std::vector<std::vector<std::string>> out;
  for (const auto& table : counts) {
    std::vector<std::pair<std::string, std::size_t>> sorted(table.begin(), table.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> words;
    for (std::size_t i = 0; i < sorted.size() && i < 30; ++i) words.push_back(sorted[i].first);
    out.push_back(std::move(words));
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  std::vector<DocumentRecord> docs;
  std::unordered_map<std::string, std::size_t> labels;
  std::vector<std::vector<std::string>> topic_words;

  if (config.corpus_file) {
    auto ingested = ingest_corpus_file(*config.corpus_file);
    docs = ingested.index.documents();
    std::ifstream in(*config.labels_file);
    if (!in) throw std::invalid_argument("cannot open labels file: " + config.labels_file->string());
    labels = read_labels(in);
  } else {
    GeneratedCorpus corpus = generate_corpus(config.corpus);
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
      labels[corpus.documents[i].doc_id] = corpus.topics[i];
    }
    topic_words = corpus.topic_title_words;
    for (auto& doc : corpus.documents) docs.push_back(normalize_record(std::move(doc)));
  }

  auto index = std::make_shared<const CorpusIndex>(CorpusIndex::build(std::move(docs)));
  if (topic_words.empty()) topic_words = topic_words_from_labels(*index, labels);
  const Thesaurus thesaurus =
      config.thesaurus ? Thesaurus::load_file(*config.thesaurus) : Thesaurus{};

  EventStore store;
  SearchService::Options options;
  options.seed = config.seed;
  options.clock = [] { return TimestampMs{0}; };
  SearchService service(index, thesaurus, config.ranking, store, options);

  double total_weight = 0.0;
  for (const auto& p : config.profiles) total_weight += p.weight;
  if (!(total_weight > 0.0)) throw std::invalid_argument("profile weights sum to zero");

  const int width = static_cast<int>(std::to_string(config.sessions).size());
  constexpr TimestampMs kEpoch = 1'505'174'400'000;  // fixed simulated start date
  for (std::size_t i = 0; i < config.sessions; ++i) {
    Rng rng(mix_seed(config.seed, i));

    double u = rng.uniform() * total_weight;
    const SimUserProfile* profile = &config.profiles.back();
    for (const auto& p : config.profiles) {
      if (u < p.weight) {
        profile = &p;
        break;
      }
      u -= p.weight;
    }

    std::ostringstream id;
    id << "sim-" << std::setw(width) << std::setfill('0') << i;
    SessionPlan plan;
    plan.session_id = id.str();
    plan.start = kEpoch + static_cast<TimestampMs>(i) * 60'000;

    const std::size_t topic = topic_words.empty() ? 0 : rng.below(topic_words.size());
    if (!topic_words.empty()) plan.topic_words = topic_words[topic];
    if (plan.topic_words.empty()) plan.topic_words.push_back("document");

    ClickModel clicks(labels, topic, profile->p_rel, profile->patience);
    const ExperimentArm arm = assign_arm(plan.session_id, config.seed);
    simulate_session(*profile, service, arm, clicks, plan, rng);
  }

  ExperimentResult result;
  result.events = store.all_events();
  result.report = compute_report(result.events);
  result.doc_count = index->doc_count();
  return result;
}

}  // namespace ctxbrowse::simlab
