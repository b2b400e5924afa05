#include "ctxbrowse/session.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "ctxbrowse/text.hpp"

namespace ctxbrowse {

using nlohmann::json;

std::string_view signal_name(SignalKind kind) {
  switch (kind) {
    case SignalKind::add_to_favourites: return "add_to_favourites";
    case SignalKind::goto_google_scholar: return "goto_google_scholar";
    case SignalKind::goto_google_books: return "goto_google_books";
    case SignalKind::goto_fulltext: return "goto_fulltext";
    case SignalKind::goto_local_availability: return "goto_local_availability";
    case SignalKind::export_record: return "export_record";
  }
  return "unknown";
}

std::optional<SignalKind> parse_signal(std::string_view text) {
  for (const auto kind : kAllSignals) {
    if (signal_name(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view event_type_name(EventType type) {
  switch (type) {
    case EventType::query: return "query";
    case EventType::view_results: return "view_results";
    case EventType::view_doc: return "view_doc";
    case EventType::browse_stratagem: return "browse_stratagem";
    case EventType::click_result: return "click_result";
    case EventType::signal: return "signal";
  }
  return "unknown";
}

std::optional<EventType> parse_event_type(std::string_view text) {
  for (const auto type :
       {EventType::query, EventType::view_results, EventType::view_doc,
        EventType::browse_stratagem, EventType::click_result,
        EventType::signal}) {
    if (event_type_name(type) == text) return type;
  }
  return std::nullopt;
}

// ------------------------------------------------------------- wire format

namespace {

template <typename T>
T required(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("bad type for field '") + key + "'");
  }
}

std::size_t required_count(const json& obj, const char* key) {
  const auto value = required<long long>(obj, key);
  if (value < 0) {
    throw std::invalid_argument(std::string("field '") + key + "' is negative");
  }
  return static_cast<std::size_t>(value);
}

}  // namespace

std::optional<std::string> validate_event(const SessionEvent& event) {
  if (event.session_id.empty()) return "empty session_id";
  return std::visit(
      [](const auto& p) -> std::optional<std::string> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DocViewPayload>) {
          if (p.doc_id.empty()) return "view_doc without doc_id";
        } else if constexpr (std::is_same_v<P, BrowsePayload>) {
          if (p.query.value.empty()) return "browse_stratagem with empty value";
        } else if constexpr (std::is_same_v<P, ClickPayload>) {
          if (p.rank < 1 || p.rank > p.result_size) {
            return "click rank " + std::to_string(p.rank) +
                   " outside result set of size " + std::to_string(p.result_size);
          }
        } else if constexpr (std::is_same_v<P, SignalPayload>) {
          if (p.doc_id.empty()) return "signal without doc_id";
        }
        return std::nullopt;
      },
      event.payload);
}

SessionEvent event_from_json(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("event is not an object");
  SessionEvent ev;
  if (const auto it = obj.find("event_id"); it != obj.end() && it->is_string()) {
    ev.event_id = it->get<std::string>();
  }
  ev.session_id = required<std::string>(obj, "session_id");
  ev.timestamp = required<TimestampMs>(obj, "ts");
  const auto arm = parse_arm(required<std::string>(obj, "arm"));
  if (!arm) throw std::invalid_argument("unknown arm");
  ev.arm = *arm;

  const auto type = parse_event_type(required<std::string>(obj, "type"));
  if (!type) throw std::invalid_argument("unknown event type");
  switch (*type) {
    case EventType::query:
      ev.payload = QueryPayload{required<std::string>(obj, "query")};
      break;
    case EventType::view_results: {
      ResultsPayload p;
      p.doc_ids = required<std::vector<std::string>>(obj, "doc_ids");
      const auto origin = required<std::string>(obj, "origin");
      if (origin == "search") {
        p.origin = ResultOrigin::search;
      } else if (origin == "stratagem") {
        p.origin = ResultOrigin::stratagem;
      } else {
        throw std::invalid_argument("unknown result origin '" + origin + "'");
      }
      p.total = required_count(obj, "total");
      p.offset = obj.contains("offset") ? required_count(obj, "offset") : 0;
      ev.payload = std::move(p);
      break;
    }
    case EventType::view_doc:
      ev.payload = DocViewPayload{required<std::string>(obj, "doc_id")};
      break;
    case EventType::browse_stratagem: {
      const auto kind = parse_stratagem(required<std::string>(obj, "kind"));
      if (!kind) throw std::invalid_argument("unknown stratagem kind");
      ev.payload = BrowsePayload{{*kind, required<std::string>(obj, "value"),
                                  required<std::string>(obj, "seed")}};
      break;
    }
    case EventType::click_result:
      ev.payload = ClickPayload{required<std::string>(obj, "doc_id"),
                                required_count(obj, "rank"),
                                required_count(obj, "result_size")};
      break;
    case EventType::signal: {
      const auto kind = parse_signal(required<std::string>(obj, "signal"));
      if (!kind) throw std::invalid_argument("unknown signal kind");
      ev.payload = SignalPayload{*kind, required<std::string>(obj, "doc_id")};
      break;
    }
  }
  if (auto error = validate_event(ev)) throw std::invalid_argument(*error);
  return ev;
}

json event_to_json(const SessionEvent& event) {
  json obj;
  if (event.event_id) obj["event_id"] = *event.event_id;
  obj["session_id"] = event.session_id;
  obj["ts"] = event.timestamp;
  obj["arm"] = std::string(arm_label(event.arm));
  obj["type"] = std::string(event_type_name(event.type()));
  std::visit(
      [&obj](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, QueryPayload>) {
          obj["query"] = p.text;
        } else if constexpr (std::is_same_v<P, ResultsPayload>) {
          obj["doc_ids"] = p.doc_ids;
          obj["origin"] = p.origin == ResultOrigin::search ? "search" : "stratagem";
          obj["total"] = p.total;
          obj["offset"] = p.offset;
        } else if constexpr (std::is_same_v<P, DocViewPayload>) {
          obj["doc_id"] = p.doc_id;
        } else if constexpr (std::is_same_v<P, BrowsePayload>) {
          obj["kind"] = std::string(stratagem_name(p.query.kind));
          obj["value"] = p.query.value;
          obj["seed"] = p.query.seed_doc_id;
        } else if constexpr (std::is_same_v<P, ClickPayload>) {
          obj["doc_id"] = p.doc_id;
          obj["rank"] = p.rank;
          obj["result_size"] = p.result_size;
        } else if constexpr (std::is_same_v<P, SignalPayload>) {
          obj["signal"] = std::string(signal_name(p.kind));
          obj["doc_id"] = p.doc_id;
        }
      },
      event.payload);
  return obj;
}

std::string event_to_line(const SessionEvent& event) {
  return event_to_json(event).dump();
}

LogReadResult read_event_log(std::istream& in) {
  LogReadResult out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.events.push_back(event_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      out.diagnostics.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_event_log(std::ostream& out, std::span<const SessionEvent> events) {
  for (const auto& ev : events) out << event_to_line(ev) << '\n';
}

// ------------------------------------------------------------ arms, history

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

ExperimentArm assign_arm(std::string_view session_id, std::uint64_t seed) {
  const std::uint64_t h = splitmix64(fnv1a(session_id) ^ splitmix64(seed));
  return kAllArms[h % kAllArms.size()];
}

std::size_t history_size(std::span<const SessionEvent> events, TimestampMs at) {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(),
                    [at](const SessionEvent& e) { return e.timestamp < at; }));
}

std::span<const SessionEvent> current_segment(std::span<const SessionEvent> events,
                                              std::chrono::milliseconds gap) {
  std::size_t start = 0;
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].timestamp - events[i - 1].timestamp > gap.count()) start = i;
  }
  return events.subspan(start);
}

// ----------------------------------------------------------------- context

std::vector<WeightedTerm> top_ranked(const std::map<std::string, std::size_t>& counts,
                                     std::size_t limit) {
  std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(),
                                                          counts.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // map order already gives term ascending
  });
  if (sorted.size() > limit) sorted.resize(limit);

  std::vector<WeightedTerm> out;
  if (sorted.empty() || sorted.front().second == 0) return out;
  const auto max_count = static_cast<double>(sorted.front().second);
  for (const auto& [term, count] : sorted) {
    if (count == 0) break;
    out.push_back({term, static_cast<double>(count) / max_count});
  }
  return out;
}

namespace {

struct FeatureCounts {
  std::map<std::string, std::size_t> keywords;
  std::map<std::string, std::size_t> categories;

  void add_document(const DocumentRecord& doc) {
    std::set<std::string> kw;
    for (const auto* list : {&doc.keywords, &doc.keywords_free}) {
      for (const auto& raw : *list) {
        if (auto v = normalize_value(raw); !v.empty()) kw.insert(std::move(v));
      }
    }
    for (const auto& v : kw) ++keywords[v];

    std::set<std::string> cats;
    for (const auto& raw : doc.categories) {
      if (auto v = normalize_value(raw); !v.empty()) cats.insert(std::move(v));
    }
    for (const auto& v : cats) ++categories[v];
  }

  std::size_t max_count() const {
    std::size_t m = 0;
    for (const auto& [t, c] : keywords) m = std::max(m, c);
    for (const auto& [t, c] : categories) m = std::max(m, c);
    return m;
  }
};

}  // namespace

SessionContext build_session_context(std::span<const SessionEvent> events,
                                     const CorpusIndex& index,
                                     std::optional<std::string_view> seed_doc_id) {
  SessionContext ctx;
  ctx.history_size = events.size();

  FeatureCounts counts;
  std::optional<std::string> last_viewed;
  for (const auto& ev : events) {
    if (const auto* q = ev.as<QueryPayload>()) {
      if (!q->text.empty()) ctx.queries.push_back(q->text);
    } else if (const auto* view = ev.as<DocViewPayload>()) {
      last_viewed = view->doc_id;
      if (const auto* doc = index.find(view->doc_id)) counts.add_document(*doc);
    } else if (const auto* results = ev.as<ResultsPayload>()) {
      for (const auto& id : results->doc_ids) {
        if (const auto* doc = index.find(id)) counts.add_document(*doc);
      }
    }
  }

  const DocumentRecord* seed = nullptr;
  if (seed_doc_id) {
    seed = index.find(*seed_doc_id);
  } else if (last_viewed) {
    seed = index.find(*last_viewed);
  }

  if (counts.max_count() == 1 && seed != nullptr) {
    FeatureCounts from_seed;
    from_seed.add_document(*seed);
    ctx.keywords = top_ranked(from_seed.keywords);
    ctx.categories = top_ranked(from_seed.categories);
    ctx.cold_start = true;
    return ctx;
  }
  ctx.keywords = top_ranked(counts.keywords);
  ctx.categories = top_ranked(counts.categories);
  return ctx;
}

// ------------------------------------------------------------- event store

EventStore::EventStore(std::ostream* durable_log) : durable_log_(durable_log) {}

EventStore::SessionLog* EventStore::find(std::string_view session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second.get();
}

std::pair<EventStore::SessionLog*, bool> EventStore::find_or_create(
    const std::string& session_id, ExperimentArm arm) {
  if (auto* log = find(session_id)) return {log, false};
  std::unique_lock lock(sessions_mutex_);
  auto [it, inserted] = sessions_.try_emplace(session_id);
  if (inserted) {
    it->second = std::make_unique<SessionLog>();
    it->second->arm = arm;
  }
  return {it->second.get(), inserted};
}

ExperimentArm EventStore::ensure_session(const std::string& session_id,
                                         ExperimentArm arm) {
  return find_or_create(session_id, arm).first->arm;
}

std::optional<ExperimentArm> EventStore::arm_of(std::string_view session_id) const {
  if (const auto* log = find(session_id)) return log->arm;
  return std::nullopt;
}

void EventStore::note(std::string message) {
  std::lock_guard lock(diag_mutex_);
  diagnostics_.push_back(std::move(message));
}

RecordAck EventStore::record(SessionEvent event) {
  RecordAck ack;
  if (auto error = validate_event(event)) {
    ack.error = *error;
    return ack;
  }
  auto [log, created] = find_or_create(event.session_id, event.arm);
  ack.created_session = created;

  std::lock_guard session_lock(log->mutex);
  if (log->arm != event.arm) {
    ack.error = "arm " + std::string(arm_label(event.arm)) +
                " does not match session arm " + std::string(arm_label(log->arm));
    return ack;
  }
  if (event.event_id && !log->event_ids.insert(*event.event_id).second) {
    ack.accepted = true;
    ack.duplicate = true;
    return ack;
  }
  if (!log->events.empty() && event.timestamp < log->events.back().timestamp) {
    ack.monotonicity_violation = true;
    note("session " + event.session_id + ": timestamp " +
         std::to_string(event.timestamp) + " precedes " +
         std::to_string(log->events.back().timestamp));
  }
  if (durable_log_ != nullptr) {
    const std::string line = event_to_line(event);
    std::lock_guard log_lock(log_mutex_);
    *durable_log_ << line << '\n';
    durable_log_->flush();
  }
  log->events.push_back(std::move(event));
  ack.accepted = true;
  return ack;
}

std::vector<SessionEvent> EventStore::events(std::string_view session_id) const {
  const auto* log = find(session_id);
  if (log == nullptr) return {};
  std::lock_guard lock(log->mutex);
  return log->events;
}

std::vector<SessionEvent> EventStore::all_events() const {
  std::vector<SessionEvent> out;
  std::shared_lock lock(sessions_mutex_);
  for (const auto& [id, log] : sessions_) {
    std::lock_guard session_lock(log->mutex);
    auto events = log->events;
    std::stable_sort(events.begin(), events.end(),
                     [](const SessionEvent& a, const SessionEvent& b) {
                       return a.timestamp < b.timestamp;
                     });
    out.insert(out.end(), std::make_move_iterator(events.begin()),
               std::make_move_iterator(events.end()));
  }
  return out;
}

std::vector<std::string> EventStore::diagnostics() const {
  std::lock_guard lock(diag_mutex_);
  return diagnostics_;
}

std::size_t EventStore::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

}  // namespace ctxbrowse
