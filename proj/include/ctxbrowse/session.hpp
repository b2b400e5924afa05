#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxbrowse/arm.hpp"
#include "ctxbrowse/corpus_index.hpp"
#include "ctxbrowse/ranking.hpp"
#include "ctxbrowse/session_context.hpp"

namespace ctxbrowse {

/// The implicit relevance signals a user can emit on a document.
enum class SignalKind : std::uint8_t {
  add_to_favourites,
  goto_google_scholar,
  goto_google_books,
  goto_fulltext,
  goto_local_availability,
  export_record,
};

inline constexpr std::array<SignalKind, 6> kAllSignals = {
    SignalKind::add_to_favourites,   SignalKind::goto_google_scholar,
    SignalKind::goto_google_books,   SignalKind::goto_fulltext,
    SignalKind::goto_local_availability, SignalKind::export_record,
};

std::string_view signal_name(SignalKind kind);
std::optional<SignalKind> parse_signal(std::string_view text);

enum class EventType : std::uint8_t {
  query,
  view_results,
  view_doc,
  browse_stratagem,
  click_result,
  signal,
};

std::string_view event_type_name(EventType type);
std::optional<EventType> parse_event_type(std::string_view text);

struct QueryPayload {
  std::string text;
};

enum class ResultOrigin : std::uint8_t { search, stratagem };

struct ResultsPayload {
  std::vector<std::string> doc_ids;  // the page delivered to the user
  ResultOrigin origin = ResultOrigin::search;
  std::size_t total = 0;             // size of the whole result set
  std::size_t offset = 0;            // absolute rank of doc_ids[0] minus one
};

struct DocViewPayload {
  std::string doc_id;
};

struct BrowsePayload {
  StratagemQuery query;
};

struct ClickPayload {
  std::string doc_id;
  std::size_t rank = 0;         // absolute, 1-based
  std::size_t result_size = 0;
};

struct SignalPayload {
  SignalKind kind = SignalKind::add_to_favourites;
  std::string doc_id;
};

// Alternative order matches EventType.
using EventPayload = std::variant<QueryPayload, ResultsPayload, DocViewPayload,
                                  BrowsePayload, ClickPayload, SignalPayload>;

using TimestampMs = std::int64_t;

struct SessionEvent {
  std::optional<std::string> event_id;
  std::string session_id;
  TimestampMs timestamp = 0;
  ExperimentArm arm = ExperimentArm::A_baseline;
  EventPayload payload;

  EventType type() const { return static_cast<EventType>(payload.index()); }

  template <typename T>
  const T* as() const { return std::get_if<T>(&payload); }
};

/// One transaction-log line. Throws std::invalid_argument when the object is
/// malformed or violates an event invariant.
SessionEvent event_from_json(const nlohmann::json& obj);
nlohmann::json event_to_json(const SessionEvent& event);
std::string event_to_line(const SessionEvent& event);

/// Checks payload invariants (click rank within the result set, non-empty
/// ids). Returns an error message, or nullopt when valid.
std::optional<std::string> validate_event(const SessionEvent& event);

struct LogReadResult {
  std::vector<SessionEvent> events;
  std::vector<std::string> diagnostics;  // "line N: reason"
};

/// Reads a line-delimited transaction log, skipping malformed lines.
LogReadResult read_event_log(std::istream& in);
void write_event_log(std::ostream& out, std::span<const SessionEvent> events);

/// Uniform, sticky arm for (session_id, seed).
ExperimentArm assign_arm(std::string_view session_id, std::uint64_t seed);

/// Count of events strictly before `at`.
std::size_t history_size(std::span<const SessionEvent> events, TimestampMs at);

inline constexpr std::chrono::minutes kSessionInactivity{60};

/// Suffix of a session's events after the last inactivity gap longer than
/// `gap`.
std::span<const SessionEvent> current_segment(
    std::span<const SessionEvent> events,
    std::chrono::milliseconds gap = kSessionInactivity);

/// Builds the session model from prior events. Keyword and category counts
/// come from viewed documents and from documents shown in result lists;
/// when the largest count is 1 the seed document (explicit, or else the
/// last viewed document) supplies the context at rank 1.
SessionContext build_session_context(
    std::span<const SessionEvent> events, const CorpusIndex& index,
    std::optional<std::string_view> seed_doc_id = std::nullopt);

/// Keeps the top entries of a count table, max-normalized. Ordering is
/// count descending then term ascending.
std::vector<WeightedTerm> top_ranked(const std::map<std::string, std::size_t>& counts,
                                     std::size_t limit = kContextFeatureLimit);

struct RecordAck {
  bool accepted = false;
  bool duplicate = false;
  bool created_session = false;
  bool monotonicity_violation = false;
  std::string error;
};

/// In-memory per-session event log mirrored to an append-only transaction
/// log stream. Writes are serialized per session; distinct sessions proceed
/// in parallel.
class EventStore {
 public:
  explicit EventStore(std::ostream* durable_log = nullptr);
  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  /// Creates the session with `arm` unless it exists; returns the arm the
  /// session is bound to.
  ExperimentArm ensure_session(const std::string& session_id, ExperimentArm arm);
  std::optional<ExperimentArm> arm_of(std::string_view session_id) const;

  RecordAck record(SessionEvent event);

  /// Snapshot of a session's events in arrival order.
  std::vector<SessionEvent> events(std::string_view session_id) const;
  /// Every stored event, sorted by (session_id, timestamp, arrival).
  std::vector<SessionEvent> all_events() const;
  std::vector<std::string> diagnostics() const;
  std::size_t session_count() const;

 private:
  struct SessionLog {
    mutable std::mutex mutex;
    ExperimentArm arm;
    std::vector<SessionEvent> events;
    std::unordered_set<std::string> event_ids;
  };

  SessionLog* find(std::string_view session_id) const;
  std::pair<SessionLog*, bool> find_or_create(const std::string& session_id,
                                              ExperimentArm arm);
  void note(std::string message);

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<SessionLog>, std::less<>> sessions_;

  std::mutex log_mutex_;
  std::ostream* durable_log_;

  mutable std::mutex diag_mutex_;
  std::vector<std::string> diagnostics_;
};

}  // namespace ctxbrowse
