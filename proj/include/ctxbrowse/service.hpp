#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ctxbrowse/corpus_index.hpp"
#include "ctxbrowse/ranking.hpp"
#include "ctxbrowse/session.hpp"

namespace ctxbrowse {

/// Error carrying the HTTP status the facade should answer with.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

inline constexpr std::size_t kDefaultPageSize = 20;

struct BrowseRequest {
  std::string session_id;
  StratagemKind kind = StratagemKind::keyword;
  std::string value;
  std::string seed_doc_id;
  std::size_t page = 1;
  std::size_t page_size = kDefaultPageSize;
  std::optional<int> year_from;
  std::optional<int> year_to;
  std::optional<std::string> language;
  std::optional<TimestampMs> timestamp;  // client clock; server clock otherwise

  static BrowseRequest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DocSummary {
  std::string doc_id;
  std::string title;
  std::vector<std::string> authors;
  std::optional<int> year;
  std::optional<std::string> journal;
  std::string snippet;
};

/// Page of results. The experiment arm is deliberately not part of it.
struct BrowseResponse {
  std::vector<DocSummary> results;
  std::size_t total = 0;
  std::size_t page = 1;
  std::size_t page_size = kDefaultPageSize;

  nlohmann::json to_json() const;
  static BrowseResponse from_json(const nlohmann::json& j);
};

struct StratagemLink {
  StratagemKind kind;
  std::string value;
};

struct DocumentView {
  const DocumentRecord* doc = nullptr;
  std::vector<StratagemLink> stratagems;

  nlohmann::json to_json(const std::string& session_id) const;
};

/// Clickable browsing activities of a document: each keyword, author,
/// category, and the journal if present.
std::vector<StratagemLink> stratagem_links(const DocumentRecord& doc);

/// Free-text TF-IDF search over title and abstract; ties by doc_id.
RankedList search_free_text(std::string_view text, const CorpusIndex& index);

/// Runs a stratagem browse with the ranking function of `arm`. `history`
/// is the session's prior events (used by the session-context arm).
RankedList rank_for_arm(ExperimentArm arm, const StratagemQuery& query,
                        std::span<const SessionEvent> history,
                        const CorpusIndex& index, const Thesaurus& thesaurus,
                        const RankingConfig& config);

using Clock = std::function<TimestampMs()>;
TimestampMs system_clock_ms();

/// Request handling behind the HTTP facade; the simulator drives it
/// in-process. Thread-safe: the index is shared read-only and the event
/// store serializes per session.
class SearchService {
 public:
  struct Options {
    std::uint64_t seed = 0;
    std::optional<ExperimentArm> forced_arm;
    Clock clock = system_clock_ms;
  };

  SearchService(std::shared_ptr<const CorpusIndex> index, Thesaurus thesaurus,
                RankingConfig config, EventStore& store, Options options);

  /// Existing arm of the session, or a fresh assignment.
  ExperimentArm session_arm(const std::string& session_id);

  BrowseResponse search(const std::string& session_id, const std::string& text,
                        std::size_t page = 1, std::size_t page_size = kDefaultPageSize,
                        std::optional<TimestampMs> timestamp = std::nullopt);

  DocumentView view_document(const std::string& session_id, const std::string& doc_id,
                             std::optional<TimestampMs> timestamp = std::nullopt);

  BrowseResponse browse(const BrowseRequest& request);

  /// Ingests a client event (click or signal, or any other type). The arm
  /// is taken from the session, never from the client.
  RecordAck post_event(const nlohmann::json& body);

  const CorpusIndex& index() const { return *index_; }
  EventStore& store() { return store_; }

 private:
  TimestampMs stamp(std::optional<TimestampMs> ts) const;
  void log(SessionEvent event);

  std::shared_ptr<const CorpusIndex> index_;
  Thesaurus thesaurus_;
  RankingConfig config_;
  EventStore& store_;
  Options options_;
};

/// Service settings from a JSON file, then environment overrides
/// (CTXBROWSE_PORT, CTXBROWSE_HOST, CTXBROWSE_CORPUS, CTXBROWSE_THESAURUS,
/// CTXBROWSE_RANKING, CTXBROWSE_LOG, CTXBROWSE_SEED, CTXBROWSE_ARM_FORCE).
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> thesaurus;
  std::optional<std::filesystem::path> ranking;
  std::optional<std::filesystem::path> transaction_log;
  std::uint64_t seed = 0;
  std::optional<ExperimentArm> forced_arm;

  static ServiceConfig from_json(const nlohmann::json& j,
                                 const std::filesystem::path& base_dir = {});
  static ServiceConfig load(const std::filesystem::path& path);
  /// Throws std::invalid_argument on an unparsable override.
  void apply_environment();
  void validate() const;
};

class HttpServer {
 public:
  explicit HttpServer(SearchService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ctxbrowse
