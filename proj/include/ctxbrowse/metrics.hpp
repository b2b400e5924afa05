#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxbrowse/arm.hpp"
#include "ctxbrowse/session.hpp"

namespace ctxbrowse {

/// One stratagem browse reconstructed from the log, with the clicks made on
/// its result list.
struct StratagemRunRecord {
  std::string session_id;
  ExperimentArm arm = ExperimentArm::A_baseline;
  StratagemKind kind = StratagemKind::keyword;
  std::size_t result_set_size = 0;
  std::optional<std::size_t> first_clicked_rank;
  std::vector<std::size_t> clicked_ranks;  // in click order
  std::size_t history_size = 0;
  TimestampMs browse_timestamp = 0;
  std::optional<TimestampMs> first_click_timestamp;
  std::vector<std::string> result_doc_ids;  // every delivered page
};

/// Events grouped per session, each group in timestamp order (stable with
/// respect to input order). Groups are ordered by session_id.
std::vector<std::vector<SessionEvent>> group_sessions(
    std::span<const SessionEvent> events);

/// Pairs each browse_stratagem with the result list that follows it and the
/// clicks made before the next query, browse or search result list.
std::vector<StratagemRunRecord> reconstruct_runs(std::span<const SessionEvent> events);

inline constexpr std::size_t kDefaultMaxRank = 40;
inline constexpr std::size_t kFirstPageSize = 20;

struct MeanSummary {
  std::optional<double> mean;  // nullopt when n == 0
  std::optional<double> sd;    // sample SD; nullopt when n < 2
  std::size_t n = 0;
};

MeanSummary summarize(std::span<const double> values);

/// First-click ranks of the runs that count toward MFR.
std::vector<double> first_relevant_sample(std::span<const StratagemRunRecord> runs,
                                          std::size_t min_result_size = 1,
                                          std::size_t max_rank = kDefaultMaxRank);

MeanSummary mean_first_relevant(std::span<const StratagemRunRecord> runs,
                                std::size_t min_result_size = 1,
                                std::size_t max_rank = kDefaultMaxRank);

enum class UsefulnessScope { local, global };

inline constexpr std::size_t kMaxSignalsPerSession = 10;

struct UsefulnessCounts {
  std::array<std::size_t, 3> local{};
  std::array<std::size_t, 3> global{};
  std::size_t excluded_sessions = 0;  // more than kMaxSignalsPerSession signals
};

UsefulnessCounts usefulness(std::span<const SessionEvent> events);
std::array<std::size_t, 3> usefulness(std::span<const SessionEvent> events,
                                      UsefulnessScope scope);

inline constexpr double kDwellCapSeconds = 20.0 * 60.0;

/// Seconds from the first stratagem browse to the session's last event;
/// nullopt without a browse. Expects one session in timestamp order.
std::optional<double> dwell_time(std::span<const SessionEvent> session);

struct DwellSummary {
  MeanSummary seconds;
  std::size_t excluded = 0;  // sessions over the cap
};

struct HistoryBins {
  MeanSummary residual;   // history < 2
  MeanSummary early;      // [2, 5]
  MeanSummary middle;     // [6, 10]
  MeanSummary late;       // [11, inf)
};

enum class HistoryBin { residual, early, middle, late };
HistoryBin history_bin(std::size_t history);

HistoryBins segment_by_history(std::span<const StratagemRunRecord> runs,
                               std::size_t min_result_size = 1,
                               std::size_t max_rank = kDefaultMaxRank);

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of the first sample
  double z = 0.0;
  double p = 1.0;  // two-sided
  double r = 0.0;  // |z| / sqrt(n_a + n_b)
};

/// Normal approximation with tie and continuity correction. Throws
/// std::invalid_argument when either sample is empty.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct BonferroniResult {
  double threshold = 0.05;
  std::vector<bool> significant;
};

inline constexpr double kFamilyAlpha = 0.05;

/// Significant when p < alpha / m. Throws std::invalid_argument when m < 1.
BonferroniResult bonferroni(std::span<const double> p_values, std::size_t m,
                            double alpha = kFamilyAlpha);

struct ArmMetrics {
  std::size_t sessions = 0;
  std::size_t sessions_with_stratagem = 0;
  std::size_t stratagem_runs = 0;
  std::size_t stratagem_doc_views = 0;  // clicks on stratagem result lists
  std::size_t clicked_runs = 0;         // click-through count
  MeanSummary interactions;             // events per session with a stratagem
  DwellSummary dwell;
  MeanSummary mfr;
  MeanSummary mfr20;
  HistoryBins history;
  std::size_t local_usefulness = 0;
  std::size_t global_usefulness = 0;

  double click_through_rate() const {
    return stratagem_runs == 0 ? 0.0
                               : static_cast<double>(clicked_runs) /
                                     static_cast<double>(stratagem_runs);
  }
};

struct PairwiseTest {
  ExperimentArm first;
  ExperimentArm second;
  std::optional<MannWhitneyResult> result;  // nullopt if a sample is empty
  bool significant = false;
};

struct MetricReport {
  std::array<ArmMetrics, 3> arms;
  std::vector<PairwiseTest> mfr_tests;
  std::vector<PairwiseTest> mfr20_tests;
  double bonferroni_threshold = kFamilyAlpha / 3.0;
  std::size_t usefulness_excluded_sessions = 0;
  std::size_t total_events = 0;
  std::size_t max_rank = kDefaultMaxRank;
  std::vector<std::string> diagnostics;

  const ArmMetrics& arm(ExperimentArm a) const { return arms[arm_slot(a)]; }
};

struct ReportOptions {
  std::size_t max_rank = kDefaultMaxRank;
  std::size_t min_result_size_large = kFirstPageSize;
};

MetricReport compute_report(std::span<const SessionEvent> events,
                            const ReportOptions& options = {});

nlohmann::json report_to_json(const MetricReport& report);
/// Human-readable tables. History bins are included when requested.
std::string report_to_table(const MetricReport& report, bool history_bins = true);

}  // namespace ctxbrowse
