#include "ctxbrowse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ctxbrowse {

std::vector<std::vector<SessionEvent>> group_sessions(
    std::span<const SessionEvent> events) {
  std::map<std::string_view, std::vector<SessionEvent>> by_session;
  for (const auto& ev : events) by_session[ev.session_id].push_back(ev);

  std::vector<std::vector<SessionEvent>> out;
  out.reserve(by_session.size());
  for (auto& [id, list] : by_session) {
    std::stable_sort(list.begin(), list.end(),
                     [](const SessionEvent& a, const SessionEvent& b) {
                       return a.timestamp < b.timestamp;
                     });
    out.push_back(std::move(list));
  }
  return out;
}

namespace {

/// Walks one session and reports, for every event, the index of the run
/// whose result list is current at that point (if any).
struct RunSweep {
  std::vector<StratagemRunRecord> runs;
  std::vector<std::optional<std::size_t>> open_run;  // per event
};

RunSweep sweep_session(std::span<const SessionEvent> session) {
  RunSweep sweep;
  sweep.open_run.resize(session.size());
  std::optional<std::size_t> open;

  for (std::size_t i = 0; i < session.size(); ++i) {
    const SessionEvent& ev = session[i];
    if (const auto* browse = ev.as<BrowsePayload>()) {
      StratagemRunRecord run;
      run.session_id = ev.session_id;
      run.arm = ev.arm;
      run.kind = browse->query.kind;
      run.history_size = history_size(session, ev.timestamp);
      run.browse_timestamp = ev.timestamp;
      sweep.runs.push_back(std::move(run));
      open = sweep.runs.size() - 1;
    } else if (ev.as<QueryPayload>() != nullptr) {
      open.reset();
    } else if (const auto* results = ev.as<ResultsPayload>()) {
      if (results->origin == ResultOrigin::search) {
        open.reset();
      } else if (open) {
        auto& run = sweep.runs[*open];
        run.result_set_size = results->total;
        run.result_doc_ids.insert(run.result_doc_ids.end(),
                                  results->doc_ids.begin(),
                                  results->doc_ids.end());
      }
    } else if (const auto* click = ev.as<ClickPayload>()) {
      if (open) {
        auto& run = sweep.runs[*open];
        if (!run.first_clicked_rank) {
          run.first_clicked_rank = click->rank;
          run.first_click_timestamp = ev.timestamp;
        }
        run.clicked_ranks.push_back(click->rank);
      }
    }
    sweep.open_run[i] = open;
  }
  return sweep;
}

}  // namespace

std::vector<StratagemRunRecord> reconstruct_runs(std::span<const SessionEvent> events) {
  std::vector<StratagemRunRecord> out;
  for (const auto& session : group_sessions(events)) {
    auto sweep = sweep_session(session);
    out.insert(out.end(), std::make_move_iterator(sweep.runs.begin()),
               std::make_move_iterator(sweep.runs.end()));
  }
  return out;
}

MeanSummary summarize(std::span<const double> values) {
  MeanSummary s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (const double v : values) sum += v;
  const double mean = sum / static_cast<double>(s.n);
  s.mean = mean;
  if (s.n >= 2) {
    double sq = 0.0;
    for (const double v : values) sq += (v - mean) * (v - mean);
    s.sd = std::sqrt(sq / static_cast<double>(s.n - 1));
  }
  return s;
}

std::vector<double> first_relevant_sample(std::span<const StratagemRunRecord> runs,
                                          std::size_t min_result_size,
                                          std::size_t max_rank) {
  std::vector<double> sample;
  for (const auto& run : runs) {
    if (!run.first_clicked_rank) continue;
    if (*run.first_clicked_rank > max_rank) continue;
    if (run.result_set_size < min_result_size) continue;
    sample.push_back(static_cast<double>(*run.first_clicked_rank));
  }
  return sample;
}

MeanSummary mean_first_relevant(std::span<const StratagemRunRecord> runs,
                                std::size_t min_result_size, std::size_t max_rank) {
  return summarize(first_relevant_sample(runs, min_result_size, max_rank));
}

UsefulnessCounts usefulness(std::span<const SessionEvent> events) {
  UsefulnessCounts counts;
  for (const auto& session : group_sessions(events)) {
    const auto signals = std::count_if(
        session.begin(), session.end(),
        [](const SessionEvent& e) { return e.type() == EventType::signal; });
    if (static_cast<std::size_t>(signals) > kMaxSignalsPerSession) {
      ++counts.excluded_sessions;
      continue;
    }
    const RunSweep sweep = sweep_session(session);
    const std::size_t slot = arm_slot(session.front().arm);
    bool after_first_browse = false;
    for (std::size_t i = 0; i < session.size(); ++i) {
      const SessionEvent& ev = session[i];
      if (ev.type() == EventType::browse_stratagem) after_first_browse = true;
      const auto* signal = ev.as<SignalPayload>();
      if (signal == nullptr) continue;
      if (after_first_browse) ++counts.global[slot];
      if (const auto run = sweep.open_run[i]) {
        const auto& ids = sweep.runs[*run].result_doc_ids;
        if (std::find(ids.begin(), ids.end(), signal->doc_id) != ids.end()) {
          ++counts.local[slot];
        }
      }
    }
  }
  return counts;
}

std::array<std::size_t, 3> usefulness(std::span<const SessionEvent> events,
                                      UsefulnessScope scope) {
  const auto counts = usefulness(events);
  return scope == UsefulnessScope::local ? counts.local : counts.global;
}

std::optional<double> dwell_time(std::span<const SessionEvent> session) {
  const auto first = std::find_if(session.begin(), session.end(), [](const SessionEvent& e) {
    return e.type() == EventType::browse_stratagem;
  });
  if (first == session.end()) return std::nullopt;
  TimestampMs last = first->timestamp;
  for (const auto& ev : session) last = std::max(last, ev.timestamp);
  return static_cast<double>(last - first->timestamp) / 1000.0;
}

HistoryBin history_bin(std::size_t history) {
  if (history < 2) return HistoryBin::residual;
  if (history <= 5) return HistoryBin::early;
  if (history <= 10) return HistoryBin::middle;
  return HistoryBin::late;
}

HistoryBins segment_by_history(std::span<const StratagemRunRecord> runs,
                               std::size_t min_result_size, std::size_t max_rank) {
  std::array<std::vector<StratagemRunRecord>, 4> bins;
  for (const auto& run : runs) {
    bins[static_cast<std::size_t>(history_bin(run.history_size))].push_back(run);
  }
  HistoryBins out;
  out.residual = mean_first_relevant(bins[0], min_result_size, max_rank);
  out.early = mean_first_relevant(bins[1], min_result_size, max_rank);
  out.middle = mean_first_relevant(bins[2], min_result_size, max_rank);
  out.late = mean_first_relevant(bins[3], min_result_size, max_rank);
  return out;
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("mann_whitney_u needs two non-empty samples");
  }
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const std::size_t n = na + nb;

  struct Obs {
    double value;
    bool first;
  };
  std::vector<Obs> pooled;
  pooled.reserve(n);
  for (const double v : a) pooled.push_back({v, true});
  for (const double v : b) pooled.push_back({v, false});
  std::sort(pooled.begin(), pooled.end(),
            [](const Obs& x, const Obs& y) { return x.value < y.value; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].value == pooled[i].value) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].first) rank_sum_a += midrank;
    }
    i = j;
  }

  const double dna = static_cast<double>(na);
  const double dnb = static_cast<double>(nb);
  const double dn = static_cast<double>(n);

  MannWhitneyResult out;
  out.u = rank_sum_a - dna * (dna + 1.0) / 2.0;
  const double mu = dna * dnb / 2.0;
  const double variance = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (variance <= 0.0) return out;

  const double deviation = std::max(std::abs(out.u - mu) - 0.5, 0.0);
  const double z = deviation / std::sqrt(variance);
  out.z = out.u < mu ? -z : z;
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  out.r = z / std::sqrt(dn);
  return out;
}

BonferroniResult bonferroni(std::span<const double> p_values, std::size_t m, double alpha) {
  if (m < 1) throw std::invalid_argument("bonferroni needs m >= 1");
  BonferroniResult out;
  out.threshold = alpha / static_cast<double>(m);
  for (const double p : p_values) out.significant.push_back(p < out.threshold);
  return out;
}

// ------------------------------------------------------------------ report

MetricReport compute_report(std::span<const SessionEvent> events,
                            const ReportOptions& options) {
  MetricReport report;
  report.total_events = events.size();
  report.max_rank = options.max_rank;

  const auto sessions = group_sessions(events);
  std::array<std::vector<double>, 3> interactions;
  std::array<std::vector<double>, 3> dwell;
  for (const auto& session : sessions) {
    auto& arm = report.arms[arm_slot(session.front().arm)];
    ++arm.sessions;
    const auto seconds = dwell_time(session);
    if (!seconds) continue;
    ++arm.sessions_with_stratagem;
    interactions[arm_slot(session.front().arm)].push_back(
        static_cast<double>(session.size()));
    if (*seconds > kDwellCapSeconds) {
      ++arm.dwell.excluded;
    } else {
      dwell[arm_slot(session.front().arm)].push_back(*seconds);
    }
  }

  const auto runs = reconstruct_runs(events);
  std::array<std::vector<StratagemRunRecord>, 3> runs_by_arm;
  for (const auto& run : runs) runs_by_arm[arm_slot(run.arm)].push_back(run);

  const auto useful = usefulness(events);
  report.usefulness_excluded_sessions = useful.excluded_sessions;

  std::array<std::vector<double>, 3> mfr_samples;
  std::array<std::vector<double>, 3> mfr20_samples;
  for (const auto a : kAllArms) {
    const std::size_t s = arm_slot(a);
    auto& m = report.arms[s];
    const auto& arm_runs = runs_by_arm[s];
    m.stratagem_runs = arm_runs.size();
    for (const auto& run : arm_runs) {
      m.stratagem_doc_views += run.clicked_ranks.size();
      if (run.first_clicked_rank) ++m.clicked_runs;
    }
    m.interactions = summarize(interactions[s]);
    m.dwell.seconds = summarize(dwell[s]);
    mfr_samples[s] = first_relevant_sample(arm_runs, 1, options.max_rank);
    mfr20_samples[s] =
        first_relevant_sample(arm_runs, options.min_result_size_large, options.max_rank);
    m.mfr = summarize(mfr_samples[s]);
    m.mfr20 = summarize(mfr20_samples[s]);
    m.history = segment_by_history(arm_runs, 1, options.max_rank);
    m.local_usefulness = useful.local[s];
    m.global_usefulness = useful.global[s];
  }

  constexpr std::array<std::pair<ExperimentArm, ExperimentArm>, 3> kPairs = {{
      {ExperimentArm::A_baseline, ExperimentArm::B_similarity},
      {ExperimentArm::A_baseline, ExperimentArm::C_session_context},
      {ExperimentArm::B_similarity, ExperimentArm::C_session_context},
  }};
  report.bonferroni_threshold = kFamilyAlpha / static_cast<double>(kPairs.size());
  auto run_tests = [&](const std::array<std::vector<double>, 3>& samples) {
    std::vector<PairwiseTest> tests;
    for (const auto& [x, y] : kPairs) {
      PairwiseTest t{x, y, std::nullopt, false};
      const auto& sx = samples[arm_slot(x)];
      const auto& sy = samples[arm_slot(y)];
      if (!sx.empty() && !sy.empty()) {
        t.result = mann_whitney_u(sx, sy);
        const double p[] = {t.result->p};
        t.significant = bonferroni(p, kPairs.size()).significant.front();
      }
      tests.push_back(t);
    }
    return tests;
  };
  report.mfr_tests = run_tests(mfr_samples);
  report.mfr20_tests = run_tests(mfr20_samples);
  return report;
}

namespace {

nlohmann::json summary_json(const MeanSummary& s) {
  return {{"mean", s.mean ? nlohmann::json(*s.mean) : nlohmann::json(nullptr)},
          {"sd", s.sd ? nlohmann::json(*s.sd) : nlohmann::json(nullptr)},
          {"n", s.n}};
}

nlohmann::json tests_json(const std::vector<PairwiseTest>& tests) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tests) {
    nlohmann::json row = {
        {"pair", std::string(arm_label(t.first)) + "-" + std::string(arm_label(t.second))},
        {"significant", t.significant}};
    if (t.result) {
      row["u"] = t.result->u;
      row["z"] = t.result->z;
      row["p"] = t.result->p;
      row["r"] = t.result->r;
    } else {
      row["u"] = row["z"] = row["p"] = row["r"] = nullptr;
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string fmt(const std::optional<double>& v, int precision = 2) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

}  // namespace

nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json arms = nlohmann::json::object();
  for (const auto a : kAllArms) {
    const auto& m = report.arm(a);
    arms[std::string(arm_label(a))] = {
        {"name", std::string(arm_name(a))},
        {"sessions", m.sessions},
        {"sessions_with_stratagem", m.sessions_with_stratagem},
        {"stratagem_runs", m.stratagem_runs},
        {"stratagem_doc_views", m.stratagem_doc_views},
        {"click_through", m.clicked_runs},
        {"click_through_rate", m.click_through_rate()},
        {"interactions_per_session", summary_json(m.interactions)},
        {"dwell_time_s", summary_json(m.dwell.seconds)},
        {"dwell_excluded_sessions", m.dwell.excluded},
        {"mfr", summary_json(m.mfr)},
        {"mfr20", summary_json(m.mfr20)},
        {"mfr_by_history",
         {{"H<2", summary_json(m.history.residual)},
          {"H[2,5]", summary_json(m.history.early)},
          {"H[6,10]", summary_json(m.history.middle)},
          {"H[11,inf]", summary_json(m.history.late)}}},
        {"local_usefulness", m.local_usefulness},
        {"global_usefulness", m.global_usefulness},
    };
  }
  return {
      {"note", "N counts stratagem runs with a first click at rank <= max_rank"},
      {"max_rank", report.max_rank},
      {"total_events", report.total_events},
      {"bonferroni_threshold", report.bonferroni_threshold},
      {"usefulness_excluded_sessions", report.usefulness_excluded_sessions},
      {"arms", arms},
      {"tests", {{"mfr", tests_json(report.mfr_tests)},
                 {"mfr20", tests_json(report.mfr20_tests)}}},
      {"diagnostics", report.diagnostics},
  };
}

std::string report_to_table(const MetricReport& report, bool history_bins) {
  std::ostringstream os;
  os << "N counts stratagem runs (first click at rank <= " << report.max_rank << ")\n\n";

  os << std::left << std::setw(10) << "Approach" << std::right << std::setw(10)
     << "Sessions" << std::setw(12) << "Stratagems" << std::setw(12) << "DocViews"
     << std::setw(14) << "Interactions" << std::setw(12) << "Dwell(s)" << '\n';
  for (const auto a : kAllArms) {
    const auto& m = report.arm(a);
    os << std::left << std::setw(10) << arm_label(a) << std::right << std::setw(10)
       << m.sessions << std::setw(12) << m.stratagem_runs << std::setw(12)
       << m.stratagem_doc_views << std::setw(14) << fmt(m.interactions.mean)
       << std::setw(12) << fmt(m.dwell.seconds.mean) << '\n';
  }

  os << '\n' << std::left << std::setw(10) << "Approach" << std::right
     << std::setw(8) << "MFR" << std::setw(8) << "SD" << std::setw(8) << "N"
     << std::setw(10) << "MFR>=20" << std::setw(8) << "SD" << std::setw(8) << "N"
     << std::setw(10) << "Clicked" << '\n';
  for (const auto a : kAllArms) {
    const auto& m = report.arm(a);
    os << std::left << std::setw(10) << arm_label(a) << std::right << std::setw(8)
       << fmt(m.mfr.mean) << std::setw(8) << fmt(m.mfr.sd) << std::setw(8) << m.mfr.n
       << std::setw(10) << fmt(m.mfr20.mean) << std::setw(8) << fmt(m.mfr20.sd)
       << std::setw(8) << m.mfr20.n << std::setw(10) << m.clicked_runs << '\n';
  }

  if (history_bins) {
    os << '\n' << std::left << std::setw(10) << "Approach" << std::right
       << std::setw(13) << "H in[2,5]" << std::setw(13) << "H in[6,10]"
       << std::setw(13) << "H in[11,inf]" << '\n';
    for (const auto a : kAllArms) {
      const auto& h = report.arm(a).history;
      os << std::left << std::setw(10) << arm_label(a) << std::right << std::setw(13)
         << fmt(h.early.mean) << std::setw(13) << fmt(h.middle.mean) << std::setw(13)
         << fmt(h.late.mean) << '\n';
    }
  }

  os << '\n' << std::left << std::setw(10) << "Approach" << std::right
     << std::setw(10) << "Local" << std::setw(10) << "Global" << '\n';
  for (const auto a : kAllArms) {
    const auto& m = report.arm(a);
    os << std::left << std::setw(10) << arm_label(a) << std::right << std::setw(10)
       << m.local_usefulness << std::setw(10) << m.global_usefulness << '\n';
  }

  os << "\nMann-Whitney U on first-click ranks, Bonferroni p* = "
     << std::setprecision(4) << report.bonferroni_threshold << '\n';
  for (const auto* tests : {&report.mfr_tests, &report.mfr20_tests}) {
    const char* label = tests == &report.mfr_tests ? "MFR" : "MFR>=20";
    for (const auto& t : *tests) {
      os << "  " << std::left << std::setw(8) << label << arm_label(t.first) << " vs "
         << arm_label(t.second) << ": ";
      if (t.result) {
        os << "U=" << fmt(t.result->u, 1) << " p=" << fmt(t.result->p, 4)
           << " r=" << fmt(t.result->r, 3) << (t.significant ? " *" : "");
      } else {
        os << "n/a";
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace ctxbrowse
