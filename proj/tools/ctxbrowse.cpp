// Operator entry point: index, serve, simulate, evaluate.

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctxbrowse/corpus_index.hpp"
#include "ctxbrowse/metrics.hpp"
#include "ctxbrowse/service.hpp"
#include "ctxbrowse/simlab.hpp"

namespace {

using namespace ctxbrowse;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kInternalError = 4 };

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

// ------------------------------------------------------------------ index

struct IndexArgs {
  std::string corpus;
  std::string out;
};

int run_index(const IndexArgs& args) {
  const IngestResult result = ingest_corpus_file(args.corpus);
  const CorpusIndex& index = result.index;

  json fields = json::object();
  for (const FieldKind f : kAllFields) fields[std::string(field_name(f))] = index.term_count(f);
  json diagnostics = json::array();
  for (const auto& d : result.diagnostics) {
    diagnostics.push_back({{"line", d.line}, {"message", d.message}});
    std::cerr << args.corpus << ":" << d.line << ": " << d.message << '\n';
  }
  const json summary = {{"corpus", args.corpus},
                        {"doc_count", index.doc_count()},
                        {"postings", index.posting_count()},
                        {"terms", fields},
                        {"rejected_lines", result.diagnostics.size()},
                        {"diagnostics", diagnostics}};

  std::cout << "documents: " << index.doc_count() << "\npostings:  " << index.posting_count()
            << "\nterms per field:\n";
  for (const FieldKind f : kAllFields) {
    std::cout << "  " << field_name(f) << ": " << index.term_count(f) << '\n';
  }
  if (!result.diagnostics.empty()) {
    std::cout << "rejected lines: " << result.diagnostics.size() << '\n';
  }
  if (index.doc_count() == 0) std::cerr << "warning: corpus contains no documents (doc_count 0)\n";
  if (!args.out.empty()) open_output(args.out) << summary.dump(2) << '\n';
  return kOk;
}

// ------------------------------------------------------------------ serve

struct ServeArgs {
  std::string config;
  int port = -1;
  std::optional<std::uint64_t> seed;
  std::string arm_force;
};

HttpServer* g_server = nullptr;

extern "C" void handle_stop(int) {
  if (g_server != nullptr) g_server->stop();
}

int run_serve(const ServeArgs& args) {
  ServiceConfig cfg;
  try {
    cfg = args.config.empty() ? ServiceConfig{} : ServiceConfig::load(args.config);
    cfg.apply_environment();
    if (args.port >= 0) cfg.port = args.port;
    if (args.seed) cfg.seed = *args.seed;
    if (!args.arm_force.empty()) {
      cfg.forced_arm = parse_arm(args.arm_force);
      if (!cfg.forced_arm) throw std::invalid_argument("unknown arm: " + args.arm_force);
    }
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }

  auto index = std::make_shared<const CorpusIndex>(ingest_corpus_file(cfg.corpus).index);
  const Thesaurus thesaurus = cfg.thesaurus ? Thesaurus::load_file(*cfg.thesaurus) : Thesaurus{};
  const RankingConfig ranking = cfg.ranking ? RankingConfig::load_file(*cfg.ranking) : RankingConfig{};

  std::unique_ptr<std::ofstream> log;
  if (cfg.transaction_log) {
    log = std::make_unique<std::ofstream>(*cfg.transaction_log, std::ios::app);
    if (!*log) throw DataError("cannot open transaction log " + cfg.transaction_log->string());
  }
  EventStore store(log.get());
  SearchService service(index, thesaurus, ranking, store,
                        {cfg.seed, cfg.forced_arm, system_clock_ms});
  HttpServer server(service);
  const int port = server.bind(cfg.host, cfg.port);
  if (port < 0) throw DataError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));

  g_server = &server;
  std::signal(SIGINT, handle_stop);
  std::signal(SIGTERM, handle_stop);
  std::cout << "listening on " << cfg.host << ":" << port << " (" << index->doc_count()
            << " documents";
  if (cfg.forced_arm) std::cout << ", arm forced to " << arm_label(*cfg.forced_arm);
  std::cout << ")" << std::endl;
  server.listen();
  g_server = nullptr;
  return kOk;
}

// --------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sessions;
  std::string out_log;
  std::string out_report;
  std::string out_table;
  std::string out_corpus;
  std::string out_labels;
};

int run_simulate(const SimulateArgs& args) {
  simlab::ExperimentConfig cfg;
  try {
    if (!args.config.empty()) cfg = simlab::ExperimentConfig::load(args.config);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.sessions) cfg.sessions = *args.sessions;

  if (!args.out_corpus.empty() || !args.out_labels.empty()) {
    const auto corpus = simlab::generate_corpus(cfg.corpus);
    if (!args.out_corpus.empty()) {
      auto out = open_output(args.out_corpus);
      corpus.write_corpus(out);
    }
    if (!args.out_labels.empty()) {
      auto out = open_output(args.out_labels);
      corpus.write_labels(out);
    }
  }

  const auto result = simlab::run_experiment(cfg);
  {
    auto out = open_output(args.out_log);
    write_event_log(out, result.events);
  }
  open_output(args.out_report) << report_to_json(result.report).dump(2) << '\n';
  const std::string table = report_to_table(result.report);
  if (!args.out_table.empty()) open_output(args.out_table) << table;
  std::cout << "sessions: " << cfg.sessions << ", documents: " << result.doc_count
            << ", events: " << result.events.size() << "\n\n"
            << table;
  return kOk;
}

// --------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string log;
  std::string out_json;
  std::string out_table;
  bool history_bins = false;
  std::size_t max_rank = kDefaultMaxRank;
  std::size_t min_result_size = kFirstPageSize;
};

int run_evaluate(const EvaluateArgs& args) {
  std::ifstream in(args.log);
  if (!in) throw DataError("cannot open log " + args.log);
  const LogReadResult log = read_event_log(in);
  for (const auto& d : log.diagnostics) std::cerr << args.log << ": " << d << '\n';

  MetricReport report = compute_report(log.events, {args.max_rank, args.min_result_size});
  report.diagnostics = log.diagnostics;
  open_output(args.out_json) << report_to_json(report).dump(2) << '\n';
  const std::string table = report_to_table(report, args.history_bins);
  if (!args.out_table.empty()) open_output(args.out_table) << table;
  std::cout << table;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual stratagem browsing: index, serve, simulate, evaluate"};
  app.require_subcommand(1);

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "Validate a corpus and report index statistics");
  index_cmd->add_option("corpus", index_args.corpus, "Corpus file (one JSON record per line)")
      ->required();
  index_cmd->add_option("-o,--out", index_args.out, "Write the summary as JSON");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("-c,--config", serve_args.config, "Service config (JSON)");
  serve_cmd->add_option("-p,--port", serve_args.port, "Port (0 = any free port)");
  serve_cmd->add_option("--seed", serve_args.seed, "Arm assignment seed");
  serve_cmd->add_option("--arm-force", serve_args.arm_force, "Assign every session to A, B or C");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulated A/B/C experiment");
  sim_cmd->add_option("-c,--config", sim_args.config, "Experiment config (JSON)");
  sim_cmd->add_option("--seed", sim_args.seed, "Override the experiment seed");
  sim_cmd->add_option("-n,--sessions", sim_args.sessions, "Override the session count");
  sim_cmd->add_option("--out-log", sim_args.out_log, "Transaction log output")->required();
  sim_cmd->add_option("--out-report", sim_args.out_report, "Metric report output (JSON)")
      ->required();
  sim_cmd->add_option("--out-table", sim_args.out_table, "Metric tables output (text)");
  sim_cmd->add_option("--out-corpus", sim_args.out_corpus, "Also write the generated corpus");
  sim_cmd->add_option("--out-labels", sim_args.out_labels, "Also write the topic labels sidecar");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compute metrics from a transaction log");
  eval_cmd->add_option("log", eval_args.log, "Transaction log")->required();
  eval_cmd->add_option("--out-json", eval_args.out_json, "Metric report output (JSON)")->required();
  eval_cmd->add_option("--out-table", eval_args.out_table, "Metric tables output (text)");
  eval_cmd->add_flag("--history-bins", eval_args.history_bins, "Include MFR per history size");
  eval_cmd->add_option("--max-rank", eval_args.max_rank, "Ignore first clicks beyond this rank");
  eval_cmd->add_option("--min-result-size", eval_args.min_result_size,
                       "Result-set size threshold of the second MFR column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*index_cmd) return run_index(index_args);
    if (*serve_cmd) return run_serve(serve_args);
    if (*sim_cmd) return run_simulate(sim_args);
    if (*eval_cmd) return run_evaluate(eval_args);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kUsage;
}
