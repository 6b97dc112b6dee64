// perflab command-line front end: testbed server, experiments, sweeps and
// reports.

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "perflab/booking.hpp"
#include "perflab/capabilities.hpp"
#include "perflab/conductor.hpp"
#include "perflab/server.hpp"

namespace fs = std::filesystem;
using namespace perflab;
using conductor::BenchType;
using conductor::ExperimentConfig;
using conductor::ExperimentResult;

namespace {

constexpr int kExitIncomplete = 2;

struct DatasetFlags {
  booking::DatasetConfig config;

  void add(CLI::App& app) {
    app.add_option("--airports", config.airport_count, "Number of airports")->capture_default_str();
    app.add_option("--flights", config.flight_count, "Number of flights")->capture_default_str();
    app.add_option("--seats", config.seats_per_flight, "Seats per flight")->capture_default_str();
    app.add_option("--users", config.user_count, "Number of users")->capture_default_str();
    app.add_option("--dataset-seed", config.rng_seed, "Dataset seed")->capture_default_str();
  }
};

/// Experiment flags; only options given on the command line override the
/// profile.
struct ExperimentFlags {
  std::string profile = "desk";
  std::string issue;
  std::uint32_t severity = 0;
  std::string out;
  std::uint64_t seed = 1;
  int repeat = 1;
  bool in_process = false;

  conductor::RmitConfig rmit;
  load::WorkloadConfig workload = load::WorkloadConfig::desk();
  conductor::TrimConfig trim;
  stats::StatsConfig stats;
  DatasetFlags dataset;
  std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> overrides;

  template <typename T>
  void add_override(CLI::App& app, const std::string& name, T& field, const std::string& help,
                    std::function<void(ExperimentConfig&, const T&)> apply) {
    CLI::Option* opt = app.add_option(name, field, help);
    overrides.emplace_back(opt, [apply, &field](ExperimentConfig& c) { apply(c, field); });
  }

  void add(CLI::App& app, bool with_severity, bool micro_flags, bool app_flags) {
    app.add_option("--issue", issue, "Issue kind: basic-auth, clean-path, request-id (or A, B, C)")->required();
    if (with_severity) app.add_option("--severity", severity, "Issue severity")->capture_default_str();
    app.add_option("--profile", profile, "Parameter profile: desk or paper")->capture_default_str();
    app.add_option("--out", out, "Output directory for raw data and reports");
    app.add_option("--seed", seed, "Experiment seed")->capture_default_str();
    app.add_option("--repeat", repeat, "Repetitions, written to rep-<k> subdirectories")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_flag("--in-process", in_process, "Run instances and services inside this process");
    if (micro_flags) {
      add_override<int>(app, "--instance-runs", rmit.instance_runs, "RMIT instance runs",
                        [](auto& c, const int& v) { c.rmit.instance_runs = v; });
      add_override<int>(app, "--suite-runs", rmit.suite_runs, "RMIT suite runs per instance",
                        [](auto& c, const int& v) { c.rmit.suite_runs = v; });
      add_override<int>(app, "--iterations", rmit.iterations, "Iterations per benchmark and version",
                        [](auto& c, const int& v) { c.rmit.iterations = v; });
      add_override<double>(app, "--budget", rmit.budget_s, "Seconds per iteration",
                           [](auto& c, const double& v) { c.rmit.budget_s = v; });
    }
    if (app_flags) {
      add_override<int>(app, "--s1-vus", workload.s1_vus, "Flight-search VUs per version",
                        [](auto& c, const int& v) { c.workload.s1_vus = v; });
      add_override<int>(app, "--s1-iterations", workload.s1_iterations, "Iterations per flight-search VU",
                        [](auto& c, const int& v) { c.workload.s1_iterations = v; });
      add_override<int>(app, "--s2-vus", workload.s2_vus, "Booking VUs per version",
                        [](auto& c, const int& v) { c.workload.s2_vus = v; });
      add_override<int>(app, "--s2-iterations", workload.s2_iterations, "Iterations per booking VU",
                        [](auto& c, const int& v) { c.workload.s2_iterations = v; });
      add_override<double>(app, "--warmup", trim.warmup_s, "Seconds trimmed from the start",
                           [](auto& c, const double& v) { c.trim.warmup_s = v; });
      add_override<double>(app, "--cooldown", trim.cooldown_s, "Seconds trimmed before the first version ends",
                           [](auto& c, const double& v) { c.trim.cooldown_s = v; });
    }
    add_override<int>(app, "--bootstrap", stats.bootstrap_iterations, "Bootstrap iterations",
                      [](auto& c, const int& v) { c.stats.bootstrap_iterations = v; });
    add_override<double>(app, "--level", stats.level, "Confidence level",
                         [](auto& c, const double& v) { c.stats.level = v; });
    add_override<double>(app, "--threshold", stats.small_threshold, "Small-change threshold",
                         [](auto& c, const double& v) { c.stats.small_threshold = v; });
    dataset.add(app);
  }

  [[nodiscard]] ExperimentConfig build(BenchType bench) const {
    ExperimentConfig config = ExperimentConfig::for_profile(
        conductor::parse_profile(profile), IssueConfig{parse_issue_kind(issue), severity}, bench);
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(config);
    }
    config.dataset = dataset.config;
    config.seed = seed;
    config.workload.seed = seed;
    config.output_dir = out;
    config.validate();
    return config;
  }

  [[nodiscard]] conductor::Launchers launchers() const {
    if (in_process) return conductor::in_process_launchers();
    return conductor::subprocess_launchers(fs::read_symlink("/proc/self/exe"));
  }
};

/// Config for repetition k (0-based) of a base config.
ExperimentConfig repetition(const ExperimentConfig& base, int k, int repeat) {
  if (repeat <= 1) return base;
  ExperimentConfig c = base;
  c.seed = base.seed + static_cast<std::uint64_t>(k);
  c.workload.seed = c.seed;
  if (!base.output_dir.empty()) c.output_dir = (fs::path(base.output_dir) / ("rep-" + std::to_string(k + 1))).string();
  return c;
}

std::string fixed(double value, int precision) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << value;
  return out.str();
}

void print_result(const ExperimentResult& result, std::ostream& out) {
  const auto& c = result.config;
  out << to_string(c.bench) << " experiment: " << to_string(c.issue.kind) << " severity " << c.issue.severity
      << ", seed " << c.seed << '\n';
  out << std::left << std::setw(25) << "target" << std::setw(10) << "r" << std::setw(24) << "99% CI"
      << std::setw(22) << "class" << "n1/n2\n";
  for (const auto& r : result.reports) {
    out << std::left << std::setw(25) << r.target << std::setw(10) << fixed(r.ratio, 4) << std::setw(24)
        << ("[" + fixed(r.ci.lo, 4) + ", " + fixed(r.ci.hi, 4) + "]") << std::setw(22) << stats::to_string(r.change)
        << r.n1 << "/" << r.n2 << '\n';
  }
  for (const auto& t : result.failed_targets) out << std::left << std::setw(25) << t << "no result\n";
  if (result.failed_samples > 0) out << "failed samples: " << result.failed_samples << '\n';
  if (result.transport_failures > 0) out << "transport failures: " << result.transport_failures << '\n';
  if (!result.error.empty()) out << "error: " << result.error << '\n';
  if (!c.output_dir.empty()) out << "results in " << c.output_dir << '\n';
}

int run_experiments(const ExperimentFlags& flags, BenchType bench) {
  const ExperimentConfig base = flags.build(bench);
  const auto launchers = flags.launchers();
  bool complete = true;
  for (int k = 0; k < flags.repeat; ++k) {
    auto result = conductor::run_experiment(repetition(base, k, flags.repeat), launchers);
    print_result(result, std::cout);
    complete = complete && result.complete();
  }
  return complete ? 0 : kExitIncomplete;
}

std::vector<fs::path> experiment_dirs(const fs::path& root) {
  std::vector<fs::path> dirs;
  if (fs::exists(root / conductor::kManifestFile)) dirs.push_back(root);
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == conductor::kManifestFile &&
          entry.path().parent_path() != root) {
        dirs.push_back(entry.path().parent_path());
      }
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

// ---------------------------------------------------------------------------
// serve

int cmd_serve(const std::string& host, int port, const std::string& port_file, const std::string& issue_text,
              std::uint32_t severity, bool severity_given, const booking::DatasetConfig& dataset) {
  IssueConfig issue = issue_config_from_env();
  if (!issue_text.empty()) issue.kind = parse_issue_kind(issue_text);
  if (severity_given) issue.severity = severity;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  booking::BookingService service(booking::seed_store(dataset), issue);
  HttpServer server(service, host, port);
  server.start();
  if (!port_file.empty()) {
    const fs::path tmp = port_file + ".tmp";
    {
      std::ofstream out(tmp);
      out << server.port() << '\n';
    }
    fs::rename(tmp, port_file);
  }
  std::cerr << "serving " << to_string(issue.kind) << " severity " << issue.severity << " on " << host << ":"
            << server.port() << std::endl;

  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const fs::path& dir, const std::string& rciw_csv) {
  auto dirs = experiment_dirs(dir);
  if (dirs.empty()) {
    std::cerr << "no experiments under " << dir << '\n';
    return 1;
  }
  std::map<std::pair<BenchType, int>, stats::DetectionMatrix> matrices;
  std::vector<stats::RciwStat> rciw;
  for (const auto& d : dirs) {
    std::vector<std::string> warnings;
    auto result = conductor::load_results(d, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (result.config.issue.kind == IssueKind::None) continue;
    // Repetitions of the same cell go to separate matrices.
    int slot = 0;
    while (true) {
      auto& m = matrices[{result.config.bench, slot}];
      const auto targets = conductor::expected_targets(result.config.bench);
      bool taken = m.at(result.config.issue.kind, result.config.issue.severity, targets.front()).has_value() ||
                   m.explicitly_absent(result.config.issue.kind, result.config.issue.severity, targets.front());
      if (!taken) {
        conductor::add_to_matrix(m, result);
        break;
      }
      ++slot;
    }
    rciw.insert(rciw.end(), result.rciw.begin(), result.rciw.end());
  }

  for (const auto& [key, matrix] : matrices) {
    std::cout << "== " << to_string(key.first) << " benchmarks";
    if (matrices.count({key.first, 1}) > 0) std::cout << ", repetition " << key.second + 1;
    std::cout << "\n";
    for (IssueKind issue : matrix.issues()) std::cout << conductor::render_detection_table(matrix, issue) << '\n';
  }

  std::ostringstream csv;
  csv << "target,version,count,min,q1,median,q3,max\n";
  for (const auto& s : conductor::summarize_rciw(rciw)) {
    csv << s.target << ',' << s.version << ',' << s.count << ',' << s.min << ',' << s.q1 << ',' << s.median << ','
        << s.q3 << ',' << s.max << '\n';
  }
  if (rciw_csv.empty()) {
    std::cout << "== RCIW summary\n" << csv.str();
  } else {
    std::ofstream(rciw_csv) << csv.str();
    std::cout << "RCIW summary written to " << rciw_csv << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perflab: performance-issue testbed and benchmark conductor"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the booking service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string port_file;
  std::string serve_issue;
  std::uint32_t serve_severity = 0;
  DatasetFlags serve_dataset;
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "Listen port, 0 for an ephemeral port")->capture_default_str();
  serve->add_option("--port-file", port_file, "Write the bound port to this file");
  serve->add_option("--issue", serve_issue, "Issue kind; defaults to $ISSUE_KIND or none");
  auto* severity_opt = serve->add_option("--severity", serve_severity, "Issue severity; defaults to $ISSUE_SEVERITY");
  serve_dataset.add(*serve);

  // micro / app
  auto* micro = app.add_subcommand("micro", "Run one RMIT microbenchmark experiment");
  ExperimentFlags micro_flags;
  micro_flags.add(*micro, true, true, false);
  auto* app_cmd = app.add_subcommand("app", "Run one duet application-benchmark experiment");
  ExperimentFlags app_flags;
  app_flags.add(*app_cmd, true, false, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a severity sweep and print the detection table");
  ExperimentFlags sweep_flags;
  std::string sweep_bench = "micro";
  std::vector<std::uint32_t> levels = default_severity_levels();
  sweep_flags.add(*sweep, false, true, true);
  sweep->add_option("--bench", sweep_bench, "Benchmark type: micro or app")->capture_default_str();
  sweep->add_option("--levels", levels, "Severity levels, ascending")->delimiter(',');

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Re-run the statistics on persisted raw data");
  std::string analyze_dir;
  int analyze_bootstrap = 0;
  double analyze_level = 0;
  double analyze_threshold = -1;
  analyze->add_option("dir", analyze_dir, "Experiment or sweep directory")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--bootstrap", analyze_bootstrap, "Override bootstrap iterations");
  analyze->add_option("--level", analyze_level, "Override confidence level");
  analyze->add_option("--threshold", analyze_threshold, "Override small-change threshold");

  // report
  auto* report = app.add_subcommand("report", "Render detection tables and RCIW summaries");
  std::string report_dir;
  std::string rciw_csv;
  report->add_option("dir", report_dir, "Directory containing experiments")->required()->check(CLI::ExistingDirectory);
  report->add_option("--rciw-csv", rciw_csv, "Write the RCIW summary to this CSV file");

  // micro-instance, used by the subprocess launcher
  auto* instance = app.add_subcommand("micro-instance", "");
  instance->group("");
  std::string instance_config;
  int instance_run = 0;
  std::string instance_out;
  instance->add_option("--config", instance_config)->required();
  instance->add_option("--instance", instance_run)->required();
  instance->add_option("--out", instance_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      return cmd_serve(host, port, port_file, serve_issue, serve_severity, severity_opt->count() > 0,
                       serve_dataset.config);
    }
    if (*micro) return run_experiments(micro_flags, BenchType::Micro);
    if (*app_cmd) return run_experiments(app_flags, BenchType::App);
    if (*sweep) {
      const ExperimentConfig base = sweep_flags.build(conductor::parse_bench_type(sweep_bench));
      const auto launchers = sweep_flags.launchers();
      bool complete = true;
      for (int k = 0; k < sweep_flags.repeat; ++k) {
        const auto config = repetition(base, k, sweep_flags.repeat);
        auto result = conductor::run_severity_sweep(config, levels, launchers);
        for (const auto& e : result.experiments) {
          if (!e.error.empty()) std::cerr << "severity " << e.config.issue.severity << ": " << e.error << '\n';
        }
        const std::string table = conductor::render_detection_table(result.matrix, config.issue.kind);
        std::cout << table;
        if (!config.output_dir.empty()) std::ofstream(fs::path(config.output_dir) / "table.txt") << table;
        complete = complete && result.complete();
      }
      return complete ? 0 : kExitIncomplete;
    }
    if (*analyze) {
      bool complete = true;
      for (const auto& d : experiment_dirs(analyze_dir)) {
        std::vector<std::string> warnings;
        auto result = conductor::load_results(d, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        if (analyze_bootstrap > 0) result.config.stats.bootstrap_iterations = analyze_bootstrap;
        if (analyze_level > 0) result.config.stats.level = analyze_level;
        if (analyze_threshold >= 0) result.config.stats.small_threshold = analyze_threshold;
        result.config.stats.validate();
        result.config.output_dir = d.string();
        conductor::analyze(result);
        conductor::persist_results(result, d);
        print_result(result, std::cout);
        complete = complete && result.complete();
      }
      return complete ? 0 : kExitIncomplete;
    }
    if (*report) return cmd_report(report_dir, rciw_csv);
    if (*instance) {
      std::ifstream in(instance_config);
      if (!in) throw std::runtime_error("cannot read " + instance_config);
      std::stringstream text;
      text << in.rdbuf();
      auto samples = conductor::run_micro_instance(conductor::config_from_json(text.str()), instance_run);
      conductor::write_samples(instance_out, samples);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
