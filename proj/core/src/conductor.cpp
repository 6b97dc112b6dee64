#include "perflab/conductor.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "perflab/capabilities.hpp"
#include "perflab/server.hpp"

extern char** environ;

namespace perflab::conductor {
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Processes

pid_t spawn(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  argv.reserve(args.size() + 1);
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  int rc = posix_spawn(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
  if (rc != 0) {
    throw std::runtime_error("cannot start " + args[0] + ": " + std::strerror(rc));
  }
  return pid;
}

int wait_exit(pid_t pid) {
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

std::string describe_exit(int code) {
  if (code > 128) return "killed by signal " + std::to_string(code - 128);
  return "exit code " + std::to_string(code);
}

fs::path make_temp_dir() {
  std::string pattern = (fs::temp_directory_path() / "perflab-XXXXXX").string();
  if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("cannot create a temporary directory");
  return pattern;
}

std::vector<std::string> dataset_args(const booking::DatasetConfig& d) {
  return {"--airports",     std::to_string(d.airport_count), "--flights",      std::to_string(d.flight_count),
          "--seats",        std::to_string(d.seats_per_flight), "--users",     std::to_string(d.user_count),
          "--dataset-seed", std::to_string(d.rng_seed)};
}

// ---------------------------------------------------------------------------
// Service handles

class InProcessHandle final : public ServiceHandle {
 public:
  InProcessHandle(std::string version, const IssueConfig& issue, const booking::DatasetConfig& dataset)
      : version_(std::move(version)),
        service_(std::make_unique<booking::BookingService>(booking::seed_store(dataset), issue)),
        server_(std::make_unique<HttpServer>(*service_)) {
    server_->start();
  }
  ~InProcessHandle() override { server_->stop(); }

  [[nodiscard]] load::ServiceInstance instance() const override {
    return {version_, server_->host(), server_->port(), std::nullopt};
  }

 private:
  std::string version_;
  std::unique_ptr<booking::BookingService> service_;
  std::unique_ptr<HttpServer> server_;
};

class SubprocessHandle final : public ServiceHandle {
 public:
  SubprocessHandle(std::string version, pid_t pid, int port, fs::path dir)
      : version_(std::move(version)), pid_(pid), port_(port), dir_(std::move(dir)) {}

  ~SubprocessHandle() override {
    if (!exited_) {
      kill(pid_, SIGTERM);
      auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
      while (!reap() && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      if (!exited_) {
        kill(pid_, SIGKILL);
        wait_exit(pid_);
      }
    }
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }

  [[nodiscard]] load::ServiceInstance instance() const override { return {version_, "127.0.0.1", port_, std::nullopt}; }

  [[nodiscard]] bool alive() override { return !reap(); }

 private:
  bool reap() {
    if (exited_) return true;
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == pid_) exited_ = true;
    return exited_;
  }

  std::string version_;
  pid_t pid_;
  int port_;
  fs::path dir_;
  bool exited_ = false;
};

// ---------------------------------------------------------------------------
// Analysis helpers

std::vector<double> usable_means(const std::vector<micro::MeasurementSample>& samples, const std::string& bench,
                                 const std::string& version) {
  std::vector<double> out;
  for (const auto& s : samples) {
    if (!s.failed && s.bench_id == bench && s.version == version) out.push_back(s.mean_ns);
  }
  return out;
}

std::vector<double> second_medians(const std::vector<load::RequestRecord>& records, load::Endpoint endpoint) {
  std::vector<load::RequestRecord> selected;
  for (const auto& r : records) {
    if (r.endpoint == endpoint) selected.push_back(r);
  }
  std::vector<double> out;
  for (const auto& m : stats::per_second_medians(selected)) out.push_back(m.median_ns);
  return out;
}

void add_report(ExperimentResult& result, const std::string& target, const std::vector<double>& v1,
                const std::vector<double>& v2) {
  const auto& config = result.config;
  if (v1.empty() || v2.empty()) {
    result.failed_targets.push_back(target);
    return;
  }
  result.reports.push_back(stats::analyze_change(target, v1, v2, config.stats, stats::target_seed(config.seed, target)));
  for (const auto* version : {kBaselineVersion, kTreatmentVersion}) {
    const auto& samples = std::string(version) == kBaselineVersion ? v1 : v2;
    std::mt19937_64 rng(stats::target_seed(config.seed, target + "/" + version));
    stats::RciwStat stat = stats::compute_rciw(samples, config.stats.bootstrap_iterations, config.stats.level, rng);
    stat.target = target;
    stat.version = version;
    result.rciw.push_back(std::move(stat));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(BenchType type) { return type == BenchType::Micro ? "micro" : "app"; }

BenchType parse_bench_type(std::string_view text) {
  if (text == "micro") return BenchType::Micro;
  if (text == "app") return BenchType::App;
  throw ConfigError("unknown benchmark type '" + std::string(text) + "' (expected micro or app)");
}

std::string_view to_string(Profile profile) { return profile == Profile::Desk ? "desk" : "paper"; }

Profile parse_profile(std::string_view text) {
  if (text == "desk") return Profile::Desk;
  if (text == "paper") return Profile::Paper;
  throw ConfigError("unknown profile '" + std::string(text) + "' (expected desk or paper)");
}

void ExperimentConfig::validate() const {
  if (rmit.instance_runs < 1 || rmit.suite_runs < 1 || rmit.iterations < 1) {
    throw ConfigError("RMIT counts must be at least 1");
  }
  if (!(rmit.budget_s > 0)) throw ConfigError("iteration budget must be positive");
  if (trim.warmup_s < 0 || trim.cooldown_s < 0) throw ConfigError("trim durations must be non-negative");
  workload.validate();
  dataset.validate();
  try {
    stats.validate();
  } catch (const stats::StatsError& e) {
    throw ConfigError(e.what());
  }
  if (credentials.user.empty()) throw ConfigError("credentials need a user name");
}

ExperimentConfig ExperimentConfig::for_profile(Profile profile, IssueConfig issue, BenchType bench) {
  ExperimentConfig config;
  config.issue = issue;
  config.bench = bench;
  if (profile == Profile::Paper) {
    config.rmit = RmitConfig::paper();
    config.workload = load::WorkloadConfig::paper();
    config.trim = TrimConfig::paper();
  }
  return config;
}

micro::VersionMap version_map(const ExperimentConfig& config) {
  return {{kBaselineVersion, IssueConfig{}}, {kTreatmentVersion, config.issue}};
}

std::vector<std::string> expected_targets(BenchType bench) {
  if (bench == BenchType::App) return {"E1", "E2", "E3", "E4"};
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& b : micro::register_suite(micro::default_service_factory())) out.push_back(b.id);
    return out;
  }();
  return ids;
}

const stats::ChangeReport* ExperimentResult::report(const std::string& target) const {
  auto it = std::find_if(reports.begin(), reports.end(), [&](const auto& r) { return r.target == target; });
  return it == reports.end() ? nullptr : &*it;
}

// ---------------------------------------------------------------------------
// Launchers

std::vector<micro::MeasurementSample> InProcessMicroLauncher::run_instance(const ExperimentConfig& config,
                                                                           int instance_run) {
  return run_micro_instance(config, instance_run);
}

std::vector<micro::MeasurementSample> SubprocessMicroLauncher::run_instance(const ExperimentConfig& config,
                                                                            int instance_run) {
  const fs::path dir = make_temp_dir();
  const fs::path config_file = dir / "config.json";
  const fs::path samples_file = dir / kSamplesFile;
  {
    std::ofstream out(config_file);
    out << config_to_json(config);
    if (!out) throw std::runtime_error("cannot write " + config_file.string());
  }
  pid_t pid = spawn({executable_.string(), "micro-instance", "--config", config_file.string(), "--instance",
                     std::to_string(instance_run), "--out", samples_file.string()});
  const int code = wait_exit(pid);
  if (code != 0) {
    throw std::runtime_error("instance run " + std::to_string(instance_run) + " failed: " + describe_exit(code) +
                             " (files kept in " + dir.string() + ")");
  }
  auto samples = read_samples(samples_file);
  std::error_code ec;
  fs::remove_all(dir, ec);
  return samples;
}

std::vector<micro::MeasurementSample> RemoteMicroLauncher::run_instance(const ExperimentConfig&, int) {
  throw std::runtime_error("remote launcher for host '" + host_ + "' is not implemented");
}

std::unique_ptr<ServiceHandle> InProcessServiceLauncher::start(const std::string& version, const IssueConfig& issue,
                                                               const booking::DatasetConfig& dataset) {
  return std::make_unique<InProcessHandle>(version, issue, dataset);
}

std::unique_ptr<ServiceHandle> SubprocessServiceLauncher::start(const std::string& version, const IssueConfig& issue,
                                                                const booking::DatasetConfig& dataset) {
  const fs::path dir = make_temp_dir();
  const fs::path port_file = dir / "port";
  std::vector<std::string> args{executable_.string(), "serve",
                                "--host",             "127.0.0.1",
                                "--port",             "0",
                                "--port-file",        port_file.string(),
                                "--issue",            std::string(to_string(issue.kind)),
                                "--severity",         std::to_string(issue.severity)};
  for (auto& a : dataset_args(dataset)) args.push_back(std::move(a));
  pid_t pid = spawn(args);

  auto fail = [&](const std::string& why) -> std::unique_ptr<ServiceHandle> {
    kill(pid, SIGKILL);
    wait_exit(pid);
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw std::runtime_error("service " + version + ": " + why);
  };

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(startup_timeout_s_);
  int port = 0;
  while (port == 0) {
    int status = 0;
    if (waitpid(pid, &status, WNOHANG) == pid) {
      std::error_code ec;
      fs::remove_all(dir, ec);
      throw std::runtime_error("service " + version + " exited during startup");
    }
    std::ifstream in(port_file);
    if (in && (in >> port) && port > 0) break;
    port = 0;
    if (std::chrono::steady_clock::now() > deadline) return fail("no port published within the startup timeout");
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return std::make_unique<SubprocessHandle>(version, pid, port, dir);
}

Launchers in_process_launchers() {
  return {std::make_shared<InProcessMicroLauncher>(), std::make_shared<InProcessServiceLauncher>()};
}

Launchers subprocess_launchers(const fs::path& executable) {
  return {std::make_shared<SubprocessMicroLauncher>(executable),
          std::make_shared<SubprocessServiceLauncher>(executable)};
}

// ---------------------------------------------------------------------------
// Experiments

micro::RmitPlan make_rmit_plan(const ExperimentConfig& config) {
  const auto ids = expected_targets(BenchType::Micro);
  return micro::build_rmit_plan(ids, {kBaselineVersion, kTreatmentVersion}, config.rmit.instance_runs,
                                config.rmit.suite_runs, config.rmit.iterations, config.seed);
}

std::vector<micro::MeasurementSample> run_micro_instance(const ExperimentConfig& config, int instance_run) {
  config.validate();
  if (instance_run < 0 || instance_run >= config.rmit.instance_runs) {
    throw ConfigError("instance run " + std::to_string(instance_run) + " outside the plan");
  }
  const auto suite = micro::register_suite(micro::default_service_factory(config.dataset));
  const auto plan = make_rmit_plan(config);
  return micro::execute_plan(plan, suite, version_map(config), config.rmit.budget_s, instance_run);
}

void analyze(ExperimentResult& result) {
  result.reports.clear();
  result.rciw.clear();
  result.failed_targets.clear();
  result.failed_samples = 0;
  const auto targets = expected_targets(result.config.bench);

  if (result.config.bench == BenchType::Micro) {
    for (const auto& s : result.samples) result.failed_samples += s.failed ? 1 : 0;
    for (const auto& target : targets) {
      add_report(result, target, usable_means(result.samples, target, kBaselineVersion),
                 usable_means(result.samples, target, kTreatmentVersion));
    }
    return;
  }

  result.transport_failures = 0;
  stats::VersionedRecords answered;
  for (const auto* version : {kBaselineVersion, kTreatmentVersion}) {
    auto& kept = answered[version];
    auto it = result.records.find(version);
    if (it == result.records.end()) continue;
    for (const auto& r : it->second) {
      if (r.status == load::kTransportFailure) {
        ++result.transport_failures;
      } else {
        kept.push_back(r);
      }
    }
  }
  stats::VersionedRecords trimmed;
  try {
    trimmed = stats::trim_records(answered, result.config.trim.warmup_s, result.config.trim.cooldown_s);
  } catch (const stats::StatsError& e) {
    if (result.error.empty()) result.error = std::string("trimming failed: ") + e.what();
    result.failed_targets = targets;
    return;
  }
  for (const auto& target : targets) {
    const auto endpoint = load::parse_endpoint(target);
    add_report(result, target, second_medians(trimmed[kBaselineVersion], endpoint),
               second_medians(trimmed[kTreatmentVersion], endpoint));
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Launchers& launchers) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  const bool persist = !config.output_dir.empty();
  if (persist) fs::create_directories(config.output_dir);

  if (config.bench == BenchType::Micro) {
    if (!launchers.micro) throw ConfigError("no micro launcher configured");
    const auto plan = make_rmit_plan(config);
    if (persist) write_plan(fs::path(config.output_dir) / kPlanFile, plan);
    for (int instance = 0; instance < config.rmit.instance_runs; ++instance) {
      try {
        auto samples = launchers.micro->run_instance(config, instance);
        result.samples.insert(result.samples.end(), samples.begin(), samples.end());
      } catch (const std::exception& e) {
        result.partial = true;
        if (result.error.empty()) result.error = e.what();
      }
    }
  } else {
    if (!launchers.service) throw ConfigError("no service launcher configured");
    try {
      auto first = launchers.service->start(kBaselineVersion, IssueConfig{}, config.dataset);
      auto second = launchers.service->start(kTreatmentVersion, config.issue, config.dataset);
      load::DuetDeployment deployment{first->instance(), second->instance()};
      auto workload = load::run_duet_workload(deployment, config.workload, config.credentials);
      result.records = std::move(workload.records);
      if (workload.partial) {
        result.partial = true;
        result.error = workload.error;
      }
      for (auto* handle : {first.get(), second.get()}) {
        if (!handle->alive()) {
          result.partial = true;
          if (result.error.empty()) result.error = "service " + handle->instance().version + " died during the run";
        }
      }
    } catch (const std::exception& e) {
      result.partial = true;
      if (result.error.empty()) result.error = e.what();
    }
  }

  if (persist) {
    result.raw_files = config.bench == BenchType::Micro ? std::vector<std::string>{kPlanFile, kSamplesFile}
                                                        : std::vector<std::string>{kRecordsFile};
    persist_raw(result, config.output_dir);
  }
  try {
    analyze(result);
  } catch (const std::exception& e) {
    result.partial = true;
    if (result.error.empty()) result.error = std::string("analysis failed: ") + e.what();
  }
  if (persist) persist_results(result, config.output_dir);
  return result;
}

bool SweepResult::complete() const {
  return std::all_of(experiments.begin(), experiments.end(), [](const auto& e) { return e.complete(); });
}

void add_to_matrix(stats::DetectionMatrix& matrix, const ExperimentResult& result) {
  const auto kind = result.config.issue.kind;
  const auto severity = result.config.issue.severity;
  for (const auto& target : expected_targets(result.config.bench)) {
    if (const auto* report = result.report(target)) {
      matrix.add(kind, severity, *report);
    } else {
      matrix.mark_absent(kind, severity, target);
    }
  }
}

SweepResult run_severity_sweep(const ExperimentConfig& base, const std::vector<std::uint32_t>& levels,
                               const Launchers& launchers) {
  if (levels.empty()) throw ConfigError("severity sweep needs at least one level");
  if (!std::is_sorted(levels.begin(), levels.end()) ||
      std::adjacent_find(levels.begin(), levels.end()) != levels.end()) {
    throw ConfigError("severity levels must be strictly ascending");
  }
  if (base.issue.kind == IssueKind::None) throw ConfigError("a sweep needs an issue kind");
  base.validate();

  SweepResult sweep;
  for (std::uint32_t level : levels) {
    ExperimentConfig config = base;
    config.issue.severity = level;
    if (!base.output_dir.empty()) config.output_dir = (fs::path(base.output_dir) / ("s" + std::to_string(level))).string();
    ExperimentResult result;
    try {
      result = run_experiment(config, launchers);
    } catch (const std::exception& e) {
      result.config = config;
      result.partial = true;
      result.error = e.what();
      result.failed_targets = expected_targets(config.bench);
    }
    add_to_matrix(sweep.matrix, result);
    sweep.experiments.push_back(std::move(result));
  }
  return sweep;
}

// ---------------------------------------------------------------------------
// Reporting

std::string render_detection_table(const stats::DetectionMatrix& matrix, IssueKind issue,
                                   const std::vector<std::string>& columns) {
  std::vector<std::string> cols = columns;
  if (cols.empty()) {
    const auto present = matrix.targets(issue);
    for (const auto& t : table_targets()) {
      if (std::find(present.begin(), present.end(), t) != present.end()) cols.push_back(t);
    }
  }
  const auto severities = matrix.severities(issue);

  std::size_t label_width = std::string("severity").size();
  for (auto s : severities) label_width = std::max(label_width, std::to_string(s).size());
  std::size_t cell_width = 3;
  for (const auto& c : cols) cell_width = std::max(cell_width, c.size() + 2);

  std::ostringstream out;
  out << perflab::to_string(issue) << " (" << issue_letter(issue) << ")\n";
  out << std::left << std::setw(static_cast<int>(label_width)) << "severity";
  for (const auto& c : cols) {
    std::string head = c + (expected_detects(c).contains(issue) ? "*" : "");
    out << ' ' << std::setw(static_cast<int>(cell_width)) << head;
  }
  out << '\n';
  for (auto s : severities) {
    out << std::left << std::setw(static_cast<int>(label_width)) << s;
    for (const auto& c : cols) {
      auto change = matrix.at(issue, s, c);
      out << ' ' << std::setw(static_cast<int>(cell_width)) << std::string(1, change ? stats::symbol(*change) : '-');
    }
    out << '\n';
  }
  out << "\n* capable of detecting the issue\n";
  for (const auto& line : stats::legend()) out << line << '\n';
  out << "- no result\n";
  return out.str();
}

std::vector<RciwSummary> summarize_rciw(const std::vector<stats::RciwStat>& values) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& v : values) groups[{v.target, v.version}].push_back(v.rciw);
  std::vector<RciwSummary> out;
  for (auto& [key, list] : groups) {
    std::sort(list.begin(), list.end());
    RciwSummary s;
    s.target = key.first;
    s.version = key.second;
    s.count = list.size();
    s.min = list.front();
    s.q1 = stats::sorted_quantile(list, 0.25);
    s.median = stats::sorted_quantile(list, 0.5);
    s.q3 = stats::sorted_quantile(list, 0.75);
    s.max = list.back();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace perflab::conductor
