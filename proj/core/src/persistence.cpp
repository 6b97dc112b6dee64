#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "perflab/conductor.hpp"
#include "perflab/primitives.hpp"

namespace perflab::conductor {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json config_json(const ExperimentConfig& c) {
  return {
      {"issue", {{"kind", to_string(c.issue.kind)}, {"severity", c.issue.severity}}},
      {"bench", to_string(c.bench)},
      {"rmit",
       {{"instanceRuns", c.rmit.instance_runs},
        {"suiteRuns", c.rmit.suite_runs},
        {"iterations", c.rmit.iterations},
        {"budgetSeconds", c.rmit.budget_s}}},
      {"workload",
       {{"s1Vus", c.workload.s1_vus},
        {"s1IterationsPerVu", c.workload.s1_iterations},
        {"s2Vus", c.workload.s2_vus},
        {"s2IterationsPerVu", c.workload.s2_iterations},
        {"seed", c.workload.seed}}},
      {"trim", {{"warmupS", c.trim.warmup_s}, {"cooldownS", c.trim.cooldown_s}}},
      {"stats",
       {{"bootstrapIterations", c.stats.bootstrap_iterations},
        {"level", c.stats.level},
        {"smallThreshold", c.stats.small_threshold}}},
      {"dataset",
       {{"airports", c.dataset.airport_count},
        {"flights", c.dataset.flight_count},
        {"seatsPerFlight", c.dataset.seats_per_flight},
        {"users", c.dataset.user_count},
        {"seed", c.dataset.rng_seed}}},
      {"credentials", {{"user", c.credentials.user}, {"password", c.credentials.password}}},
      {"seed", c.seed},
      {"outputDir", c.output_dir},
  };
}

template <typename T>
void read_field(const json& object, const char* key, T& target) {
  if (object.contains(key)) target = object.at(key).get<T>();
}

ExperimentConfig config_from(const json& j) {
  ExperimentConfig c;
  if (j.contains("issue")) {
    const auto& issue = j.at("issue");
    if (issue.contains("kind")) c.issue.kind = parse_issue_kind(issue.at("kind").get<std::string>());
    read_field(issue, "severity", c.issue.severity);
  }
  if (j.contains("bench")) c.bench = parse_bench_type(j.at("bench").get<std::string>());
  if (j.contains("rmit")) {
    const auto& r = j.at("rmit");
    read_field(r, "instanceRuns", c.rmit.instance_runs);
    read_field(r, "suiteRuns", c.rmit.suite_runs);
    read_field(r, "iterations", c.rmit.iterations);
    read_field(r, "budgetSeconds", c.rmit.budget_s);
  }
  if (j.contains("workload")) {
    const auto& w = j.at("workload");
    read_field(w, "s1Vus", c.workload.s1_vus);
    read_field(w, "s1IterationsPerVu", c.workload.s1_iterations);
    read_field(w, "s2Vus", c.workload.s2_vus);
    read_field(w, "s2IterationsPerVu", c.workload.s2_iterations);
    read_field(w, "seed", c.workload.seed);
  }
  if (j.contains("trim")) {
    read_field(j.at("trim"), "warmupS", c.trim.warmup_s);
    read_field(j.at("trim"), "cooldownS", c.trim.cooldown_s);
  }
  if (j.contains("stats")) {
    const auto& s = j.at("stats");
    read_field(s, "bootstrapIterations", c.stats.bootstrap_iterations);
    read_field(s, "level", c.stats.level);
    read_field(s, "smallThreshold", c.stats.small_threshold);
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    read_field(d, "airports", c.dataset.airport_count);
    read_field(d, "flights", c.dataset.flight_count);
    read_field(d, "seatsPerFlight", c.dataset.seats_per_flight);
    read_field(d, "users", c.dataset.user_count);
    read_field(d, "seed", c.dataset.rng_seed);
  }
  if (j.contains("credentials")) {
    read_field(j.at("credentials"), "user", c.credentials.user);
    read_field(j.at("credentials"), "password", c.credentials.password);
  }
  read_field(j, "seed", c.seed);
  read_field(j, "outputDir", c.output_dir);
  return c;
}

json ci_fields(json object, const stats::ConfidenceInterval& ci) {
  object["ciLo"] = ci.lo;
  object["ciHi"] = ci.hi;
  object["level"] = ci.level;
  object["iterations"] = ci.iterations;
  return object;
}

stats::ConfidenceInterval ci_from(const json& j) {
  return {j.at("ciLo").get<double>(), j.at("ciHi").get<double>(), j.at("level").get<double>(),
          j.at("iterations").get<int>()};
}

/// Writes to a sibling temporary file and renames it into place.
template <typename Writer>
void write_atomically(const fs::path& path, Writer&& write) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw PersistError("cannot write " + tmp.string());
    write(out);
    out.flush();
    if (!out) throw PersistError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw PersistError("cannot read " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw PersistError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

json sample_json(const micro::MeasurementSample& s) {
  json j{{"benchId", s.bench_id},   {"version", s.version}, {"instanceRun", s.instance_run},
         {"suiteRun", s.suite_run}, {"iteration", s.iteration}, {"meanNs", s.mean_ns},
         {"ops", s.ops},            {"budgetS", s.budget_s}, {"failed", s.failed}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

json report_json(const stats::ChangeReport& r) {
  return ci_fields({{"target", r.target},
                    {"r", r.ratio},
                    {"class", stats::to_string(r.change)},
                    {"n1", r.n1},
                    {"n2", r.n2}},
                   r.ci);
}

stats::ChangeReport report_from(const json& j) {
  stats::ChangeReport r;
  r.target = j.at("target").get<std::string>();
  r.ratio = j.at("r").get<double>();
  r.ci = ci_from(j);
  r.change = stats::parse_change_class(j.at("class").get<std::string>());
  r.n1 = j.at("n1").get<std::size_t>();
  r.n2 = j.at("n2").get<std::size_t>();
  return r;
}

std::string sha256_hex(std::string_view text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &size, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  return faults::to_hex(std::span<const unsigned char>(digest, size));
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2); }

ExperimentConfig config_from_json(std::string_view text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(config_json(config).dump()); }

void write_samples(const fs::path& path, const std::vector<micro::MeasurementSample>& samples) {
  write_atomically(path, [&](std::ostream& out) {
    for (const auto& s : samples) out << sample_json(s).dump() << '\n';
  });
}

std::vector<micro::MeasurementSample> read_samples(const fs::path& path) {
  std::vector<micro::MeasurementSample> out;
  for_each_line(path, [&](const json& j) {
    micro::MeasurementSample s;
    s.bench_id = j.at("benchId").get<std::string>();
    s.version = j.at("version").get<std::string>();
    s.instance_run = j.at("instanceRun").get<int>();
    s.suite_run = j.at("suiteRun").get<int>();
    s.iteration = j.at("iteration").get<int>();
    s.mean_ns = j.at("meanNs").get<double>();
    s.ops = j.at("ops").get<std::uint64_t>();
    s.budget_s = j.value("budgetS", 0.0);
    s.failed = j.at("failed").get<bool>();
    s.error = j.value("error", std::string());
    out.push_back(std::move(s));
  });
  return out;
}

void write_records(const fs::path& path, const stats::VersionedRecords& records) {
  write_atomically(path, [&](std::ostream& out) {
    for (const auto& [version, list] : records) {
      for (const auto& r : list) {
        out << json{{"endpoint", load::endpoint_id(r.endpoint)},
                    {"version", r.version},
                    {"startTimeS", r.start_s},
                    {"latencyNs", r.latency_ns},
                    {"status", r.status}}
                   .dump()
            << '\n';
      }
    }
  });
}

stats::VersionedRecords read_records(const fs::path& path) {
  stats::VersionedRecords out;
  for_each_line(path, [&](const json& j) {
    load::RequestRecord r;
    r.endpoint = load::parse_endpoint(j.at("endpoint").get<std::string>());
    r.version = j.at("version").get<std::string>();
    r.start_s = j.at("startTimeS").get<double>();
    r.latency_ns = j.at("latencyNs").get<double>();
    r.status = j.at("status").get<int>();
    out[r.version].push_back(std::move(r));
  });
  return out;
}

void write_reports(const fs::path& path, const std::vector<stats::ChangeReport>& reports) {
  write_atomically(path, [&](std::ostream& out) {
    for (const auto& r : reports) out << report_json(r).dump() << '\n';
  });
}

std::vector<stats::ChangeReport> read_reports(const fs::path& path) {
  std::vector<stats::ChangeReport> out;
  for_each_line(path, [&](const json& j) { out.push_back(report_from(j)); });
  return out;
}

void write_plan(const fs::path& path, const micro::RmitPlan& plan) {
  json slots = json::array();
  for (const auto& s : plan.slots) {
    slots.push_back({{"instanceRun", s.instance_run},
                     {"suiteRun", s.suite_run},
                     {"benchId", s.bench_id},
                     {"version", s.version},
                     {"iteration", s.iteration}});
  }
  json j{{"benchIds", plan.bench_ids},      {"versions", plan.versions},   {"instanceRuns", plan.instance_runs},
         {"suiteRuns", plan.suite_runs},    {"iterations", plan.iterations}, {"seed", plan.seed},
         {"slots", std::move(slots)}};
  write_atomically(path, [&](std::ostream& out) { out << j.dump(1) << '\n'; });
}

void persist_raw(const ExperimentResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  if (result.config.bench == BenchType::Micro) {
    write_samples(dir / kSamplesFile, result.samples);
  } else {
    write_records(dir / kRecordsFile, result.records);
  }
}

void persist_results(const ExperimentResult& result, const fs::path& dir) {
  persist_raw(result, dir);
  write_reports(dir / kReportsFile, result.reports);
  write_atomically(dir / kRciwFile, [&](std::ostream& out) {
    for (const auto& r : result.rciw) {
      out << ci_fields({{"target", r.target}, {"version", r.version}, {"rciw", r.rciw}, {"median", r.median}}, r.ci)
                 .dump()
          << '\n';
    }
  });
  json versions = json::array();
  for (const auto& [version, list] : result.records) versions.push_back(version);
  json manifest{{"schemaVersion", kSchemaVersion},
                {"configHash", config_hash(result.config)},
                {"config", config_json(result.config)},
                {"rawFiles", result.raw_files},
                {"recordVersions", std::move(versions)},
                {"failedTargets", result.failed_targets},
                {"failedSamples", result.failed_samples},
                {"transportFailures", result.transport_failures},
                {"partial", result.partial},
                {"error", result.error}};
  write_atomically(dir / kManifestFile, [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
}

ExperimentResult load_results(const fs::path& dir, std::vector<std::string>* warnings) {
  const fs::path manifest_path = dir / kManifestFile;
  if (!fs::exists(manifest_path)) throw PersistError("no " + std::string(kManifestFile) + " in " + dir.string());

  json manifest;
  {
    std::ifstream in(manifest_path);
    manifest = json::parse(in, nullptr, false);
  }
  if (manifest.is_discarded() || !manifest.is_object()) throw PersistError("malformed " + manifest_path.string());
  const int schema = manifest.value("schemaVersion", -1);
  if (schema != kSchemaVersion) {
    throw PersistError("schema version " + std::to_string(schema) + " in " + manifest_path.string() + ", expected " +
                       std::to_string(kSchemaVersion));
  }

  ExperimentResult result;
  try {
    result.config = config_from(manifest.at("config"));
    result.raw_files = manifest.value("rawFiles", std::vector<std::string>{});
    result.failed_targets = manifest.value("failedTargets", std::vector<std::string>{});
    result.failed_samples = manifest.value("failedSamples", std::uint64_t{0});
    result.transport_failures = manifest.value("transportFailures", std::uint64_t{0});
    result.partial = manifest.value("partial", false);
    result.error = manifest.value("error", std::string());
    for (const auto& v : manifest.value("recordVersions", std::vector<std::string>{})) result.records[v];
  } catch (const std::exception& e) {
    throw PersistError("malformed " + manifest_path.string() + ": " + e.what());
  }

  const std::string stored_hash = manifest.value("configHash", std::string());
  if (stored_hash != config_hash(result.config) && warnings) {
    warnings->push_back("config hash mismatch in " + manifest_path.string() + ": the config was modified after the run");
  }

  if (fs::exists(dir / kSamplesFile)) result.samples = read_samples(dir / kSamplesFile);
  if (fs::exists(dir / kRecordsFile)) {
    for (auto& [version, list] : read_records(dir / kRecordsFile)) result.records[version] = std::move(list);
  }
  if (fs::exists(dir / kReportsFile)) result.reports = read_reports(dir / kReportsFile);
  if (fs::exists(dir / kRciwFile)) {
    for_each_line(dir / kRciwFile, [&](const json& j) {
      stats::RciwStat r;
      r.target = j.at("target").get<std::string>();
      r.version = j.at("version").get<std::string>();
      r.rciw = j.at("rciw").get<double>();
      r.median = j.at("median").get<double>();
      r.ci = ci_from(j);
      result.rciw.push_back(std::move(r));
    });
  }
  return result;
}

}  // namespace perflab::conductor
