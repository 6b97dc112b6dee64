#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "perflab/capabilities.hpp"
#include "perflab/statlab.hpp"

namespace perflab::stats {
namespace {

using load::Endpoint;
using load::RequestRecord;

// Exact bootstrap distribution of median(v2*) / median(v1*) by enumerating
// every resample. Only feasible for tiny samples.
std::map<double, double> exact_ratio_distribution(const std::vector<double>& v1, const std::vector<double>& v2) {
  auto medians = [](const std::vector<double>& v) {
    std::map<double, double> out;
    const std::size_t n = v.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= n;
    std::vector<double> pick(n);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= n) pick[i] = v[c % n];
      std::sort(pick.begin(), pick.end());
      const double m = n % 2 ? pick[n / 2] : (pick[n / 2 - 1] + pick[n / 2]) / 2;
      out[m] += 1.0 / static_cast<double>(total);
    }
    return out;
  };
  std::map<double, double> dist;
  for (const auto& [m1, p1] : medians(v1)) {
    for (const auto& [m2, p2] : medians(v2)) dist[m2 / m1] += p1 * p2;
  }
  return dist;
}

double exact_quantile(const std::map<double, double>& dist, double q) {
  double acc = 0;
  for (const auto& [value, p] : dist) {
    acc += p;
    if (acc >= q) return value;
  }
  return dist.rbegin()->first;
}

TEST(Basics, MedianAndQuantile) {
  const std::vector<double> odd{3, 1, 2};
  const std::vector<double> even{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(median(odd), 2);
  EXPECT_DOUBLE_EQ(median(even), 2.5);
  EXPECT_THROW(median(std::vector<double>{}), StatsError);
  const std::vector<double> sorted{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(sorted_quantile(sorted, 0), 1);
  EXPECT_DOUBLE_EQ(sorted_quantile(sorted, 1), 5);
  EXPECT_DOUBLE_EQ(sorted_quantile(sorted, 0.25), 2);
  EXPECT_DOUBLE_EQ(sorted_quantile(sorted, 0.1), 1.4);
}

TEST(Basics, MedianRatio) {
  const std::vector<double> v1{10, 20, 30}, v2{22, 11, 33, 44};
  EXPECT_DOUBLE_EQ(median_ratio(v1, v2), 27.5 / 20);
  EXPECT_THROW(median_ratio(std::vector<double>{}, v2), StatsError);
  EXPECT_THROW(median_ratio(std::vector<double>{1, 0}, v2), StatsError);
  EXPECT_THROW(median_ratio(v1, std::vector<double>{1, -2}), StatsError);
  EXPECT_THROW(median_ratio(v1, std::vector<double>{NAN}), StatsError);
}

TEST(Basics, ClassNamesRoundTrip) {
  for (ChangeClass c : {ChangeClass::NoChange, ChangeClass::SmallRegression, ChangeClass::RelevantRegression,
                        ChangeClass::SmallImprovement, ChangeClass::RelevantImprovement}) {
    EXPECT_EQ(parse_change_class(to_string(c)), c);
  }
  EXPECT_THROW(parse_change_class("worse"), StatsError);
  EXPECT_EQ(legend().size(), 5u);
}

TEST(Bootstrap, TwoPointSampleMatchesEnumeration) {
  const std::vector<double> v{10, 20};
  const auto dist = exact_ratio_distribution(v, v);
  EXPECT_NEAR(dist.at(1.0), 3.0 / 8, 1e-12);
  EXPECT_NEAR(dist.at(0.5), 1.0 / 16, 1e-12);
  const double lo = exact_quantile(dist, 0.005);
  const double hi = exact_quantile(dist, 0.995);
  ASSERT_DOUBLE_EQ(lo, 0.5);
  ASSERT_DOUBLE_EQ(hi, 2.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto ci = bootstrap_ci_median_ratio(v, v, 10000, 0.99, rng);
    EXPECT_DOUBLE_EQ(ci.lo, lo) << seed;
    EXPECT_DOUBLE_EQ(ci.hi, hi) << seed;
    EXPECT_EQ(ci.iterations, 10000);
  }
}

TEST(Bootstrap, ThreeByThreeQuantilesMatchEnumeration) {
  const std::vector<double> v1{4, 5, 9}, v2{6, 7, 8};
  const auto dist = exact_ratio_distribution(v1, v2);
  std::mt19937_64 rng(3);
  auto ci = bootstrap_ci_median_ratio(v1, v2, 40000, 0.9, rng);
  // A discrete distribution: the bootstrap quantiles land on (or next to)
  // the exact support points.
  EXPECT_NEAR(ci.lo, exact_quantile(dist, 0.05), 0.15);
  EXPECT_NEAR(ci.hi, exact_quantile(dist, 0.95), 0.15);
}

TEST(Bootstrap, DeterministicPerSeedAndRejectsBadInput) {
  const std::vector<double> v1{1, 2, 3, 4, 5}, v2{2, 3, 4, 5, 6};
  std::mt19937_64 a(7), b(7);
  EXPECT_EQ(bootstrap_ci_median_ratio(v1, v2, 500, 0.99, a), bootstrap_ci_median_ratio(v1, v2, 500, 0.99, b));
  std::mt19937_64 rng(1);
  EXPECT_THROW(bootstrap_ci_median_ratio(v1, v2, 0, 0.99, rng), StatsError);
  EXPECT_THROW(bootstrap_ci_median_ratio(v1, v2, 10, 1.0, rng), StatsError);
  EXPECT_THROW(bootstrap_ci_median_ratio({}, v2, 10, 0.99, rng), StatsError);
}

// Lognormal samples with a known median ratio: the 99% interval should
// cover it in nearly all repetitions.
TEST(Bootstrap, CoverageSanity) {
  const double true_ratio = 1.1;
  int covered = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    std::mt19937_64 gen(1000 + rep);
    std::lognormal_distribution<double> noise(0.0, 0.2);
    std::vector<double> v1(40), v2(40);
    for (auto& x : v1) x = 100 * noise(gen);
    for (auto& x : v2) x = 100 * true_ratio * noise(gen);
    std::mt19937_64 rng(rep);
    auto ci = bootstrap_ci_median_ratio(v1, v2, 2000, 0.99, rng);
    covered += ci.lo <= true_ratio && true_ratio <= ci.hi ? 1 : 0;
  }
  EXPECT_GE(covered, 190);
}

TEST(Bootstrap, IntervalWidensWithLevel) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> d(100, 10);
  std::vector<double> v1(50), v2(50);
  for (auto& x : v1) x = d(gen);
  for (auto& x : v2) x = d(gen);
  std::mt19937_64 a(1), b(1);
  auto narrow = bootstrap_ci_median_ratio(v1, v2, 5000, 0.8, a);
  auto wide = bootstrap_ci_median_ratio(v1, v2, 5000, 0.99, b);
  EXPECT_LE(wide.lo, narrow.lo);
  EXPECT_GE(wide.hi, narrow.hi);
  EXPECT_LE(narrow.lo, narrow.hi);
}

ConfidenceInterval ci(double lo, double hi) { return {lo, hi, 0.99, 10000}; }

TEST(Classify, WorkedExamples) {
  EXPECT_EQ(classify_change(1.2072, ci(1.1014, 1.3185)), ChangeClass::RelevantRegression);
  EXPECT_EQ(classify_change(1.051, ci(1.0279, 1.1078)), ChangeClass::RelevantRegression);
  EXPECT_EQ(classify_change(1.0385, ci(1.0228, 1.054)), ChangeClass::RelevantRegression);
  EXPECT_EQ(classify_change(0.81, ci(0.6, 1.1)), ChangeClass::NoChange);
}

TEST(Classify, BandsAndDirections) {
  EXPECT_EQ(classify_change(1.02, ci(1.01, 1.025)), ChangeClass::SmallRegression);
  EXPECT_EQ(classify_change(0.98, ci(0.97, 0.99)), ChangeClass::SmallImprovement);
  EXPECT_EQ(classify_change(0.9, ci(0.85, 0.95)), ChangeClass::RelevantImprovement);
  EXPECT_EQ(classify_change(1.5, ci(1.0, 2.0)), ChangeClass::NoChange);
  EXPECT_EQ(classify_change(0.5, ci(0.1, 1.0)), ChangeClass::NoChange);
  // The small band is inclusive; 0.25 is exact in binary.
  EXPECT_EQ(classify_change(1.25, ci(1.1, 1.3), 0.25), ChangeClass::SmallRegression);
  EXPECT_EQ(classify_change(std::nextafter(1.25, 2.0), ci(1.1, 1.3), 0.25), ChangeClass::RelevantRegression);
  EXPECT_EQ(classify_change(0.75, ci(0.7, 0.8), 0.25), ChangeClass::SmallImprovement);
  EXPECT_EQ(classify_change(std::nextafter(0.75, 0.0), ci(0.7, 0.8), 0.25), ChangeClass::RelevantImprovement);
}

// Property: the class depends only on (r, CI) relative to 1 and the band.
TEST(Classify, ConsistencyProperty) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int i = 0; i < 20000; ++i) {
    double a = u(gen), b = u(gen), r = u(gen);
    const auto c = classify_change(r, ci(std::min(a, b), std::max(a, b)));
    const bool excludes_one = std::min(a, b) > 1 || std::max(a, b) < 1;
    ASSERT_EQ(c == ChangeClass::NoChange, !excludes_one);
    if (c == ChangeClass::RelevantRegression) ASSERT_GT(r, 1.03);
    if (c == ChangeClass::RelevantImprovement) ASSERT_LT(r, 0.97);
    if (c == ChangeClass::SmallRegression || c == ChangeClass::SmallImprovement) {
      ASSERT_LE(std::abs(r - 1), 0.03 + 1e-12);
    }
  }
}

TEST(Analyze, ScaleInvariance) {
  std::mt19937_64 gen(2);
  std::lognormal_distribution<double> d(0, 0.3);
  std::vector<double> v1(60), v2(60);
  for (auto& x : v1) x = d(gen);
  for (auto& x : v2) x = 1.2 * d(gen);
  const StatsConfig cfg{};
  auto base = analyze_change("t", v1, v2, cfg, 4);
  for (double k : {1e-12, 1e-3, 1e9}) {
    std::vector<double> s1 = v1, s2 = v2;
    for (auto& x : s1) x *= k;
    for (auto& x : s2) x *= k;
    auto scaled = analyze_change("t", s1, s2, cfg, 4);
    EXPECT_NEAR(scaled.ratio, base.ratio, 1e-12 * base.ratio);
    EXPECT_NEAR(scaled.ci.lo, base.ci.lo, 1e-9);
    EXPECT_NEAR(scaled.ci.hi, base.ci.hi, 1e-9);
    EXPECT_EQ(scaled.change, base.change);
  }
  EXPECT_EQ(base.n1, 60u);
  EXPECT_EQ(base.change, ChangeClass::RelevantRegression);
}

TEST(Analyze, MonotoneInTreatmentShift) {
  std::mt19937_64 gen(8);
  std::lognormal_distribution<double> d(0, 0.1);
  std::vector<double> v1(80), base(80);
  for (auto& x : v1) x = d(gen);
  for (auto& x : base) x = d(gen);
  double last_ratio = 0;
  for (double shift : {0.8, 0.9, 1.0, 1.1, 1.5, 3.0}) {
    std::vector<double> v2 = base;
    for (auto& x : v2) x *= shift;
    auto r = analyze_change("t", v1, v2, {}, 1);
    EXPECT_GT(r.ratio, last_ratio);
    last_ratio = r.ratio;
  }
}

TEST(Analyze, TargetSeedsDifferPerTarget) {
  EXPECT_EQ(target_seed(1, "M1"), target_seed(1, "M1"));
  EXPECT_NE(target_seed(1, "M1"), target_seed(1, "M2"));
  EXPECT_NE(target_seed(1, "M1"), target_seed(2, "M1"));
}

TEST(Rciw, Oracles) {
  std::mt19937_64 rng(1);
  const std::vector<double> constant(30, 5.0);
  EXPECT_DOUBLE_EQ(compute_rciw(constant, 1000, 0.99, rng).rciw, 0.0);

  // Exact bootstrap medians of {10, 20}: 10, 15, 20 with 1/4, 1/2, 1/4.
  const std::vector<double> two{10, 20};
  auto r = compute_rciw(two, 10000, 0.99, rng);
  EXPECT_NEAR(r.rciw, (20.0 - 10.0) / 15.0, 0.01);
  EXPECT_DOUBLE_EQ(r.median, 15);

  std::vector<double> tiny{10e-12, 20e-12};
  std::mt19937_64 same(1), again(1);
  EXPECT_NEAR(compute_rciw(tiny, 10000, 0.99, same).rciw, compute_rciw(two, 10000, 0.99, again).rciw, 1e-9);
  EXPECT_THROW(compute_rciw({}, 10, 0.99, rng), StatsError);
}

RequestRecord rec(const std::string& version, double start, double latency, Endpoint e = Endpoint::Destinations) {
  return {e, version, start, latency, 200};
}

TEST(Trim, WindowFromFirstFinish) {
  VersionedRecords records;
  for (int t = 0; t <= 280; ++t) records["v1"].push_back(rec("v1", t, 1));
  for (int t = 0; t <= 300; ++t) records["v2"].push_back(rec("v2", t, 1));
  auto w = trim_window(records, 60, 60);
  EXPECT_DOUBLE_EQ(w.begin_s, 60);
  EXPECT_DOUBLE_EQ(w.end_s, 220);
  auto kept = trim_records(records, 60, 60);
  EXPECT_EQ(kept["v1"].size(), 161u);
  EXPECT_EQ(kept["v2"].size(), 161u);
  for (const auto& [v, list] : kept) {
    for (const auto& r : list) {
      EXPECT_GE(r.start_s, 60);
      EXPECT_LE(r.start_s, 220);
    }
  }
}

TEST(Trim, RejectsEmptyWindowsAndVersions) {
  VersionedRecords records;
  records["v1"] = {rec("v1", 0, 1), rec("v1", 10, 1)};
  records["v2"] = {rec("v2", 0, 1), rec("v2", 12, 1)};
  EXPECT_THROW(trim_window(records, 6, 6), StatsError);
  EXPECT_NO_THROW(trim_window(records, 5, 5));
  EXPECT_THROW(trim_window(records, -1, 0), StatsError);
  records["v3"] = {};
  EXPECT_THROW(trim_window(records, 0, 0), StatsError);
  // Valid window but no record of one version inside it.
  VersionedRecords sparse;
  sparse["v1"] = {rec("v1", 0, 1), rec("v1", 100, 1)};
  sparse["v2"] = {rec("v2", 0, 1), rec("v2", 50, 1), rec("v2", 100, 1)};
  EXPECT_THROW(trim_records(sparse, 10, 10), StatsError);
}

TEST(Trim, PerSecondMedians) {
  std::vector<RequestRecord> records{rec("v", 0.1, 5), rec("v", 0.9, 7), rec("v", 0.5, 100),
                                     rec("v", 2.0, 3), rec("v", 2.99, 4)};
  auto m = per_second_medians(records);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (SecondMedian{0, 7}));
  EXPECT_EQ(m[1], (SecondMedian{2, 3.5}));
}

ChangeReport report(const std::string& target, ChangeClass c) {
  ChangeReport r;
  r.target = target;
  r.change = c;
  r.ratio = 1;
  return r;
}

TEST(Matrix, FullGridAndDuplicates) {
  DetectionMatrix m;
  const auto levels = default_severity_levels();
  ASSERT_EQ(levels.size(), 13u);
  for (auto s : levels) {
    for (const auto& t : table_targets()) m.add(IssueKind::RequestId, s, report(t, ChangeClass::NoChange));
  }
  EXPECT_EQ(m.size(), 143u);
  EXPECT_EQ(m.severities(IssueKind::RequestId), levels);
  EXPECT_EQ(m.targets(IssueKind::RequestId).size(), 11u);
  EXPECT_THROW(m.add(IssueKind::RequestId, 0, report("M1", ChangeClass::NoChange)), StatsError);
  EXPECT_THROW(m.mark_absent(IssueKind::RequestId, 0, "M1"), StatsError);
  EXPECT_EQ(m.at(IssueKind::RequestId, 2048, "E4"), ChangeClass::NoChange);
  EXPECT_FALSE(m.at(IssueKind::BasicAuth, 2048, "E4").has_value());
}

TEST(Matrix, AbsentCellsAndMerge) {
  DetectionMatrix a, b;
  a.add(IssueKind::BasicAuth, 1, report("M1", ChangeClass::RelevantRegression));
  b.mark_absent(IssueKind::BasicAuth, 2, "M1");
  EXPECT_TRUE(b.explicitly_absent(IssueKind::BasicAuth, 2, "M1"));
  EXPECT_FALSE(b.at(IssueKind::BasicAuth, 2, "M1").has_value());
  a.merge(b);
  EXPECT_EQ(a.severities(IssueKind::BasicAuth), (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(a.absent_count(), 1u);
  EXPECT_THROW(a.merge(b), StatsError);

  auto built = build_detection_matrix({{IssueKind::CleanPath, 4, report("E3", ChangeClass::SmallRegression)}});
  EXPECT_EQ(built.at(IssueKind::CleanPath, 4, "E3"), ChangeClass::SmallRegression);
  EXPECT_EQ(built.issues(), (std::vector<IssueKind>{IssueKind::CleanPath}));
}

}  // namespace
}  // namespace perflab::stats
