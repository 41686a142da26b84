// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fedconf/cli.hpp"
#include "fedconf/harness.hpp"
#include "fedconf/io.hpp"
#include "test_support.hpp"

using namespace fedconf;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::uint64_t> seed_range(std::size_t n, std::uint64_t first = 0) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), first);
  return s;
}

void quantile_oracle_equivalence() {
  Stopwatch clock;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> size(1, 100);
  std::uniform_int_distribution<int> percent(1, 50);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(rng);
    const int pct = percent(rng);
    const std::size_t classes = 2 + rng() % 9;
    std::vector<std::vector<double>> rows;
    std::vector<ClassIndex> labels;
    std::vector<double> oracle_scores;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(testing::random_row(rng, classes, trial % 4 == 0));
      labels.push_back(rng() % classes);
      oracle_scores.push_back(testing::aps_score_oracle(rows.back(), labels.back()));
    }
    const auto calib = ScoreMatrix::from_rows(rows, labels);
    const Alpha alpha(pct / 100.0);
    // Same score vector on both sides isolates the quantile step.
    const auto scores = aps_conformity_scores(calib);
    const double got = calibrate_quantile(scores, alpha).qhat;
    const double want = testing::quantile_oracle(scores.values, pct);
    if (got != want) ++mismatches;
    if (std::abs(scores.values.front() - oracle_scores.front()) > 1e-12) ++mismatches;
  }
  const double t = clock.seconds();
  report(mismatches == 0 && t < 5.0, "quantile_oracle_equivalence",
         fmt("1000 sets, %zu mismatches, %.2fs (limit 5s)", mismatches, t));
}

void worked_example() {
  const std::vector<double> row{0.3, 0.1, 0.2, 0.4};
  const std::vector<ClassIndex> at90{3, 0, 2};
  const std::vector<ClassIndex> at70{3, 0};
  const auto aps90 = aps_prediction_set(row, 0.9).members;
  const auto aps70 = aps_prediction_set(row, 0.7).members;
  const auto naive90 = naive_prediction_set(row, Alpha(0.1)).members;
  const auto naive70 = naive_prediction_set(row, Alpha(0.3)).members;
  const bool ok = aps90 == at90 && aps70 == at70 && naive90 == at90 && naive70 == at70;
  report(ok, "worked_example",
         fmt("aps@0.9 size %zu, aps@0.7 size %zu, naive@90%% size %zu, naive@70%% size %zu",
             aps90.size(), aps70.size(), naive90.size(), naive70.size()));
}

void marginal_coverage() {
  Stopwatch clock;
  SyntheticScenario s;
  s.generator.n_classes = 9;
  s.n_institutions = 1;
  s.calib_per_client = 1000;
  s.n_test = 1000;
  s.alphas = {Alpha(0.05), Alpha(0.1), Alpha(0.2)};
  s.seeds = seed_range(20);
  s.methods = {SetMethod::LocalAps};
  const auto r = run_synthetic_experiment(s);
  const double t = clock.seconds();
  bool ok = t < 60.0;
  std::string detail;
  for (const double a : {0.05, 0.1, 0.2}) {
    const double cov = r.at(SetMethod::LocalAps, a).coverage;
    const double lo = 1.0 - a - 0.02;
    const double hi = 1.0 - a + 1.0 / 2001.0 + 0.02;
    ok = ok && cov >= lo && cov <= hi;
    detail += fmt("alpha=%.2f coverage %.4f in [%.4f, %.4f]; ", a, cov, lo, hi);
  }
  report(ok, "marginal_coverage", detail + fmt("%.2fs (limit 60s)", t));
}

void federated_coverage_and_variance() {
  Stopwatch clock;
  SyntheticScenario s;
  s.generator.n_classes = 9;
  s.n_institutions = 4;
  s.calib_per_client = 500;
  s.n_test = 1000;
  s.alphas = {Alpha(0.1)};
  s.seeds = seed_range(50, 1000);
  s.methods = {SetMethod::LocalAps, SetMethod::FederatedAps};
  const auto r = run_synthetic_experiment(s);
  const double t = clock.seconds();
  const auto& fed = r.at(SetMethod::FederatedAps, 0.1);
  const auto& local = r.at(SetMethod::LocalAps, 0.1);
  const double var_fed = fed.std_qhat * fed.std_qhat;
  const double var_local = local.std_qhat * local.std_qhat;
  const bool ok = fed.coverage >= 0.86 && fed.coverage <= 0.94 && var_fed < var_local && t < 120.0;
  report(ok, "federated_coverage_and_variance",
         fmt("coverage %.4f in [0.86, 0.94]; var(qhat) federated %.3g < local %.3g; %.2fs "
             "(limit 120s)",
             fed.coverage, var_fed, var_local, t));
}

void naive_miscalibration() {
  SyntheticScenario s;
  s.generator.n_classes = 9;
  s.generator.temperature = 0.3;
  s.n_institutions = 1;
  s.calib_per_client = 1000;
  s.n_test = 10000;
  s.alphas = {Alpha(0.1)};
  s.seeds = seed_range(5);
  s.methods = {SetMethod::Naive, SetMethod::LocalAps};
  const auto r = run_synthetic_experiment(s);
  const double naive = r.at(SetMethod::Naive, 0.1).coverage;
  const double aps = r.at(SetMethod::LocalAps, 0.1).coverage;
  report(naive <= 0.87 && aps >= 0.88, "naive_miscalibration",
         fmt("temperature 0.3: naive coverage %.4f (<= 0.87), LOCAL_APS %.4f (>= 0.88)", naive,
             aps));
}

void nesting_and_monotonicity() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t classes = 2 + rng() % 15;
    const auto row = testing::random_row(rng, classes, trial % 3 == 0);
    double q1 = unit(rng), q2 = unit(rng);
    if (q1 > q2) std::swap(q1, q2);
    // Larger threshold (smaller alpha) must give a superset.
    if (!testing::is_superset(aps_prediction_set(row, q2).members,
                              aps_prediction_set(row, q1).members)) {
      ++violations;
    }
    if (!testing::is_superset(lac_prediction_set(row, q2).members,
                              lac_prediction_set(row, q1).members)) {
      ++violations;
    }
    const Alpha small(0.01 + 0.49 * unit(rng));
    const Alpha large(small.value() + (0.99 - small.value()) * unit(rng));
    if (!testing::is_superset(naive_prediction_set(row, small).members,
                              naive_prediction_set(row, large).members)) {
      ++violations;
    }
  }

  // Cardinality across an alpha grid with calibrated thresholds.
  GeneratorSpec spec;
  spec.n_examples = 2000;
  spec.seed = 5;
  const auto data = generate(spec);
  std::vector<std::size_t> idx(1000);
  std::iota(idx.begin(), idx.end(), 0);
  const auto calib = data.select(idx);
  std::iota(idx.begin(), idx.end(), 1000);
  const auto test = data.select(idx);
  const auto scores = aps_conformity_scores(calib);
  std::vector<double> grid;
  for (int p = 1; p <= 50; ++p) grid.push_back(p / 100.0);
  std::size_t grid_violations = 0;
  for (std::size_t i = 0; i < test.rows(); ++i) {
    std::size_t previous = SIZE_MAX;
    for (const double a : grid) {
      const auto q = calibrate_quantile(scores, Alpha(a));
      const std::size_t size = aps_prediction_set(test.row(i), q).size();
      if (size > previous) ++grid_violations;
      previous = size;
    }
  }
  report(violations == 0 && grid_violations == 0, "nesting_and_monotonicity",
         fmt("%zu nesting violations over 1000 rows x 3 rules, %zu cardinality violations "
             "over %zu rows x %zu alphas",
             violations, grid_violations, test.rows(), grid.size()));
}

void noise_robustness() {
  SyntheticScenario s;
  s.generator.n_classes = 9;
  s.n_institutions = 4;
  s.calib_per_client = 500;
  s.n_test = 1000;
  s.noise_fractions = {0.0, 0.3, 0.3, 0.3};
  s.alphas = {Alpha(0.1)};
  s.seeds = seed_range(20, 500);
  s.methods = {SetMethod::LocalAps, SetMethod::FederatedAps};
  const auto r = run_synthetic_experiment(s);
  const auto& fed = r.at(SetMethod::FederatedAps, 0.1);
  const auto& local = r.at(SetMethod::LocalAps, 0.1);
  report(fed.coverage >= 0.88, "noise_robustness",
         fmt("FEDERATED_APS coverage %.4f (>= 0.88); cardinality federated %.3f, clean local "
             "%.3f (reported only)",
             fed.coverage, fed.mean_cardinality, local.mean_cardinality));
}

void entropy_correlation_direction() {
  // Half easy (peaked) rows, half hard (flat) rows, interleaved.
  const auto mixed = [](std::uint64_t seed, std::size_t n) {
    GeneratorSpec easy;
    easy.n_examples = n / 2;
    easy.concentration = 0.2;
    easy.seed = seed;
    GeneratorSpec hard = easy;
    hard.concentration = 5.0;
    hard.seed = seed + 1;
    const std::vector<ScoreMatrix> parts{generate(easy), generate(hard)};
    const auto joined = ScoreMatrix::concat(parts);
    std::vector<std::size_t> order(joined.rows());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return joined.select(order);
  };
  ExperimentPlan plan;
  Institution inst;
  inst.calibration = mixed(10, 2000);
  plan.federation.institutions.push_back(inst);
  plan.test = mixed(20, 2000);
  plan.alphas = {Alpha(0.1)};
  plan.seeds = {0};
  plan.methods = {SetMethod::LocalAps};
  plan.percentiles = {50.0, 90.0};
  const auto r = run_experiment(plan).at(SetMethod::LocalAps, 0.1);
  const bool ok = !r.rho_degenerate && r.spearman_rho > 0.3 &&
                  r.entropy_buckets[1] >= r.entropy_buckets[0];
  report(ok, "entropy_correlation",
         fmt("spearman rho %.4f (> 0.3); mean size at entropy >= p90 %.3f, >= p50 %.3f",
             r.spearman_rho, r.entropy_buckets[1], r.entropy_buckets[0]));
}

void determinism() {
  const auto dir = testing::scratch_dir("acceptance_determinism");
  const auto call = [](std::vector<std::string> args) {
    args.insert(args.begin(), "fedconf");
    std::ostringstream out, err;
    const int code = cli_dispatch(args, out, err);
    if (code != kExitOk) std::fputs(err.str().c_str(), stderr);
    return code;
  };
  const std::string d = dir.string();
  bool ok = call({"synth", "--out-dir", d, "--clients", "4", "--calib-per-client", "500",
                  "--test", "1000", "--noise", "0.3", "--trials", "5", "--seed", "7"}) == kExitOk;
  ok = ok && call({"evaluate", "--manifest", d + "/manifest.json", "--out", d + "/a.json"}) ==
                 kExitOk;
  ok = ok && call({"evaluate", "--manifest", d + "/manifest.json", "--out", d + "/b.json"}) ==
                 kExitOk;
  const bool same = ok && read_text_file(dir / "a.json") == read_text_file(dir / "b.json");
  report(same, "determinism",
         ok ? fmt("two evaluate runs %s byte-identical (%zu bytes)", same ? "are" : "are NOT",
                  read_text_file(dir / "a.json").size())
            : std::string("CLI failed"));
}

}  // namespace

int main() {
  const auto guarded = [](const char* name, void (*fn)()) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  };
  guarded("quantile_oracle_equivalence", quantile_oracle_equivalence);
  guarded("worked_example", worked_example);
  guarded("marginal_coverage", marginal_coverage);
  guarded("federated_coverage_and_variance", federated_coverage_and_variance);
  guarded("naive_miscalibration", naive_miscalibration);
  guarded("nesting_and_monotonicity", nesting_and_monotonicity);
  guarded("noise_robustness", noise_robustness);
  guarded("entropy_correlation", entropy_correlation_direction);
  guarded("determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
