#include "fedconf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "fedconf/error.hpp"
#include "random.hpp"

namespace fedconf {

std::string_view to_string(SetMethod method) {
  switch (method) {
    case SetMethod::Naive: return "NAIVE";
    case SetMethod::LocalAps: return "LOCAL_APS";
    case SetMethod::FederatedAps: return "FEDERATED_APS";
    case SetMethod::LocalLac: return "LOCAL_LAC";
    case SetMethod::FederatedLac: return "FEDERATED_LAC";
  }
  return "UNKNOWN";
}

SetMethod parse_set_method(std::string_view text) {
  for (const SetMethod m : all_set_methods()) {
    if (text == to_string(m)) return m;
  }
  throw Error(ErrorKind::InvalidPlan, "unknown method '" + std::string(text) + "'");
}

std::vector<SetMethod> all_set_methods() {
  return {SetMethod::Naive, SetMethod::LocalAps, SetMethod::FederatedAps,
          SetMethod::LocalLac, SetMethod::FederatedLac};
}

double empirical_coverage(std::span<const PredictionSet> sets,
                          std::span<const ClassIndex> labels) {
  if (sets.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(sets.size()) + " sets for " +
                                               std::to_string(labels.size()) + " labels");
  }
  if (sets.empty()) throw Error(ErrorKind::EmptyInput, "no prediction sets");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].contains(labels[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sets.size());
}

double mean_cardinality(std::span<const PredictionSet> sets) {
  if (sets.empty()) throw Error(ErrorKind::EmptyInput, "no prediction sets");
  std::size_t total = 0;
  for (const auto& s : sets) total += s.size();
  return static_cast<double>(total) / static_cast<double>(sets.size());
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "percentile of nothing");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * std::clamp(p, 0.0, 100.0) / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

RankCorrelation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::LengthMismatch, "spearman inputs differ in length");
  }
  if (x.empty()) throw Error(ErrorKind::EmptyInput, "spearman of nothing");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {sxy / std::sqrt(sxx * syy), false};
}

namespace {

void check_percentiles(std::span<const double> percentiles) {
  for (const double p : percentiles) {
    if (!(p > 0.0 && p < 100.0)) {
      throw Error(ErrorKind::InvalidPlan,
                  "percentile " + std::to_string(p) + " outside (0, 100)");
    }
  }
}

EntropyCorrelation correlate(std::span<const double> entropy,
                             std::span<const PredictionSet> sets,
                             std::span<const double> percentiles) {
  if (entropy.size() != sets.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(entropy.size()) +
                                               " score rows for " +
                                               std::to_string(sets.size()) + " sets");
  }
  std::vector<double> sizes;
  sizes.reserve(sets.size());
  for (const auto& s : sets) sizes.push_back(static_cast<double>(s.size()));

  EntropyCorrelation out;
  for (const double p : percentiles) {
    const double cut = percentile(entropy, p);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < entropy.size(); ++i) {
      if (entropy[i] >= cut) {
        total += sizes[i];
        ++count;
      }
    }
    out.bucket_means.push_back(count ? total / static_cast<double>(count) : 0.0);
  }
  out.correlation = spearman(entropy, sizes);
  return out;
}

std::vector<double> row_entropies(const ScoreMatrix& scores) {
  std::vector<double> h;
  h.reserve(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) h.push_back(class_entropy(scores.row(i)));
  return h;
}

}  // namespace

EntropyCorrelation entropy_correlation(const ScoreMatrix& scores,
                                       std::span<const PredictionSet> sets,
                                       std::span<const double> percentiles) {
  check_percentiles(percentiles);
  if (scores.rows() != sets.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(scores.rows()) +
                                               " score rows for " +
                                               std::to_string(sets.size()) + " sets");
  }
  return correlate(row_entropies(scores), sets, percentiles);
}

void validate(const ExperimentPlan& plan) {
  const auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidPlan, why); };
  const auto& insts = plan.federation.institutions;
  if (insts.empty()) throw Error(ErrorKind::FederationEmpty, "plan has no institutions");
  for (std::size_t i = 0; i < insts.size(); ++i) {
    if (insts[i].id != i) fail("institution ids must be 0..K-1 in order");
    if (!(insts[i].noise_fraction >= 0.0 && insts[i].noise_fraction <= 1.0)) {
      fail("institution " + std::to_string(i) + " noise fraction outside [0, 1]");
    }
    if (insts[i].calibration.empty()) {
      throw Error(ErrorKind::EmptyCalibration,
                  "institution " + std::to_string(i) + " has no calibration rows");
    }
    if (insts[i].calibration.classes() != plan.test.classes()) {
      throw Error(ErrorKind::ClassCountMismatch,
                  "institution " + std::to_string(i) + " class count differs from test set");
    }
  }
  if (plan.test.empty()) fail("test set is empty");
  if (!plan.test.has_labels()) throw Error(ErrorKind::MissingLabels, "test set is unlabeled");
  if (plan.entropy_source && plan.entropy_source->rows() != plan.test.rows()) {
    fail("entropy source has " + std::to_string(plan.entropy_source->rows()) +
         " rows, test set has " + std::to_string(plan.test.rows()));
  }
  if (plan.alphas.empty()) fail("alpha grid is empty");
  for (std::size_t i = 1; i < plan.alphas.size(); ++i) {
    if (!(plan.alphas[i - 1] < plan.alphas[i])) fail("alpha grid must be strictly increasing");
  }
  if (plan.n_trials == 0) fail("need at least one trial");
  if (plan.seeds.size() != plan.n_trials) fail("seeds length must equal n_trials");
  if (plan.methods.empty()) fail("no methods requested");
  for (std::size_t i = 0; i < plan.methods.size(); ++i) {
    if (std::count(plan.methods.begin(), plan.methods.end(), plan.methods[i]) != 1) {
      fail("method " + std::string(to_string(plan.methods[i])) + " listed twice");
    }
  }
  if (plan.local_institution >= insts.size()) fail("local_institution out of range");
  check_percentiles(plan.percentiles);
}

const MethodResult& EvaluationReport::at(SetMethod method, double alpha) const {
  for (const auto& r : results) {
    if (r.method == method && std::abs(r.alpha - alpha) < 1e-12) return r;
  }
  throw Error(ErrorKind::InvalidPlan, "report has no entry for " +
                                          std::string(to_string(method)) + " at alpha " +
                                          std::to_string(alpha));
}

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      const auto b = static_cast<unsigned char>(v >> (8 * i));
      bytes(&b, 1);
    }
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const ScoreMatrix& m) {
    u64(m.rows());
    u64(m.classes());
    for (const double p : m.probs()) f64(p);
    u64(m.has_labels() ? 1 : 0);
    if (m.has_labels()) {
      for (const ClassIndex y : m.labels()) u64(y);
    }
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return buf;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

constexpr std::string_view kStdBasis =
    "sample standard deviation across trial seeds; seeds vary data draws and label "
    "noise, not model weights";

struct TrialCell {
  double coverage = 0.0;
  double cardinality = 0.0;
  double qhat = 0.0;
  std::vector<double> buckets;
  RankCorrelation correlation;
};

struct TrialInputs {
  const std::vector<Institution>* institutions;
  const ScoreMatrix* test;
  const std::vector<double>* entropy;
  std::span<const Alpha> alphas;
  std::span<const SetMethod> methods;
  std::span<const double> percentiles;
  std::size_t local_institution;
};

bool uses(std::span<const SetMethod> methods, SetMethod a, SetMethod b) {
  return std::find(methods.begin(), methods.end(), a) != methods.end() ||
         std::find(methods.begin(), methods.end(), b) != methods.end();
}

// Cells in [method][alpha] order.
std::vector<TrialCell> evaluate_trial(const TrialInputs& in, std::uint64_t trial_seed) {
  FederationConfig config;
  config.institutions = *in.institutions;
  for (auto& inst : config.institutions) {
    inst.rng_seed = detail::derive_seed({inst.rng_seed, detail::kTrialStream, trial_seed});
  }

  const std::size_t n_alpha = in.alphas.size();
  // thresholds[score method][alpha] = {local, federated}
  std::vector<std::vector<std::pair<double, double>>> thresholds(
      2, std::vector<std::pair<double, double>>(n_alpha));
  const std::pair<ScoreMethod, bool> score_methods[] = {
      {ScoreMethod::Aps, uses(in.methods, SetMethod::LocalAps, SetMethod::FederatedAps)},
      {ScoreMethod::Lac, uses(in.methods, SetMethod::LocalLac, SetMethod::FederatedLac)}};
  for (std::size_t s = 0; s < 2; ++s) {
    if (!score_methods[s].second) continue;
    config.method = score_methods[s].first;
    for (std::size_t a = 0; a < n_alpha; ++a) {
      config.alpha = in.alphas[a];
      const FederatedQuantile fq = federated_quantile(config);
      thresholds[s][a] = {fq.per_client[in.local_institution].qhat, fq.qhat_global};
    }
  }

  const ScoreMatrix& test = *in.test;
  const auto& labels = test.labels();
  std::vector<TrialCell> cells;
  cells.reserve(in.methods.size() * n_alpha);
  std::vector<PredictionSet> sets(test.rows());
  for (const SetMethod method : in.methods) {
    for (std::size_t a = 0; a < n_alpha; ++a) {
      TrialCell cell;
      const Alpha alpha = in.alphas[a];
      if (method == SetMethod::Naive) {
        cell.qhat = 1.0 - alpha.value();
        for (std::size_t i = 0; i < test.rows(); ++i) {
          sets[i] = naive_prediction_set(test.row(i), alpha);
        }
      } else {
        const bool aps = method == SetMethod::LocalAps || method == SetMethod::FederatedAps;
        const bool federated =
            method == SetMethod::FederatedAps || method == SetMethod::FederatedLac;
        const auto& t = thresholds[aps ? 0 : 1][a];
        cell.qhat = federated ? t.second : t.first;
        const ScoreMethod sm = aps ? ScoreMethod::Aps : ScoreMethod::Lac;
        for (std::size_t i = 0; i < test.rows(); ++i) {
          sets[i] = calibrated_prediction_set(test.row(i), cell.qhat, sm);
        }
      }
      for (std::size_t i = 0; i < sets.size(); ++i) sets[i].example_index = i;
      cell.coverage = empirical_coverage(sets, labels);
      cell.cardinality = mean_cardinality(sets);
      auto corr = correlate(*in.entropy, sets, in.percentiles);
      cell.buckets = std::move(corr.bucket_means);
      cell.correlation = corr.correlation;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

template <typename TrialFn>
std::vector<std::vector<TrialCell>> run_trials(std::size_t n, TrialFn fn) {
  std::vector<std::vector<TrialCell>> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t t = next++; t < n; t = next++) {
      try {
        out[t] = fn(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n);
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  // Shifted by the first sample so identical trials give exactly zero spread.
  const double n = static_cast<double>(v.size());
  const double shift = v.front();
  double offset = 0.0;
  for (const double x : v) offset += x - shift;
  offset /= n;
  const double mean = shift + offset;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double x : v) ss += (x - shift - offset) * (x - shift - offset);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::vector<MethodResult> aggregate(const std::vector<std::vector<TrialCell>>& trials,
                                    std::span<const SetMethod> methods,
                                    std::span<const Alpha> alphas,
                                    std::size_t n_percentiles) {
  std::vector<MethodResult> results;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const std::size_t cell = m * alphas.size() + a;
      std::vector<double> cov, card, qhat, rho;
      std::vector<double> buckets(n_percentiles, 0.0);
      bool degenerate = false;
      for (const auto& trial : trials) {
        const TrialCell& c = trial[cell];
        cov.push_back(c.coverage);
        card.push_back(c.cardinality);
        qhat.push_back(c.qhat);
        rho.push_back(c.correlation.rho);
        degenerate = degenerate || c.correlation.degenerate;
        for (std::size_t p = 0; p < n_percentiles; ++p) buckets[p] += c.buckets[p];
      }
      for (double& b : buckets) b /= static_cast<double>(trials.size());

      MethodResult r;
      r.method = methods[m];
      r.alpha = alphas[a].value();
      std::tie(r.coverage, r.std_coverage) = mean_and_std(cov);
      std::tie(r.mean_cardinality, r.std_cardinality) = mean_and_std(card);
      std::tie(r.mean_qhat, r.std_qhat) = mean_and_std(qhat);
      r.entropy_buckets = std::move(buckets);
      r.spearman_rho = mean_and_std(rho).first;
      r.rho_degenerate = degenerate;
      results.push_back(std::move(r));
    }
  }
  return results;
}

}  // namespace

std::string plan_hash(const ExperimentPlan& plan) {
  Fnv1a h;
  h.u64(plan.federation.institutions.size());
  for (const auto& inst : plan.federation.institutions) {
    h.u64(inst.id);
    h.f64(inst.noise_fraction);
    h.u64(inst.rng_seed);
    h.matrix(inst.calibration);
  }
  h.matrix(plan.test);
  h.u64(plan.entropy_source ? 1 : 0);
  if (plan.entropy_source) h.matrix(*plan.entropy_source);
  for (const Alpha a : plan.alphas) h.f64(a.value());
  h.u64(plan.n_trials);
  for (const auto s : plan.seeds) h.u64(s);
  for (const SetMethod m : plan.methods) h.u64(static_cast<std::uint64_t>(m));
  for (const double p : plan.percentiles) h.f64(p);
  h.u64(plan.local_institution);
  return h.hex();
}

EvaluationReport run_experiment(const ExperimentPlan& plan) {
  validate(plan);
  const auto entropy = row_entropies(plan.entropy_source ? *plan.entropy_source : plan.test);
  const TrialInputs inputs{&plan.federation.institutions, &plan.test, &entropy,
                           plan.alphas, plan.methods, plan.percentiles,
                           plan.local_institution};
  const auto trials = run_trials(
      plan.n_trials, [&](std::size_t t) { return evaluate_trial(inputs, plan.seeds[t]); });

  EvaluationReport report;
  report.plan_hash = plan_hash(plan);
  report.seeds = plan.seeds;
  report.percentiles = plan.percentiles;
  report.std_basis = kStdBasis;
  report.n_test = plan.test.rows();
  report.n_classes = plan.test.classes();
  report.n_institutions = plan.federation.institutions.size();
  report.local_institution = plan.local_institution;
  report.results = aggregate(trials, plan.methods, plan.alphas, plan.percentiles.size());
  return report;
}

EvaluationReport run_synthetic_experiment(const SyntheticScenario& scenario) {
  const auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidPlan, why); };
  validate(scenario.generator);
  if (scenario.n_institutions == 0) {
    throw Error(ErrorKind::FederationEmpty, "scenario has no institutions");
  }
  if (!scenario.noise_fractions.empty() &&
      scenario.noise_fractions.size() != scenario.n_institutions) {
    fail("noise_fractions must be empty or have one entry per institution");
  }
  if (scenario.seeds.empty()) fail("scenario has no seeds");

  const auto run_one = [&](std::size_t t) {
    const std::uint64_t seed = scenario.seeds[t];
    GeneratorSpec spec = scenario.generator;
    spec.seed = seed;
    auto split = split_synthetic(spec, scenario.n_institutions, scenario.calib_per_client,
                                 scenario.n_test);
    ExperimentPlan plan;
    for (std::size_t i = 0; i < scenario.n_institutions; ++i) {
      Institution inst;
      inst.id = i;
      inst.calibration = std::move(split.calibration[i]);
      inst.noise_fraction =
          scenario.noise_fractions.empty() ? 0.0 : scenario.noise_fractions[i];
      inst.rng_seed = detail::derive_seed({seed, i});
      plan.federation.institutions.push_back(std::move(inst));
    }
    plan.test = std::move(split.test);
    plan.alphas = scenario.alphas;
    plan.n_trials = 1;
    plan.seeds = {seed};
    plan.methods = scenario.methods;
    plan.percentiles = scenario.percentiles;
    validate(plan);
    const auto entropy = row_entropies(plan.test);
    const TrialInputs inputs{&plan.federation.institutions, &plan.test, &entropy,
                             plan.alphas, plan.methods, plan.percentiles, 0};
    return evaluate_trial(inputs, seed);
  };
  const auto trials = run_trials(scenario.seeds.size(), run_one);

  Fnv1a h;
  const auto& g = scenario.generator;
  h.u64(g.n_classes);
  h.f64(g.concentration);
  h.f64(g.temperature);
  if (g.class_weights) {
    for (const double w : *g.class_weights) h.f64(w);
  }
  h.u64(scenario.n_institutions);
  h.u64(scenario.calib_per_client);
  h.u64(scenario.n_test);
  for (const double f : scenario.noise_fractions) h.f64(f);
  for (const Alpha a : scenario.alphas) h.f64(a.value());
  for (const auto s : scenario.seeds) h.u64(s);
  for (const SetMethod m : scenario.methods) h.u64(static_cast<std::uint64_t>(m));
  for (const double p : scenario.percentiles) h.f64(p);

  EvaluationReport report;
  report.plan_hash = h.hex();
  report.seeds = scenario.seeds;
  report.percentiles = scenario.percentiles;
  report.std_basis = kStdBasis;
  report.n_test = scenario.n_test;
  report.n_classes = g.n_classes;
  report.n_institutions = scenario.n_institutions;
  report.results =
      aggregate(trials, scenario.methods, scenario.alphas, scenario.percentiles.size());
  return report;
}

}  // namespace fedconf
