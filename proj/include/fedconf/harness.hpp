#pragma once

// Naive vs local vs federated comparison: coverage, cardinality and
// entropy/set-size correlation, aggregated over trial seeds.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedconf/conformal.hpp"
#include "fedconf/federated.hpp"
#include "fedconf/synth.hpp"

namespace fedconf {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

enum class SetMethod { Naive, LocalAps, FederatedAps, LocalLac, FederatedLac };

std::string_view to_string(SetMethod method);
/// Accepts the upper-case names used in reports, e.g. "FEDERATED_APS".
SetMethod parse_set_method(std::string_view text);
std::vector<SetMethod> all_set_methods();

double empirical_coverage(std::span<const PredictionSet> sets,
                          std::span<const ClassIndex> labels);
double mean_cardinality(std::span<const PredictionSet> sets);

/// Linear interpolation between order statistics; p in [0, 100].
double percentile(std::span<const double> values, double p);

struct RankCorrelation {
  double rho = 0.0;
  /// Set when either input is constant; rho is then reported as 0.
  bool degenerate = false;
};

/// Spearman correlation with average ranks for ties.
RankCorrelation spearman(std::span<const double> x, std::span<const double> y);

struct EntropyCorrelation {
  /// Mean set size over rows whose entropy is >= the p-th percentile, one
  /// entry per requested percentile.
  std::vector<double> bucket_means;
  RankCorrelation correlation;
};

EntropyCorrelation entropy_correlation(const ScoreMatrix& scores,
                                       std::span<const PredictionSet> sets,
                                       std::span<const double> percentiles);

struct ExperimentPlan {
  FederationConfig federation;  // alpha/method unused; see alphas/methods
  ScoreMatrix test;
  /// Scores used for entropy instead of `test` (auxiliary classifier).
  std::optional<ScoreMatrix> entropy_source;
  std::vector<Alpha> alphas;
  std::size_t n_trials = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<SetMethod> methods;
  std::vector<double> percentiles{50.0, 75.0, 90.0};
  std::size_t local_institution = 0;
};

/// Throws Error{InvalidPlan} describing the first broken invariant.
void validate(const ExperimentPlan& plan);

struct MethodResult {
  SetMethod method = SetMethod::Naive;
  double alpha = 0.0;
  double coverage = 0.0;
  double std_coverage = 0.0;
  double mean_cardinality = 0.0;
  double std_cardinality = 0.0;
  double mean_qhat = 0.0;
  double std_qhat = 0.0;
  std::vector<double> entropy_buckets;
  double spearman_rho = 0.0;
  bool rho_degenerate = false;

  friend bool operator==(const MethodResult&, const MethodResult&) = default;
};

struct EvaluationReport {
  std::string toolkit_version{kToolkitVersion};
  std::string plan_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<double> percentiles;
  std::string std_basis;
  std::size_t n_test = 0;
  std::size_t n_classes = 0;
  std::size_t n_institutions = 0;
  std::size_t local_institution = 0;
  /// Ordered by method (plan order) then alpha (ascending).
  std::vector<MethodResult> results;

  /// Throws Error{InvalidPlan} when the pair is absent.
  const MethodResult& at(SetMethod method, double alpha) const;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// 16 hex digits of FNV-1a over the plan's full content.
std::string plan_hash(const ExperimentPlan& plan);

/// Per trial seed: institutions are noised with seeds derived from
/// (institution seed, trial seed), local and federated quantiles are
/// calibrated and every method is evaluated on `test` at every alpha.
EvaluationReport run_experiment(const ExperimentPlan& plan);

/// Fresh synthetic data per seed: split_synthetic with generator.seed = seed,
/// institution i noised with noise_fractions[i] (0 when absent).
struct SyntheticScenario {
  GeneratorSpec generator;
  std::size_t n_institutions = 1;
  std::size_t calib_per_client = 1000;
  std::size_t n_test = 1000;
  std::vector<double> noise_fractions;
  std::vector<Alpha> alphas;
  std::vector<std::uint64_t> seeds;
  std::vector<SetMethod> methods;
  std::vector<double> percentiles{50.0, 75.0, 90.0};
};

EvaluationReport run_synthetic_experiment(const SyntheticScenario& scenario);

}  // namespace fedconf
