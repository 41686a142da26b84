#pragma once

// Split-conformal building blocks: conformity scores, finite-sample corrected
// quantiles and prediction-set constructors. Everything here is a pure
// function of its arguments.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "fedconf/score_matrix.hpp"

namespace fedconf {

enum class ScoreMethod {
  Aps,  // cumulative descending mass up to and including the true class
  Lac,  // 1 - score of the true class
};

std::string_view to_string(ScoreMethod method);
/// Accepts "aps" / "lac" (case-sensitive); throws Error{InvalidSpec}.
ScoreMethod parse_score_method(std::string_view text);

/// Slack used when comparing cumulative probability mass against a threshold.
inline constexpr double kMassTolerance = 1e-9;

struct ConformityScores {
  std::vector<double> values;
  ScoreMethod method = ScoreMethod::Aps;
};

struct QuantileEstimate {
  double qhat = 0.0;
  Alpha alpha{0.1};
  std::size_t n_calibration = 0;
  /// ceil((n + 1)(1 - alpha)) / n; may exceed 1 for tiny n.
  double level = 0.0;
  ScoreMethod method = ScoreMethod::Aps;
};

struct PredictionSet {
  /// Distinct class indices, descending by score (ties by ascending index).
  std::vector<ClassIndex> members;
  std::size_t example_index = 0;

  std::size_t size() const noexcept { return members.size(); }
  bool contains(ClassIndex label) const;
};

/// Class indices of `row` sorted by descending score, ties broken by
/// ascending index.
std::vector<ClassIndex> descending_order(std::span<const double> row);

ConformityScores aps_conformity_scores(const ScoreMatrix& calib);
ConformityScores lac_conformity_scores(const ScoreMatrix& calib);
ConformityScores conformity_scores(const ScoreMatrix& calib, ScoreMethod method);

/// 1-based rank of the order statistic used as the quantile, before clamping.
std::size_t quantile_rank(std::size_t n, Alpha alpha);
double quantile_level(std::size_t n, Alpha alpha);

/// k-th smallest score with k = ceil((N + 1)(1 - alpha)), clamped to the
/// maximum when k > N. No interpolation. Scores must lie in [0, 1]
/// (Error{InvalidRow} otherwise).
QuantileEstimate calibrate_quantile(const ConformityScores& scores, Alpha alpha);

/// Classes in descending order while their cumulative mass stays <= qhat;
/// never empty (the argmax is always kept).
PredictionSet aps_prediction_set(std::span<const double> row, double qhat);
PredictionSet aps_prediction_set(std::span<const double> row,
                                 const QuantileEstimate& qhat);

/// {y : score_y > 1 - qhat}, falling back to {argmax} when empty.
PredictionSet lac_prediction_set(std::span<const double> row, double qhat);
PredictionSet lac_prediction_set(std::span<const double> row,
                                 const QuantileEstimate& qhat);

/// Uncalibrated baseline: adds classes by descending score until the
/// cumulative mass reaches 1 - alpha (the crossing class is included).
PredictionSet naive_prediction_set(std::span<const double> row, Alpha alpha);

/// Dispatches to the APS or LAC constructor.
PredictionSet calibrated_prediction_set(std::span<const double> row, double qhat,
                                        ScoreMethod method);

/// Natural-log Shannon entropy with 0 log 0 = 0.
double class_entropy(std::span<const double> row);

}  // namespace fedconf
