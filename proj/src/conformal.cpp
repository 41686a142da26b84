#include "fedconf/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedconf/error.hpp"

namespace fedconf {

std::string_view to_string(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::Aps: return "aps";
    case ScoreMethod::Lac: return "lac";
  }
  return "unknown";
}

ScoreMethod parse_score_method(std::string_view text) {
  if (text == "aps") return ScoreMethod::Aps;
  if (text == "lac") return ScoreMethod::Lac;
  throw Error(ErrorKind::InvalidSpec, "unknown score method '" + std::string(text) + "'");
}

bool PredictionSet::contains(ClassIndex label) const {
  return std::find(members.begin(), members.end(), label) != members.end();
}

std::vector<ClassIndex> descending_order(std::span<const double> row) {
  std::vector<ClassIndex> order(row.size());
  std::iota(order.begin(), order.end(), ClassIndex{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](ClassIndex a, ClassIndex b) { return row[a] > row[b]; });
  return order;
}

namespace {

void check_threshold(double qhat) {
  if (!(qhat >= 0.0 && qhat <= 1.0)) {
    throw Error(ErrorKind::InvalidSpec,
                "quantile threshold must lie in [0, 1], got " + std::to_string(qhat));
  }
}

double aps_score(std::span<const double> row, ClassIndex label) {
  // Summation order must match aps_prediction_set so that a row's own score
  // compares equal to itself.
  double cumulative = 0.0;
  for (const ClassIndex c : descending_order(row)) {
    cumulative += row[c];
    if (c == label) break;
  }
  // Rows may sum to a ulp above 1; the mass itself never exceeds 1.
  return std::min(cumulative, 1.0);
}

template <typename ScoreFn>
ConformityScores score_rows(const ScoreMatrix& calib, ScoreMethod method, ScoreFn fn) {
  const auto& labels = calib.labels();
  ConformityScores out;
  out.method = method;
  out.values.reserve(calib.rows());
  for (std::size_t i = 0; i < calib.rows(); ++i) {
    out.values.push_back(fn(calib.row(i), labels[i]));
  }
  return out;
}

}  // namespace

ConformityScores aps_conformity_scores(const ScoreMatrix& calib) {
  return score_rows(calib, ScoreMethod::Aps, aps_score);
}

ConformityScores lac_conformity_scores(const ScoreMatrix& calib) {
  return score_rows(calib, ScoreMethod::Lac,
                    [](std::span<const double> row, ClassIndex label) {
                      return 1.0 - row[label];
                    });
}

ConformityScores conformity_scores(const ScoreMatrix& calib, ScoreMethod method) {
  return method == ScoreMethod::Aps ? aps_conformity_scores(calib)
                                    : lac_conformity_scores(calib);
}

std::size_t quantile_rank(std::size_t n, Alpha alpha) {
  if (n == 0) throw Error(ErrorKind::EmptyCalibration, "quantile of zero scores");
  const double target = static_cast<double>(n + 1) * (1.0 - alpha.value());
  const auto k = static_cast<std::size_t>(std::ceil(target - 1e-9));
  return std::max<std::size_t>(k, 1);
}

double quantile_level(std::size_t n, Alpha alpha) {
  return static_cast<double>(quantile_rank(n, alpha)) / static_cast<double>(n);
}

QuantileEstimate calibrate_quantile(const ConformityScores& scores, Alpha alpha) {
  const std::size_t n = scores.values.size();
  if (n == 0) throw Error(ErrorKind::EmptyCalibration, "no conformity scores");
  for (const double s : scores.values) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(ErrorKind::InvalidRow,
                  "conformity score " + std::to_string(s) + " outside [0, 1]");
    }
  }
  const std::size_t k = std::min(quantile_rank(n, alpha), n);
  std::vector<double> work = scores.values;
  auto kth = work.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(work.begin(), kth, work.end());

  QuantileEstimate est;
  est.qhat = *kth;
  est.alpha = alpha;
  est.n_calibration = n;
  est.level = quantile_level(n, alpha);
  est.method = scores.method;
  return est;
}

PredictionSet aps_prediction_set(std::span<const double> row, double qhat) {
  validate_row(row);
  check_threshold(qhat);
  const auto order = descending_order(row);
  PredictionSet set;
  double cumulative = 0.0;
  for (const ClassIndex c : order) {
    cumulative += row[c];
    if (cumulative > qhat + kMassTolerance) break;
    set.members.push_back(c);
  }
  if (set.members.empty()) set.members.push_back(order.front());
  return set;
}

PredictionSet aps_prediction_set(std::span<const double> row,
                                 const QuantileEstimate& qhat) {
  return aps_prediction_set(row, qhat.qhat);
}

PredictionSet lac_prediction_set(std::span<const double> row, double qhat) {
  validate_row(row);
  check_threshold(qhat);
  const double threshold = 1.0 - qhat;
  const auto order = descending_order(row);
  PredictionSet set;
  for (const ClassIndex c : order) {
    if (row[c] > threshold) set.members.push_back(c);
  }
  if (set.members.empty()) set.members.push_back(order.front());
  return set;
}

PredictionSet lac_prediction_set(std::span<const double> row,
                                 const QuantileEstimate& qhat) {
  return lac_prediction_set(row, qhat.qhat);
}

PredictionSet naive_prediction_set(std::span<const double> row, Alpha alpha) {
  validate_row(row);
  const double target = 1.0 - alpha.value();
  PredictionSet set;
  double cumulative = 0.0;
  for (const ClassIndex c : descending_order(row)) {
    cumulative += row[c];
    set.members.push_back(c);
    if (cumulative >= target - kMassTolerance) break;
  }
  return set;
}

PredictionSet calibrated_prediction_set(std::span<const double> row, double qhat,
                                        ScoreMethod method) {
  return method == ScoreMethod::Aps ? aps_prediction_set(row, qhat)
                                    : lac_prediction_set(row, qhat);
}

double class_entropy(std::span<const double> row) {
  validate_row(row);
  double h = 0.0;
  for (const double p : row) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace fedconf
