#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fedconf {

using ClassIndex = std::size_t;

/// Maximum allowed deviation of a row sum from 1.
inline constexpr double kSimplexTolerance = 1e-6;

/// Throws Error{InvalidRow} unless `row` has at least two entries, every entry
/// in [0, 1], and a sum within kSimplexTolerance of 1.
void validate_row(std::span<const double> row);

/// N x C matrix of per-example class probabilities, row-major, with optional
/// labels. Rows are validated on construction and never renormalized.
class ScoreMatrix {
 public:
  /// Empty placeholder: zero rows, zero classes.
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t classes, std::vector<double> probs,
              std::optional<std::vector<ClassIndex>> labels = std::nullopt);

  static ScoreMatrix from_rows(
      const std::vector<std::vector<double>>& rows,
      std::optional<std::vector<ClassIndex>> labels = std::nullopt);

  /// Stacks matrices vertically. All inputs must share the class count; the
  /// result is labeled only if every input is.
  static ScoreMatrix concat(std::span<const ScoreMatrix> parts);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t classes() const noexcept { return classes_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {probs_.data() + i * classes_, classes_};
  }
  const std::vector<double>& probs() const noexcept { return probs_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  /// Throws Error{MissingLabels} on an unlabeled matrix.
  const std::vector<ClassIndex>& labels() const;

  /// Copy with replaced labels (validated against the class count).
  ScoreMatrix with_labels(std::vector<ClassIndex> labels) const;
  ScoreMatrix without_labels() const;
  /// Rows picked by index, in the order given.
  ScoreMatrix select(std::span<const std::size_t> indices) const;

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> probs_;
  std::optional<std::vector<ClassIndex>> labels_;
};

/// Miscoverage level, strictly inside (0, 1).
class Alpha {
 public:
  explicit Alpha(double value);
  double value() const noexcept { return value_; }
  friend auto operator<=>(const Alpha&, const Alpha&) = default;

 private:
  double value_;
};

}  // namespace fedconf
