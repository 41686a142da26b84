#include "fedconf/score_matrix.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "fedconf/error.hpp"

namespace fedconf {

void validate_row(std::span<const double> row) {
  if (row.size() < 2) {
    throw Error(ErrorKind::InvalidRow,
                "row has " + std::to_string(row.size()) + " classes, need at least 2");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    const double p = row[c];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::InvalidRow,
                  "score for class " + std::to_string(c) + " is outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw Error(ErrorKind::InvalidRow, "row sums to " + std::to_string(sum));
  }
}

namespace {

void check_labels(const std::vector<ClassIndex>& labels, std::size_t rows,
                  std::size_t classes) {
  if (labels.size() != rows) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(labels.size()) +
                                               " labels for " + std::to_string(rows) +
                                               " rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw Error(ErrorKind::LabelOutOfRange,
                  "row " + std::to_string(i) + " has label " +
                      std::to_string(labels[i]) + " with " + std::to_string(classes) +
                      " classes");
    }
  }
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::size_t classes, std::vector<double> probs,
                         std::optional<std::vector<ClassIndex>> labels)
    : classes_(classes), probs_(std::move(probs)), labels_(std::move(labels)) {
  if (classes_ < 2) {
    throw Error(ErrorKind::InvalidRow, "a score matrix needs at least 2 classes");
  }
  if (probs_.size() % classes_ != 0) {
    throw Error(ErrorKind::LengthMismatch, "probability buffer is not a multiple of " +
                                               std::to_string(classes_));
  }
  rows_ = probs_.size() / classes_;
  for (std::size_t i = 0; i < rows_; ++i) {
    try {
      validate_row(row(i));
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidRow, "row " + std::to_string(i) + ": " + e.what());
    }
  }
  if (labels_) check_labels(*labels_, rows_, classes_);
}

ScoreMatrix ScoreMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                   std::optional<std::vector<ClassIndex>> labels) {
  if (rows.empty()) {
    throw Error(ErrorKind::EmptyInput, "cannot infer the class count from zero rows");
  }
  const std::size_t classes = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * classes);
  for (const auto& r : rows) {
    if (r.size() != classes) {
      throw Error(ErrorKind::ClassCountMismatch, "ragged rows");
    }
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return ScoreMatrix(classes, std::move(flat), std::move(labels));
}

ScoreMatrix ScoreMatrix::concat(std::span<const ScoreMatrix> parts) {
  if (parts.empty()) throw Error(ErrorKind::EmptyInput, "nothing to concatenate");
  const std::size_t classes = parts.front().classes();
  bool labeled = true;
  std::vector<double> probs;
  std::vector<ClassIndex> labels;
  for (const auto& part : parts) {
    if (part.classes() != classes) {
      throw Error(ErrorKind::ClassCountMismatch, "cannot stack " +
                                                     std::to_string(part.classes()) +
                                                     " classes onto " +
                                                     std::to_string(classes));
    }
    probs.insert(probs.end(), part.probs_.begin(), part.probs_.end());
    labeled = labeled && part.has_labels();
    if (labeled) labels.insert(labels.end(), part.labels_->begin(), part.labels_->end());
  }
  if (!labeled) return ScoreMatrix(classes, std::move(probs));
  return ScoreMatrix(classes, std::move(probs), std::move(labels));
}

const std::vector<ClassIndex>& ScoreMatrix::labels() const {
  if (!labels_) throw Error(ErrorKind::MissingLabels, "score matrix is unlabeled");
  return *labels_;
}

ScoreMatrix ScoreMatrix::with_labels(std::vector<ClassIndex> labels) const {
  check_labels(labels, rows_, classes_);
  ScoreMatrix copy = *this;
  copy.labels_ = std::move(labels);
  return copy;
}

ScoreMatrix ScoreMatrix::without_labels() const {
  ScoreMatrix copy = *this;
  copy.labels_.reset();
  return copy;
}

ScoreMatrix ScoreMatrix::select(std::span<const std::size_t> indices) const {
  ScoreMatrix out = *this;
  out.rows_ = indices.size();
  out.probs_.clear();
  out.probs_.reserve(indices.size() * classes_);
  if (out.labels_) out.labels_->clear();
  for (const std::size_t i : indices) {
    if (i >= rows_) {
      throw Error(ErrorKind::LengthMismatch, "row index " + std::to_string(i) +
                                                 " out of range");
    }
    const auto r = row(i);
    out.probs_.insert(out.probs_.end(), r.begin(), r.end());
    if (labels_) out.labels_->push_back((*labels_)[i]);
  }
  return out;
}

Alpha::Alpha(double value) : value_(value) {
  if (!(value > 0.0 && value < 1.0)) {
    throw Error(ErrorKind::InvalidAlpha,
                "alpha must lie in (0, 1), got " + std::to_string(value));
  }
}

}  // namespace fedconf
