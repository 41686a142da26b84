#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fedconf/score_matrix.hpp"

namespace fedconf {

/// Parameters of the Dirichlet score generator.
///
/// Each row draws p ~ Dirichlet(concentration * w), where w are the class
/// weights rescaled to mean 1 (all ones when absent). The label is drawn from
/// p; the reported scores are p^(1/temperature), renormalized. temperature = 1
/// therefore yields perfectly calibrated scores, temperature < 1 overconfident
/// ones.
struct GeneratorSpec {
  std::size_t n_examples = 1000;
  std::size_t n_classes = 9;
  double concentration = 1.0;
  double temperature = 1.0;
  std::optional<std::vector<double>> class_weights;
  std::uint64_t seed = 0;
};

/// Throws Error{InvalidSpec} on non-positive fields or a weights vector of
/// the wrong length.
void validate(const GeneratorSpec& spec);

/// Labeled matrix of spec.n_examples i.i.d. rows. Row i depends only on
/// (spec.seed, i), so output is independent of how rows are scheduled.
ScoreMatrix generate(const GeneratorSpec& spec);

struct SyntheticSplit {
  std::vector<ScoreMatrix> calibration;
  ScoreMatrix test;
};

/// Generates k * calib_per_client + n_test rows from `spec` (its n_examples is
/// ignored) and cuts them into k calibration blocks followed by the test block.
SyntheticSplit split_synthetic(const GeneratorSpec& spec, std::size_t k,
                               std::size_t calib_per_client, std::size_t n_test);

}  // namespace fedconf
