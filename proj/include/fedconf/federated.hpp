#pragma once

// In-process simulation of K institutions that each calibrate a conformal
// quantile on private data and share only that scalar.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedconf/conformal.hpp"
#include "fedconf/score_matrix.hpp"

namespace fedconf {

struct Institution {
  std::size_t id = 0;
  ScoreMatrix calibration;
  double noise_fraction = 0.0;
  std::uint64_t rng_seed = 0;
};

struct FederationConfig {
  std::vector<Institution> institutions;
  Alpha alpha{0.1};
  ScoreMethod method = ScoreMethod::Aps;
};

struct FederatedQuantile {
  double qhat_global = 0.0;
  std::vector<QuantileEstimate> per_client;
  Alpha alpha{0.1};
};

/// Seeded shuffle followed by a near-equal split; the first N mod k parts get
/// one extra row. Throws Error{TooFewRows} when N < k.
std::vector<ScoreMatrix> partition_dataset(const ScoreMatrix& full, std::size_t k,
                                           std::uint64_t seed);

/// Indices (ascending) of the floor(fraction * n) rows picked for relabeling.
std::vector<std::size_t> select_noisy_rows(std::size_t n, double fraction,
                                           std::uint64_t seed);

/// Copy of `calib` whose selected rows get labels drawn uniformly from
/// [0, C-1]; a redrawn label may equal the original. Scores are untouched.
ScoreMatrix inject_label_noise(const ScoreMatrix& calib, double fraction,
                               std::uint64_t seed);

/// Noise injection per the institution's settings, then calibration.
QuantileEstimate local_quantile(const Institution& inst, Alpha alpha,
                                ScoreMethod method);

/// Unweighted mean of per-client thresholds, summed in the order given.
FederatedQuantile aggregate_quantiles(std::vector<QuantileEstimate> per_client,
                                      Alpha alpha);

/// Computes every institution's local quantile (concurrently when K > 1) and
/// averages them in institution-id order.
FederatedQuantile federated_quantile(const FederationConfig& config);

}  // namespace fedconf
