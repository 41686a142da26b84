#pragma once

// Test-only helpers: independent oracles and small random generators. None of
// this shares code paths with the library under test.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fedconf::testing {

/// APS score by counting: mass of every class that outranks `label` (higher
/// score, or equal score with lower index) plus the label's own mass.
inline double aps_score_oracle(const std::vector<double>& row, std::size_t label) {
  double mass = row[label];
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] > row[label] || (row[j] == row[label] && j < label)) mass += row[j];
  }
  return mass;
}

/// Quantile rank for alpha = percent / 100 with exact integer arithmetic:
/// ceil((n + 1)(100 - percent) / 100).
inline std::size_t quantile_rank_oracle(std::size_t n, int percent) {
  const std::size_t num = (n + 1) * static_cast<std::size_t>(100 - percent);
  return (num + 99) / 100;
}

/// Sort ascending and take element k - 1, k clamped to n.
inline double quantile_oracle(std::vector<double> scores, int percent) {
  std::sort(scores.begin(), scores.end());
  const std::size_t k = std::min(quantile_rank_oracle(scores.size(), percent), scores.size());
  return scores[k - 1];
}

/// Members of {y : row[y] > 1 - qhat} as a sorted index list.
inline std::vector<std::size_t> lac_members_oracle(const std::vector<double>& row,
                                                   double qhat) {
  std::vector<std::size_t> out;
  for (std::size_t y = 0; y < row.size(); ++y) {
    if (row[y] > 1.0 - qhat) out.push_back(y);
  }
  return out;
}

/// Random point on the simplex (normalized exponentials), optionally with a
/// few exact zeros and repeated values to exercise tie handling.
inline std::vector<double> random_row(std::mt19937_64& rng, std::size_t classes,
                                      bool with_ties = false) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> row(classes);
  double total = 0.0;
  for (auto& p : row) {
    p = expo(rng);
    total += p;
  }
  for (auto& p : row) p /= total;
  if (with_ties && classes >= 3) {
    std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    row[b] = row[a];
    total = 0.0;
    for (const double p : row) total += p;
    for (auto& p : row) p /= total;
  }
  return row;
}

inline bool is_superset(const std::vector<std::size_t>& big,
                        const std::vector<std::size_t>& small) {
  return std::all_of(small.begin(), small.end(), [&](std::size_t x) {
    return std::find(big.begin(), big.end(), x) != big.end();
  });
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fedconf_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fedconf::testing
