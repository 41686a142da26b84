#include "fedconf/federated.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include "fedconf/error.hpp"
#include "random.hpp"

namespace fedconf {

std::vector<ScoreMatrix> partition_dataset(const ScoreMatrix& full, std::size_t k,
                                           std::uint64_t seed) {
  if (k == 0) throw Error(ErrorKind::InvalidSpec, "cannot split into zero partitions");
  const std::size_t n = full.rows();
  if (n < k) {
    throw Error(ErrorKind::TooFewRows, std::to_string(n) + " rows for " +
                                           std::to_string(k) + " partitions");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto engine = detail::make_engine({seed, detail::kPartitionStream});
  detail::shuffle(order.begin(), n, engine);

  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::vector<ScoreMatrix> parts;
  parts.reserve(k);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < k; ++p) {
    const std::size_t size = base + (p < extra ? 1 : 0);
    parts.push_back(full.select(std::span(order).subspan(offset, size)));
    offset += size;
  }
  return parts;
}

std::vector<std::size_t> select_noisy_rows(std::size_t n, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidSpec,
                "noise fraction must lie in [0, 1], got " + std::to_string(fraction));
  }
  const auto count = std::min(
      n, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9)));
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  auto engine = detail::make_engine({seed, detail::kNoiseStream, 0});
  // Partial Fisher-Yates: the first `count` slots are a uniform subset.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + detail::uniform_index(engine, n - i);
    std::swap(rows[i], rows[j]);
  }
  rows.resize(count);
  std::sort(rows.begin(), rows.end());
  return rows;
}

ScoreMatrix inject_label_noise(const ScoreMatrix& calib, double fraction,
                               std::uint64_t seed) {
  std::vector<ClassIndex> labels = calib.labels();
  const auto rows = select_noisy_rows(calib.rows(), fraction, seed);
  auto engine = detail::make_engine({seed, detail::kNoiseStream, 1});
  for (const std::size_t i : rows) {
    labels[i] = detail::uniform_index(engine, calib.classes());
  }
  return calib.with_labels(std::move(labels));
}

QuantileEstimate local_quantile(const Institution& inst, Alpha alpha,
                                ScoreMethod method) {
  if (inst.calibration.empty()) {
    throw Error(ErrorKind::EmptyCalibration,
                "institution " + std::to_string(inst.id) + " has no calibration rows");
  }
  if (inst.noise_fraction == 0.0) {
    return calibrate_quantile(conformity_scores(inst.calibration, method), alpha);
  }
  const ScoreMatrix noisy =
      inject_label_noise(inst.calibration, inst.noise_fraction, inst.rng_seed);
  return calibrate_quantile(conformity_scores(noisy, method), alpha);
}

FederatedQuantile aggregate_quantiles(std::vector<QuantileEstimate> per_client,
                                      Alpha alpha) {
  if (per_client.empty()) {
    throw Error(ErrorKind::FederationEmpty, "no client quantiles to aggregate");
  }
  double sum = 0.0;
  for (const auto& q : per_client) sum += q.qhat;
  FederatedQuantile out;
  out.qhat_global = sum / static_cast<double>(per_client.size());
  out.per_client = std::move(per_client);
  out.alpha = alpha;
  return out;
}

FederatedQuantile federated_quantile(const FederationConfig& config) {
  const auto& insts = config.institutions;
  if (insts.empty()) throw Error(ErrorKind::FederationEmpty, "federation has no institutions");
  const std::size_t classes = insts.front().calibration.classes();
  for (const auto& inst : insts) {
    if (inst.calibration.classes() != classes) {
      throw Error(ErrorKind::ClassCountMismatch,
                  "institution " + std::to_string(inst.id) + " has " +
                      std::to_string(inst.calibration.classes()) + " classes, expected " +
                      std::to_string(classes));
    }
  }

  std::vector<std::size_t> order(insts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return insts[a].id < insts[b].id; });

  std::vector<std::future<QuantileEstimate>> pending;
  pending.reserve(order.size());
  for (const std::size_t i : order) {
    const auto policy = order.size() > 1 ? std::launch::async : std::launch::deferred;
    pending.push_back(std::async(policy, [&config, &insts, i] {
      return local_quantile(insts[i], config.alpha, config.method);
    }));
  }
  std::vector<QuantileEstimate> per_client;
  per_client.reserve(pending.size());
  for (auto& f : pending) per_client.push_back(f.get());
  return aggregate_quantiles(std::move(per_client), config.alpha);
}

}  // namespace fedconf
