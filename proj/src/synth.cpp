#include "fedconf/synth.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <boost/random/discrete_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>

#include "fedconf/error.hpp"
#include "random.hpp"

namespace fedconf {

void validate(const GeneratorSpec& spec) {
  if (spec.n_classes < 2) throw Error(ErrorKind::InvalidSpec, "need at least 2 classes");
  if (!(spec.concentration > 0.0) || !std::isfinite(spec.concentration)) {
    throw Error(ErrorKind::InvalidSpec, "concentration must be positive");
  }
  if (!(spec.temperature > 0.0) || !std::isfinite(spec.temperature)) {
    throw Error(ErrorKind::InvalidSpec, "temperature must be positive");
  }
  if (spec.class_weights) {
    if (spec.class_weights->size() != spec.n_classes) {
      throw Error(ErrorKind::InvalidSpec,
                  std::to_string(spec.class_weights->size()) + " class weights for " +
                      std::to_string(spec.n_classes) + " classes");
    }
    for (const double w : *spec.class_weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw Error(ErrorKind::InvalidSpec, "class weights must be positive");
      }
    }
  }
}

namespace {

std::vector<double> dirichlet_parameters(const GeneratorSpec& spec) {
  const auto c = static_cast<double>(spec.n_classes);
  std::vector<double> params(spec.n_classes, spec.concentration);
  if (spec.class_weights) {
    const auto& w = *spec.class_weights;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      params[i] = spec.concentration * w[i] * c / total;
    }
  }
  return params;
}

}  // namespace

ScoreMatrix generate(const GeneratorSpec& spec) {
  validate(spec);
  const std::size_t classes = spec.n_classes;
  const auto params = dirichlet_parameters(spec);
  const double sharpen = 1.0 / spec.temperature;

  std::vector<double> probs(spec.n_examples * classes);
  std::vector<ClassIndex> labels(spec.n_examples);
  std::vector<double> truth(classes);

  for (std::size_t i = 0; i < spec.n_examples; ++i) {
    auto engine = detail::make_engine({spec.seed, detail::kRowStream, i});
    double total = 0.0;
    // A draw where every gamma variate underflows (tiny concentration) is
    // redrawn from the same stream.
    while (!(total > 0.0)) {
      total = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        boost::random::gamma_distribution<double> gamma(params[c], 1.0);
        truth[c] = gamma(engine);
        total += truth[c];
      }
    }
    for (double& p : truth) p /= total;

    boost::random::discrete_distribution<std::size_t, double> draw(truth.begin(),
                                                                   truth.end());
    labels[i] = draw(engine);

    double* out = probs.data() + i * classes;
    double tempered_total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      out[c] = sharpen == 1.0 ? truth[c] : std::pow(truth[c], sharpen);
      tempered_total += out[c];
    }
    for (std::size_t c = 0; c < classes; ++c) out[c] /= tempered_total;
  }
  return ScoreMatrix(classes, std::move(probs), std::move(labels));
}

SyntheticSplit split_synthetic(const GeneratorSpec& spec, std::size_t k,
                               std::size_t calib_per_client, std::size_t n_test) {
  if (k == 0 || calib_per_client == 0 || n_test == 0) {
    throw Error(ErrorKind::InvalidSpec, "split counts must be positive");
  }
  GeneratorSpec full_spec = spec;
  full_spec.n_examples = k * calib_per_client + n_test;
  const ScoreMatrix all = generate(full_spec);

  SyntheticSplit split{{}, all};
  std::vector<std::size_t> idx;
  for (std::size_t p = 0; p < k; ++p) {
    idx.resize(calib_per_client);
    std::iota(idx.begin(), idx.end(), p * calib_per_client);
    split.calibration.push_back(all.select(idx));
  }
  idx.resize(n_test);
  std::iota(idx.begin(), idx.end(), k * calib_per_client);
  split.test = all.select(idx);
  return split;
}

}  // namespace fedconf
