#include "fedconf/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "fedconf/conformal.hpp"
#include "fedconf/error.hpp"
#include "fedconf/federated.hpp"
#include "fedconf/harness.hpp"
#include "fedconf/io.hpp"
#include "fedconf/synth.hpp"

namespace fedconf {

namespace {

namespace fs = std::filesystem;

// Seed used by every subcommand when --seed is not given.
constexpr std::uint64_t kDefaultSeed = 0;

void emit(std::ostream& out, const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    write_text_file(*path, text);
  } else {
    out << text;
  }
}

struct CalibrateArgs {
  std::string scores;
  double alpha = 0.1;
  std::string method = "aps";
  std::optional<std::string> out;
};

struct FederateArgs {
  std::string manifest;
  std::optional<double> alpha;
  std::optional<std::string> method;
  std::optional<std::string> out;
};

struct PredictArgs {
  std::string scores;
  std::string method = "aps";
  std::optional<double> qhat;
  std::optional<double> alpha;
  std::optional<std::string> out;
};

struct EvaluateArgs {
  std::string manifest;
  std::string out;
};

struct SynthArgs {
  std::size_t classes = 9;
  double concentration = 1.0;
  double temperature = 1.0;
  std::vector<double> class_weights;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::size_t> rows;
  std::optional<std::string> out;
  std::size_t clients = 4;
  std::size_t calib_per_client = 500;
  std::size_t test = 1000;
  double noise = 0.0;
  std::vector<double> alphas{0.05, 0.1, 0.2};
  std::size_t trials = 1;
  std::optional<std::string> out_dir;
};

struct NoiseArgs {
  std::string scores;
  double fraction = 0.3;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int run_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const ScoreMatrix calib = read_score_matrix(a.scores);
  const auto scores = conformity_scores(calib, parse_score_method(a.method));
  emit(out, a.out, format_quantile(calibrate_quantile(scores, Alpha(a.alpha))));
  return kExitOk;
}

int run_federate(const FederateArgs& a, std::ostream& out) {
  const FederationManifest manifest = read_manifest(a.manifest);
  FederationConfig config = load_federation(manifest);
  if (a.alpha) config.alpha = Alpha(*a.alpha);
  if (a.method) config.method = parse_score_method(*a.method);
  emit(out, a.out, format_federated(federated_quantile(config)));
  return kExitOk;
}

int run_predict(const PredictArgs& a, std::ostream& out) {
  const ScoreMatrix test = read_score_matrix(a.scores);
  const bool naive = a.method == "naive";
  std::optional<ScoreMethod> method;
  if (!naive) method = parse_score_method(a.method);
  if (naive && !a.alpha) throw Error(ErrorKind::InvalidSpec, "--method naive needs --alpha");
  if (!naive && !a.qhat) throw Error(ErrorKind::InvalidSpec, "--method " + a.method + " needs --qhat");

  std::string text = "index,size,members\n";
  for (std::size_t i = 0; i < test.rows(); ++i) {
    const PredictionSet set = naive ? naive_prediction_set(test.row(i), Alpha(*a.alpha))
                                    : calibrated_prediction_set(test.row(i), *a.qhat, *method);
    text += std::to_string(i) + "," + std::to_string(set.size()) + ",";
    for (std::size_t m = 0; m < set.members.size(); ++m) {
      if (m) text += ' ';
      text += std::to_string(set.members[m]);
    }
    text += '\n';
  }
  emit(out, a.out, text);
  return kExitOk;
}

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const ExperimentPlan plan = load_plan(read_manifest(a.manifest));
  const EvaluationReport report = run_experiment(plan);
  write_report(report, a.out);
  out << "wrote " << report.results.size() << " results to " << a.out << "\n";
  return kExitOk;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  GeneratorSpec spec;
  spec.n_classes = a.classes;
  spec.concentration = a.concentration;
  spec.temperature = a.temperature;
  if (!a.class_weights.empty()) spec.class_weights = a.class_weights;
  spec.seed = a.seed;

  if (a.out) {
    if (!a.rows) throw Error(ErrorKind::InvalidSpec, "--out needs --rows");
    spec.n_examples = *a.rows;
    write_score_matrix(generate(spec), *a.out);
    out << "wrote " << *a.rows << " rows to " << *a.out << "\n";
    return kExitOk;
  }
  if (!a.out_dir) throw Error(ErrorKind::InvalidSpec, "give either --out or --out-dir");

  const fs::path dir(*a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create '" + dir.string() + "': " + ec.message());

  const auto split = split_synthetic(spec, a.clients, a.calib_per_client, a.test);
  FederationManifest manifest;
  manifest.alpha = 0.1;
  for (std::size_t i = 0; i < a.clients; ++i) {
    const std::string name = "calib_" + std::to_string(i) + ".csv";
    write_score_matrix(split.calibration[i], dir / name);
    // Institution 0 stays clean; the rest get the requested label noise.
    manifest.institutions.push_back({name, i == 0 ? 0.0 : a.noise, a.seed + i});
  }
  write_score_matrix(split.test, dir / "test.csv");
  manifest.test_path = "test.csv";
  manifest.alphas = a.alphas;
  for (std::size_t t = 0; t < a.trials; ++t) manifest.seeds.push_back(t);
  manifest.methods = all_set_methods();
  write_text_file(dir / "manifest.json", format_manifest(manifest));
  out << "wrote " << a.clients << " calibration files, test.csv and manifest.json to "
      << dir.string() << "\n";
  return kExitOk;
}

int run_noise(const NoiseArgs& a, std::ostream& out) {
  const ScoreMatrix calib = read_score_matrix(a.scores);
  write_score_matrix(inject_label_noise(calib, a.fraction, a.seed), a.out);
  out << "wrote " << calib.rows() << " rows to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int cli_dispatch(std::span<const std::string> argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conformal prediction sets with federated quantile calibration", "fedconf"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate a conformal quantile");
  calibrate->add_option("--scores", cal.scores, "Labeled calibration score file")->required();
  calibrate->add_option("--alpha", cal.alpha, "Miscoverage level in (0, 1)")->required();
  calibrate->add_option("--method", cal.method, "aps or lac")->capture_default_str();
  calibrate->add_option("--out", cal.out, "Write JSON here instead of stdout");

  FederateArgs fed;
  auto* federate = app.add_subcommand("federate", "Average per-institution quantiles");
  federate->add_option("--manifest", fed.manifest, "Federation manifest")->required();
  federate->add_option("--alpha", fed.alpha, "Override the manifest alpha");
  federate->add_option("--method", fed.method, "Override the manifest method");
  federate->add_option("--out", fed.out, "Write JSON here instead of stdout");

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "Build one prediction set per row");
  predict->add_option("--scores", pred.scores, "Score file (labels ignored)")->required();
  predict->add_option("--method", pred.method, "aps, lac or naive")->capture_default_str();
  predict->add_option("--qhat", pred.qhat, "Calibrated threshold (aps, lac)");
  predict->add_option("--alpha", pred.alpha, "Miscoverage level (naive)");
  predict->add_option("--out", pred.out, "Write sets here instead of stdout");

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "Run the naive/local/federated comparison");
  evaluate->add_option("--manifest", eval.manifest, "Federation manifest")->required();
  evaluate->add_option("--out", eval.out, "Report file")->required();

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Generate synthetic score files");
  synth->add_option("--classes", syn.classes)->capture_default_str();
  synth->add_option("--concentration", syn.concentration)->capture_default_str();
  synth->add_option("--temperature", syn.temperature)->capture_default_str();
  synth->add_option("--class-weights", syn.class_weights, "Comma-separated weights")
      ->delimiter(',');
  synth->add_option("--seed", syn.seed)->capture_default_str();
  synth->add_option("--rows", syn.rows, "Rows for --out");
  synth->add_option("--out", syn.out, "Write a single score file");
  synth->add_option("--clients", syn.clients)->capture_default_str();
  synth->add_option("--calib-per-client", syn.calib_per_client)->capture_default_str();
  synth->add_option("--test", syn.test, "Test rows")->capture_default_str();
  synth->add_option("--noise", syn.noise, "Label noise for institutions 1..K-1")
      ->capture_default_str();
  synth->add_option("--alphas", syn.alphas)->delimiter(',')->capture_default_str();
  synth->add_option("--trials", syn.trials, "Trial seeds 0..trials-1 in the manifest")
      ->capture_default_str();
  synth->add_option("--out-dir", syn.out_dir, "Write calibration/test files and a manifest");

  NoiseArgs noi;
  auto* noise = app.add_subcommand("noise", "Write a copy with resampled labels");
  noise->add_option("--scores", noi.scores, "Labeled score file")->required();
  noise->add_option("--fraction", noi.fraction)->capture_default_str();
  noise->add_option("--seed", noi.seed)->capture_default_str();
  noise->add_option("--out", noi.out)->required();

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const auto& a : argv) raw.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kExitValidation;
  }

  try {
    if (*calibrate) return run_calibrate(cal, out);
    if (*federate) return run_federate(fed, out);
    if (*predict) return run_predict(pred, out);
    if (*evaluate) return run_evaluate(eval, out);
    if (*synth) return run_synth(syn, out);
    if (*noise) return run_noise(noi, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::IoError ? kExitIo : kExitValidation;
  }
  return kExitValidation;
}

int cli_dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace fedconf
