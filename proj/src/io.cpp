#include "fedconf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "fedconf/error.hpp"

namespace fedconf {

using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, "failed reading '" + path.string() + "'");
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Score matrices

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

}  // namespace

ScoreMatrix parse_score_matrix(std::string_view text, std::string_view source) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty() || lines.front().empty()) {
    throw Error(ErrorKind::ParseError, where(source, 1) + "missing header");
  }

  const auto header = split_fields(lines.front());
  if (header.size() < 3 || header.front() != "label") {
    throw Error(ErrorKind::ParseError,
                where(source, 1) + "header must be label,c0,c1,... with at least 2 classes");
  }
  const std::size_t classes = header.size() - 1;
  for (std::size_t c = 0; c < classes; ++c) {
    if (header[c + 1] != "c" + std::to_string(c)) {
      throw Error(ErrorKind::ParseError, where(source, 1) + "expected column 'c" +
                                             std::to_string(c) + "', got '" +
                                             std::string(header[c + 1]) + "'");
    }
  }

  std::vector<double> probs;
  std::vector<ClassIndex> labels;
  std::optional<bool> labeled;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::size_t line_no = ln + 1;
    const std::string_view line = lines[ln];
    if (line.empty()) {
      if (ln + 1 == lines.size()) break;
      throw Error(ErrorKind::ParseError, where(source, line_no) + "blank line");
    }
    const auto fields = split_fields(line);
    if (fields.size() != classes + 1) {
      throw Error(ErrorKind::ParseError, where(source, line_no) + "expected " +
                                             std::to_string(classes + 1) + " fields, got " +
                                             std::to_string(fields.size()));
    }

    long long label = 0;
    const auto lf = fields.front();
    const auto [lp, lec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (lec != std::errc() || lp != lf.data() + lf.size()) {
      throw Error(ErrorKind::ParseError, where(source, line_no) + "label '" +
                                             std::string(lf) + "' is not an integer");
    }
    if (label < -1 || label >= static_cast<long long>(classes)) {
      throw Error(ErrorKind::LabelOutOfRange, where(source, line_no) + "label " +
                                                  std::to_string(label) + " with " +
                                                  std::to_string(classes) + " classes");
    }
    const bool row_labeled = label != -1;
    if (labeled && *labeled != row_labeled) {
      throw Error(ErrorKind::ParseError,
                  where(source, line_no) + "file mixes labeled and unlabeled (-1) rows");
    }
    labeled = row_labeled;
    if (row_labeled) labels.push_back(static_cast<ClassIndex>(label));

    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const auto f = fields[c + 1];
      double p = 0.0;
      const auto [pp, pec] = std::from_chars(f.data(), f.data() + f.size(), p);
      if (pec != std::errc() || pp != f.data() + f.size() || !std::isfinite(p)) {
        throw Error(ErrorKind::ParseError, where(source, line_no) + "column c" +
                                               std::to_string(c) + " value '" +
                                               std::string(f) + "' is not a decimal number");
      }
      if (p < 0.0 || p > 1.0) {
        throw Error(ErrorKind::SimplexViolation, where(source, line_no) + "column c" +
                                                     std::to_string(c) +
                                                     " is outside [0, 1]");
      }
      sum += p;
      probs.push_back(p);
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "row sums to %.9g", sum);
      throw Error(ErrorKind::SimplexViolation, where(source, line_no) + buf);
    }
  }
  if (labeled.value_or(true)) return ScoreMatrix(classes, std::move(probs), std::move(labels));
  return ScoreMatrix(classes, std::move(probs));
}

ScoreMatrix read_score_matrix(const std::filesystem::path& path) {
  return parse_score_matrix(read_text_file(path), path.string());
}

std::string format_score_matrix(const ScoreMatrix& scores) {
  std::string out = "label";
  for (std::size_t c = 0; c < scores.classes(); ++c) out += ",c" + std::to_string(c);
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    out += scores.has_labels() ? std::to_string(scores.labels()[i]) : "-1";
    for (const double p : scores.row(i)) {
      const auto res = std::to_chars(buf, buf + sizeof buf, p);
      out += ',';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

void write_score_matrix(const ScoreMatrix& scores, const std::filesystem::path& path) {
  write_text_file(path, format_score_matrix(scores));
}

// ---------------------------------------------------------------------------
// JSON emission with fixed 6-decimal floats

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

bool is_scalar(const ordered_json& j) { return !j.is_array() && !j.is_object(); }

void emit(const ordered_json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case ordered_json::value_t::number_float:
      out += fixed6(j.get<double>());
      return;
    case ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool inline_array = std::all_of(j.begin(), j.end(), is_scalar);
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += inline_array ? ", " : ",";
        if (!inline_array) out += "\n" + pad;
        emit(item, out, indent + 2);
        first = false;
      }
      if (!inline_array) out += "\n" + close_pad;
      out += ']';
      return;
    }
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        out += "\n" + pad + ordered_json(key).dump() + ": ";
        emit(value, out, indent + 2);
        first = false;
      }
      out += "\n" + close_pad + '}';
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

std::string emit_document(const ordered_json& j) {
  std::string out;
  emit(j, out, 0);
  out += '\n';
  return out;
}

ordered_json parse_json(std::string_view text, std::string_view what) {
  try {
    return ordered_json::parse(text.begin(), text.end());
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  }
}

template <typename Fn>
auto json_field(std::string_view what, Fn fn) {
  try {
    return fn();
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  }
}

void reject_unknown_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                         std::string_view what) {
  if (!obj.is_object()) {
    throw Error(ErrorKind::ParseError, std::string(what) + " must be a JSON object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw Error(ErrorKind::ParseError,
                  std::string(what) + ": unknown field '" + key + "'");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

FederationManifest parse_manifest(std::string_view text,
                                  const std::filesystem::path& base_dir) {
  const ordered_json doc = parse_json(text, "manifest");
  reject_unknown_keys(doc,
                      {"alpha", "method", "institutions", "test_path", "entropy_path",
                       "alphas", "seeds", "methods", "percentiles", "local_institution"},
                      "manifest");
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  FederationManifest m;
  return json_field("manifest", [&] {
    m.alpha = doc.value("alpha", 0.1);
    (void)Alpha(m.alpha);
    m.method = parse_score_method(doc.value("method", std::string("aps")));
    if (!doc.contains("institutions") || !doc.at("institutions").is_array() ||
        doc.at("institutions").empty()) {
      throw Error(ErrorKind::FederationEmpty, "manifest lists no institutions");
    }
    for (const auto& entry : doc.at("institutions")) {
      reject_unknown_keys(entry, {"scores_path", "noise_fraction", "seed"}, "institution");
      InstitutionEntry inst;
      inst.scores_path = resolve(entry.at("scores_path").get<std::string>());
      inst.noise_fraction = entry.value("noise_fraction", 0.0);
      if (!(inst.noise_fraction >= 0.0 && inst.noise_fraction <= 1.0)) {
        throw Error(ErrorKind::InvalidPlan, "noise_fraction must lie in [0, 1]");
      }
      inst.seed = entry.value("seed", std::uint64_t{0});
      m.institutions.push_back(std::move(inst));
    }
    if (doc.contains("test_path")) m.test_path = resolve(doc.at("test_path").get<std::string>());
    if (doc.contains("entropy_path")) {
      m.entropy_path = resolve(doc.at("entropy_path").get<std::string>());
    }
    m.alphas = doc.value("alphas", std::vector<double>{m.alpha});
    for (const double a : m.alphas) (void)Alpha(a);
    m.seeds = doc.value("seeds", std::vector<std::uint64_t>{0});
    if (doc.contains("methods")) {
      m.methods.clear();
      for (const auto& name : doc.at("methods")) {
        m.methods.push_back(parse_set_method(name.get<std::string>()));
      }
    } else {
      m.methods = all_set_methods();
    }
    m.percentiles = doc.value("percentiles", m.percentiles);
    m.local_institution = doc.value("local_institution", std::size_t{0});
    return m;
  });
}

FederationManifest read_manifest(const std::filesystem::path& path) {
  FederationManifest m =
      parse_manifest(read_text_file(path), path.parent_path().empty()
                                               ? std::filesystem::path(".")
                                               : path.parent_path());
  const auto require = [](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorKind::IoError, "manifest references missing file '" + p.string() + "'");
    }
  };
  for (const auto& inst : m.institutions) require(inst.scores_path);
  if (!m.test_path.empty()) require(m.test_path);
  if (m.entropy_path) require(*m.entropy_path);
  return m;
}

std::string format_manifest(const FederationManifest& m) {
  ordered_json doc;
  doc["alpha"] = m.alpha;
  doc["method"] = std::string(to_string(m.method));
  doc["institutions"] = ordered_json::array();
  for (const auto& inst : m.institutions) {
    ordered_json e;
    e["scores_path"] = inst.scores_path.generic_string();
    e["noise_fraction"] = inst.noise_fraction;
    e["seed"] = inst.seed;
    doc["institutions"].push_back(std::move(e));
  }
  if (!m.test_path.empty()) doc["test_path"] = m.test_path.generic_string();
  if (m.entropy_path) doc["entropy_path"] = m.entropy_path->generic_string();
  doc["alphas"] = m.alphas;
  doc["seeds"] = m.seeds;
  doc["methods"] = ordered_json::array();
  for (const SetMethod sm : m.methods) doc["methods"].push_back(std::string(to_string(sm)));
  doc["percentiles"] = m.percentiles;
  doc["local_institution"] = m.local_institution;
  return emit_document(doc);
}

FederationConfig load_federation(const FederationManifest& manifest) {
  FederationConfig config;
  config.alpha = Alpha(manifest.alpha);
  config.method = manifest.method;
  for (std::size_t i = 0; i < manifest.institutions.size(); ++i) {
    const auto& entry = manifest.institutions[i];
    Institution inst;
    inst.id = i;
    inst.calibration = read_score_matrix(entry.scores_path);
    inst.noise_fraction = entry.noise_fraction;
    inst.rng_seed = entry.seed;
    config.institutions.push_back(std::move(inst));
  }
  return config;
}

ExperimentPlan load_plan(const FederationManifest& manifest) {
  if (manifest.test_path.empty()) {
    throw Error(ErrorKind::InvalidPlan, "manifest has no test_path");
  }
  ExperimentPlan plan;
  plan.federation = load_federation(manifest);
  plan.test = read_score_matrix(manifest.test_path);
  if (manifest.entropy_path) plan.entropy_source = read_score_matrix(*manifest.entropy_path);
  for (const double a : manifest.alphas) plan.alphas.emplace_back(a);
  plan.seeds = manifest.seeds;
  plan.n_trials = manifest.seeds.size();
  plan.methods = manifest.methods;
  plan.percentiles = manifest.percentiles;
  plan.local_institution = manifest.local_institution;
  validate(plan);
  return plan;
}

// ---------------------------------------------------------------------------
// Reports

std::string format_report(const EvaluationReport& report) {
  ordered_json doc;
  doc["toolkit_version"] = report.toolkit_version;
  doc["plan_hash"] = report.plan_hash;
  doc["seeds"] = report.seeds;
  doc["percentiles"] = report.percentiles;
  doc["std_basis"] = report.std_basis;
  doc["n_test"] = report.n_test;
  doc["n_classes"] = report.n_classes;
  doc["n_institutions"] = report.n_institutions;
  doc["local_institution"] = report.local_institution;
  doc["results"] = ordered_json::array();
  for (const auto& r : report.results) {
    ordered_json e;
    e["method"] = std::string(to_string(r.method));
    e["alpha"] = r.alpha;
    e["coverage"] = r.coverage;
    e["std_coverage"] = r.std_coverage;
    e["mean_cardinality"] = r.mean_cardinality;
    e["std_cardinality"] = r.std_cardinality;
    e["mean_qhat"] = r.mean_qhat;
    e["std_qhat"] = r.std_qhat;
    e["entropy_buckets"] = r.entropy_buckets;
    e["spearman_rho"] = r.spearman_rho;
    e["rho_degenerate"] = r.rho_degenerate;
    doc["results"].push_back(std::move(e));
  }
  return emit_document(doc);
}

EvaluationReport parse_report(std::string_view text) {
  const ordered_json doc = parse_json(text, "report");
  return json_field("report", [&] {
    EvaluationReport r;
    r.toolkit_version = doc.at("toolkit_version").get<std::string>();
    r.plan_hash = doc.at("plan_hash").get<std::string>();
    r.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    r.percentiles = doc.at("percentiles").get<std::vector<double>>();
    r.std_basis = doc.at("std_basis").get<std::string>();
    r.n_test = doc.at("n_test").get<std::size_t>();
    r.n_classes = doc.at("n_classes").get<std::size_t>();
    r.n_institutions = doc.at("n_institutions").get<std::size_t>();
    r.local_institution = doc.at("local_institution").get<std::size_t>();
    for (const auto& e : doc.at("results")) {
      MethodResult m;
      m.method = parse_set_method(e.at("method").get<std::string>());
      m.alpha = e.at("alpha").get<double>();
      m.coverage = e.at("coverage").get<double>();
      m.std_coverage = e.at("std_coverage").get<double>();
      m.mean_cardinality = e.at("mean_cardinality").get<double>();
      m.std_cardinality = e.at("std_cardinality").get<double>();
      m.mean_qhat = e.at("mean_qhat").get<double>();
      m.std_qhat = e.at("std_qhat").get<double>();
      m.entropy_buckets = e.at("entropy_buckets").get<std::vector<double>>();
      m.spearman_rho = e.at("spearman_rho").get<double>();
      m.rho_degenerate = e.at("rho_degenerate").get<bool>();
      r.results.push_back(std::move(m));
    }
    return r;
  });
}

void write_report(const EvaluationReport& report, const std::filesystem::path& path) {
  write_text_file(path, format_report(report));
}

EvaluationReport read_report(const std::filesystem::path& path) {
  return parse_report(read_text_file(path));
}

std::string format_quantile(const QuantileEstimate& q) {
  ordered_json doc;
  doc["method"] = std::string(to_string(q.method));
  doc["alpha"] = q.alpha.value();
  doc["n_calibration"] = q.n_calibration;
  doc["level"] = q.level;
  doc["qhat"] = q.qhat;
  return emit_document(doc);
}

std::string format_federated(const FederatedQuantile& f) {
  ordered_json doc;
  doc["method"] = std::string(
      to_string(f.per_client.empty() ? ScoreMethod::Aps : f.per_client.front().method));
  doc["alpha"] = f.alpha.value();
  doc["k"] = f.per_client.size();
  doc["qhat_global"] = f.qhat_global;
  doc["per_client"] = ordered_json::array();
  for (std::size_t i = 0; i < f.per_client.size(); ++i) {
    const auto& q = f.per_client[i];
    ordered_json e;
    e["institution"] = i;
    e["n_calibration"] = q.n_calibration;
    e["level"] = q.level;
    e["qhat"] = q.qhat;
    doc["per_client"].push_back(std::move(e));
  }
  return emit_document(doc);
}

}  // namespace fedconf
