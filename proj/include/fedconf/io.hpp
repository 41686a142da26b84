#pragma once

// On-disk formats: score-matrix CSV, federation manifest (JSON) and
// evaluation report (JSON with fixed 6-decimal numbers).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedconf/harness.hpp"
#include "fedconf/score_matrix.hpp"

namespace fedconf {

/// Header `label,c0,...,c{C-1}`; label -1 marks an unlabeled row. Rejects
/// (never repairs) malformed input: ParseError, SimplexViolation and
/// LabelOutOfRange messages carry the 1-based line number.
ScoreMatrix parse_score_matrix(std::string_view text, std::string_view source = "<input>");
ScoreMatrix read_score_matrix(const std::filesystem::path& path);

/// Shortest round-trip decimal for every probability, so a written file
/// parses back to the identical matrix.
std::string format_score_matrix(const ScoreMatrix& scores);
void write_score_matrix(const ScoreMatrix& scores, const std::filesystem::path& path);

struct InstitutionEntry {
  std::filesystem::path scores_path;
  double noise_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct FederationManifest {
  double alpha = 0.1;
  ScoreMethod method = ScoreMethod::Aps;
  std::vector<InstitutionEntry> institutions;
  std::filesystem::path test_path;
  std::optional<std::filesystem::path> entropy_path;
  std::vector<double> alphas;
  std::vector<std::uint64_t> seeds;
  std::vector<SetMethod> methods;
  std::vector<double> percentiles{50.0, 75.0, 90.0};
  std::size_t local_institution = 0;
};

/// Relative paths are resolved against `base_dir`. Does not touch the
/// referenced files.
FederationManifest parse_manifest(std::string_view text,
                                  const std::filesystem::path& base_dir);
/// Parses and checks that every referenced path exists (Error{IoError}).
FederationManifest read_manifest(const std::filesystem::path& path);
std::string format_manifest(const FederationManifest& manifest);

/// Loads every referenced score file.
FederationConfig load_federation(const FederationManifest& manifest);
ExperimentPlan load_plan(const FederationManifest& manifest);

std::string format_report(const EvaluationReport& report);
EvaluationReport parse_report(std::string_view text);
void write_report(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport read_report(const std::filesystem::path& path);

std::string format_quantile(const QuantileEstimate& estimate);
std::string format_federated(const FederatedQuantile& federated);

/// Reads a whole file; Error{IoError} naming the path on failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace fedconf
