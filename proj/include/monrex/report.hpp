#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "monrex/rules.hpp"

namespace monrex {

inline constexpr const char* kReportFormat = "monr/1";

struct TargetId {
  int layer = 0;
  std::size_t neuron = 0;
  // Set for conv2d targets; `neuron` is then the map's representative.
  std::optional<std::size_t> feature_map;

  bool operator==(const TargetId&) const = default;
};

struct CurvePoint {
  double beta = 0.0;
  double complexity = 0.0;
  double error = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct TradeoffCurve {
  std::vector<CurvePoint> points;

  bool operator==(const TradeoffCurve&) const = default;
};

// Weight-ordered search result next to the exhaustive optimum, per beta.
struct OracleCheck {
  double beta = 0.0;
  double oracle_loss = 0.0;
  double gap = 0.0;

  bool operator==(const OracleCheck&) const = default;
};

struct ExtractionReport {
  TargetId target;
  Literal head;
  double head_gain = 0.0;
  bool degenerate = false;
  int total_inputs = 1;
  std::vector<ScoredRule> rules;  // one per beta, ascending
  TradeoffCurve curve;
  std::vector<OracleCheck> oracle;

  bool operator==(const ExtractionReport&) const = default;
};

// Contents of one `.monr` file: every target of one layer.
struct ReportFile {
  nlohmann::json manifest;
  int layer = 0;
  std::vector<double> betas;
  std::vector<ExtractionReport> targets;
  TradeoffCurve curve;

  bool operator==(const ReportFile&) const = default;
};

// Throws ValidationError if a rule's loss drifts from error + beta * complexity
// by more than 1e-12.
void check_report(const ExtractionReport& report);

nlohmann::json report_to_json(const ExtractionReport& report);
ExtractionReport report_from_json(const nlohmann::json& node);

std::string serialize_report_file(const ReportFile& file);
ReportFile parse_report_file(std::string_view text);
void write_report_file(const ReportFile& file, const std::filesystem::path& path);
ReportFile read_report_file(const std::filesystem::path& path);

// Single-target convenience wrappers around the layer file format.
void write_report(const ExtractionReport& report, const std::filesystem::path& path);
ExtractionReport read_report(const std::filesystem::path& path);

}  // namespace monrex
