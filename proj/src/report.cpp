#include "monrex/report.hpp"

#include <cmath>

#include <fmt/format.h>

#include "monrex/error.hpp"
#include "monrex/model_io.hpp"

namespace monrex {

using nlohmann::json;

namespace {

json literal_to_json(const Literal& literal) {
  return json::array({literal.neuron.layer, literal.neuron.index, literal.column,
                      literal.threshold,
                      literal.polarity == Polarity::kPositive ? "pos" : "neg"});
}

Literal literal_from_json(const json& node) {
  if (!node.is_array() || node.size() != 5) {
    throw ParseError("report: literal must be [layer, index, column, threshold, polarity]");
  }
  Literal literal;
  literal.neuron.layer = node[0].get<int>();
  literal.neuron.index = node[1].get<std::int64_t>();
  literal.column = node[2].get<std::size_t>();
  literal.threshold = node[3].get<double>();
  const auto polarity = node[4].get<std::string>();
  if (polarity != "pos" && polarity != "neg") {
    throw ParseError(fmt::format("report: unknown polarity '{}'", polarity));
  }
  literal.polarity = polarity == "pos" ? Polarity::kPositive : Polarity::kNegated;
  return literal;
}

json curve_to_json(const TradeoffCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"beta", p.beta}, {"complexity", p.complexity}, {"error", p.error}});
  }
  return points;
}

TradeoffCurve curve_from_json(const json& node) {
  TradeoffCurve curve;
  for (const auto& p : node) {
    curve.points.push_back(CurvePoint{p.at("beta").get<double>(),
                                      p.at("complexity").get<double>(),
                                      p.at("error").get<double>()});
  }
  return curve;
}

}  // namespace

void check_report(const ExtractionReport& report) {
  for (const auto& scored : report.rules) {
    const double expected = scored.error + scored.beta * scored.complexity;
    if (!(std::abs(scored.loss - expected) <= 1e-12)) {
      throw ValidationError(report.target.layer, "loss",
                            fmt::format("loss {} differs from error + beta * complexity = {}",
                                        scored.loss, expected));
    }
  }
}

json report_to_json(const ExtractionReport& report) {
  json rules = json::array();
  for (const auto& scored : report.rules) {
    json body = json::array();
    for (const auto& literal : scored.rule.body) body.push_back(literal_to_json(literal));
    rules.push_back({{"beta", scored.beta},
                     {"m", scored.rule.m},
                     {"n", scored.rule.n()},
                     {"error", scored.error},
                     {"complexity", scored.complexity},
                     {"loss", scored.loss},
                     {"text", format_body(scored.rule)},
                     {"body", std::move(body)}});
  }
  json node{{"layer", report.target.layer},
            {"neuron", report.target.neuron},
            {"feature_map", report.target.feature_map ? json(*report.target.feature_map)
                                                      : json(nullptr)},
            {"head", literal_to_json(report.head)},
            {"head_gain", report.head_gain},
            {"degenerate", report.degenerate},
            {"total_inputs", report.total_inputs},
            {"rules", std::move(rules)},
            {"curve", curve_to_json(report.curve)}};
  if (!report.oracle.empty()) {
    json checks = json::array();
    for (const auto& check : report.oracle) {
      checks.push_back(
          {{"beta", check.beta}, {"oracle_loss", check.oracle_loss}, {"gap", check.gap}});
    }
    node["oracle"] = std::move(checks);
  }
  return node;
}

ExtractionReport report_from_json(const json& node) {
  ExtractionReport report;
  report.target.layer = node.at("layer").get<int>();
  report.target.neuron = node.at("neuron").get<std::size_t>();
  if (!node.at("feature_map").is_null()) {
    report.target.feature_map = node.at("feature_map").get<std::size_t>();
  }
  report.head = literal_from_json(node.at("head"));
  report.head_gain = node.at("head_gain").get<double>();
  report.degenerate = node.at("degenerate").get<bool>();
  report.total_inputs = node.at("total_inputs").get<int>();
  for (const auto& r : node.at("rules")) {
    ScoredRule scored;
    scored.beta = r.at("beta").get<double>();
    scored.error = r.at("error").get<double>();
    scored.complexity = r.at("complexity").get<double>();
    scored.loss = r.at("loss").get<double>();
    scored.rule.head = report.head;
    scored.rule.total_inputs = report.total_inputs;
    scored.rule.m = r.at("m").get<int>();
    for (const auto& l : r.at("body")) scored.rule.body.push_back(literal_from_json(l));
    if (scored.rule.n() != r.at("n").get<int>()) {
      throw ParseError("report: rule body length disagrees with n");
    }
    validate_rule(scored.rule);
    report.rules.push_back(std::move(scored));
  }
  report.curve = curve_from_json(node.at("curve"));
  if (node.contains("oracle")) {
    for (const auto& c : node.at("oracle")) {
      report.oracle.push_back(OracleCheck{c.at("beta").get<double>(),
                                          c.at("oracle_loss").get<double>(),
                                          c.at("gap").get<double>()});
    }
  }
  check_report(report);
  return report;
}

std::string serialize_report_file(const ReportFile& file) {
  json targets = json::array();
  for (const auto& report : file.targets) {
    check_report(report);
    targets.push_back(report_to_json(report));
  }
  json root{{"format", kReportFormat},
            {"manifest", file.manifest},
            {"layer", file.layer},
            {"betas", file.betas},
            {"targets", std::move(targets)},
            {"curve", curve_to_json(file.curve)}};
  return root.dump(1) + "\n";
}

ReportFile parse_report_file(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("report: {}", e.what()));
  }
  try {
    if (root.value("format", std::string()) != kReportFormat) {
      throw ParseError(fmt::format("report: expected format '{}'", kReportFormat));
    }
    ReportFile file;
    file.manifest = root.at("manifest");
    file.layer = root.at("layer").get<int>();
    file.betas = root.at("betas").get<std::vector<double>>();
    for (const auto& node : root.at("targets")) file.targets.push_back(report_from_json(node));
    file.curve = curve_from_json(root.at("curve"));
    return file;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("report: {}", e.what()));
  }
}

void write_report_file(const ReportFile& file, const std::filesystem::path& path) {
  write_file(path, serialize_report_file(file));
}

ReportFile read_report_file(const std::filesystem::path& path) {
  return parse_report_file(read_file(path));
}

void write_report(const ExtractionReport& report, const std::filesystem::path& path) {
  ReportFile file;
  file.layer = report.target.layer;
  for (const auto& scored : report.rules) file.betas.push_back(scored.beta);
  file.targets.push_back(report);
  file.curve = report.curve;
  write_report_file(file, path);
}

ExtractionReport read_report(const std::filesystem::path& path) {
  ReportFile file = read_report_file(path);
  if (file.targets.size() != 1) {
    throw ParseError(fmt::format("report: expected one target, found {}", file.targets.size()));
  }
  return std::move(file.targets.front());
}

}  // namespace monrex
