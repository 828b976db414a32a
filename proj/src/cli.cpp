#include "monrex/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "monrex/error.hpp"
#include "monrex/forward.hpp"
#include "monrex/report.hpp"
#include "monrex/search.hpp"

namespace monrex {

using nlohmann::json;

namespace {

constexpr const char* kCurvesFormat = "monrex-curves/1";
constexpr const char* kRulesFormat = "monrex-rules/1";

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const BudgetError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitBudget;
  } catch (const ParseError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitInvalid;
  } catch (const ValidationError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitFailure;
  }
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto comma = text.find(',');
    std::string_view part = text.substr(0, comma);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    parts.push_back(part);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return parts;
}

std::string header_lines(const char* format, const json& manifest) {
  return fmt::format("# format: {}\n# tool: {}\n# manifest: {}\n", format, kToolVersion,
                     manifest.dump());
}

std::string curve_rows(int layer, const TradeoffCurve& curve) {
  std::string out;
  for (const auto& p : curve.points) {
    out += fmt::format("{},{},{},{}\n", p.beta, layer, p.complexity, p.error);
  }
  return out;
}

std::vector<int> weighted_layers(const NetworkModel& model) {
  std::vector<int> layers;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (model.layers[i].has_weights()) layers.push_back(static_cast<int>(i));
  }
  return layers;
}

}  // namespace

std::vector<double> default_betas() { return {0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0}; }

json RunManifest::recorded() const {
  json node{{"model", model_path.generic_string()},
            {"data", data_path.generic_string()},
            {"data_format", data_format ? (*data_format == DatasetFormat::kMond ? "mond" : "csv")
                                        : "auto"},
            {"csv_header", csv_header},
            {"layers", layers ? json(*layers) : json("all")},
            {"betas", betas},
            {"samples", samples ? json(*samples) : json(nullptr)},
            {"seed", seed},
            {"max_body", max_body ? json(*max_body) : json(nullptr)},
            {"oracle", oracle}};
  return node;
}

std::size_t resolve_workers(std::optional<std::size_t> flag) {
  if (flag) {
    if (*flag == 0) throw ValidationError(-1, "workers", "worker count must be positive");
    return *flag;
  }
  if (const char* env = std::getenv("MONREX_WORKERS"); env != nullptr && *env != '\0') {
    std::size_t value = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
      throw ValidationError(-1, "MONREX_WORKERS", fmt::format("invalid worker count '{}'", text));
    }
    return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::optional<std::vector<int>> parse_layer_list(const std::string& text) {
  if (text == "all") return std::nullopt;
  std::vector<int> layers;
  for (auto part : split_commas(text)) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size() || value < 0) {
      throw ValidationError(-1, "layers", fmt::format("invalid layer index '{}'", part));
    }
    layers.push_back(value);
  }
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  return layers;
}

std::vector<double> parse_beta_list(const std::string& text) {
  std::vector<double> betas;
  for (auto part : split_commas(text)) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size() ||
        !std::isfinite(value) || value < 0.0) {
      throw ValidationError(-1, "beta", fmt::format("invalid beta '{}'", part));
    }
    betas.push_back(value);
  }
  std::sort(betas.begin(), betas.end());
  betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
  return betas;
}

Dataset sample_dataset(const Dataset& data, std::size_t samples, std::uint64_t seed) {
  const std::size_t rows = data.examples.rows();
  if (samples == 0) throw ValidationError(-1, "samples", "sample count must be positive");
  if (samples >= rows) return data;

  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(samples);
  std::sort(order.begin(), order.end());

  Dataset out;
  out.examples = Matrix(samples, data.examples.cols());
  if (data.labels) out.labels.emplace();
  for (std::size_t i = 0; i < samples; ++i) {
    const auto src = data.examples.row(order[i]);
    std::copy(src.begin(), src.end(), out.examples.row(i).begin());
    if (data.labels) out.labels->push_back((*data.labels)[order[i]]);
  }
  return out;
}

int cmd_extract(const RunManifest& manifest, std::ostream& err) {
  return guarded(err, [&] {
    const NetworkModel model = load_model(manifest.model_path);
    const DatasetFormat format =
        manifest.data_format.value_or(dataset_format_for(manifest.data_path));
    Dataset data = load_dataset(manifest.data_path, format, manifest.csv_header);
    check_compatible(model, data);
    if (manifest.samples) data = sample_dataset(data, *manifest.samples, manifest.seed);

    SearchConfig config;
    config.betas = manifest.betas;
    config.max_body = manifest.max_body;
    config.workers = manifest.workers;
    if (manifest.oracle) config.oracle = OracleBudget{};
    config.validate();

    std::vector<int> layers = manifest.layers.value_or(weighted_layers(model));
    for (int layer : layers) {
      if (layer < 0 || static_cast<std::size_t>(layer) >= model.layers.size()) {
        throw ValidationError(layer, "layers", "no such layer in the model");
      }
      if (!model.layers[static_cast<std::size_t>(layer)].has_weights()) {
        throw ValidationError(layer, "layers", "layer has no weights to explain");
      }
    }

    const ForwardResult forward = forward_all(model, data, manifest.workers);
    const json recorded = manifest.recorded();
    std::filesystem::create_directories(manifest.out_dir);

    std::string curves = header_lines(kCurvesFormat, recorded);
    curves += "beta,layer,mean_complexity,mean_error\n";
    std::string rules = header_lines(kRulesFormat, recorded);

    for (int layer : layers) {
      ReportFile file;
      file.manifest = recorded;
      file.layer = layer;
      file.betas = config.betas;
      file.targets = search_layer(model, forward, layer, config);
      file.curve = sweep_curve(file.targets);
      write_report_file(file, manifest.out_dir / fmt::format("layer_{}.monr", layer));

      curves += curve_rows(layer, file.curve);
      rules += fmt::format("\n== layer {} ({}) ==\n", layer,
                           to_string(model.layers[static_cast<std::size_t>(layer)].kind));
      for (const auto& report : file.targets) {
        rules += fmt::format("target neuron {}", report.target.neuron);
        if (report.target.feature_map) {
          rules += fmt::format(" (feature map {})", *report.target.feature_map);
        }
        rules += fmt::format(", head gain {}{}\n", report.head_gain,
                             report.degenerate ? ", degenerate" : "");
        for (std::size_t b = 0; b < report.rules.size(); ++b) {
          const ScoredRule& scored = report.rules[b];
          rules += fmt::format("  beta={} error={} complexity={} loss={}", scored.beta,
                               scored.error, scored.complexity, scored.loss);
          if (b < report.oracle.size()) {
            rules += fmt::format(" oracle_gap={}", report.oracle[b].gap);
          }
          rules += fmt::format("\n    {}\n", format_rule(scored.rule));
        }
      }
    }
    write_file(manifest.out_dir / "curves.csv", curves);
    write_file(manifest.out_dir / "rules.txt", rules);
  });
}

int cmd_curve(const std::vector<std::filesystem::path>& reports,
              const std::filesystem::path& out_dir, std::ostream& err) {
  return guarded(err, [&] {
    if (reports.empty()) throw ValidationError(-1, "reports", "no report files given");
    std::vector<ReportFile> files;
    for (const auto& path : reports) files.push_back(read_report_file(path));
    for (const auto& file : files) {
      if (file.betas != files.front().betas) {
        throw ValidationError(file.layer, "betas", "report files use different beta grids");
      }
    }

    std::vector<std::pair<int, TradeoffCurve>> curves;
    for (const auto& file : files) curves.emplace_back(file.layer, sweep_curve(file.targets));
    std::stable_sort(curves.begin(), curves.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::string csv = fmt::format("# format: {}\n# tool: {}\n", kCurvesFormat, kToolVersion);
    for (const auto& file : files) csv += fmt::format("# manifest: {}\n", file.manifest.dump());
    csv += "beta,layer,mean_complexity,mean_error\n";
    std::map<int, std::string> dat;
    for (const auto& [layer, curve] : curves) {
      csv += curve_rows(layer, curve);
      auto& text = dat[layer];
      if (text.empty()) text = "# beta mean_complexity mean_error\n";
      for (const auto& p : curve.points) {
        text += fmt::format("{} {} {}\n", p.beta, p.complexity, p.error);
      }
      text += "\n";
    }

    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "curves.csv", csv);
    for (const auto& [layer, text] : dat) {
      write_file(out_dir / fmt::format("curve_layer{}.dat", layer), text);
    }
  });
}

int cmd_inspect(const std::filesystem::path& model_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const NetworkModel model = load_model(model_path);
    const auto shapes = model.output_shapes();
    fmt::print(out, "model {} input {}\n", model.name.empty() ? "(unnamed)" : model.name,
               to_string(model.input_shape));
    fmt::print(out, "{:<6}{:<12}{:<12}{:<14}{:>10}\n", "layer", "kind", "activation", "output",
               "params");
    std::size_t total = 0;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      const auto& layer = model.layers[i];
      fmt::print(out, "{:<6}{:<12}{:<12}{:<14}{:>10}\n", i, to_string(layer.kind),
                 to_string(layer.activation), to_string(shapes[i]), layer.parameter_count());
      total += layer.parameter_count();
    }
    fmt::print(out, "total parameters: {}\n", total);
  });
}

}  // namespace monrex
