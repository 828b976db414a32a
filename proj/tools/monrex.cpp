#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "monrex/cli.hpp"
#include "monrex/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Layerwise M-of-N rule extraction for trained networks"};
  app.set_version_flag("--version", monrex::kToolVersion);
  app.require_subcommand(1);

  monrex::RunManifest manifest;
  std::string data_format = "auto";
  std::string layers = "all";
  std::string betas = "0,0.05,0.1,0.2,0.3,0.5,1.0";
  std::optional<std::size_t> samples;
  std::optional<std::size_t> workers;
  std::optional<int> max_body;

  auto* extract = app.add_subcommand("extract", "Extract rules for selected layers");
  extract->add_option("--model", manifest.model_path, ".monn model file")->required();
  extract->add_option("--data", manifest.data_path, "dataset (.mond or CSV)")->required();
  extract->add_option("--data-format", data_format, "csv, mond or auto")
      ->check(CLI::IsMember({"auto", "csv", "mond"}));
  extract->add_flag("--csv-header", manifest.csv_header, "CSV file starts with a header row");
  extract->add_option("--layers", layers, "'all' or comma-separated layer indices");
  extract->add_option("--beta", betas, "comma-separated complexity penalties");
  extract->add_option("--samples", samples, "evaluate on k examples chosen by seeded shuffle");
  extract->add_option("--seed", manifest.seed, "sampling seed");
  extract->add_option("--workers", workers, "worker threads (default: $MONREX_WORKERS)");
  extract->add_option("--max-body", max_body, "cap on rule body size");
  extract->add_flag("--oracle", manifest.oracle,
                    "also solve each target exhaustively and report the gap");
  extract->add_option("--out", manifest.out_dir, "output directory");

  std::vector<std::string> report_paths;
  std::string curve_out = ".";
  auto* curve = app.add_subcommand("curve", "Merge report files into tradeoff curves");
  curve->add_option("reports", report_paths, ".monr report files")->required();
  curve->add_option("--out", curve_out, "output directory");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Summarize a model file");
  inspect->add_option("model", inspect_path, ".monn model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? monrex::kExitOk : monrex::kExitInvalid;
  }

  if (*extract) {
    try {
      if (data_format == "csv") manifest.data_format = monrex::DatasetFormat::kCsv;
      if (data_format == "mond") manifest.data_format = monrex::DatasetFormat::kMond;
      manifest.layers = monrex::parse_layer_list(layers);
      manifest.betas = monrex::parse_beta_list(betas);
      manifest.samples = samples;
      manifest.max_body = max_body;
      manifest.workers = monrex::resolve_workers(workers);
    } catch (const monrex::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return monrex::kExitInvalid;
    }
    return monrex::cmd_extract(manifest, std::cerr);
  }
  if (*curve) {
    std::vector<std::filesystem::path> paths(report_paths.begin(), report_paths.end());
    return monrex::cmd_curve(paths, curve_out, std::cerr);
  }
  return monrex::cmd_inspect(inspect_path, std::cout, std::cerr);
}
