#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "monrex/model_io.hpp"

namespace monrex {

inline constexpr const char* kToolVersion = "monrex 1.0";

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitBudget = 3;

std::vector<double> default_betas();

struct RunManifest {
  std::filesystem::path model_path;
  std::filesystem::path data_path;
  std::optional<DatasetFormat> data_format;  // from the extension when unset
  bool csv_header = false;
  std::optional<std::vector<int>> layers;    // every weighted layer when unset
  std::vector<double> betas = default_betas();
  std::optional<std::size_t> samples;
  std::uint64_t seed = 0;
  std::optional<int> max_body;
  bool oracle = false;
  // Execution settings; they never change results and are not recorded.
  std::size_t workers = 1;
  std::filesystem::path out_dir = ".";

  // The manifest as embedded in every output file.
  nlohmann::json recorded() const;
};

// Worker count from an explicit flag, else MONREX_WORKERS, else the
// hardware concurrency.
std::size_t resolve_workers(std::optional<std::size_t> flag);

// Parses "all" or "1,3,4".
std::optional<std::vector<int>> parse_layer_list(const std::string& text);
// Parses "0,0.1,0.3"; the result is sorted and de-duplicated.
std::vector<double> parse_beta_list(const std::string& text);

// Keeps `samples` rows chosen by a seeded shuffle, in their original order.
Dataset sample_dataset(const Dataset& data, std::size_t samples, std::uint64_t seed);

// Writes layer_<k>.monr per layer, curves.csv and rules.txt into out_dir.
int cmd_extract(const RunManifest& manifest, std::ostream& err);

// Merges report files into out_dir/curves.csv plus curve_layer<k>.dat files.
int cmd_curve(const std::vector<std::filesystem::path>& reports,
              const std::filesystem::path& out_dir, std::ostream& err);

// Per-layer summary table of a model file.
int cmd_inspect(const std::filesystem::path& model_path, std::ostream& out, std::ostream& err);

}  // namespace monrex
