#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cvgp/liknet.hpp"

namespace cvgp {

enum class DataSource { Morlet, Files };

/// Experiment knobs, read from a flat `key = value` file ('#' starts a
/// comment). Unknown keys and malformed values are errors.
struct ExperimentConfig {
  DataSource data_source = DataSource::Morlet;
  // Snapshot files; empty means the default names inside out_dir.
  std::string train_file;
  std::string test_file;
  std::string test_fine_file;

  Index n_snapshots = 1000;
  Index grid_intervals = 500;
  Index fine_grid_intervals = 1000;
  Index n_train = 500;
  double noise = 0.01;

  /// Fixed POD rank; 0 selects the rank from eps_pod.
  Index n_pod = 10;
  double eps_pod = 0.05;
  int gpr_restarts = 5;
  int gpr_max_iterations = 200;

  std::vector<Index> hidden{100, 100, 100, 100};
  std::vector<LrStage> lr_schedule{{1e-3, 100}, {1e-4, 50}, {1e-5, 50}};
  ScheduleUnit schedule_unit = ScheduleUnit::Epoch;
  Index batch_size = 1000;
  Index n_mc = 1;
  Index log_interval = 50;

  bool train_discrete = false;
  std::vector<Index> discrete_hidden{100, 100, 100, 100};

  Index n_predict_samples = 100;
  std::vector<Index> sweep_ranks{1, 2, 3, 4, 5, 10, 20, 30};

  std::string out_dir = "out";
  std::uint64_t seed = 0;

  void validate() const;
  TrainConfig train_config(std::uint64_t stage_seed) const;
  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string render_config(const ExperimentConfig& cfg);
/// FNV-1a of the rendered config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace cvgp
