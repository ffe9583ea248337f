#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cvgp/bundle.hpp"
#include "cvgp/config.hpp"
#include "cvgp/predict.hpp"

namespace cvgp {

enum class GridChoice { Coarse, Fine };

const char* to_string(GridChoice g);
GridChoice parse_grid_choice(const std::string& s);

/// Where each command reads and writes. Files named in the config take
/// precedence over the defaults inside out_dir.
struct ExperimentPaths {
  std::filesystem::path train_clean;
  std::filesystem::path train_noisy;
  std::filesystem::path test_clean;
  std::filesystem::path test_fine;
  std::filesystem::path bundle;
  std::filesystem::path loss_history;
  std::filesystem::path results;
  std::filesystem::path sweep;

  static ExperimentPaths from(const ExperimentConfig& cfg);
};

struct ExperimentData {
  SnapshotSet train_clean;
  SnapshotSet train;  // noisy
  SnapshotSet test;   // clean, training grid
  SnapshotSet test_fine;
};

/// Morlet data for the config: generation, train/test split and training
/// noise each use their own stage seed.
ExperimentData make_morlet_data(const ExperimentConfig& cfg);

struct TrainedPipeline {
  ModelBundle bundle;
  std::vector<LossRecord> history;
  std::vector<LossRecord> discrete_history;
};

/// POD rank from the config: n_pod if set, else chosen by eps_pod.
PodBasis fit_configured_pod(const SnapshotSet& train, const ExperimentConfig& cfg);

/// Recognition model on an already fitted basis.
LatentRecognition fit_configured_recognition(const SnapshotSet& train, const PodBasis& pod,
                                             const ExperimentConfig& cfg);

/// Trains the likelihood network (and the discrete baseline if configured)
/// on top of a fitted POD basis and recognition model.
TrainedPipeline fit_networks(const SnapshotSet& train, PodBasis pod, LatentRecognition recog,
                             const ExperimentConfig& cfg, std::ostream* log = nullptr);

TrainedPipeline fit_pipeline(const SnapshotSet& train, const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// One row of the results CSV. epsilon_test is empty when the method has no
/// prediction on the requested grid.
struct ResultRow {
  std::string method;
  double noise = 0.0;
  Index n_pod = 0;
  GridChoice grid = GridChoice::Coarse;
  std::optional<double> epsilon_test;
  double wall_seconds = 0.0;
};

struct MethodPrediction {
  ResultRow row;
  Matrix mean;
  std::optional<Matrix> variance;
};

/// Predicts the test set with every method in the bundle. On the fine grid
/// only cvae-gprr produces a field; the other methods get an empty row.
std::vector<MethodPrediction> evaluate_bundle(const ModelBundle& b, const SnapshotSet& test, GridChoice grid,
                                              Index n_samples, std::uint64_t seed);

struct SweepFailure {
  Index n_pod = 0;
  std::string message;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SweepFailure> failures;
};

/// N_POD sweep on the coarse grid. POD and recognition are fitted once at
/// the largest rank and truncated; each rank trains its own network unless
/// with_cvae is false (GPR-ROM only). Ranks are deduplicated and sorted.
SweepResult run_sweep(const SnapshotSet& train, const SnapshotSet& test, const ExperimentConfig& cfg,
                      bool with_cvae = true, std::ostream* log = nullptr);

inline constexpr const char* kResultsSchemaVersion = "1";
void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);
std::string format_table(const std::vector<ResultRow>& rows);
void write_loss_history(const std::vector<LossRecord>& h, const std::filesystem::path& path);

// Commands behind the CLI.
void cmd_generate(const ExperimentConfig& cfg, std::ostream* log = nullptr);
ModelBundle cmd_train(const ExperimentConfig& cfg, std::ostream* log = nullptr);
std::vector<ResultRow> cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& bundle_path,
                                    GridChoice grid, std::ostream* log = nullptr);
SweepResult cmd_sweep_npod(const ExperimentConfig& cfg, std::ostream* log = nullptr);

}  // namespace cvgp
