#ifndef LATENT_EMBED_HARNESS_HPP
#define LATENT_EMBED_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "latent_embed/serialization.hpp"

namespace latent_embed {

/// Where scenes come from: files on disk when both paths are set, otherwise
/// a synthetic set generated from `synth` and `data_seed`.
struct DataSource {
  std::string train_path;
  std::string test_path;
  SynthConfig synth;
  int n_train = 600;
  int n_test = 300;
  std::uint64_t data_seed = 7;

  bool operator==(const DataSource&) const = default;
};

struct RunConfig {
  HyperParams hp;
  AdamConfig optimizer;
  int batch_size = 16;
  int max_steps = 2000;
  int eval_interval = 100;
  std::uint64_t seed = 1;  ///< parameter init, batch order, and dropout masks
  DataSource data;
  ModelKind model = ModelKind::LatentEmbed;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

Json to_json(const RunConfig& config);
/// Missing keys keep their defaults, so a config file only needs overrides.
RunConfig run_config_from_json(const Json& j);

struct EvalPoint {
  int step = 0;
  double train_loss = 0.0;  ///< mean minibatch loss since the previous point
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct MetricsReport {
  std::vector<EvalPoint> history;
  double accuracy = 0.0;
  double mean_loss = 0.0;
  Mat confusion;                          ///< K x K, rows normalized
  std::vector<std::size_t> class_counts;  ///< true-label frequencies
  std::vector<int> predictions;
  int steps = 0;
  double wall_clock_seconds = 0.0;
  Json config;
};

Json to_json(const MetricsReport& report);
std::string format_report(const MetricsReport& report);
std::string history_csv(const MetricsReport& report);

struct TrainResult {
  Checkpoint checkpoint;
  MetricsReport report;
};

/// Loads the two splits named by the config or generates them.
std::pair<Dataset, Dataset> load_or_generate(const RunConfig& config);

/// Minibatch Adam on the model selected by config.model; evaluates on `test`
/// every eval_interval steps and once more at the end.
TrainResult train(const RunConfig& config, const Dataset& train_set, const Dataset& test_set);

/// Softmax regression on the scene feature alone.
TrainResult image_baseline(const RunConfig& config, const Dataset& train_set, const Dataset& test_set);
/// Softmax regression on the mean of the person features.
TrainResult person_baseline(const RunConfig& config, const Dataset& train_set, const Dataset& test_set);

/// Eval-mode pass over every scene. Throws EmptyDataset on an empty set.
MetricsReport evaluate(const Checkpoint& checkpoint, const Dataset& dataset);

/// Entry (a, b) is the fraction of class-a samples predicted as b. Rows with
/// no samples stay zero.
Mat confusion_matrix(std::span<const int> predictions, std::span<const int> labels, int K);

enum class AblationAxis { T, Attention };

AblationAxis ablation_axis_from_string(const std::string& name);

struct AblationRow {
  std::string value;
  std::vector<double> accuracies;  ///< one per seed
  double mean_accuracy = 0.0;
};

struct AblationTable {
  std::string axis;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;

  std::string to_text() const;
  /// Two columns: axis value, mean accuracy.
  std::string to_csv() const;
  /// value, seed, accuracy for every run.
  std::string per_seed_csv() const;
};

/// Values swept: T in {1, 2, 3, 4, 15}, or attention in {off, on}.
std::vector<std::string> ablation_values(AblationAxis axis);

AblationTable ablation_sweep(const RunConfig& config, AblationAxis axis, std::span<const std::uint64_t> seeds,
                             const Dataset& train_set, const Dataset& test_set);

}  // namespace latent_embed

#endif  // LATENT_EMBED_HARNESS_HPP
