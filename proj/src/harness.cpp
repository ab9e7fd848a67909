#include "latent_embed/harness.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace latent_embed {

namespace {

void require_config(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::Config, message);
}

Vec person_feature_mean(const CollectiveScene& scene) {
  const auto order = canonical_order(scene);
  return mean_pool(order | std::views::transform([&scene](std::size_t k) -> const Vec& {
                     return scene.persons[k].feature;
                   }));
}

/// Training/evaluation hooks for the latent embedding model.
struct LatentPolicy {
  HyperParams hp;
  using Params = ModelParams;
  using Grads = ParamGrads;

  Params init(Rng& rng) const { return init_params(hp, rng); }

  void check(const CollectiveScene& scene) const { validate_scene(scene, hp); }

  double loss_and_grad(const CollectiveScene& scene, const Params& p, std::uint64_t seed, Grads& g) const {
    const ForwardTrace tr = forward(scene, p, hp, Mode::Train, seed);
    const double l = loss(tr, scene.label);
    if (std::isfinite(l)) g = backward(tr, scene, p, hp, scene.label);
    return l;
  }

  Vec distribution(const CollectiveScene& scene, const Params& p) const {
    return forward(scene, p, hp, Mode::Eval).distribution;
  }

  Checkpoint checkpoint(const Params& p) const {
    Checkpoint c;
    c.kind = ModelKind::LatentEmbed;
    c.hp = hp;
    c.params = p;
    return c;
  }
};

/// Softmax regression over one fixed feature of the scene.
struct LinearPolicy {
  HyperParams hp;
  ModelKind kind;
  using Params = LinearParams;
  using Grads = LinearParams;

  bool uses_scene() const { return kind == ModelKind::ImageBaseline; }
  Eigen::Index inputs() const { return uses_scene() ? hp.s_dim : hp.p_dim; }

  Vec input(const CollectiveScene& scene) const {
    return uses_scene() ? scene.scene_feature : person_feature_mean(scene);
  }

  Params init(Rng& rng) const {
    Params p = Params::zeros(hp.K, inputs());
    p.W = xavier_init(hp.K, inputs(), rng);
    return p;
  }

  void check(const CollectiveScene& scene) const { validate_scene(scene, hp); }

  double loss_and_grad(const CollectiveScene& scene, const Params& p, std::uint64_t, Grads& g) const {
    const Vec x = input(scene);
    const Vec prob = softmax_temp(Vec(matvec(p.W, x) + p.b), 1.0);
    const double l = -std::log(std::max(prob[scene.label], 1e-300));
    Vec dlogits = prob;
    dlogits[scene.label] -= 1.0;
    if (prob[scene.label] < 1e-300) dlogits.setZero();
    g.W = dlogits * x.transpose();
    g.b = dlogits;
    return l;
  }

  Vec distribution(const CollectiveScene& scene, const Params& p) const {
    return softmax_temp(Vec(matvec(p.W, input(scene)) + p.b), 1.0);
  }

  Checkpoint checkpoint(const Params& p) const {
    Checkpoint c;
    c.kind = kind;
    c.hp = hp;
    c.linear = p;
    return c;
  }
};

/// Mean of per-scene gradients, summed in batch order.
template <typename Grads>
Grads batch_mean(const std::vector<Grads>& grads) {
  Grads acc = grads.front();
  auto out = acc.tensors();
  for (std::size_t s = 1; s < grads.size(); ++s) {
    const auto in = grads[s].tensors();
    for (std::size_t t = 0; t < out.size(); ++t)
      for (std::size_t k = 0; k < out[t].values.size(); ++k) out[t].values[k] += in[t].values[k];
  }
  const double scale = 1.0 / static_cast<double>(grads.size());
  for (auto& t : out)
    for (double& v : t.values) v *= scale;
  return acc;
}

template <typename Policy>
MetricsReport evaluate_with(const Policy& policy, const typename Policy::Params& params, const Dataset& dataset) {
  if (dataset.scenes.empty()) throw Error(ErrorKind::EmptyDataset, "cannot evaluate on an empty dataset");
  MetricsReport report;
  std::vector<int> labels;
  double total_loss = 0.0;
  for (const auto& scene : dataset.scenes) {
    policy.check(scene);
    const Vec dist = policy.distribution(scene, params);
    report.predictions.push_back(predict(dist));
    labels.push_back(scene.label);
    total_loss += -std::log(std::max(dist[scene.label], 1e-300));
  }
  const int K = policy.hp.K;
  report.confusion = confusion_matrix(report.predictions, labels, K);
  report.class_counts.assign(static_cast<std::size_t>(K), 0);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    ++report.class_counts[static_cast<std::size_t>(labels[k])];
    if (labels[k] == report.predictions[k]) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  report.mean_loss = total_loss / static_cast<double>(labels.size());
  return report;
}

template <typename Policy>
TrainResult train_with(const Policy& policy, const RunConfig& config, const Dataset& train_set,
                       const Dataset& test_set) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  if (train_set.scenes.empty()) throw Error(ErrorKind::EmptyDataset, "training set is empty");
  if (test_set.scenes.empty()) throw Error(ErrorKind::EmptyDataset, "test set is empty");
  for (const auto& s : train_set.scenes) policy.check(s);
  for (const auto& s : test_set.scenes) policy.check(s);

  Rng init_rng(mix_seed(config.seed, 1));
  auto params = policy.init(init_rng);
  AdamState adam = make_adam_state(params, config.optimizer);
  Rng order_rng(mix_seed(config.seed, 2));
  const std::uint64_t dropout_stream = mix_seed(config.seed, 3);

  std::vector<std::size_t> order(train_set.scenes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  MetricsReport report;
  double interval_loss = 0.0;
  int interval_batches = 0;
  std::vector<typename Policy::Grads> grads(static_cast<std::size_t>(config.batch_size));

  for (int step = 1; step <= config.max_steps; ++step) {
    double batch_loss = 0.0;
    for (int j = 0; j < config.batch_size; ++j) {
      if (cursor == order.size()) {
        for (std::size_t k = order.size() - 1; k > 0; --k)
          std::swap(order[k], order[static_cast<std::size_t>(order_rng.uniform_int(0, static_cast<std::int64_t>(k)))]);
        cursor = 0;
      }
      const CollectiveScene& scene = train_set.scenes[order[cursor++]];
      const std::uint64_t mask_seed =
          mix_seed(dropout_stream, static_cast<std::uint64_t>(step) * 65536u + static_cast<std::uint64_t>(j));
      const double l = policy.loss_and_grad(scene, params, mask_seed, grads[static_cast<std::size_t>(j)]);
      if (!std::isfinite(l)) throw NonFiniteLossError(step, scene.scene_id);
      batch_loss += l;
    }
    adam_step(params, batch_mean(grads), adam);
    interval_loss += batch_loss / config.batch_size;
    ++interval_batches;

    if (step % config.eval_interval == 0 || step == config.max_steps) {
      const MetricsReport eval = evaluate_with(policy, params, test_set);
      report.history.push_back({step, interval_loss / interval_batches, eval.mean_loss, eval.accuracy});
      interval_loss = 0.0;
      interval_batches = 0;
    }
  }

  MetricsReport final_eval = evaluate_with(policy, params, test_set);
  final_eval.history = std::move(report.history);
  final_eval.steps = config.max_steps;
  final_eval.config = to_json(config);
  final_eval.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  TrainResult result;
  result.checkpoint = policy.checkpoint(params);
  result.checkpoint.optimizer = std::move(adam);
  result.report = std::move(final_eval);
  return result;
}

std::string format_accuracy(double a) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << a;
  return out.str();
}

}  // namespace

void RunConfig::validate() const {
  hp.validate();
  require_config(batch_size > 0, "batch size must be positive");
  require_config(max_steps > 0, "max steps must be positive");
  require_config(eval_interval > 0, "eval interval must be positive");
  require_config(optimizer.learning_rate > 0.0, "learning rate must be positive");
  require_config(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0, "beta1 must lie in [0, 1)");
  require_config(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0, "beta2 must lie in [0, 1)");
  require_config(optimizer.epsilon > 0.0, "epsilon must be positive");
}

Json to_json(const RunConfig& c) {
  const SynthConfig& s = c.data.synth;
  return {{"hyperparams", to_json(c.hp)},
          {"optimizer",
           {{"learning_rate", c.optimizer.learning_rate},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"epsilon", c.optimizer.epsilon}}},
          {"batch_size", c.batch_size},
          {"max_steps", c.max_steps},
          {"eval_interval", c.eval_interval},
          {"seed", c.seed},
          {"model", to_string(c.model)},
          {"data",
           {{"train_path", c.data.train_path},
            {"test_path", c.data.test_path},
            {"n_train", c.data.n_train},
            {"n_test", c.data.n_test},
            {"data_seed", c.data.data_seed},
            {"synth",
             {{"classes", s.classes},
              {"p_dim", s.p_dim},
              {"s_dim", s.s_dim},
              {"min_persons", s.min_persons},
              {"max_persons", s.max_persons},
              {"person_noise", s.person_noise},
              {"scene_signal", s.scene_signal},
              {"scene_noise", s.scene_noise},
              {"invader_rate", s.invader_rate},
              {"invader_scale", s.invader_scale}}}}}};
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorKind::Config, "config root must be an object");
    if (j.contains("hyperparams")) c.hp = hyperparams_from_json(j["hyperparams"]);
    if (j.contains("optimizer")) {
      const Json& o = j["optimizer"];
      c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
      c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
      c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
      c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
    }
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.eval_interval = j.value("eval_interval", c.eval_interval);
    c.seed = j.value("seed", c.seed);
    if (j.contains("model")) c.model = model_kind_from_string(j["model"].get<std::string>());
    if (j.contains("data")) {
      const Json& d = j["data"];
      c.data.train_path = d.value("train_path", c.data.train_path);
      c.data.test_path = d.value("test_path", c.data.test_path);
      c.data.n_train = d.value("n_train", c.data.n_train);
      c.data.n_test = d.value("n_test", c.data.n_test);
      c.data.data_seed = d.value("data_seed", c.data.data_seed);
      if (d.contains("synth")) {
        const Json& s = d["synth"];
        SynthConfig& sc = c.data.synth;
        sc.classes = s.value("classes", sc.classes);
        sc.p_dim = s.value("p_dim", sc.p_dim);
        sc.s_dim = s.value("s_dim", sc.s_dim);
        sc.min_persons = s.value("min_persons", sc.min_persons);
        sc.max_persons = s.value("max_persons", sc.max_persons);
        sc.person_noise = s.value("person_noise", sc.person_noise);
        sc.scene_signal = s.value("scene_signal", sc.scene_signal);
        sc.scene_noise = s.value("scene_noise", sc.scene_noise);
        sc.invader_rate = s.value("invader_rate", sc.invader_rate);
        sc.invader_scale = s.value("invader_scale", sc.invader_scale);
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return c;
}

Json to_json(const MetricsReport& r) {
  Json history = Json::array();
  for (const auto& p : r.history)
    history.push_back({{"step", p.step},
                       {"train_loss", p.train_loss},
                       {"test_loss", p.test_loss},
                       {"test_accuracy", p.test_accuracy}});
  Json confusion = Json::array();
  for (Eigen::Index a = 0; a < r.confusion.rows(); ++a) {
    Json row = Json::array();
    for (Eigen::Index b = 0; b < r.confusion.cols(); ++b) row.push_back(r.confusion(a, b));
    confusion.push_back(row);
  }
  return {{"accuracy", r.accuracy},
          {"mean_loss", r.mean_loss},
          {"steps", r.steps},
          {"confusion", confusion},
          {"class_counts", r.class_counts},
          {"history", history},
          {"wall_clock_seconds", r.wall_clock_seconds},
          {"config", r.config}};
}

std::string format_report(const MetricsReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "accuracy: " << r.accuracy << "\n";
  out << "mean loss: " << r.mean_loss << "\n";
  if (r.steps > 0) out << "steps: " << r.steps << "\n";
  if (!r.history.empty()) {
    out << "\n  step  train_loss  test_loss  test_acc\n";
    for (const auto& p : r.history)
      out << std::setw(6) << p.step << std::setw(12) << p.train_loss << std::setw(11) << p.test_loss
          << std::setw(10) << p.test_accuracy << "\n";
  }
  out << "\nconfusion (row = true class, fraction predicted as column):\n";
  for (Eigen::Index a = 0; a < r.confusion.rows(); ++a) {
    out << "  " << a << ":";
    for (Eigen::Index b = 0; b < r.confusion.cols(); ++b) out << " " << r.confusion(a, b);
    out << "\n";
  }
  out << std::setprecision(2) << "\nwall clock: " << r.wall_clock_seconds << " s\n";
  if (!r.config.is_null()) out << "config: " << r.config.dump() << "\n";
  return out.str();
}

std::string history_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "step,train_loss,test_loss,test_accuracy\n";
  for (const auto& p : r.history)
    out << p.step << "," << p.train_loss << "," << p.test_loss << "," << p.test_accuracy << "\n";
  return out.str();
}

std::pair<Dataset, Dataset> load_or_generate(const RunConfig& config) {
  const DataSource& d = config.data;
  if (!d.train_path.empty() || !d.test_path.empty()) {
    require_config(!d.train_path.empty() && !d.test_path.empty(), "both train and test dataset paths are required");
    require_config(std::filesystem::exists(d.train_path), "dataset not found: " + d.train_path);
    require_config(std::filesystem::exists(d.test_path), "dataset not found: " + d.test_path);
    return {load_scenes(d.train_path), load_scenes(d.test_path)};
  }
  return generate_dataset(make_archetypes(d.synth, d.data_seed), d.n_train, d.n_test, d.data_seed);
}

TrainResult train(const RunConfig& config, const Dataset& train_set, const Dataset& test_set) {
  switch (config.model) {
    case ModelKind::LatentEmbed: return train_with(LatentPolicy{config.hp}, config, train_set, test_set);
    case ModelKind::ImageBaseline: return image_baseline(config, train_set, test_set);
    case ModelKind::PersonBaseline: return person_baseline(config, train_set, test_set);
  }
  throw Error(ErrorKind::Config, "unknown model kind");
}

TrainResult image_baseline(const RunConfig& config, const Dataset& train_set, const Dataset& test_set) {
  RunConfig c = config;
  c.model = ModelKind::ImageBaseline;
  return train_with(LinearPolicy{c.hp, ModelKind::ImageBaseline}, c, train_set, test_set);
}

TrainResult person_baseline(const RunConfig& config, const Dataset& train_set, const Dataset& test_set) {
  RunConfig c = config;
  c.model = ModelKind::PersonBaseline;
  return train_with(LinearPolicy{c.hp, ModelKind::PersonBaseline}, c, train_set, test_set);
}

MetricsReport evaluate(const Checkpoint& checkpoint, const Dataset& dataset) {
  const auto start = std::chrono::steady_clock::now();
  MetricsReport report;
  if (checkpoint.kind == ModelKind::LatentEmbed) {
    checkpoint.params.check_shapes(checkpoint.hp);
    report = evaluate_with(LatentPolicy{checkpoint.hp}, checkpoint.params, dataset);
  } else {
    const LinearPolicy policy{checkpoint.hp, checkpoint.kind};
    if (checkpoint.linear.W.rows() != checkpoint.hp.K)
      throw ShapeError("baseline class count", checkpoint.hp.K, checkpoint.linear.W.rows());
    if (checkpoint.linear.W.cols() != policy.inputs())
      throw ShapeError("baseline input dim", policy.inputs(), checkpoint.linear.W.cols());
    report = evaluate_with(policy, checkpoint.linear, dataset);
  }
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Mat confusion_matrix(std::span<const int> predictions, std::span<const int> labels, int K) {
  if (K < 1) throw Error(ErrorKind::Index, "class count must be positive");
  if (predictions.size() != labels.size())
    throw ShapeError("prediction count", labels.size(), predictions.size());
  Mat counts = Mat::Zero(K, K);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] < 0 || labels[k] >= K)
      throw Error(ErrorKind::Index, "label " + std::to_string(labels[k]) + " outside [0, " + std::to_string(K) + ")");
    if (predictions[k] < 0 || predictions[k] >= K)
      throw Error(ErrorKind::Index,
                  "prediction " + std::to_string(predictions[k]) + " outside [0, " + std::to_string(K) + ")");
    counts(labels[k], predictions[k]) += 1.0;
  }
  for (Eigen::Index a = 0; a < K; ++a) {
    const double total = counts.row(a).sum();
    if (total > 0.0) counts.row(a) /= total;
  }
  return counts;
}

AblationAxis ablation_axis_from_string(const std::string& name) {
  if (name == "T" || name == "t") return AblationAxis::T;
  if (name == "attention") return AblationAxis::Attention;
  throw Error(ErrorKind::Config, "unknown ablation axis '" + name + "' (expected T or attention)");
}

std::vector<std::string> ablation_values(AblationAxis axis) {
  if (axis == AblationAxis::T) return {"1", "2", "3", "4", "15"};
  return {"off", "on"};
}

AblationTable ablation_sweep(const RunConfig& config, AblationAxis axis, std::span<const std::uint64_t> seeds,
                             const Dataset& train_set, const Dataset& test_set) {
  if (seeds.empty()) throw Error(ErrorKind::Config, "ablation needs at least one seed");
  AblationTable table;
  table.axis = axis == AblationAxis::T ? "T" : "attention";
  table.seeds.assign(seeds.begin(), seeds.end());
  for (const auto& value : ablation_values(axis)) {
    RunConfig c = config;
    c.model = ModelKind::LatentEmbed;
    if (axis == AblationAxis::T) {
      c.hp.T = std::stoi(value);
    } else {
      c.hp.attention_enabled = value == "on";
    }
    AblationRow row;
    row.value = value;
    for (std::uint64_t seed : seeds) {
      c.seed = seed;
      row.accuracies.push_back(train(c, train_set, test_set).report.accuracy);
    }
    double total = 0.0;
    for (double a : row.accuracies) total += a;
    row.mean_accuracy = total / static_cast<double>(row.accuracies.size());
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string AblationTable::to_text() const {
  std::ostringstream out;
  out << std::left << std::setw(11) << axis << std::setw(15) << "mean_accuracy";
  for (auto s : seeds) out << std::setw(10) << ("seed=" + std::to_string(s));
  out << "\n";
  for (const auto& r : rows) {
    out << std::setw(11) << r.value << std::setw(15) << format_accuracy(r.mean_accuracy);
    for (double a : r.accuracies) out << std::setw(10) << format_accuracy(a);
    out << "\n";
  }
  return out.str();
}

std::string AblationTable::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17) << axis << ",mean_accuracy\n";
  for (const auto& r : rows) out << r.value << "," << r.mean_accuracy << "\n";
  return out.str();
}

std::string AblationTable::per_seed_csv() const {
  std::ostringstream out;
  out << std::setprecision(17) << axis << ",seed,accuracy\n";
  for (const auto& r : rows)
    for (std::size_t k = 0; k < r.accuracies.size(); ++k) out << r.value << "," << seeds[k] << "," << r.accuracies[k] << "\n";
  return out.str();
}

}  // namespace latent_embed
