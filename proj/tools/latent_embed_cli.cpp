#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "latent_embed/harness.hpp"

namespace le = latent_embed;
namespace fs = std::filesystem;

namespace {

/// Exit codes: 0 ok, CLI11's own codes (100+) for a bad command line, 10 + ErrorKind
/// for library errors, 3 for a grad check over threshold, 1 for anything else.
int exit_code(le::ErrorKind kind) { return 10 + static_cast<int>(kind); }

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string dataset;
  std::string test_dataset;
  std::optional<int> T;
  std::optional<std::string> attention;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<int> hidden;
  std::optional<double> dropout;
  std::optional<int> steps;
  std::optional<int> batch;
  std::optional<int> eval_interval;
  std::optional<double> lr;
  std::optional<int> n_train;
  std::optional<int> n_test;
  std::optional<std::uint64_t> data_seed;
  std::optional<double> invader_rate;
  std::optional<double> invader_scale;
  std::optional<double> person_noise;
  std::optional<double> scene_noise;

  std::string checkpoint;
  std::string axis = "T";
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string kind = "person";
  int gc_scenes = 4;
  double threshold = 1e-4;
  double h = 1e-5;
};

void add_run_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run config; flags override its values");
  cmd->add_option("--seed", f.seed, "seed for init, batch order, and dropout");
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--dataset", f.dataset, "training scenes (.jsonl)");
  cmd->add_option("--test-dataset", f.test_dataset, "test scenes (.jsonl)");
  cmd->add_option("--T", f.T, "number of update steps");
  cmd->add_option("--attention", f.attention, "on or off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--lambda", f.lambda, "update step size");
  cmd->add_option("--tau", f.tau, "attention softmax temperature");
  cmd->add_option("--hidden", f.hidden, "embedding size d");
  cmd->add_option("--dropout", f.dropout, "dropout rate on the classifier hidden layer");
  cmd->add_option("--steps", f.steps, "Adam steps");
  cmd->add_option("--batch", f.batch, "minibatch size");
  cmd->add_option("--eval-interval", f.eval_interval, "steps between evaluations");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--n-train", f.n_train, "generated training scenes");
  cmd->add_option("--n-test", f.n_test, "generated test scenes");
  cmd->add_option("--data-seed", f.data_seed, "seed for generated scenes");
  cmd->add_option("--invader-rate", f.invader_rate, "per-person invader probability");
  cmd->add_option("--invader-scale", f.invader_scale, "spread of invader features");
  cmd->add_option("--person-noise", f.person_noise, "isotropic noise on person features");
  cmd->add_option("--scene-noise", f.scene_noise, "isotropic noise on scene features");
}

template <typename T>
void apply(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

le::RunConfig build_config(const Flags& f) {
  le::RunConfig c = f.config.empty() ? le::RunConfig{} : le::run_config_from_json(le::read_json_file(f.config));
  apply(f.seed, c.seed);
  apply(f.T, c.hp.T);
  if (f.attention) c.hp.attention_enabled = *f.attention == "on";
  apply(f.lambda, c.hp.lambda);
  apply(f.tau, c.hp.tau);
  apply(f.hidden, c.hp.d);
  apply(f.dropout, c.hp.dropout_rate);
  apply(f.steps, c.max_steps);
  apply(f.batch, c.batch_size);
  apply(f.eval_interval, c.eval_interval);
  apply(f.lr, c.optimizer.learning_rate);
  apply(f.n_train, c.data.n_train);
  apply(f.n_test, c.data.n_test);
  apply(f.data_seed, c.data.data_seed);
  apply(f.invader_rate, c.data.synth.invader_rate);
  apply(f.invader_scale, c.data.synth.invader_scale);
  apply(f.person_noise, c.data.synth.person_noise);
  apply(f.scene_noise, c.data.synth.scene_noise);
  if (!f.dataset.empty()) c.data.train_path = f.dataset;
  if (!f.test_dataset.empty()) c.data.test_path = f.test_dataset;
  if (!c.data.train_path.empty() && c.data.test_path.empty()) c.data.test_path = c.data.train_path;
  c.data.synth.classes = c.hp.K;
  c.data.synth.p_dim = c.hp.p_dim;
  c.data.synth.s_dim = c.hp.s_dim;
  c.validate();
  return c;
}

/// Data dims override the config dims when scenes come from files.
void sync_dims(le::RunConfig& c, const le::Dataset& train_set) {
  if (c.data.train_path.empty() || train_set.scenes.empty()) return;
  const auto& s = train_set.scenes.front();
  c.hp.p_dim = static_cast<int>(s.persons.front().feature.size());
  c.hp.s_dim = static_cast<int>(s.scene_feature.size());
  int max_label = 0;
  for (const auto& scene : train_set.scenes) max_label = std::max(max_label, scene.label);
  c.hp.K = std::max(c.hp.K, max_label + 1);
}

le::Json echo_flags(const CLI::App& cmd) {
  le::Json flags = le::Json::object();
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_name() == "--help" || opt->count() == 0) continue;
    const auto values = opt->results();
    flags[opt->get_name()] = values.size() == 1 ? le::Json(values.front()) : le::Json(values);
  }
  return flags;
}

void write_reports(const fs::path& out, const le::MetricsReport& report, const le::Json& flags,
                   const std::string& stem = "report") {
  le::Json j = to_json(report);
  j["flags"] = flags;
  le::write_text_file(out / (stem + ".json"), j.dump(2) + "\n");
  le::write_text_file(out / (stem + ".txt"), le::format_report(report) + "flags: " + flags.dump() + "\n");
  if (!report.history.empty()) le::write_text_file(out / "metrics.csv", le::history_csv(report));
}

int run_train(const Flags& f, const CLI::App& cmd, std::optional<le::ModelKind> kind) {
  le::RunConfig c = build_config(f);
  if (kind) c.model = *kind;
  const auto [train_set, test_set] = le::load_or_generate(c);
  sync_dims(c, train_set);
  const fs::path out = f.out;
  fs::create_directories(out);
  const auto result = le::train(c, train_set, test_set);
  le::save_checkpoint(result.checkpoint, out / "checkpoint.json");
  write_reports(out, result.report, echo_flags(cmd));
  std::cout << to_string(c.model) << " accuracy " << result.report.accuracy << " after " << result.report.steps
            << " steps (" << result.report.wall_clock_seconds << " s); wrote " << out.string() << "\n";
  return 0;
}

int run_generate(const Flags& f, const CLI::App& cmd) {
  const le::RunConfig c = build_config(f);
  le::RunConfig synth = c;
  synth.data.train_path.clear();
  synth.data.test_path.clear();
  const auto [train_set, test_set] = le::load_or_generate(synth);
  const fs::path out = f.out;
  fs::create_directories(out);
  le::save_scenes(train_set, out / "train.jsonl");
  le::save_scenes(test_set, out / "test.jsonl");
  le::Json manifest = le::to_json(synth);
  manifest["flags"] = echo_flags(cmd);
  le::write_text_file(out / "generate.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << train_set.scenes.size() << " train and " << test_set.scenes.size() << " test scenes to "
            << out.string() << "\n";
  return 0;
}

int run_evaluate(const Flags& f, const CLI::App& cmd) {
  if (f.checkpoint.empty()) throw le::Error(le::ErrorKind::Config, "evaluate needs --checkpoint");
  if (f.dataset.empty()) throw le::Error(le::ErrorKind::Config, "evaluate needs --dataset");
  const le::Checkpoint ck = le::load_checkpoint(f.checkpoint);
  const le::Dataset data = le::load_scenes(f.dataset);
  le::MetricsReport report = le::evaluate(ck, data);
  report.config = {{"checkpoint", f.checkpoint}, {"dataset", f.dataset}, {"model", to_string(ck.kind)}};
  const fs::path out = f.out;
  fs::create_directories(out);
  write_reports(out, report, echo_flags(cmd), "evaluation");
  std::cout << "accuracy " << report.accuracy << " on " << data.scenes.size() << " scenes\n";
  return 0;
}

int run_gradcheck(const Flags& f, const CLI::App& cmd) {
  le::RunConfig c = build_config(f);
  if (!f.hidden) c.hp.d = 8;
  c.data.n_train = std::max(f.gc_scenes, c.hp.K);
  c.data.n_test = 1;
  const auto [scenes, unused] = le::load_or_generate(c);
  sync_dims(c, scenes);
  le::Rng rng(le::mix_seed(c.seed, 1));
  const le::ModelParams params = le::init_params(c.hp, rng);
  le::GradCheckOptions opt;
  opt.h = f.h;
  opt.seed = c.seed;

  le::Json reports = le::Json::array();
  double worst = 0.0;
  const auto n = std::min<std::size_t>(scenes.scenes.size(), static_cast<std::size_t>(f.gc_scenes));
  for (std::size_t k = 0; k < n; ++k) {
    const auto& scene = scenes.scenes[k];
    const auto report = le::grad_check(scene, params, c.hp, scene.label, opt);
    worst = std::max(worst, report.max_relative_error);
    le::Json j = to_json(report);
    j["scene_id"] = scene.scene_id;
    reports.push_back(j);
    std::cout << "scene " << scene.scene_id << ": max relative error " << report.max_relative_error << " ("
              << report.worst_tensor << ")\n";
  }
  const fs::path out = f.out;
  fs::create_directories(out);
  le::Json doc = {{"threshold", f.threshold},
                  {"max_relative_error", worst},
                  {"hyperparams", le::to_json(c.hp)},
                  {"scenes", reports},
                  {"flags", echo_flags(cmd)}};
  le::write_text_file(out / "gradcheck.json", doc.dump(2) + "\n");
  const bool ok = worst < f.threshold;
  std::cout << (ok ? "ok" : "FAILED") << ": max relative error " << worst << " (threshold " << f.threshold << ")\n";
  return ok ? 0 : 3;
}

int run_ablate(const Flags& f, const CLI::App& cmd) {
  le::RunConfig c = build_config(f);
  const auto axis = le::ablation_axis_from_string(f.axis);
  const auto [train_set, test_set] = le::load_or_generate(c);
  sync_dims(c, train_set);
  const auto table = le::ablation_sweep(c, axis, f.seeds, train_set, test_set);
  const fs::path out = f.out;
  fs::create_directories(out);
  const std::string stem = "ablation_" + table.axis;
  le::write_text_file(out / (stem + ".csv"), table.to_csv());
  le::write_text_file(out / (stem + "_per_seed.csv"), table.per_seed_csv());
  const std::string text = table.to_text() + "config: " + le::to_json(c).dump() + "\nflags: " + echo_flags(cmd).dump() + "\n";
  le::write_text_file(out / (stem + ".txt"), text);
  std::cout << table.to_text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent embedding model for collective activity recognition"};
  app.require_subcommand(1);
  Flags f;

  auto* generate = app.add_subcommand("generate", "write synthetic train/test scene files");
  auto* train = app.add_subcommand("train", "train the latent embedding model");
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  auto* ablate = app.add_subcommand("ablate", "sweep T or attention over several seeds");
  auto* baseline = app.add_subcommand("baseline", "train the image or person softmax baseline");
  for (auto* cmd : {generate, train, gradcheck, ablate, baseline}) add_run_options(cmd, f);

  evaluate->add_option("--checkpoint", f.checkpoint, "checkpoint.json from train or baseline")->required();
  evaluate->add_option("--dataset", f.dataset, "scenes to score (.jsonl)")->required();
  evaluate->add_option("--out", f.out, "output directory")->capture_default_str();
  ablate->add_option("--axis", f.axis, "T or attention")->capture_default_str();
  ablate->add_option("--seeds", f.seeds, "training seeds")->delimiter(',')->capture_default_str();
  baseline->add_option("--kind", f.kind, "image or person")->capture_default_str();
  gradcheck->add_option("--scenes", f.gc_scenes, "scenes to check")->capture_default_str();
  gradcheck->add_option("--threshold", f.threshold, "maximum relative error")->capture_default_str();
  gradcheck->add_option("--fd-step", f.h, "finite-difference step")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return run_generate(f, *generate);
    if (train->parsed()) return run_train(f, *train, le::ModelKind::LatentEmbed);
    if (evaluate->parsed()) return run_evaluate(f, *evaluate);
    if (gradcheck->parsed()) return run_gradcheck(f, *gradcheck);
    if (ablate->parsed()) return run_ablate(f, *ablate);
    if (baseline->parsed()) {
      const auto kind = le::model_kind_from_string(f.kind);
      if (kind == le::ModelKind::LatentEmbed) throw le::Error(le::ErrorKind::Config, "--kind must be image or person");
      return run_train(f, *baseline, kind);
    }
  } catch (const le::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
