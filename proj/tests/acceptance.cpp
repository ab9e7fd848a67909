// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "latent_embed/harness.hpp"
#include "test_support.hpp"

namespace le = latent_embed;
using le::testing::random_params;
using le::testing::random_scene;
using le::testing::small_hp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Outcome gradient_oracle() {
  const auto start = std::chrono::steady_clock::now();
  le::Rng rng(2024);
  int configs = 0;
  double worst = 0.0;
  std::string worst_where;
  for (int repeat = 0; repeat < 2; ++repeat) {
    for (int persons : {1, 2, 5}) {
      for (int T : {1, 3}) {
        for (bool attention : {true, false}) {
          const le::HyperParams hp = small_hp(T, attention);
          const int label = static_cast<int>(rng.uniform_int(0, hp.K - 1));
          const auto scene = random_scene(hp, persons, rng, label);
          const auto p = random_params(hp, rng);
          le::GradCheckOptions opt;
          opt.mode = repeat == 0 ? le::Mode::Eval : le::Mode::Train;
          opt.seed = static_cast<std::uint64_t>(configs);
          const auto report = le::grad_check(scene, p, hp, label, opt);
          if (report.max_relative_error > worst) {
            worst = report.max_relative_error;
            worst_where = report.worst_tensor;
          }
          ++configs;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {configs >= 20 && worst < 1e-4 && elapsed < 30.0,
          fmt("%d configs, max rel err %.3e (%s), %.2f s", configs, worst, worst_where.c_str(), elapsed)};
}

Outcome attention_normalization() {
  le::Rng rng(11);
  double worst = 0.0;
  bool positive = true;
  int traces = 0;
  for (; traces < 1000; ++traces) {
    le::HyperParams hp = small_hp(1 + static_cast<int>(rng.uniform_int(0, 3)));
    hp.tau = rng.uniform(0.05, 2.0);
    const auto scene = random_scene(hp, 1 + static_cast<int>(rng.uniform_int(0, 7)), rng);
    const auto p = random_params(hp, rng, 1.0);
    const auto mode = traces % 2 ? le::Mode::Train : le::Mode::Eval;
    const auto tr = le::forward(scene, p, hp, mode, static_cast<std::uint64_t>(traces));
    for (const auto& st : tr.steps) {
      positive = positive && (st.weights.array() > 0.0).all();
      double total = 0.0;
      for (Eigen::Index k = 0; k < st.weights.size(); ++k) total += st.weights[k];
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return {positive && worst <= 1e-12, fmt("%d traces, all positive: %s, max |sum - 1| %.3e", traces,
                                          positive ? "yes" : "no", worst)};
}

Outcome permutation_invariance() {
  le::Rng rng(12);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const le::HyperParams hp = small_hp(3, trial % 2 == 0);
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 7));
    const auto scene = random_scene(hp, n, rng);
    const auto p = random_params(hp, rng);
    std::vector<std::size_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (int k = n - 1; k > 0; --k)
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(rng.uniform_int(0, k))]);
    const auto a = le::forward(scene, p, hp, le::Mode::Eval);
    const auto b = le::forward(le::testing::permuted(scene, perm), p, hp, le::Mode::Eval);
    worst = std::max(worst, (a.distribution - b.distribution).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-9, fmt("100 scenes, max |dp| %.3e", worst)};
}

Outcome gate_identity() {
  le::Rng rng(13);
  bool frozen = true;
  double uniform_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    le::HyperParams hp = small_hp(1 + trial % 15);
    hp.lambda = 0.0;
    const auto scene = random_scene(hp, 1 + trial % 6, rng);
    const auto p = random_params(hp, rng);
    const auto tr = le::forward(scene, p, hp, le::Mode::Eval);
    for (const auto& st : tr.steps) {
      frozen = frozen && st.scene_embedding == tr.initial.scene;
      for (std::size_t k = 0; k < tr.person_count; ++k)
        frozen = frozen && st.person_embedding[k] == tr.initial.persons[k];
    }

    le::HyperParams on = small_hp(3, true);
    le::HyperParams off = small_hp(3, false);
    auto q = random_params(on, rng);
    q.w_g.setZero();
    q.w_gs.setZero();
    q.b_g = 0.0;
    const auto a = le::forward(scene, q, on, le::Mode::Eval);
    const auto b = le::forward(scene, q, off, le::Mode::Eval);
    for (int t = 0; t < on.T; ++t) {
      const auto& sa = a.steps[static_cast<std::size_t>(t)];
      const auto& sb = b.steps[static_cast<std::size_t>(t)];
      uniform_gap = std::max(uniform_gap, (sa.scene_embedding - sb.scene_embedding).cwiseAbs().maxCoeff());
      for (std::size_t k = 0; k < a.person_count; ++k)
        uniform_gap = std::max(uniform_gap, (sa.person_embedding[k] - sb.person_embedding[k]).cwiseAbs().maxCoeff());
    }
  }
  return {frozen && uniform_gap <= 1e-12,
          fmt("lambda=0 bit-identical: %s, uniform vs off max gap %.3e", frozen ? "yes" : "no", uniform_gap)};
}

le::RunConfig synthetic_run(double invader_rate) {
  le::RunConfig c;
  c.hp.d = 32;
  c.hp.T = 3;
  c.hp.lambda = 0.3;
  c.hp.tau = 0.25;
  c.hp.K = 3;
  c.hp.p_dim = 16;
  c.hp.s_dim = 16;
  c.data.synth.p_dim = 16;
  c.data.synth.s_dim = 16;
  c.data.synth.invader_rate = invader_rate;
  c.data.n_train = 600;
  c.data.n_test = 300;
  c.max_steps = 2000;
  return c;
}

Outcome learnability() {
  const le::RunConfig c = synthetic_run(0.0);
  const auto [train_set, test_set] = le::load_or_generate(c);
  const auto start = std::chrono::steady_clock::now();
  const auto result = le::train(c, train_set, test_set);
  const double elapsed = seconds_since(start);
  const double acc = result.report.accuracy;
  return {acc >= 0.95 && result.report.steps <= 2000 && elapsed < 60.0,
          fmt("test accuracy %.4f after %d steps, %.2f s", acc, result.report.steps, elapsed)};
}

Outcome attention_ablation() {
  const le::RunConfig c = synthetic_run(0.3);
  const auto [train_set, test_set] = le::load_or_generate(c);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const auto table = le::ablation_sweep(c, le::AblationAxis::Attention, seeds, train_set, test_set);
  double off = 0.0, on = 0.0;
  for (const auto& row : table.rows) (row.value == "on" ? on : off) = row.mean_accuracy;
  return {on >= off, fmt("5 seeds, invader rate 0.3: attention on %.4f, off %.4f", on, off)};
}

Outcome t_sweep() {
  le::RunConfig c = synthetic_run(0.0);
  c.hp.d = 16;
  c.data.n_train = 120;
  c.data.n_test = 60;
  c.max_steps = 100;
  c.eval_interval = 50;
  const auto [train_set, test_set] = le::load_or_generate(c);
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto a = le::ablation_sweep(c, le::AblationAxis::T, seeds, train_set, test_set);
  const auto b = le::ablation_sweep(c, le::AblationAxis::T, seeds, train_set, test_set);
  std::vector<std::string> values;
  bool finite = true;
  for (const auto& row : a.rows) {
    values.push_back(row.value);
    finite = finite && std::isfinite(row.mean_accuracy) && row.accuracies.size() == seeds.size();
  }
  const bool shape = values == std::vector<std::string>{"1", "2", "3", "4", "15"};
  const bool csv_ok = a.to_csv().rfind("T,mean_accuracy\n", 0) == 0;
  const bool same = a.to_csv() == b.to_csv() && a.per_seed_csv() == b.per_seed_csv();
  std::string means;
  for (const auto& row : a.rows) means += " T=" + row.value + ":" + fmt("%.3f", row.mean_accuracy);
  return {shape && finite && csv_ok && same,
          fmt("values {1,2,3,4,15}: %s, deterministic: %s,", shape ? "yes" : "no", same ? "yes" : "no") + means};
}

Outcome baseline_ordering() {
  const le::RunConfig c = synthetic_run(0.5);
  const auto [train_set, test_set] = le::load_or_generate(c);
  const double model = le::train(c, train_set, test_set).report.accuracy;
  const double person = le::person_baseline(c, train_set, test_set).report.accuracy;
  return {model >= person, fmt("invader rate 0.5: latent-embed %.4f, person baseline %.4f", model, person)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient oracle", gradient_oracle},
      {"attention normalization", attention_normalization},
      {"permutation invariance", permutation_invariance},
      {"gate identity", gate_identity},
      {"synthetic learnability", learnability},
      {"attention ablation direction", attention_ablation},
      {"T-sweep harness", t_sweep},
      {"baseline ordering", baseline_ordering},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
