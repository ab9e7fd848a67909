#ifndef LATENT_EMBED_OPTIM_HPP
#define LATENT_EMBED_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "latent_embed/numerics.hpp"
#include "latent_embed/params.hpp"
#include "latent_embed/rng.hpp"

namespace latent_embed {

/// Xavier/Glorot uniform: entries from U[-L, L], L = sqrt(6 / (rows + cols)).
Mat xavier_init(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Xavier weights for every matrix, zero biases. The attention vectors w_g and
/// w_gs are treated as 1 x d matrices.
ModelParams init_params(const HyperParams& hp, Rng& rng);

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise 1/(1 - rate).
Vec dropout_mask(Eigen::Index dim, double rate, Rng& rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

/// Bias-corrected Adam moments, one flat row-major buffer per parameter tensor.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Vec> first_moment;
  std::vector<Vec> second_moment;

  bool operator==(const AdamState& other) const;
};

template <typename Pack>
AdamState make_adam_state(const Pack& params, const AdamConfig& config = {}) {
  AdamState state;
  state.config = config;
  for (const auto& t : params.tensors()) {
    state.first_moment.push_back(Vec::Zero(static_cast<Eigen::Index>(t.values.size())));
    state.second_moment.push_back(Vec::Zero(static_cast<Eigen::Index>(t.values.size())));
  }
  return state;
}

/// One in-place Adam update. `grads` must mirror `params` tensor for tensor.
template <typename Pack, typename GradPack>
void adam_step(Pack& params, const GradPack& grads, AdamState& state) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  if (g.size() != p.size()) throw ShapeError("adam gradient tensor count", p.size(), g.size());
  if (state.first_moment.size() != p.size())
    throw ShapeError("adam state tensor count", p.size(), state.first_moment.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const auto n = static_cast<Eigen::Index>(p[k].values.size());
    if (static_cast<Eigen::Index>(g[k].values.size()) != n)
      throw ShapeError(std::string(p[k].name) + " gradient size", n, g[k].values.size());
    if (state.first_moment[k].size() != n)
      throw ShapeError(std::string(p[k].name) + " adam moment size", n, state.first_moment[k].size());
  }

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    Vec& m = state.first_moment[k];
    Vec& v = state.second_moment[k];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double gi = g[k].values[static_cast<std::size_t>(i)];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[k].values[static_cast<std::size_t>(i)] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace latent_embed

#endif  // LATENT_EMBED_OPTIM_HPP
