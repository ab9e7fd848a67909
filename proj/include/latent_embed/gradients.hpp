#ifndef LATENT_EMBED_GRADIENTS_HPP
#define LATENT_EMBED_GRADIENTS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "latent_embed/model.hpp"

namespace latent_embed {

/// Exact gradient of the cross-entropy loss with respect to every parameter,
/// by reverse-mode differentiation through the T unrolled steps recorded in
/// `trace`. The trace must come from forward(scene, params, hp, ...).
ParamGrads backward(const ForwardTrace& trace, const CollectiveScene& scene,
                    const ModelParams& params, const HyperParams& hp, int label);

/// Sum of grads in order, divided by the count. Throws on an empty span.
ParamGrads mean_gradient(std::span<const ParamGrads> grads);

/// (f(x + h) - f(x - h)) / 2h
double central_difference(const std::function<double(double)>& f, double x, double h);

/// Central finite differences of the loss for every scalar parameter. All
/// evaluations share the dropout mask drawn from `seed`.
ParamGrads finite_diff_grad(const CollectiveScene& scene, const ModelParams& params,
                            const HyperParams& hp, int label, double h, std::uint64_t seed,
                            Mode mode = Mode::Eval);

/// Per-coordinate mask of parameters whose +/-h perturbation moves some relu
/// pre-activation that is within kink_margin of zero (or flips its sign).
/// Same layout as ParamGrads; 1 means excluded.
ParamGrads relu_kink_mask(const CollectiveScene& scene, const ModelParams& params,
                          const HyperParams& hp, double h, double kink_margin, std::uint64_t seed,
                          Mode mode = Mode::Eval);

/// |a - b| / max(1e-8, |a| + |b|)
double relative_error(double a, double b);

struct TensorCheck {
  std::string name;
  double max_relative_error = 0.0;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  std::size_t masked = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  std::vector<TensorCheck> tensors;
  double h = 0.0;

  /// Names of tensors whose maximum relative error exceeds `threshold`.
  std::vector<std::string> flagged(double threshold) const;
};

/// Compares two gradients coordinate by coordinate, skipping masked entries.
GradCheckReport compare_gradients(const ParamGrads& analytic, const ParamGrads& numeric,
                                  const ParamGrads* excluded = nullptr);

struct GradCheckOptions {
  double h = 1e-5;
  double kink_margin_factor = 10.0;
  std::uint64_t seed = 0;
  Mode mode = Mode::Eval;
};

/// backward vs finite_diff_grad with relu-kink coordinates masked.
GradCheckReport grad_check(const CollectiveScene& scene, const ModelParams& params,
                           const HyperParams& hp, int label, const GradCheckOptions& options = {});

}  // namespace latent_embed

#endif  // LATENT_EMBED_GRADIENTS_HPP
