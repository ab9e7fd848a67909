#ifndef LATENT_EMBED_PARAMS_HPP
#define LATENT_EMBED_PARAMS_HPP

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latent_embed/numerics.hpp"

namespace latent_embed {

/// Model and run-time hyperparameters. Defaults follow the published settings
/// where they exist (tau, lambda, hidden size, dropout).
struct HyperParams {
  int d = 256;
  int T = 3;
  double lambda = 0.3;
  double tau = 0.25;
  double dropout_rate = 0.5;
  bool attention_enabled = true;
  int K = 3;
  int p_dim = 16;
  int s_dim = 16;

  /// Throws Error(InvalidHyperparameter) on any out-of-range field.
  void validate() const;

  bool operator==(const HyperParams&) const = default;
};

/// Mutable view of one parameter tensor; values are row-major.
struct TensorView {
  std::string_view name;
  std::span<double> values;
  Eigen::Index rows;
  Eigen::Index cols;
};

struct ConstTensorView {
  std::string_view name;
  std::span<const double> values;
  Eigen::Index rows;
  Eigen::Index cols;
};

namespace detail {

template <typename Self, typename View>
std::vector<View> collect_tensors(Self& p) {
  auto mat = [](std::string_view name, auto& m) {
    return View{name, {m.data(), static_cast<std::size_t>(m.size())}, m.rows(), m.cols()};
  };
  return {
      mat("W_u", p.W_u),     mat("b_u", p.b_u),     mat("W_s", p.W_s),   mat("b_s", p.b_s),
      mat("W_y", p.W_y),     mat("b_y", p.b_y),     mat("W_out", p.W_out),
      mat("b_out", p.b_out), mat("w_g", p.w_g),     mat("w_gs", p.w_gs),
      View{"b_g", {&p.b_g, 1}, 1, 1},
  };
}

}  // namespace detail

/// Every learnable tensor of the latent embedding model. Instantiated twice
/// (values and gradients) so the two cannot be mixed up by accident.
template <typename Tag>
struct ParamPack {
  Mat W_u;    ///< d x (2 p_dim + d): person update over [x_i; neighbor mean; u_scene]
  Vec b_u;
  Mat W_s;    ///< d x (s_dim + p_dim + d): scene update over [x_scene; person mean; aggregate]
  Vec b_s;
  Mat W_y;    ///< d x 2d: classifier hidden layer over [mean u_i; u_scene]
  Vec b_y;
  Mat W_out;  ///< K x d
  Vec b_out;
  Vec w_g;    ///< attention weight on u_i
  Vec w_gs;   ///< attention weight on u_scene
  double b_g = 0.0;

  static ParamPack zeros(const HyperParams& hp) {
    ParamPack p;
    p.W_u = Mat::Zero(hp.d, 2 * hp.p_dim + hp.d);
    p.b_u = Vec::Zero(hp.d);
    p.W_s = Mat::Zero(hp.d, hp.s_dim + hp.p_dim + hp.d);
    p.b_s = Vec::Zero(hp.d);
    p.W_y = Mat::Zero(hp.d, 2 * hp.d);
    p.b_y = Vec::Zero(hp.d);
    p.W_out = Mat::Zero(hp.K, hp.d);
    p.b_out = Vec::Zero(hp.K);
    p.w_g = Vec::Zero(hp.d);
    p.w_gs = Vec::Zero(hp.d);
    p.b_g = 0.0;
    return p;
  }

  std::vector<TensorView> tensors() { return detail::collect_tensors<ParamPack, TensorView>(*this); }
  std::vector<ConstTensorView> tensors() const {
    return detail::collect_tensors<const ParamPack, ConstTensorView>(*this);
  }

  /// Throws ShapeError naming the first tensor whose shape disagrees with hp.
  void check_shapes(const HyperParams& hp) const {
    const auto expected = zeros(hp);
    const auto want = expected.tensors();
    const auto have = tensors();
    for (std::size_t k = 0; k < want.size(); ++k) {
      if (have[k].rows != want[k].rows)
        throw ShapeError(std::string(want[k].name) + " rows", want[k].rows, have[k].rows);
      if (have[k].cols != want[k].cols)
        throw ShapeError(std::string(want[k].name) + " cols", want[k].cols, have[k].cols);
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.values.size();
    return n;
  }

  bool operator==(const ParamPack& other) const {
    const auto a = tensors();
    const auto b = other.tensors();
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].rows != b[k].rows || a[k].cols != b[k].cols) return false;
      if (!std::equal(a[k].values.begin(), a[k].values.end(), b[k].values.begin())) return false;
    }
    return true;
  }
};

struct ParamValueTag;
struct ParamGradTag;

using ModelParams = ParamPack<ParamValueTag>;
using ParamGrads = ParamPack<ParamGradTag>;


/// Softmax-regression parameters used by the feature-only baselines.
struct LinearParams {
  Mat W;  ///< K x feature dim
  Vec b;

  static LinearParams zeros(Eigen::Index classes, Eigen::Index inputs) {
    return {Mat::Zero(classes, inputs), Vec::Zero(classes)};
  }
  std::vector<TensorView> tensors() {
    return {{"W", {W.data(), static_cast<std::size_t>(W.size())}, W.rows(), W.cols()},
            {"b", {b.data(), static_cast<std::size_t>(b.size())}, b.rows(), 1}};
  }
  std::vector<ConstTensorView> tensors() const {
    return {{"W", {W.data(), static_cast<std::size_t>(W.size())}, W.rows(), W.cols()},
            {"b", {b.data(), static_cast<std::size_t>(b.size())}, b.rows(), 1}};
  }
  bool operator==(const LinearParams& o) const {
    return W.rows() == o.W.rows() && W.cols() == o.W.cols() && b.size() == o.b.size() &&
           std::equal(W.data(), W.data() + W.size(), o.W.data()) &&
           std::equal(b.data(), b.data() + b.size(), o.b.data());
  }
};

}  // namespace latent_embed

#endif  // LATENT_EMBED_PARAMS_HPP
