#ifndef LATENT_EMBED_NUMERICS_HPP
#define LATENT_EMBED_NUMERICS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <iterator>
#include <ranges>
#include <span>
#include <string>

#include "latent_embed/errors.hpp"

namespace latent_embed {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Row-major so that data() is already in the serialized order.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec = Vector<double>;
using Mat = Matrix<double>;

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return v > Scalar(0) ? v : Scalar(0); });
}

/// Derivative mask of relu with relu'(0) = 0.
template <typename Derived>
auto relu_mask(const Eigen::MatrixBase<Derived>& pre) {
  using Scalar = typename Derived::Scalar;
  return pre.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
}

/// exp(scores/tau) normalized to one, stabilized by subtracting the maximum score.
template <typename Derived>
Vector<typename Derived::Scalar> softmax_temp(const Eigen::MatrixBase<Derived>& scores,
                                              typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0)) || !std::isfinite(static_cast<double>(tau))) {
    throw Error(ErrorKind::InvalidHyperparameter,
                "softmax temperature must be positive, got " + std::to_string(double(tau)));
  }
  if (scores.size() == 0) throw ShapeError("softmax over an empty score vector", 1, 0);
  const Scalar peak = scores.maxCoeff();
  Vector<Scalar> out = scores.unaryExpr([peak, tau](Scalar s) { return Scalar(std::exp((s - peak) / tau)); });
  Scalar total(0);
  for (Eigen::Index k = 0; k < out.size(); ++k) total += out[k];
  return out / total;
}

/// Elementwise mean, accumulated strictly in iteration order.
template <std::ranges::input_range R>
auto mean_pool(R&& vectors) {
  using V = std::remove_cvref_t<std::ranges::range_reference_t<R>>;
  using Scalar = typename V::Scalar;
  auto it = std::ranges::begin(vectors);
  const auto end = std::ranges::end(vectors);
  if (it == end) throw Error(ErrorKind::InvariantViolation, "mean_pool of an empty set");
  Vector<Scalar> acc = *it;
  long count = 1;
  for (++it; it != end; ++it) {
    const auto& v = *it;
    if (v.size() != acc.size()) throw ShapeError("mean_pool operand", acc.size(), v.size());
    acc += v;
    ++count;
  }
  return Vector<Scalar>(acc / Scalar(count));
}

template <typename MatDerived, typename VecDerived>
Vector<typename MatDerived::Scalar> matvec(const Eigen::MatrixBase<MatDerived>& w,
                                           const Eigen::MatrixBase<VecDerived>& x) {
  if (w.cols() != x.size()) throw ShapeError("matvec operand", w.cols(), x.size());
  return w * x;
}

template <typename Scalar>
Vector<Scalar> concat(std::span<const Vector<Scalar>> parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Vector<Scalar> out(total);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.segment(offset, p.size()) = p;
    offset += p.size();
  }
  return out;
}

template <typename... Ds>
auto concat(const Eigen::MatrixBase<Ds>&... parts) {
  using Scalar = std::common_type_t<typename Ds::Scalar...>;
  Vector<Scalar> out((parts.size() + ...));
  Eigen::Index offset = 0;
  ((out.segment(offset, parts.size()) = parts, offset += parts.size()), ...);
  return out;
}

/// (1 - a) * u_old + a * v. Exact pass-through at a = 0 and a = 1.
template <typename DA, typename DB>
Vector<typename DA::Scalar> gate(typename DA::Scalar a, const Eigen::MatrixBase<DA>& u_old,
                                 const Eigen::MatrixBase<DB>& v) {
  using Scalar = typename DA::Scalar;
  if (u_old.size() != v.size()) throw ShapeError("gate operand", u_old.size(), v.size());
  if (a == Scalar(0)) return u_old;
  if (a == Scalar(1)) return v;
  return (Scalar(1) - a) * u_old + a * v;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace latent_embed

#endif  // LATENT_EMBED_NUMERICS_HPP
