#include "latent_embed/gradients.hpp"

#include <algorithm>
#include <cmath>

namespace latent_embed {

namespace {

/// Every relu pre-activation of a trace, flattened in a fixed order.
Vec relu_preactivations(const ForwardTrace& tr) {
  Eigen::Index total = tr.hidden_pre.size();
  for (const auto& st : tr.steps) {
    total += st.scene_pre.size();
    for (const auto& a : st.person_pre) total += a.size();
  }
  Vec out(total);
  Eigen::Index k = 0;
  for (const auto& st : tr.steps) {
    for (const auto& a : st.person_pre) {
      out.segment(k, a.size()) = a;
      k += a.size();
    }
    out.segment(k, st.scene_pre.size()) = st.scene_pre;
    k += st.scene_pre.size();
  }
  out.segment(k, tr.hidden_pre.size()) = tr.hidden_pre;
  return out;
}

bool near_kink(const Vec& base, const Vec& plus, const Vec& minus, double margin) {
  for (Eigen::Index j = 0; j < base.size(); ++j) {
    const double a0 = base[j], ap = plus[j], am = minus[j];
    if (ap == a0 && am == a0) continue;
    if ((ap > 0.0) != (a0 > 0.0) || (am > 0.0) != (a0 > 0.0)) return true;
    if (std::min({std::abs(a0), std::abs(ap), std::abs(am)}) < margin) return true;
  }
  return false;
}

/// Shared perturbation loop for the finite-difference oracle and the kink mask.
void perturb_each(const CollectiveScene& scene, const ModelParams& params, const HyperParams& hp,
                  int label, double h, std::uint64_t seed, Mode mode, ParamGrads* numeric,
                  ParamGrads* kink, double kink_margin) {
  ModelParams probe = params;
  auto probe_tensors = probe.tensors();
  std::vector<TensorView> numeric_tensors;
  std::vector<TensorView> kink_tensors;
  if (numeric) numeric_tensors = numeric->tensors();
  if (kink) kink_tensors = kink->tensors();

  Vec base_pre;
  if (kink) base_pre = relu_preactivations(forward(scene, params, hp, mode, seed));

  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    auto values = probe_tensors[t].values;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double original = values[k];
      values[k] = original + h;
      const ForwardTrace plus = forward(scene, probe, hp, mode, seed);
      values[k] = original - h;
      const ForwardTrace minus = forward(scene, probe, hp, mode, seed);
      values[k] = original;
      if (numeric) numeric_tensors[t].values[k] = (loss(plus, label) - loss(minus, label)) / (2.0 * h);
      if (kink) {
        kink_tensors[t].values[k] =
            near_kink(base_pre, relu_preactivations(plus), relu_preactivations(minus), kink_margin) ? 1.0
                                                                                                     : 0.0;
      }
    }
  }
}

void check_trace(const ForwardTrace& tr, const CollectiveScene& scene, const HyperParams& hp) {
  if (!(tr.hp == hp)) throw Error(ErrorKind::Consistency, "trace was produced with different hyperparameters");
  if (tr.person_count != scene.persons.size())
    throw Error(ErrorKind::Consistency, "trace person count does not match the scene");
  if (tr.steps.size() != static_cast<std::size_t>(hp.T))
    throw Error(ErrorKind::Consistency, "trace step count does not match T");
  if (tr.hidden_pre.size() != hp.d || tr.distribution.size() != hp.K)
    throw Error(ErrorKind::Consistency, "trace head dims do not match the parameters");
}

}  // namespace

ParamGrads backward(const ForwardTrace& tr, const CollectiveScene& scene, const ModelParams& params,
                    const HyperParams& hp, int label) {
  params.check_shapes(hp);
  check_trace(tr, scene, hp);
  if (label < 0 || label >= hp.K)
    throw Error(ErrorKind::Index, "label " + std::to_string(label) + " outside [0, " + std::to_string(hp.K) + ")");

  ParamGrads g = ParamGrads::zeros(hp);
  // The loss clamps p[label] at 1e-300, so it is flat below that point.
  if (tr.distribution[label] < 1e-300) return g;

  const double lam = hp.lambda;
  const Eigen::Index d = hp.d;
  const std::size_t n = tr.person_count;

  // Classifier head.
  Vec dlogits = tr.distribution;
  dlogits[label] -= 1.0;
  g.W_out = dlogits * tr.hidden.transpose();
  g.b_out = dlogits;
  const Vec dhidden_pre = (params.W_out.transpose() * dlogits)
                              .cwiseProduct(tr.dropout_mask)
                              .cwiseProduct(Vec(relu_mask(tr.hidden_pre)));
  g.W_y = dhidden_pre * tr.head_input.transpose();
  g.b_y = dhidden_pre;
  const Vec dhead = params.W_y.transpose() * dhidden_pre;

  std::vector<Vec> du(n, Vec(dhead.head(d) / static_cast<double>(n)));
  Vec dus = dhead.tail(d);

  for (int t = hp.T - 1; t >= 0; --t) {
    const StepTrace& st = tr.steps[static_cast<std::size_t>(t)];
    const Vec& us_prev = t > 0 ? tr.steps[static_cast<std::size_t>(t - 1)].scene_embedding : tr.initial.scene;

    // Scene update: u_scene^(t) = (1 - lam) u_scene^(t-1) + lam relu(W_s [..; aggregate] + b_s).
    Vec dus_prev = (1.0 - lam) * dus;
    const Vec dscene_pre = lam * dus.cwiseProduct(Vec(relu_mask(st.scene_pre)));
    g.W_s += dscene_pre * st.scene_input.transpose();
    g.b_s += dscene_pre;
    const Vec daggregate = (params.W_s.transpose() * dscene_pre).tail(d);

    if (hp.attention_enabled) {
      // aggregate = sum_i g_i u_i, g = softmax(alpha / tau), alpha_i = tanh(w_g.u_i + w_gs.u_scene^(t-1) + b_g).
      double weighted = 0.0;
      Vec dweight(static_cast<Eigen::Index>(n));
      for (std::size_t k : tr.order) {
        const auto i = static_cast<Eigen::Index>(k);
        dweight[i] = daggregate.dot(st.person_embedding[k]);
        weighted += st.weights[i] * dweight[i];
      }
      double drelevance_sum = 0.0;
      for (std::size_t k : tr.order) {
        const auto i = static_cast<Eigen::Index>(k);
        const double gi = st.weights[i];
        const double alpha = st.relevance[i];
        const double dpre = gi * (dweight[i] - weighted) / hp.tau * (1.0 - alpha * alpha);
        du[k] += gi * daggregate;
        du[k] += dpre * params.w_g;
        g.w_g += dpre * st.person_embedding[k];
        drelevance_sum += dpre;
      }
      g.b_g += drelevance_sum;
      g.w_gs += drelevance_sum * us_prev;
      dus_prev += drelevance_sum * params.w_gs;
    } else {
      const Vec share = daggregate / static_cast<double>(n);
      for (std::size_t k : tr.order) du[k] += share;
    }

    // Person updates: u_i^(t) = (1 - lam) u_i^(t-1) + lam relu(W_u [x_i; nbr_i; u_scene^(t-1)] + b_u).
    for (std::size_t k : tr.order) {
      const Vec dperson_pre = lam * du[k].cwiseProduct(Vec(relu_mask(st.person_pre[k])));
      g.W_u += dperson_pre * concat(scene.persons[k].feature, tr.neighbor_mean[k], us_prev).transpose();
      g.b_u += dperson_pre;
      dus_prev += (params.W_u.transpose() * dperson_pre).tail(d);
      du[k] *= (1.0 - lam);
    }
    dus = std::move(dus_prev);
  }
  return g;
}

ParamGrads mean_gradient(std::span<const ParamGrads> grads) {
  if (grads.empty()) throw Error(ErrorKind::InvariantViolation, "mean of an empty gradient batch");
  ParamGrads acc = grads.front();
  auto out = acc.tensors();
  for (std::size_t s = 1; s < grads.size(); ++s) {
    const auto in = grads[s].tensors();
    for (std::size_t t = 0; t < out.size(); ++t) {
      if (in[t].values.size() != out[t].values.size())
        throw ShapeError(std::string(out[t].name) + " gradient size", out[t].values.size(), in[t].values.size());
      for (std::size_t k = 0; k < out[t].values.size(); ++k) out[t].values[k] += in[t].values[k];
    }
  }
  const double scale = 1.0 / static_cast<double>(grads.size());
  for (auto& t : out)
    for (double& v : t.values) v *= scale;
  return acc;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

ParamGrads finite_diff_grad(const CollectiveScene& scene, const ModelParams& params,
                            const HyperParams& hp, int label, double h, std::uint64_t seed, Mode mode) {
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidHyperparameter, "finite-difference step must be positive");
  ParamGrads numeric = ParamGrads::zeros(hp);
  perturb_each(scene, params, hp, label, h, seed, mode, &numeric, nullptr, 0.0);
  return numeric;
}

ParamGrads relu_kink_mask(const CollectiveScene& scene, const ModelParams& params, const HyperParams& hp,
                          double h, double kink_margin, std::uint64_t seed, Mode mode) {
  ParamGrads mask = ParamGrads::zeros(hp);
  perturb_each(scene, params, hp, 0, h, seed, mode, nullptr, &mask, kink_margin);
  return mask;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

std::vector<std::string> GradCheckReport::flagged(double threshold) const {
  std::vector<std::string> names;
  for (const auto& t : tensors)
    if (t.max_relative_error > threshold) names.push_back(t.name);
  return names;
}

GradCheckReport compare_gradients(const ParamGrads& analytic, const ParamGrads& numeric,
                                  const ParamGrads* excluded) {
  const auto a = analytic.tensors();
  const auto b = numeric.tensors();
  std::vector<ConstTensorView> m;
  if (excluded) m = excluded->tensors();

  GradCheckReport report;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].values.size() != b[t].values.size())
      throw ShapeError(std::string(a[t].name) + " gradient size", a[t].values.size(), b[t].values.size());
    TensorCheck tc;
    tc.name = std::string(a[t].name);
    for (std::size_t k = 0; k < a[t].values.size(); ++k) {
      if (excluded && m[t].values[k] != 0.0) {
        ++tc.masked;
        continue;
      }
      ++tc.checked;
      const double err = relative_error(a[t].values[k], b[t].values[k]);
      if (tc.checked == 1 || err > tc.max_relative_error) {
        tc.max_relative_error = err;
        tc.worst_row = static_cast<Eigen::Index>(k) / a[t].cols;
        tc.worst_col = static_cast<Eigen::Index>(k) % a[t].cols;
        tc.analytic = a[t].values[k];
        tc.numeric = b[t].values[k];
      }
    }
    if (report.worst_tensor.empty() || tc.max_relative_error > report.max_relative_error) {
      report.max_relative_error = tc.max_relative_error;
      report.worst_tensor = tc.name;
      report.worst_row = tc.worst_row;
      report.worst_col = tc.worst_col;
    }
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

GradCheckReport grad_check(const CollectiveScene& scene, const ModelParams& params, const HyperParams& hp,
                           int label, const GradCheckOptions& options) {
  const ForwardTrace trace = forward(scene, params, hp, options.mode, options.seed);
  const ParamGrads analytic = backward(trace, scene, params, hp, label);
  ParamGrads numeric = ParamGrads::zeros(hp);
  ParamGrads excluded = ParamGrads::zeros(hp);
  perturb_each(scene, params, hp, label, options.h, options.seed, options.mode, &numeric, &excluded,
               options.kink_margin_factor * options.h);
  GradCheckReport report = compare_gradients(analytic, numeric, &excluded);
  report.h = options.h;
  return report;
}

}  // namespace latent_embed
