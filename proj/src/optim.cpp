#include "latent_embed/optim.hpp"

namespace latent_embed {

Mat xavier_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (rows <= 0 || cols <= 0) throw ShapeError("xavier_init dims must be positive", 1, std::min(rows, cols));
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-limit, limit);
  return w;
}

ModelParams init_params(const HyperParams& hp, Rng& rng) {
  hp.validate();
  ModelParams p = ModelParams::zeros(hp);
  p.W_u = xavier_init(p.W_u.rows(), p.W_u.cols(), rng);
  p.W_s = xavier_init(p.W_s.rows(), p.W_s.cols(), rng);
  p.W_y = xavier_init(p.W_y.rows(), p.W_y.cols(), rng);
  p.W_out = xavier_init(p.W_out.rows(), p.W_out.cols(), rng);
  p.w_g = xavier_init(1, hp.d, rng).transpose();
  p.w_gs = xavier_init(1, hp.d, rng).transpose();
  return p;
}

Vec dropout_mask(Eigen::Index dim, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw Error(ErrorKind::InvalidHyperparameter, "dropout rate must lie in [0, 1)");
  Vec mask(dim);
  if (rate == 0.0) {
    mask.setOnes();
    return mask;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index k = 0; k < dim; ++k) mask[k] = rng.bernoulli(rate) ? 0.0 : keep_scale;
  return mask;
}

bool AdamState::operator==(const AdamState& other) const {
  auto same = [](const std::vector<Vec>& a, const std::vector<Vec>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k].size() != b[k].size() || !std::equal(a[k].data(), a[k].data() + a[k].size(), b[k].data()))
        return false;
    return true;
  };
  return config == other.config && step == other.step && same(first_moment, other.first_moment) &&
         same(second_moment, other.second_moment);
}

}  // namespace latent_embed
