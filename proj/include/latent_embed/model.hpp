#ifndef LATENT_EMBED_MODEL_HPP
#define LATENT_EMBED_MODEL_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "latent_embed/numerics.hpp"
#include "latent_embed/params.hpp"
#include "latent_embed/scene.hpp"

namespace latent_embed {

enum class Mode { Train, Eval };

struct InitialEmbeddings {
  std::vector<Vec> persons;  ///< scene order
  Vec scene;
};

/// Intermediates of one unrolled step. Per-person vectors are in scene order.
struct StepTrace {
  std::vector<Vec> person_pre;        ///< W_u [x_i; neighbor mean; u_scene^(t-1)] + b_u
  std::vector<Vec> person_embedding;  ///< u_i^(t)
  Vec relevance;                      ///< alpha_i^(t); empty without attention
  Vec weights;                        ///< g_i^(t); empty without attention
  Vec aggregate;                      ///< weighted sum or mean of u_i^(t)
  Vec scene_input;                    ///< [x_scene; person mean; aggregate]
  Vec scene_pre;
  Vec scene_embedding;  ///< u_scene^(t)
};

/// Everything backward needs to differentiate one forward pass exactly.
struct ForwardTrace {
  HyperParams hp;
  Mode mode = Mode::Eval;
  std::uint64_t seed = 0;
  std::size_t person_count = 0;
  std::vector<std::size_t> order;   ///< canonical reduction order
  std::vector<Vec> neighbor_mean;   ///< per person, zero when N(i) is empty
  Vec person_mean;                  ///< mean of x_i
  InitialEmbeddings initial;
  std::vector<StepTrace> steps;     ///< exactly T entries
  Vec head_input;                   ///< [mean u_i^(T); u_scene^(T)]
  Vec hidden_pre;
  Vec dropout_mask;                 ///< all ones in eval mode
  Vec hidden;                       ///< relu(hidden_pre) * mask
  Vec logits;
  Vec distribution;

  const Vec& final_scene_embedding() const;
  const std::vector<Vec>& final_person_embeddings() const;
};

InitialEmbeddings init_embeddings(const CollectiveScene& scene, const HyperParams& hp);

/// One person step: (1 - lambda) u_prev + lambda relu(W_u [x_i; neighbor mean; u_scene_prev] + b_u).
Vec person_update(const CollectiveScene& scene, const ModelParams& params, const HyperParams& hp,
                  const Vec& u_prev, const Vec& u_scene_prev, PersonId person);

/// tanh(w_g . u_i + w_gs . u_scene_prev + b_g)
double attention_relevance(const Vec& u_i, const Vec& u_scene_prev, const ModelParams& params);

Vec attention_weights(const Vec& relevances, double tau);

/// Scene step. With attention, `weights` (scene order) must be present and
/// normalized; the aggregate is then sum_i g_i u_i instead of the plain mean.
Vec scene_update(const CollectiveScene& scene, const ModelParams& params, const HyperParams& hp,
                 const std::vector<Vec>& u_curr, const Vec& u_scene_prev,
                 const std::optional<Vec>& weights);

/// Unrolls T steps and applies the classifier. In train mode the hidden layer
/// uses an inverted-dropout mask drawn from `seed`; the mask depends only on
/// (seed, d, dropout_rate), so equal seeds reuse the same mask.
ForwardTrace forward(const CollectiveScene& scene, const ModelParams& params,
                     const HyperParams& hp, Mode mode, std::uint64_t seed = 0);

/// -log(max(p[label], 1e-300))
double loss(const ForwardTrace& trace, int label);

/// argmax with ties going to the lowest class index.
int predict(const Vec& distribution);

}  // namespace latent_embed

#endif  // LATENT_EMBED_MODEL_HPP
