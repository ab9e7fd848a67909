#include "latent_embed/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "latent_embed/optim.hpp"

namespace latent_embed {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::InvalidHyperparameter, message);
}

bool same_values(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

auto gathered(const std::vector<Vec>& values, const std::vector<std::size_t>& order) {
  return order | std::views::transform([&values](std::size_t k) -> const Vec& { return values[k]; });
}

Vec neighbor_mean(const CollectiveScene& scene, std::size_t index, Eigen::Index p_dim) {
  const auto it = scene.neighborhoods.find(scene.persons[index].id);
  if (it == scene.neighborhoods.end() || it->second.empty()) return Vec::Zero(p_dim);
  std::vector<PersonId> ids = it->second;
  std::sort(ids.begin(), ids.end());
  return mean_pool(ids | std::views::transform([&scene](PersonId id) -> const Vec& {
                     return scene.persons[*scene.index_of(id)].feature;
                   }));
}

Vec person_step(const ModelParams& params, double lambda, const Vec& x_i, const Vec& nbr_mean,
                const Vec& u_prev, const Vec& u_scene_prev, Vec* pre_out) {
  Vec pre = matvec(params.W_u, concat(x_i, nbr_mean, u_scene_prev)) + params.b_u;
  Vec next = gate(lambda, u_prev, Vec(relu(pre)));
  if (pre_out) *pre_out = std::move(pre);
  return next;
}

Vec aggregate_persons(const std::vector<Vec>& u, const std::vector<std::size_t>& order,
                      const Vec* weights) {
  if (!weights) return mean_pool(gathered(u, order));
  Vec acc = Vec::Zero(u.front().size());
  for (std::size_t k : order) acc += (*weights)[static_cast<Eigen::Index>(k)] * u[k];
  return acc;
}

Vec weights_in_scene_order(const Vec& relevance, const std::vector<std::size_t>& order, double tau) {
  Vec canonical(relevance.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    canonical[static_cast<Eigen::Index>(k)] = relevance[static_cast<Eigen::Index>(order[k])];
  const Vec g = attention_weights(canonical, tau);
  Vec out(relevance.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    out[static_cast<Eigen::Index>(order[k])] = g[static_cast<Eigen::Index>(k)];
  return out;
}

}  // namespace

void HyperParams::validate() const {
  require(d > 0, "embedding dim d must be positive");
  require(T > 0, "iteration count T must be positive");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  require(tau > 0.0 && std::isfinite(tau), "tau must be positive");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout rate must lie in [0, 1)");
  require(K >= 2, "class count K must be at least 2");
  require(p_dim > 0, "person feature dim must be positive");
  require(s_dim > 0, "scene feature dim must be positive");
}

std::optional<std::size_t> CollectiveScene::index_of(PersonId id) const {
  for (std::size_t k = 0; k < persons.size(); ++k)
    if (persons[k].id == id) return k;
  return std::nullopt;
}

bool operator==(const CollectiveScene& a, const CollectiveScene& b) {
  if (a.scene_id != b.scene_id || a.label != b.label) return false;
  if (!same_values(a.scene_feature, b.scene_feature)) return false;
  if (a.neighborhoods != b.neighborhoods) return false;
  if (a.persons.size() != b.persons.size()) return false;
  for (std::size_t k = 0; k < a.persons.size(); ++k) {
    if (a.persons[k].id != b.persons[k].id) return false;
    if (!same_values(a.persons[k].feature, b.persons[k].feature)) return false;
  }
  return true;
}

void validate_scene(const CollectiveScene& scene, const HyperParams& hp, bool check_label) {
  const std::string where = "scene " + std::to_string(scene.scene_id) + ": ";
  if (scene.persons.empty()) throw Error(ErrorKind::Schema, where + "no persons");
  if (scene.scene_feature.size() != hp.s_dim)
    throw ShapeError(where + "scene feature dim", hp.s_dim, scene.scene_feature.size());
  std::set<PersonId> ids;
  for (const auto& p : scene.persons) {
    if (!ids.insert(p.id).second)
      throw Error(ErrorKind::Schema, where + "duplicate person id " + std::to_string(p.id));
    if (p.feature.size() != hp.p_dim)
      throw ShapeError(where + "person " + std::to_string(p.id) + " feature dim", hp.p_dim,
                       p.feature.size());
    if (!p.feature.allFinite())
      throw Error(ErrorKind::Schema, where + "non-finite person feature");
  }
  if (!scene.scene_feature.allFinite()) throw Error(ErrorKind::Schema, where + "non-finite scene feature");
  for (const auto& [owner, members] : scene.neighborhoods) {
    if (!ids.contains(owner))
      throw Error(ErrorKind::Lookup, where + "neighborhood of unknown person " + std::to_string(owner));
    for (PersonId m : members) {
      if (!ids.contains(m))
        throw Error(ErrorKind::Lookup, where + "unknown neighbor " + std::to_string(m));
      if (m == owner)
        throw Error(ErrorKind::Schema, where + "person " + std::to_string(owner) + " is its own neighbor");
    }
  }
  if (check_label && (scene.label < 0 || scene.label >= hp.K))
    throw Error(ErrorKind::Index, where + "label " + std::to_string(scene.label) + " outside [0, " +
                                      std::to_string(hp.K) + ")");
}

std::vector<std::size_t> canonical_order(const CollectiveScene& scene) {
  std::vector<std::size_t> order(scene.persons.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&scene](std::size_t a, std::size_t b) {
    return scene.persons[a].id < scene.persons[b].id;
  });
  return order;
}

const Vec& ForwardTrace::final_scene_embedding() const {
  return steps.empty() ? initial.scene : steps.back().scene_embedding;
}

const std::vector<Vec>& ForwardTrace::final_person_embeddings() const {
  return steps.empty() ? initial.persons : steps.back().person_embedding;
}

InitialEmbeddings init_embeddings(const CollectiveScene& scene, const HyperParams& hp) {
  return {std::vector<Vec>(scene.persons.size(), Vec::Zero(hp.d)), Vec::Zero(hp.d)};
}

Vec person_update(const CollectiveScene& scene, const ModelParams& params, const HyperParams& hp,
                  const Vec& u_prev, const Vec& u_scene_prev, PersonId person) {
  const auto index = scene.index_of(person);
  if (!index) throw Error(ErrorKind::Lookup, "unknown person id " + std::to_string(person));
  if (u_prev.size() != hp.d) throw ShapeError("person embedding dim", hp.d, u_prev.size());
  if (u_scene_prev.size() != hp.d) throw ShapeError("scene embedding dim", hp.d, u_scene_prev.size());
  return person_step(params, hp.lambda, scene.persons[*index].feature,
                     neighbor_mean(scene, *index, hp.p_dim), u_prev, u_scene_prev, nullptr);
}

double attention_relevance(const Vec& u_i, const Vec& u_scene_prev, const ModelParams& params) {
  if (u_i.size() != params.w_g.size()) throw ShapeError("attention u_i dim", params.w_g.size(), u_i.size());
  if (u_scene_prev.size() != params.w_gs.size())
    throw ShapeError("attention u_scene dim", params.w_gs.size(), u_scene_prev.size());
  return std::tanh(params.w_g.dot(u_i) + params.w_gs.dot(u_scene_prev) + params.b_g);
}

Vec attention_weights(const Vec& relevances, double tau) {
  return softmax_temp(relevances, tau);
}

Vec scene_update(const CollectiveScene& scene, const ModelParams& params, const HyperParams& hp,
                 const std::vector<Vec>& u_curr, const Vec& u_scene_prev,
                 const std::optional<Vec>& weights) {
  if (u_curr.size() != scene.persons.size())
    throw ShapeError("person embedding count", scene.persons.size(), u_curr.size());
  if (hp.attention_enabled && !weights)
    throw Error(ErrorKind::InvariantViolation, "attention enabled but no weights supplied");
  if (!hp.attention_enabled && weights)
    throw Error(ErrorKind::InvariantViolation, "attention disabled but weights supplied");
  if (weights) {
    if (weights->size() != static_cast<Eigen::Index>(u_curr.size()))
      throw ShapeError("attention weight count", u_curr.size(), weights->size());
    if (std::abs(weights->sum() - 1.0) > 1e-9 || (weights->array() < 0.0).any())
      throw Error(ErrorKind::InvariantViolation, "attention weights are not normalized");
  }
  const auto order = canonical_order(scene);
  const Vec person_mean =
      mean_pool(order | std::views::transform([&scene](std::size_t k) -> const Vec& {
                  return scene.persons[k].feature;
                }));
  const Vec aggregate = aggregate_persons(u_curr, order, weights ? &*weights : nullptr);
  const Vec pre = matvec(params.W_s, concat(scene.scene_feature, person_mean, aggregate)) + params.b_s;
  return gate(hp.lambda, u_scene_prev, Vec(relu(pre)));
}

ForwardTrace forward(const CollectiveScene& scene, const ModelParams& params, const HyperParams& hp,
                     Mode mode, std::uint64_t seed) {
  hp.validate();
  params.check_shapes(hp);
  validate_scene(scene, hp, false);

  ForwardTrace tr;
  tr.hp = hp;
  tr.mode = mode;
  tr.seed = seed;
  tr.person_count = scene.persons.size();
  tr.order = canonical_order(scene);
  tr.neighbor_mean.reserve(tr.person_count);
  for (std::size_t k = 0; k < tr.person_count; ++k)
    tr.neighbor_mean.push_back(neighbor_mean(scene, k, hp.p_dim));
  tr.person_mean = mean_pool(tr.order | std::views::transform([&scene](std::size_t k) -> const Vec& {
                               return scene.persons[k].feature;
                             }));
  tr.initial = init_embeddings(scene, hp);

  const std::vector<Vec>* u_prev = &tr.initial.persons;
  const Vec* us_prev = &tr.initial.scene;
  tr.steps.reserve(static_cast<std::size_t>(hp.T));
  for (int t = 0; t < hp.T; ++t) {
    StepTrace st;
    st.person_pre.resize(tr.person_count);
    st.person_embedding.resize(tr.person_count);
    for (std::size_t k = 0; k < tr.person_count; ++k) {
      st.person_embedding[k] = person_step(params, hp.lambda, scene.persons[k].feature,
                                           tr.neighbor_mean[k], (*u_prev)[k], *us_prev,
                                           &st.person_pre[k]);
    }
    if (hp.attention_enabled) {
      st.relevance.resize(static_cast<Eigen::Index>(tr.person_count));
      for (std::size_t k = 0; k < tr.person_count; ++k)
        st.relevance[static_cast<Eigen::Index>(k)] =
            attention_relevance(st.person_embedding[k], *us_prev, params);
      st.weights = weights_in_scene_order(st.relevance, tr.order, hp.tau);
    }
    st.aggregate = aggregate_persons(st.person_embedding, tr.order,
                                     hp.attention_enabled ? &st.weights : nullptr);
    st.scene_input = concat(scene.scene_feature, tr.person_mean, st.aggregate);
    st.scene_pre = matvec(params.W_s, st.scene_input) + params.b_s;
    st.scene_embedding = gate(hp.lambda, *us_prev, Vec(relu(st.scene_pre)));
    tr.steps.push_back(std::move(st));
    u_prev = &tr.steps.back().person_embedding;
    us_prev = &tr.steps.back().scene_embedding;
  }

  const Vec person_embedding_mean = mean_pool(gathered(*u_prev, tr.order));
  tr.head_input = concat(person_embedding_mean, *us_prev);
  tr.hidden_pre = matvec(params.W_y, tr.head_input) + params.b_y;
  if (mode == Mode::Train) {
    Rng rng(seed);
    tr.dropout_mask = dropout_mask(hp.d, hp.dropout_rate, rng);
  } else {
    tr.dropout_mask = Vec::Ones(hp.d);
  }
  tr.hidden = relu(tr.hidden_pre).cwiseProduct(tr.dropout_mask);
  tr.logits = matvec(params.W_out, tr.hidden) + params.b_out;
  tr.distribution = softmax_temp(tr.logits, 1.0);
  return tr;
}

double loss(const ForwardTrace& trace, int label) {
  if (label < 0 || label >= trace.distribution.size())
    throw Error(ErrorKind::Index, "label " + std::to_string(label) + " outside [0, " +
                                      std::to_string(trace.distribution.size()) + ")");
  return -std::log(std::max(trace.distribution[label], 1e-300));
}

int predict(const Vec& distribution) {
  int best = 0;
  for (Eigen::Index k = 1; k < distribution.size(); ++k)
    if (distribution[k] > distribution[best]) best = static_cast<int>(k);
  return best;
}

}  // namespace latent_embed
