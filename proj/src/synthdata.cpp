#include "latent_embed/synthdata.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

namespace latent_embed {

namespace {

Vec unit_direction(Eigen::Index dim, Rng& rng) {
  Vec v(dim);
  do {
    for (Eigen::Index k = 0; k < dim; ++k) v[k] = rng.normal();
  } while (v.norm() == 0.0);
  return v / v.norm();
}

Vec isotropic(Eigen::Index dim, double scale, Rng& rng) {
  Vec v(dim);
  for (Eigen::Index k = 0; k < dim; ++k) v[k] = scale * rng.normal();
  return v;
}

bool same_values(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

bool ActivityArchetype::operator==(const ActivityArchetype& o) const {
  return label == o.label && min_persons == o.min_persons && max_persons == o.max_persons &&
         same_values(person_direction, o.person_direction) && person_noise == o.person_noise &&
         same_values(scene_direction, o.scene_direction) && scene_signal == o.scene_signal &&
         scene_noise == o.scene_noise && invader_rate == o.invader_rate && invader_scale == o.invader_scale;
}

bool Dataset::operator==(const Dataset& o) const {
  return split == o.split && seed == o.seed && archetypes == o.archetypes && scenes == o.scenes;
}

std::vector<ActivityArchetype> make_archetypes(const SynthConfig& c, std::uint64_t seed) {
  if (c.classes < 2) throw Error(ErrorKind::Config, "need at least two classes");
  if (c.p_dim <= 0 || c.s_dim <= 0) throw Error(ErrorKind::Config, "feature dims must be positive");
  if (c.min_persons < 1 || c.max_persons < c.min_persons)
    throw Error(ErrorKind::Config, "invalid person-count range");
  if (!(c.invader_rate >= 0.0 && c.invader_rate < 1.0))
    throw Error(ErrorKind::Config, "invader rate must lie in [0, 1)");
  Rng rng(mix_seed(seed, 0xA7C4E7));
  std::vector<ActivityArchetype> out;
  for (int k = 0; k < c.classes; ++k) {
    ActivityArchetype a;
    a.label = k;
    a.min_persons = c.min_persons;
    a.max_persons = c.max_persons;
    a.person_direction = unit_direction(c.p_dim, rng);
    a.person_noise = c.person_noise;
    a.scene_direction = unit_direction(c.s_dim, rng);
    a.scene_signal = c.scene_signal;
    a.scene_noise = c.scene_noise;
    a.invader_rate = c.invader_rate;
    a.invader_scale = c.invader_scale;
    out.push_back(std::move(a));
  }
  return out;
}

GeneratedScene generate_scene(const ActivityArchetype& a, Rng& rng, SceneId scene_id) {
  const auto count = rng.uniform_int(a.min_persons, a.max_persons);
  const Eigen::Index p_dim = a.person_direction.size();
  GeneratedScene out;
  out.scene.scene_id = scene_id;
  out.scene.label = a.label;
  for (std::int64_t k = 0; k < count; ++k) {
    const bool invader = a.invader_rate > 0.0 && rng.bernoulli(a.invader_rate);
    Vec feature = invader ? isotropic(p_dim, a.invader_scale, rng)
                          : Vec(a.person_direction + isotropic(p_dim, a.person_noise, rng));
    out.scene.persons.push_back({k, std::move(feature)});
    out.invader.push_back(invader);
  }
  out.scene.scene_feature =
      a.scene_signal * a.scene_direction + isotropic(a.scene_direction.size(), a.scene_noise, rng);
  out.scene.neighborhoods = build_neighborhoods(out.scene, NeighborhoodMode::full());
  return out;
}

std::pair<Dataset, Dataset> generate_dataset(const std::vector<ActivityArchetype>& archetypes, int n_train,
                                             int n_test, std::uint64_t seed) {
  if (archetypes.empty()) throw Error(ErrorKind::Config, "no archetypes");
  if (n_train <= 0 || n_test <= 0) throw Error(ErrorKind::Config, "split sizes must be positive");
  for (std::size_t k = 0; k < archetypes.size(); ++k)
    if (archetypes[k].label != static_cast<int>(k))
      throw Error(ErrorKind::Config, "archetype labels must be 0..K-1 in order");

  Rng rng(seed);
  const auto classes = static_cast<int>(archetypes.size());
  auto make_split = [&](const std::string& name, int count, SceneId first_id) {
    std::vector<int> labels(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) labels[static_cast<std::size_t>(k)] = k % classes;
    for (int k = count - 1; k > 0; --k)
      std::swap(labels[static_cast<std::size_t>(k)], labels[static_cast<std::size_t>(rng.uniform_int(0, k))]);
    Dataset ds;
    ds.split = name;
    ds.seed = seed;
    ds.archetypes = archetypes;
    for (int k = 0; k < count; ++k) {
      const auto& arch = archetypes[static_cast<std::size_t>(labels[static_cast<std::size_t>(k)])];
      ds.scenes.push_back(generate_scene(arch, rng, first_id + k).scene);
    }
    return ds;
  };
  Dataset train = make_split("train", n_train, 0);
  Dataset test = make_split("test", n_test, n_train);
  return {std::move(train), std::move(test)};
}

Neighborhoods build_neighborhoods(const CollectiveScene& scene, NeighborhoodMode mode) {
  const auto order = canonical_order(scene);
  Neighborhoods out;
  if (mode.kind == NeighborhoodMode::Kind::Full) {
    for (std::size_t i : order) {
      auto& members = out[scene.persons[i].id];
      for (std::size_t j : order)
        if (j != i) members.push_back(scene.persons[j].id);
    }
    return out;
  }

  const int others = static_cast<int>(scene.persons.size()) - 1;
  int k = std::max(mode.k, 0);
  if (k > others) {
    std::clog << "warning: knn k=" << mode.k << " clamped to " << others << " for scene " << scene.scene_id
              << "\n";
    k = others;
  }
  for (std::size_t i : order) {
    std::vector<std::pair<double, PersonId>> ranked;
    for (std::size_t j : order) {
      if (j == i) continue;
      ranked.emplace_back((scene.persons[i].feature - scene.persons[j].feature).norm(), scene.persons[j].id);
    }
    std::sort(ranked.begin(), ranked.end());
    auto& members = out[scene.persons[i].id];
    for (int r = 0; r < k; ++r) members.push_back(ranked[static_cast<std::size_t>(r)].second);
    std::sort(members.begin(), members.end());
  }
  return out;
}

}  // namespace latent_embed
