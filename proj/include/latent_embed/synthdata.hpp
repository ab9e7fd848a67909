#ifndef LATENT_EMBED_SYNTHDATA_HPP
#define LATENT_EMBED_SYNTHDATA_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "latent_embed/rng.hpp"
#include "latent_embed/scene.hpp"

namespace latent_embed {

/// Generative recipe for one activity class.
///
/// Regular persons are drawn around a class-specific unit direction; invaders
/// are drawn from a class-independent isotropic background and still carry the
/// scene's label. The scene feature is scene_signal * scene_direction plus noise.
struct ActivityArchetype {
  int label = 0;
  int min_persons = 4;
  int max_persons = 8;
  Vec person_direction;  ///< unit norm, dim p_dim
  double person_noise = 0.0;
  Vec scene_direction;   ///< unit norm, dim s_dim
  double scene_signal = 1.0;
  double scene_noise = 0.0;
  double invader_rate = 0.0;
  double invader_scale = 2.0;

  bool operator==(const ActivityArchetype& other) const;
};

/// Knobs for building a family of archetypes that differ only in their directions.
struct SynthConfig {
  int classes = 3;
  int p_dim = 16;
  int s_dim = 16;
  int min_persons = 4;
  int max_persons = 8;
  double person_noise = 0.5;
  double scene_signal = 1.0;
  double scene_noise = 0.5;
  double invader_rate = 0.0;
  double invader_scale = 2.0;

  bool operator==(const SynthConfig&) const = default;
};

/// One archetype per class with random unit directions drawn from `seed`.
std::vector<ActivityArchetype> make_archetypes(const SynthConfig& config, std::uint64_t seed);

struct GeneratedScene {
  CollectiveScene scene;
  std::vector<bool> invader;  ///< per person, scene order
};

GeneratedScene generate_scene(const ActivityArchetype& archetype, Rng& rng, SceneId scene_id = 0);

struct Dataset {
  std::vector<CollectiveScene> scenes;
  std::string split;
  std::uint64_t seed = 0;
  std::vector<ActivityArchetype> archetypes;

  bool operator==(const Dataset& other) const;
};

/// Class-balanced train/test splits with disjoint scene ids (train first).
std::pair<Dataset, Dataset> generate_dataset(const std::vector<ActivityArchetype>& archetypes,
                                             int n_train, int n_test, std::uint64_t seed);

struct NeighborhoodMode {
  enum class Kind { Full, Knn } kind = Kind::Full;
  int k = 0;

  static NeighborhoodMode full() { return {}; }
  static NeighborhoodMode knn(int k) { return {Kind::Knn, k}; }
};

/// Full: N(i) is everyone else. Knn: the k nearest persons by Euclidean feature
/// distance, ties to the lower id; k >= |persons| is clamped with a warning.
Neighborhoods build_neighborhoods(const CollectiveScene& scene, NeighborhoodMode mode);

}  // namespace latent_embed

#endif  // LATENT_EMBED_SYNTHDATA_HPP
