#ifndef LATENT_EMBED_SCENE_HPP
#define LATENT_EMBED_SCENE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "latent_embed/numerics.hpp"
#include "latent_embed/params.hpp"

namespace latent_embed {

using PersonId = std::int64_t;
using SceneId = std::int64_t;

struct Person {
  PersonId id = 0;
  Vec feature;
};

/// person id -> neighbor ids. A person without an entry has no neighbors.
using Neighborhoods = std::map<PersonId, std::vector<PersonId>>;

/// One labeled sample: the people in a scene, the whole-scene feature, who
/// neighbors whom, and the collective activity label.
struct CollectiveScene {
  SceneId scene_id = 0;
  std::vector<Person> persons;
  Vec scene_feature;
  Neighborhoods neighborhoods;
  int label = 0;

  /// Index into persons of the given id, or nullopt.
  std::optional<std::size_t> index_of(PersonId id) const;
};

bool operator==(const CollectiveScene& a, const CollectiveScene& b);

/// Structural checks against the model dimensions; throws Error on failure.
/// The label is checked only when check_label is set.
void validate_scene(const CollectiveScene& scene, const HyperParams& hp, bool check_label = true);

/// Scene indices of persons sorted by ascending id. All reductions over persons
/// iterate in this order so results do not depend on list order.
std::vector<std::size_t> canonical_order(const CollectiveScene& scene);

}  // namespace latent_embed

#endif  // LATENT_EMBED_SCENE_HPP
