#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "latent_embed/synthdata.hpp"

namespace latent_embed {
namespace {

Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return v;
}

SynthConfig zero_noise() {
  SynthConfig c;
  c.person_noise = 0.0;
  c.scene_noise = 0.0;
  return c;
}

TEST(GenerateScene, ZeroNoiseReproducesClassDirection) {
  const auto archetypes = make_archetypes(zero_noise(), 1);
  Rng rng(2);
  for (const auto& a : archetypes) {
    const auto g = generate_scene(a, rng);
    EXPECT_GE(static_cast<int>(g.scene.persons.size()), a.min_persons);
    EXPECT_LE(static_cast<int>(g.scene.persons.size()), a.max_persons);
    for (const auto& p : g.scene.persons) EXPECT_EQ(p.feature, a.person_direction);
    EXPECT_EQ(g.scene.scene_feature, a.scene_direction);
    EXPECT_EQ(g.scene.label, a.label);
  }
}

TEST(GenerateScene, InvaderFractionConcentrates) {
  SynthConfig c = zero_noise();
  c.invader_rate = 0.5;
  const auto archetypes = make_archetypes(c, 3);
  Rng rng(4);
  std::size_t persons = 0, invaders = 0;
  while (persons < 1000) {
    const auto g = generate_scene(archetypes[persons % 3], rng);
    for (bool b : g.invader) invaders += b ? 1 : 0;
    persons += g.invader.size();
  }
  const double fraction = static_cast<double>(invaders) / static_cast<double>(persons);
  EXPECT_GE(fraction, 0.45);
  EXPECT_LE(fraction, 0.55);
}

TEST(GenerateScene, SameSeedSameScene) {
  const auto archetypes = make_archetypes(SynthConfig{}, 5);
  Rng a(6), b(6);
  EXPECT_TRUE(generate_scene(archetypes[1], a).scene == generate_scene(archetypes[1], b).scene);
}

TEST(MakeArchetypes, DirectionsAreUnitAndDistinct) {
  const auto archetypes = make_archetypes(zero_noise(), 7);
  for (std::size_t a = 0; a < archetypes.size(); ++a) {
    EXPECT_NEAR(archetypes[a].person_direction.norm(), 1.0, 1e-12);
    EXPECT_NEAR(archetypes[a].scene_direction.norm(), 1.0, 1e-12);
    for (std::size_t b = a + 1; b < archetypes.size(); ++b)
      EXPECT_LT(archetypes[a].person_direction.dot(archetypes[b].person_direction), 1.0 - 1e-6);
  }
}

TEST(GenerateDataset, BalancedDisjointDeterministic) {
  const auto archetypes = make_archetypes(SynthConfig{}, 8);
  const auto [train, test] = generate_dataset(archetypes, 600, 300, 9);
  ASSERT_EQ(train.scenes.size(), 600u);
  ASSERT_EQ(test.scenes.size(), 300u);
  std::vector<int> counts(3, 0);
  for (const auto& s : train.scenes) ++counts[static_cast<std::size_t>(s.label)];
  EXPECT_EQ(counts, (std::vector<int>{200, 200, 200}));
  std::set<SceneId> train_ids;
  for (const auto& s : train.scenes) train_ids.insert(s.scene_id);
  for (const auto& s : test.scenes) EXPECT_FALSE(train_ids.contains(s.scene_id));
  EXPECT_EQ(train.split, "train");
  EXPECT_EQ(test.split, "test");
  EXPECT_EQ(train.archetypes.size(), 3u);

  const auto again = generate_dataset(archetypes, 600, 300, 9);
  EXPECT_TRUE(again.first == train);
  EXPECT_TRUE(again.second == test);
  EXPECT_THROW(generate_dataset(archetypes, 0, 3, 9), Error);
}

CollectiveScene line_scene() {
  CollectiveScene s;
  s.persons = {{10, vec({0})}, {11, vec({1})}, {12, vec({3})}};
  s.scene_feature = vec({0});
  return s;
}

TEST(BuildNeighborhoods, FullIsComplement) {
  CollectiveScene s = line_scene();
  s.persons.push_back({13, vec({7})});
  const auto n = build_neighborhoods(s, NeighborhoodMode::full());
  for (const auto& p : s.persons) {
    ASSERT_EQ(n.at(p.id).size(), 3u);
    for (PersonId q : n.at(p.id)) EXPECT_NE(q, p.id);
  }
}

TEST(BuildNeighborhoods, KnnPicksNearest) {
  const auto n = build_neighborhoods(line_scene(), NeighborhoodMode::knn(1));
  EXPECT_EQ(n.at(11), std::vector<PersonId>{10});
  EXPECT_EQ(n.at(10), std::vector<PersonId>{11});
  EXPECT_EQ(n.at(12), std::vector<PersonId>{11});
}

TEST(BuildNeighborhoods, KnnTiesGoToLowerId) {
  CollectiveScene s;
  s.persons = {{5, vec({1})}, {3, vec({-1})}, {4, vec({0})}};
  s.scene_feature = vec({0});
  const auto n = build_neighborhoods(s, NeighborhoodMode::knn(1));
  EXPECT_EQ(n.at(4), std::vector<PersonId>{3});
}

TEST(BuildNeighborhoods, KnnClampsLargeK) {
  const auto n = build_neighborhoods(line_scene(), NeighborhoodMode::knn(10));
  for (const auto& [id, members] : n) EXPECT_EQ(members.size(), 2u);
}

TEST(BuildNeighborhoods, SinglePersonHasNoNeighbors) {
  CollectiveScene s;
  s.persons = {{0, vec({1})}};
  s.scene_feature = vec({0});
  EXPECT_TRUE(build_neighborhoods(s, NeighborhoodMode::full()).at(0).empty());
  EXPECT_TRUE(build_neighborhoods(s, NeighborhoodMode::knn(2)).at(0).empty());
}

TEST(BuildNeighborhoods, KnnFollowsRelabeling) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    CollectiveScene s;
    s.scene_feature = vec({0});
    for (int k = 0; k < 6; ++k) s.persons.push_back({k, vec({rng.normal(), rng.normal()})});
    std::vector<PersonId> relabel(6);
    std::iota(relabel.begin(), relabel.end(), 0);
    for (int k = 5; k > 0; --k) std::swap(relabel[static_cast<std::size_t>(k)], relabel[static_cast<std::size_t>(rng.uniform_int(0, k))]);
    CollectiveScene r = s;
    for (auto& p : r.persons) p.id = relabel[static_cast<std::size_t>(p.id)];
    const auto a = build_neighborhoods(s, NeighborhoodMode::knn(2));
    const auto b = build_neighborhoods(r, NeighborhoodMode::knn(2));
    for (const auto& [id, members] : a) {
      std::set<PersonId> mapped;
      for (PersonId m : members) mapped.insert(relabel[static_cast<std::size_t>(m)]);
      const auto& other = b.at(relabel[static_cast<std::size_t>(id)]);
      EXPECT_EQ(mapped, std::set<PersonId>(other.begin(), other.end()));
    }
  }
}

}  // namespace
}  // namespace latent_embed
