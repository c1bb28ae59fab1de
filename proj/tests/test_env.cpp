#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "teachsim/serialize.hpp"

using namespace teachsim;

TEST_CASE("optimal_action tie-breaks to the lowest bin id") {
  const auto env = testutil::toy_env({{0.2}}, {{0.9}, {0.1}, {0.5}}, {1.0});
  CHECK(optimal_action(env, make_reward_params({0.0}, FeatureSpaceVariant::shared(1)), 0) == 0);
}

TEST_CASE("optimal_action picks the bin with the larger reward in a 2-bin d=1 toy") {
  // phi = -|o - b|: bin 0 gives -0.1, bin 1 gives -0.7
  const auto env = testutil::toy_env({{0.3}}, {{0.4}, {1.0}}, {1.0});
  CHECK(env.features(0, 0)[0] == doctest::Approx(-0.1));
  CHECK(env.features(0, 1)[0] == doctest::Approx(-0.7));
  CHECK(optimal_action(env, make_reward_params({1.0}, FeatureSpaceVariant::shared(1)), 0) == 0);
  CHECK(optimal_action(env, make_reward_params({-1.0}, FeatureSpaceVariant::shared(1)), 0) == 1);
}

TEST_CASE("random-task features vanish when descriptors coincide") {
  const auto env = testutil::toy_env({{0.3, 0.6, 0.1}}, {{0.3, 0.6, 0.1}, {0.0, 0.0, 0.0}}, {1.0, 0.0, 0.0});
  for (double f : env.features(0, 0)) CHECK(f == 0.0);
}

TEST_CASE("generate_random_task matches the requested shape and has unique optimal bins") {
  const auto env = generate_random_task(3, 50, 3, 0);
  CHECK(env.n_bins() == 3);
  CHECK(env.n_objects() == 50);
  CHECK(env.feature_dim() == 3);
  CHECK(norm(env.theta_star().weights) == doctest::Approx(1.0).epsilon(1e-12));
  for (int o = 0; o < 50; ++o) CHECK(optimal_margin(env, env.theta_star(), o) > 0.0);
  for (const auto& obj : env.objects())
    for (double x : obj.descriptor) CHECK((x >= 0.0 && x <= 1.0));
}

TEST_CASE("generate_random_task is deterministic per seed") {
  const auto a = generate_random_task(3, 50, 3, 7);
  const auto b = generate_random_task(3, 50, 3, 7);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.objects() == b.objects());
  const auto c = generate_random_task(3, 50, 3, 0);
  const auto d = generate_random_task(3, 50, 3, 1);
  CHECK(c.theta_star().weights != d.theta_star().weights);
}

TEST_CASE("generate_random_task rejects bad sizes") {
  CHECK_THROWS_AS(generate_random_task(1, 5, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_random_task(3, 0, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_random_task(3, 5, 0, 0), std::invalid_argument);
}

TEST_CASE("ring task ground truth implements both sorting rules") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto env = generate_ring_task(seed);
    REQUIRE(env.n_bins() == 3);
    CHECK(env.feature_dim() == ring_feature::count);
    for (const auto& o : env.objects()) {
      const int a = optimal_action(env, env.theta_star(), o);
      CHECK(optimal_margin(env, env.theta_star(), o.id) > 0.0);
      if (o.ring == Ring::Inner) CHECK(a == env.closest_bin(o.id));
      if (o.ring == Ring::Outer) CHECK(env.bins()[a].descriptor[0] == o.descriptor[0]);
    }
  }
}

TEST_CASE("ring task layout and counts follow RingLayout") {
  RingLayout layout;
  layout.inner_per_bin = 2;
  layout.outer_per_bin = 3;
  const auto env = generate_ring_task(3, layout);
  CHECK(env.n_objects() == 15);
  std::set<double> shapes;
  for (const auto& b : env.bins()) shapes.insert(b.descriptor[0]);
  CHECK(shapes.size() == 3);
  CHECK(env.theta_star().weights[ring_feature::color_match] == 0.0);
  CHECK(env.theta_star().weights[ring_feature::inner_proximity] > 0.0);
  CHECK(env.theta_star().weights[ring_feature::outer_shape_match] > 0.0);
}

TEST_CASE("ring features: inner object on top of a bin, outer shape match") {
  const auto env = generate_ring_task(11);
  // an inner object moved onto bin 2's position
  auto objects = env.objects();
  const auto inner_it = std::find_if(objects.begin(), objects.end(), [](auto& o) { return o.ring == Ring::Inner; });
  REQUIRE(inner_it != objects.end());
  inner_it->position = env.bins()[2].position;
  const Environment moved(objects, env.bins(), env.feature_fn(), env.feature_dim(), env.theta_star());
  const auto f = moved.features(inner_it->id, 2);
  CHECK(f[ring_feature::inner_proximity] == doctest::Approx(1.0));
  CHECK(f[ring_feature::outer_shape_match] == 0.0);

  for (const auto& o : env.objects()) {
    if (o.ring != Ring::Outer) continue;
    for (const auto& b : env.bins()) {
      const auto g = env.features(o.id, b.id);
      CHECK(g[ring_feature::inner_proximity] == 0.0);
      CHECK(g[ring_feature::outer_shape_match] == (b.descriptor[0] == o.descriptor[0] ? 1.0 : 0.0));
      CHECK(g[ring_feature::color_match] == (b.descriptor[1] == o.descriptor[1] ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("feature_vector is pure and checks membership") {
  const auto env = generate_random_task(3, 10, 3, 4);
  const auto a = feature_vector(env, env.objects()[3], env.bins()[1]);
  CHECK(a == feature_vector(env, env.objects()[3], env.bins()[1]));
  ObjectState stranger = env.objects()[3];
  stranger.descriptor[0] += 0.5;
  CHECK_THROWS_AS(feature_vector(env, stranger, env.bins()[1]), std::invalid_argument);
  Bin other = env.bins()[1];
  other.id = 9;
  CHECK_THROWS_AS(feature_vector(env, env.objects()[3], other), std::invalid_argument);
  CHECK_THROWS_AS(env.object(10), std::invalid_argument);
  CHECK_THROWS_AS(env.bin(-1), std::invalid_argument);
}

TEST_CASE("Environment construction validates its inputs") {
  auto ts = make_reward_params({1.0}, FeatureSpaceVariant::shared(1));
  std::vector<Bin> one_bin{{0, {0, 0}, {0.0}}};
  std::vector<ObjectState> objs{{0, {0, 0}, {0.0}, Ring::None}};
  CHECK_THROWS_AS(Environment(objs, one_bin, FeatureFn::NegAbsDiff, 1, ts), std::invalid_argument);
  std::vector<Bin> bins{{0, {0, 0}, {0.0}}, {1, {1, 0}, {1.0}}};
  std::vector<ObjectState> bad_ids{{1, {0, 0}, {0.2}, Ring::None}};
  CHECK_THROWS_AS(Environment(bad_ids, bins, FeatureFn::NegAbsDiff, 1, ts), std::invalid_argument);
  std::vector<ObjectState> bad_desc{{0, {0, 0}, {0.2, 0.3}, Ring::None}};
  CHECK_THROWS_AS(Environment(bad_desc, bins, FeatureFn::NegAbsDiff, 1, ts), std::invalid_argument);
}

TEST_CASE("environment JSON round trip preserves the fingerprint") {
  for (const auto& env : {generate_random_task(3, 12, 3, 5), generate_ring_task(5)}) {
    const auto j = to_json(env);
    CHECK(j.at("objects").size() == env.n_objects());
    const auto back = environment_from_json(j);
    CHECK(back.fingerprint() == env.fingerprint());
  }
  CHECK_THROWS_AS(environment_from_json(json{{"bins", json::array()}}), std::invalid_argument);
}

TEST_CASE("per-bin rewards use one weight block per bin") {
  const auto env = testutil::toy_env({{0.5, 0.25}}, {{0, 0}, {1, 1}}, {1.0, 0.0});
  const auto v = FeatureSpaceVariant::per_bin(2, 2);
  const auto theta = make_reward_params({1.0, 0.0, 0.0, 4.0}, v);
  CHECK(reward(env, theta, 0, 0) == doctest::Approx(0.5));
  CHECK(reward(env, theta, 0, 1) == doctest::Approx(1.0));
  CHECK(optimal_action(env, theta, 0) == 1);
}
