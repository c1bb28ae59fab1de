#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracle.hpp"
#include "teachsim/feedback.hpp"
#include "teachsim/serialize.hpp"

using namespace teachsim;

namespace {

// Object at the origin; with beta = 1, theta (1,0) yields bin likelihoods
// (0.1, 0.72, 0.18) and theta (0,1) yields (0.1, 0.2, 0.7).
Environment mixture_env() {
  return testutil::toy_env({{0.0, 0.0}},
                           {{std::log(7.2), std::log(7.0)}, {0.0, std::log(3.5)}, {std::log(4.0), 0.0}}, {1.0, 0.0});
}

} // namespace

TEST_CASE("predict_action: hand mixture gives bin 1 with confidence 0.46") {
  const auto env = mixture_env();
  const auto set = testutil::thetas(2, {{1.0, 0.0}, {0.0, 1.0}});
  const auto belief = Belief::uniform(set);
  const auto pred = predict_action(belief, env, env.objects()[0], 1.0);
  CHECK(pred.bin == 1);
  CHECK(pred.confidence == doctest::Approx(0.46).epsilon(1e-12));

  const ObservationModel model(testutil::share(env), set, 1.0);
  const auto m = action_marginals(belief, model, 0);
  CHECK(m[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(m[2] == doctest::Approx(0.44).epsilon(1e-12));
  CHECK(predict_action(belief, model, 0).bin == 1);
}

TEST_CASE("predict_action: beta = 0 ties to bin 0 with confidence 1/N") {
  const auto env = generate_random_task(4, 3, 3, 8);
  const auto set = sample_theta_set(FeatureSpaceVariant::shared(3), 30, 1);
  const auto pred = predict_action(Belief::uniform(set), env, env.objects()[1], 0.0);
  CHECK(pred.bin == 0);
  CHECK(pred.confidence == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("predict_action: a point mass predicts its reward argmax") {
  const auto env = generate_random_task(3, 10, 3, 12);
  const auto set = sample_theta_set(FeatureSpaceVariant::shared(3), 1, 2);
  for (int o = 0; o < 10; ++o)
    CHECK(predict_action(Belief::uniform(set), env, env.objects()[o], 20.0).bin ==
          optimal_action(env, set->thetas[0], o));
}

TEST_CASE("predict_action confidence matches brute force") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto env = testutil::share(generate_random_task(3, 5, 3, seed));
    const auto set = sample_theta_set(FeatureSpaceVariant::shared(3), 20, seed);
    std::vector<double> w;
    for (int i = 0; i < 20; ++i) w.push_back(1.0 + (i * 37 % 11));
    const auto b = Belief::from_weights(set, w);
    oracle::Particles p{set->variant, {}};
    for (const auto& t : set->thetas) p.thetas.push_back(t.weights);
    const ObservationModel model(env, set, 20.0);
    for (int o = 0; o < 5; ++o) {
      const auto pred = predict_action(b, model, o);
      const auto m = oracle::marginal(*env, p, b.weights(), o, 20.0);
      CHECK(pred.bin == oracle::predict(*env, p, b.weights(), o, 20.0));
      CHECK(std::abs(pred.confidence - m[pred.bin]) < 1e-12);
    }
  }
}

TEST_CASE("predict_state and recover_action are inverse") {
  const auto env = generate_random_task(3, 5, 2, 1);
  const auto s = predict_state(env, env.objects()[3], 2);
  CHECK(s == PlacementState{3, 2});
  CHECK(predict_state(env, env.objects()[3], 2) == s);
  for (int a = 0; a < 3; ++a) CHECK(recover_action(env, predict_state(env, env.objects()[0], a)) == a);
  CHECK_THROWS_AS(predict_state(env, env.objects()[0], 3), std::invalid_argument);
}

TEST_CASE("feedback_speed scales and clamps") {
  CHECK(feedback_speed(1.0, 1.0, 1.0, 0.05) == 1.0);
  CHECK(feedback_speed(1.0 / 3.0, 1.0, 1.0, 0.05) == doctest::Approx(0.3333).epsilon(1e-3));
  CHECK(feedback_speed(0.01, 1.0, 1.0, 0.05) == 0.05);
  CHECK(feedback_speed(0.0, 1.0, 1.0, 0.05) == 0.05);
  double prev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double v = feedback_speed(k / 100.0, 1.0, 1.0, 0.05);
    CHECK(v >= prev);
    CHECK((v >= 0.05 && v <= 1.0));
    prev = v;
  }
  CHECK_THROWS_AS(feedback_speed(1.5, 1.0, 1.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(feedback_speed(0.5, 1.0, 0.05, 1.0), std::invalid_argument);
}

TEST_CASE("generate_feedback per mode") {
  // 2 bins, theta = [1], beta = 1: likelihoods (0.97, 0.03)
  const auto env = testutil::toy_env({{0.0}}, {{0.0}, {std::log(0.97 / 0.03)}}, {1.0});
  const auto set = testutil::thetas(1, {{1.0}});
  const auto b = Belief::uniform(set);

  CHECK_FALSE(generate_feedback(b, env, env.objects()[0], 1.0, FeedbackMode::none()).has_value());

  const auto partial = generate_feedback(b, env, env.objects()[0], 1.0, FeedbackMode::partial(0.5));
  REQUIRE(partial.has_value());
  CHECK(partial->speed == 0.5);
  CHECK(partial->target_bin == 0);

  const auto full = generate_feedback(b, env, env.objects()[0], 1.0, FeedbackMode::full());
  REQUIRE(full.has_value());
  CHECK(full->speed == doctest::Approx(0.97).epsilon(1e-12));
  CHECK(full->confidence == doctest::Approx(0.97).epsilon(1e-12));

  const ObservationModel model(testutil::share(env), set, 1.0);
  CHECK(*generate_feedback(b, model, 0, FeedbackMode::full()) == *full);
}

TEST_CASE("generate_feedback is pure and respects the speed limits") {
  const auto env = testutil::share(generate_random_task(3, 20, 3, 4));
  const auto set = sample_theta_set(FeatureSpaceVariant::shared(3), 100, 4);
  const ObservationModel model(env, set, 20.0);
  Belief b = Belief::uniform(set);
  for (int o = 0; o < 20; ++o) {
    const auto f1 = generate_feedback(b, model, o, FeedbackMode::full());
    const auto f2 = generate_feedback(b, model, o, FeedbackMode::full());
    REQUIRE(f1.has_value());
    CHECK(*f1 == *f2);
    CHECK((f1->speed >= 0.05 && f1->speed <= 1.0));
    CHECK((f1->confidence >= 0.0 && f1->confidence <= 1.0));
    b = update_belief(b, model, o, model.correct_bin(o));
  }
}

TEST_CASE("feedback modes parse and validate") {
  CHECK(parse_feedback_mode("none").kind == FeedbackMode::Kind::None);
  CHECK(parse_feedback_mode("full").kind == FeedbackMode::Kind::Full);
  CHECK(parse_feedback_mode("partial", 0.3).fixed_speed == 0.3);
  CHECK_THROWS_AS(parse_feedback_mode("loud"), std::invalid_argument);
  CHECK_THROWS_AS(FeedbackMode::partial(0.0).validate(1.0), std::invalid_argument);
  CHECK_THROWS_AS(FeedbackMode::partial(1.5).validate(1.0), std::invalid_argument);
  FeedbackMode::partial(1.0).validate(1.0);
}

TEST_CASE("feedback JSON shape") {
  const Feedback fb{2, 0.4, 0.4, FeedbackMode::Kind::Full};
  const auto j = to_json(fb);
  CHECK(j.at("target_bin") == 2);
  CHECK(j.at("speed") == 0.4);
  CHECK(j.at("confidence") == 0.4);
  CHECK(j.at("mode") == "full");
  CHECK(feedback_from_json(j) == fb);
}
