#pragma once

#include <memory>
#include <vector>

#include "teachsim/env.hpp"
#include "teachsim/learner.hpp"
#include "teachsim/random.hpp"

namespace testutil {

using namespace teachsim;

// Descriptor task with explicit 1-D or n-D descriptors; theta_star given.
inline Environment toy_env(const std::vector<std::vector<double>>& objects, const std::vector<std::vector<double>>& bins,
                           std::vector<double> theta_star) {
  std::vector<ObjectState> os;
  for (std::size_t i = 0; i < objects.size(); ++i)
    os.push_back({static_cast<int>(i), {static_cast<double>(i), 0.0}, objects[i], Ring::None});
  std::vector<Bin> bs;
  for (std::size_t i = 0; i < bins.size(); ++i)
    bs.push_back({static_cast<int>(i), {static_cast<double>(i), 5.0}, bins[i]});
  const std::size_t d = theta_star.size();
  return Environment(std::move(os), std::move(bs), FeatureFn::NegAbsDiff, d,
                     make_reward_params(std::move(theta_star), FeatureSpaceVariant::shared(d)));
}

inline ThetaSetPtr thetas(std::size_t d, const std::vector<std::vector<double>>& ws) {
  std::vector<RewardParams> ps;
  for (const auto& w : ws) ps.push_back(make_reward_params(w, FeatureSpaceVariant::shared(d)));
  return make_theta_set(FeatureSpaceVariant::shared(d), std::move(ps));
}

inline std::shared_ptr<const Environment> share(Environment e) {
  return std::make_shared<const Environment>(std::move(e));
}

} // namespace testutil
