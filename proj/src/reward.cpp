#include "teachsim/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace teachsim {

FeatureSpaceVariant FeatureSpaceVariant::shared(std::size_t d) {
  if (d == 0) throw std::invalid_argument("feature dimension must be >= 1");
  return {Kind::Shared, d, 0, 0};
}

FeatureSpaceVariant FeatureSpaceVariant::missing_feature(std::size_t d, std::size_t dropped) {
  if (d < 2) throw std::invalid_argument("missing-feature space needs d >= 2");
  if (dropped >= d) throw std::invalid_argument("dropped feature index out of range");
  return {Kind::MissingFeature, d, dropped, 0};
}

FeatureSpaceVariant FeatureSpaceVariant::per_bin(std::size_t n_bins, std::size_t d) {
  if (d == 0 || n_bins < 2) throw std::invalid_argument("per-bin space needs d >= 1 and >= 2 bins");
  return {Kind::PerBin, d, 0, n_bins};
}

std::size_t FeatureSpaceVariant::weight_dim() const {
  return kind_ == Kind::PerBin ? n_bins_ * d_ : d_;
}

std::string FeatureSpaceVariant::label() const {
  switch (kind_) {
    case Kind::Shared: return "shared";
    case Kind::MissingFeature: return "missing" + std::to_string(dropped_);
    case Kind::PerBin: return "perbin";
  }
  return "unknown";
}

void RewardParams::validate() const {
  if (weights.size() != variant.weight_dim())
    throw std::invalid_argument("reward weight length " + std::to_string(weights.size()) +
                                " does not match variant " + variant.label());
  for (double w : weights)
    if (!std::isfinite(w)) throw std::invalid_argument("reward weights must be finite");
  if (variant.kind() == FeatureSpaceVariant::Kind::MissingFeature &&
      weights[variant.dropped_index()] != 0.0)
    throw std::invalid_argument("missing-feature weights must be zero at the dropped index");
}

RewardParams make_reward_params(std::vector<double> weights, FeatureSpaceVariant variant) {
  RewardParams p{std::move(weights), variant};
  p.validate();
  return p;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

} // namespace teachsim
