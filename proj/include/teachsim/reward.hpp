#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace teachsim {

using FeatureVector = std::vector<double>;

// Which space of reward weights a learner reasons over.
//
//   Shared          theta . phi(s, a), |theta| = d
//   MissingFeature  as Shared, but theta[dropped] is pinned to 0
//   PerBin          theta_a . psi(s), one block of d weights per bin
class FeatureSpaceVariant {
public:
  enum class Kind { Shared, MissingFeature, PerBin };

  static FeatureSpaceVariant shared(std::size_t d);
  static FeatureSpaceVariant missing_feature(std::size_t d, std::size_t dropped);
  static FeatureSpaceVariant per_bin(std::size_t n_bins, std::size_t d);

  Kind kind() const { return kind_; }
  std::size_t feature_dim() const { return d_; }
  std::size_t dropped_index() const { return dropped_; }
  std::size_t n_bins() const { return n_bins_; }

  // Length of the weight vector in this space.
  std::size_t weight_dim() const;

  // Short stable label, e.g. "shared", "missing2", "perbin".
  std::string label() const;

  bool operator==(const FeatureSpaceVariant&) const = default;

private:
  FeatureSpaceVariant(Kind kind, std::size_t d, std::size_t dropped, std::size_t n_bins)
      : kind_(kind), d_(d), dropped_(dropped), n_bins_(n_bins) {}

  Kind kind_ = Kind::Shared;
  std::size_t d_ = 0;
  std::size_t dropped_ = 0;
  std::size_t n_bins_ = 0;
};

struct RewardParams {
  std::vector<double> weights;
  FeatureSpaceVariant variant;

  // Throws std::invalid_argument when the weights do not fit the variant.
  void validate() const;
};

RewardParams make_reward_params(std::vector<double> weights, FeatureSpaceVariant variant);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm(const std::vector<double>& v);

} // namespace teachsim
