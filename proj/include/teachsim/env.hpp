#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "teachsim/reward.hpp"

namespace teachsim {

enum class FeatureFn { RingIndicators, NegAbsDiff };
enum class Ring { None, Inner, Outer };

std::string to_string(FeatureFn f);
std::string to_string(Ring r);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

double distance(Vec2 a, Vec2 b);

// Ring-task descriptors are {shape, color}; random-task descriptors are the
// d raw attributes compared against the bin's descriptor.
struct ObjectState {
  int id = 0;
  Vec2 position;
  std::vector<double> descriptor;
  Ring ring = Ring::None;
  bool operator==(const ObjectState&) const = default;
};

struct Bin {
  int id = 0;
  Vec2 position;
  std::vector<double> descriptor;
  bool operator==(const Bin&) const = default;
};

// Ring-task feature layout.
namespace ring_feature {
inline constexpr std::size_t inner_proximity = 0;
inline constexpr std::size_t outer_shape_match = 1;
inline constexpr std::size_t color_match = 2;
inline constexpr std::size_t outer_proximity = 3;
inline constexpr std::size_t count = 4;
} // namespace ring_feature

enum class Shape { Circle = 0, Square = 1, Triangle = 2 };

// Immutable decluttering task. Object and bin ids equal their index.
class Environment {
public:
  Environment(std::vector<ObjectState> objects, std::vector<Bin> bins, FeatureFn feature_fn,
              std::size_t d, RewardParams theta_star);

  const std::vector<ObjectState>& objects() const { return objects_; }
  const std::vector<Bin>& bins() const { return bins_; }
  std::size_t n_objects() const { return objects_.size(); }
  std::size_t n_bins() const { return bins_.size(); }
  std::size_t feature_dim() const { return d_; }
  FeatureFn feature_fn() const { return feature_fn_; }
  const RewardParams& theta_star() const { return theta_star_; }

  const ObjectState& object(int id) const;
  const Bin& bin(int id) const;

  // phi(s, a) for object `object_id` placed in bin `bin_id`.
  FeatureVector features(int object_id, int bin_id) const;

  // psi(s): object-only features used by per-bin reward spaces. Only defined
  // for descriptor-matching (random) tasks.
  FeatureVector object_features(int object_id) const;

  // Nearest bin by Euclidean distance, lowest id on ties.
  int closest_bin(int object_id) const;

  // Largest object-bin distance; the ring task normalizes proximity by it.
  double max_distance() const { return max_distance_; }

  std::uint64_t fingerprint() const;

private:
  std::vector<ObjectState> objects_;
  std::vector<Bin> bins_;
  FeatureFn feature_fn_;
  std::size_t d_;
  RewardParams theta_star_;
  double max_distance_ = 1.0;
};

// Checks that `object` and `bin` are members of `env` before evaluating phi.
FeatureVector feature_vector(const Environment& env, const ObjectState& object, const Bin& bin);

// theta^T phi(s, a) in whichever space `theta` lives.
double reward(const Environment& env, const RewardParams& theta, int object_id, int bin_id);

// Rewards for every bin, indexed by bin id.
std::vector<double> bin_rewards(const Environment& env, const RewardParams& theta, int object_id);

// argmax_a theta^T phi(s, a); lowest bin id wins ties.
int optimal_action(const Environment& env, const RewardParams& theta, const ObjectState& object);
int optimal_action(const Environment& env, const RewardParams& theta, int object_id);

// Gap between the best and second-best bin reward.
double optimal_margin(const Environment& env, const RewardParams& theta, int object_id);

Environment generate_random_task(std::size_t n_bins, std::size_t n_objects, std::size_t d,
                                 std::uint64_t seed);

struct RingLayout {
  int inner_per_bin = 4;
  int outer_per_bin = 6;
  double bin_radius = 1.0;   // bins sit on a circle of this radius
  double inner_radius = 0.22;
  double outer_radius = 0.48;
};

// Three bins (circle, square, triangle) each surrounded by an inner and an
// outer ring of objects. Ground truth: inner objects go to the closest bin,
// outer objects to the bin of the same shape.
Environment generate_ring_task(std::uint64_t seed, const RingLayout& layout = {});

// Ground-truth weights used by generate_ring_task.
RewardParams ring_theta_star();

} // namespace teachsim
