#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "teachsim/env.hpp"
#include "teachsim/reward.hpp"

namespace teachsim {

// Total posterior mass underflowed: every particle assigns (numerically) zero
// probability to an observation.
class DegeneratePosterior : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Fixed hypothesis set. Beliefs over it only move weights, never the thetas.
struct ThetaSet {
  FeatureSpaceVariant variant;
  std::vector<RewardParams> thetas;

  std::size_t size() const { return thetas.size(); }
};
using ThetaSetPtr = std::shared_ptr<const ThetaSet>;

ThetaSetPtr make_theta_set(FeatureSpaceVariant variant, std::vector<RewardParams> thetas);

// Normalized discrete distribution over a ThetaSet, stored as log weights with
// log-sum-exp == 0.
class Belief {
public:
  static Belief uniform(ThetaSetPtr thetas);
  static Belief from_weights(ThetaSetPtr thetas, const std::vector<double>& weights);
  static Belief from_log_weights(ThetaSetPtr thetas, std::vector<double> log_weights);

  std::size_t size() const { return log_weights_.size(); }
  const ThetaSetPtr& theta_set() const { return thetas_; }
  const FeatureSpaceVariant& variant() const { return thetas_->variant; }
  const RewardParams& theta(std::size_t i) const { return thetas_->thetas[i]; }

  double weight(std::size_t i) const;
  std::vector<double> weights() const;
  const std::vector<double>& log_weights() const { return log_weights_; }

  // Particle of maximal weight, lowest index on ties.
  std::size_t map_index() const;

private:
  Belief(ThetaSetPtr thetas, std::vector<double> log_weights);

  ThetaSetPtr thetas_;
  std::vector<double> log_weights_;
};

// log-sum-exp of `xs`; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> xs);

// Boltzmann observation model over all bins: log p(a | s, theta) for a = 0..N-1.
std::vector<double> log_action_likelihoods(const Environment& env, int object_id,
                                           const RewardParams& theta, double beta);
std::vector<double> action_likelihoods(const Environment& env, int object_id,
                                       const RewardParams& theta, double beta);
double action_likelihood(const Environment& env, const ObjectState& object, const Bin& bin,
                         const RewardParams& theta, double beta);

// b'(theta) ∝ p(a | s, theta) b(theta).
Belief update_belief(const Belief& belief, const Environment& env, const ObjectState& object,
                     const Bin& bin, double beta);

// Uniform draws on the unit sphere of the variant's weight space.
ThetaSetPtr sample_theta_set(FeatureSpaceVariant variant, std::size_t count, std::uint64_t seed);

// Hand-written ring-task rule vectors (closest bin, shape match, color match,
// the true rule, and their negations) projected into `variant`; vectors that
// vanish under projection are skipped.
std::vector<RewardParams> study_rule_vectors(const FeatureSpaceVariant& variant);

// Closest-bin rule: proximity weights on both rings, nothing else.
RewardParams closest_bin_rule(const FeatureSpaceVariant& variant);

// Rule vectors first, then sphere samples up to `count` (1024 by default).
ThetaSetPtr study_theta_set(FeatureSpaceVariant variant, std::uint64_t seed, std::size_t count = 1024);

struct UniformPrior {};
struct BiasedPrior {
  std::vector<double> theta_prime;
  double beta_prime = 50.0;
};
// Biased toward closest_bin_rule() of the belief's variant.
struct ClosestBinPrior {
  double beta_prime = 50.0;
};
using PriorKind = std::variant<UniformPrior, BiasedPrior, ClosestBinPrior>;

std::string describe(const PriorKind& prior);

// Uniform, or weights ∝ exp(beta' theta^T theta').
Belief make_prior(const ThetaSetPtr& thetas, const PriorKind& prior);

enum class ThetaSource { Sampled, Study, File };

struct LearnerConfig {
  double beta = 20.0;
  FeatureSpaceVariant variant = FeatureSpaceVariant::shared(3);
  PriorKind prior = UniformPrior{};
  std::size_t n_particles = 1000;
  ThetaSource theta_source = ThetaSource::Sampled;
  std::string theta_path;  // used with ThetaSource::File
  std::uint64_t seed = 0;

  void validate() const;
};

ThetaSetPtr load_theta_csv(const std::string& path, FeatureSpaceVariant variant);
void save_theta_csv(const std::string& path, const ThetaSet& set);

ThetaSetPtr build_theta_set(const LearnerConfig& config);

// The Boltzmann observation model tabulated for every (particle, object, bin) of one environment, plus
// the per-particle accuracy against the environment's ground truth.
class ObservationModel {
public:
  ObservationModel(std::shared_ptr<const Environment> env, ThetaSetPtr thetas, double beta);

  const Environment& env() const { return *env_; }
  const std::shared_ptr<const Environment>& env_ptr() const { return env_; }
  const ThetaSetPtr& theta_set() const { return thetas_; }
  double beta() const { return beta_; }

  std::size_t n_particles() const { return thetas_->size(); }
  std::size_t n_objects() const { return n_objects_; }
  std::size_t n_bins() const { return n_bins_; }

  std::span<const double> log_likelihoods(std::size_t particle, int object_id) const {
    return {log_lik_.data() + (particle * n_objects_ + static_cast<std::size_t>(object_id)) * n_bins_,
            n_bins_};
  }
  double log_likelihood(std::size_t particle, int object_id, int bin_id) const {
    return log_likelihoods(particle, object_id)[static_cast<std::size_t>(bin_id)];
  }

  // a*(s) under the environment's theta_star.
  int correct_bin(int object_id) const { return correct_bin_[static_cast<std::size_t>(object_id)]; }

  // p(a*(s) | s, theta_i)
  double correct_likelihood(std::size_t particle, int object_id) const {
    return correct_lik_[particle * n_objects_ + static_cast<std::size_t>(object_id)];
  }

  // (1/|S|) sum_s p(a*(s) | s, theta_i)
  double accuracy(std::size_t particle) const { return accuracy_[particle]; }

  // Mean of p(a*(s) | s, theta_i) over the given objects only.
  double accuracy_on(std::size_t particle, std::span<const int> object_ids) const;

  bool compatible(const Belief& b) const { return b.theta_set() == thetas_; }

private:
  std::shared_ptr<const Environment> env_;
  ThetaSetPtr thetas_;
  double beta_;
  std::size_t n_objects_;
  std::size_t n_bins_;
  std::vector<double> log_lik_;
  std::vector<int> correct_bin_;
  std::vector<double> correct_lik_;
  std::vector<double> accuracy_;
};
using ObservationModelPtr = std::shared_ptr<const ObservationModel>;

// Same update as the free-function form, read from the precomputed table.
Belief update_belief(const Belief& belief, const ObservationModel& model, int object_id, int bin_id);

} // namespace teachsim
