#include "teachsim/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "teachsim/random.hpp"

namespace teachsim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> normalized_log(std::vector<double> logw, const std::string& context) {
  const double z = log_sum_exp(logw);
  if (!std::isfinite(z)) throw DegeneratePosterior("posterior mass vanished: " + context);
  for (auto& x : logw) x -= z;
  return logw;
}

std::vector<double> checked_mass(std::vector<double> logw, const std::string& context) {
  if (!std::isfinite(log_sum_exp(logw))) throw DegeneratePosterior("posterior mass vanished: " + context);
  return logw;
}

std::vector<double> project(std::vector<double> w, const FeatureSpaceVariant& variant) {
  if (variant.kind() == FeatureSpaceVariant::Kind::MissingFeature) w[variant.dropped_index()] = 0.0;
  return w;
}

} // namespace

ThetaSetPtr make_theta_set(FeatureSpaceVariant variant, std::vector<RewardParams> thetas) {
  if (thetas.empty()) throw std::invalid_argument("theta set must not be empty");
  for (const auto& t : thetas) {
    t.validate();
    if (!(t.variant == variant)) throw std::invalid_argument("theta set mixes feature spaces");
  }
  return std::make_shared<const ThetaSet>(ThetaSet{variant, std::move(thetas)});
}

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

Belief::Belief(ThetaSetPtr thetas, std::vector<double> log_weights)
    : thetas_(std::move(thetas)), log_weights_(std::move(log_weights)) {}

Belief Belief::uniform(ThetaSetPtr thetas) {
  if (!thetas || thetas->size() == 0) throw std::invalid_argument("belief needs >= 1 particle");
  const double lw = -std::log(static_cast<double>(thetas->size()));
  const std::size_t n = thetas->size();
  return Belief(std::move(thetas), std::vector<double>(n, lw));
}

Belief Belief::from_weights(ThetaSetPtr thetas, const std::vector<double>& weights) {
  std::vector<double> logw(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("belief weights must be finite and non-negative");
    logw[i] = weights[i] > 0.0 ? std::log(weights[i]) : kNegInf;
  }
  return from_log_weights(std::move(thetas), std::move(logw));
}

Belief Belief::from_log_weights(ThetaSetPtr thetas, std::vector<double> log_weights) {
  if (!thetas || thetas->size() == 0) throw std::invalid_argument("belief needs >= 1 particle");
  if (log_weights.size() != thetas->size())
    throw std::invalid_argument("belief weight count does not match the theta set");
  for (double x : log_weights)
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("belief log weights must not be NaN or +inf");
  return Belief(std::move(thetas), normalized_log(std::move(log_weights), "initial belief"));
}

double Belief::weight(std::size_t i) const { return std::exp(log_weights_.at(i)); }

std::vector<double> Belief::weights() const {
  std::vector<double> w(log_weights_.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights_[i]);
  return w;
}

std::size_t Belief::map_index() const {
  return static_cast<std::size_t>(std::max_element(log_weights_.begin(), log_weights_.end()) -
                                  log_weights_.begin());
}

std::vector<double> log_action_likelihoods(const Environment& env, int object_id,
                                           const RewardParams& theta, double beta) {
  std::vector<double> q = bin_rewards(env, theta, object_id);
  for (auto& x : q) {
    x *= beta;
    if (!std::isfinite(x)) throw std::logic_error("non-finite action value in observation model");
  }
  const double z = log_sum_exp(q);
  for (auto& x : q) x -= z;
  return q;
}

std::vector<double> action_likelihoods(const Environment& env, int object_id,
                                       const RewardParams& theta, double beta) {
  auto l = log_action_likelihoods(env, object_id, theta, beta);
  for (auto& x : l) x = std::exp(x);
  return l;
}

double action_likelihood(const Environment& env, const ObjectState& object, const Bin& bin,
                         const RewardParams& theta, double beta) {
  feature_vector(env, object, bin);  // membership check
  return std::exp(log_action_likelihoods(env, object.id, theta, beta)[static_cast<std::size_t>(bin.id)]);
}

Belief update_belief(const Belief& belief, const Environment& env, const ObjectState& object,
                     const Bin& bin, double beta) {
  feature_vector(env, object, bin);
  std::vector<double> logw = belief.log_weights();
  for (std::size_t i = 0; i < logw.size(); ++i)
    logw[i] += log_action_likelihoods(env, object.id, belief.theta(i), beta)[static_cast<std::size_t>(bin.id)];
  return Belief::from_log_weights(
      belief.theta_set(),
      checked_mass(std::move(logw), "demonstration object " + std::to_string(object.id) +
                                          " -> bin " + std::to_string(bin.id)));
}

Belief update_belief(const Belief& belief, const ObservationModel& model, int object_id, int bin_id) {
  if (!model.compatible(belief))
    throw std::invalid_argument("belief and observation model use different theta sets");
  model.env().object(object_id);
  model.env().bin(bin_id);
  std::vector<double> logw = belief.log_weights();
  for (std::size_t i = 0; i < logw.size(); ++i) logw[i] += model.log_likelihood(i, object_id, bin_id);
  return Belief::from_log_weights(
      belief.theta_set(),
      checked_mass(std::move(logw), "demonstration object " + std::to_string(object_id) +
                                          " -> bin " + std::to_string(bin_id)));
}

ThetaSetPtr sample_theta_set(FeatureSpaceVariant variant, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("theta set count must be >= 1");
  Rng rng(derive_seed(seed, {0x7468657461ULL}));
  std::vector<RewardParams> out;
  out.reserve(count);
  const bool missing = variant.kind() == FeatureSpaceVariant::Kind::MissingFeature;
  const std::size_t free_dim = variant.weight_dim() - (missing ? 1 : 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> v = sample_unit_sphere(rng, free_dim);
    if (missing) v.insert(v.begin() + static_cast<std::ptrdiff_t>(variant.dropped_index()), 0.0);
    out.push_back(RewardParams{std::move(v), variant});
  }
  return make_theta_set(variant, std::move(out));
}

RewardParams closest_bin_rule(const FeatureSpaceVariant& variant) {
  if (variant.kind() == FeatureSpaceVariant::Kind::PerBin || variant.feature_dim() != ring_feature::count)
    throw std::invalid_argument("rule vectors exist only for the ring-task feature space");
  std::vector<double> w(ring_feature::count, 0.0);
  w[ring_feature::inner_proximity] = 1.0 / std::numbers::sqrt2;
  w[ring_feature::outer_proximity] = 1.0 / std::numbers::sqrt2;
  return RewardParams{project(std::move(w), variant), variant};
}

std::vector<RewardParams> study_rule_vectors(const FeatureSpaceVariant& variant) {
  if (variant.kind() == FeatureSpaceVariant::Kind::PerBin || variant.feature_dim() != ring_feature::count)
    throw std::invalid_argument("rule vectors exist only for the ring-task feature space");
  using namespace ring_feature;
  std::vector<std::vector<double>> rules;
  auto unit = [](std::initializer_list<std::pair<std::size_t, double>> entries) {
    std::vector<double> w(count, 0.0);
    for (auto [k, v] : entries) w[k] = v;
    return w;
  };
  rules.push_back(unit({{inner_proximity, 1.0}, {outer_proximity, 1.0}}));  // closest bin
  rules.push_back(unit({{outer_shape_match, 1.0}}));                        // same shape
  rules.push_back(unit({{color_match, 1.0}}));                              // same color
  rules.push_back(unit({{inner_proximity, 1.0}, {outer_shape_match, 1.0}})); // ground truth
  const std::size_t n = rules.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto neg = rules[i];
    for (auto& x : neg) x = -x;
    rules.push_back(std::move(neg));
  }

  std::vector<RewardParams> out;
  for (auto& r : rules) {
    auto w = project(std::move(r), variant);
    const double len = norm(w);
    if (len < 1e-12) continue;
    for (auto& x : w) x /= len;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const RewardParams& p) { return p.weights == w; });
    if (!dup) out.push_back(RewardParams{std::move(w), variant});
  }
  return out;
}

ThetaSetPtr study_theta_set(FeatureSpaceVariant variant, std::uint64_t seed, std::size_t count) {
  std::vector<RewardParams> out = study_rule_vectors(variant);
  if (count < out.size()) throw std::invalid_argument("study set smaller than its rule vectors");
  const auto samples = sample_theta_set(variant, count - out.size(), seed);
  out.insert(out.end(), samples->thetas.begin(), samples->thetas.end());
  return make_theta_set(variant, std::move(out));
}

std::string describe(const PriorKind& prior) {
  if (std::holds_alternative<UniformPrior>(prior)) return "uniform";
  if (const auto* c = std::get_if<ClosestBinPrior>(&prior))
    return "closest-bin(beta'=" + std::to_string(c->beta_prime) + ")";
  const auto& b = std::get<BiasedPrior>(prior);
  std::ostringstream os;
  os << "biased(beta'=" << b.beta_prime << ")";
  return os.str();
}

Belief make_prior(const ThetaSetPtr& thetas, const PriorKind& prior) {
  if (!thetas || thetas->size() == 0) throw std::invalid_argument("prior needs a non-empty theta set");
  if (std::holds_alternative<UniformPrior>(prior)) return Belief::uniform(thetas);

  std::vector<double> theta_prime;
  double beta_prime = 0.0;
  if (const auto* b = std::get_if<BiasedPrior>(&prior)) {
    theta_prime = b->theta_prime;
    beta_prime = b->beta_prime;
  } else {
    const auto& c = std::get<ClosestBinPrior>(prior);
    theta_prime = closest_bin_rule(thetas->variant).weights;
    beta_prime = c.beta_prime;
  }
  if (!(beta_prime >= 0.0)) throw std::invalid_argument("beta' must be >= 0");
  if (theta_prime.size() != thetas->variant.weight_dim())
    throw std::invalid_argument("bias direction does not match the theta set's weight space");

  std::vector<double> logw(thetas->size());
  for (std::size_t i = 0; i < logw.size(); ++i)
    logw[i] = beta_prime * dot(thetas->thetas[i].weights, theta_prime);
  return Belief::from_log_weights(thetas, std::move(logw));
}

void LearnerConfig::validate() const {
  if (!(beta >= 0.0)) throw std::invalid_argument("learner beta must be >= 0");
  if (n_particles == 0) throw std::invalid_argument("learner needs >= 1 particle");
  if (const auto* b = std::get_if<BiasedPrior>(&prior); b && !(b->beta_prime >= 0.0))
    throw std::invalid_argument("beta' must be >= 0");
  if (const auto* c = std::get_if<ClosestBinPrior>(&prior); c && !(c->beta_prime >= 0.0))
    throw std::invalid_argument("beta' must be >= 0");
  if (theta_source == ThetaSource::File && theta_path.empty())
    throw std::invalid_argument("theta file source needs a path");
}

ThetaSetPtr load_theta_csv(const std::string& path, FeatureSpaceVariant variant) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open theta file " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<RewardParams> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> w;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) w.push_back(std::stod(cell));
    out.push_back(make_reward_params(std::move(w), variant));
  }
  return make_theta_set(variant, std::move(out));
}

void save_theta_csv(const std::string& path, const ThetaSet& set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write theta file " + path);
  const std::size_t n = set.variant.weight_dim();
  for (std::size_t k = 0; k < n; ++k) out << (k ? "," : "") << "w" << k;
  out << "\n" << std::setprecision(17);
  for (const auto& t : set.thetas) {
    for (std::size_t k = 0; k < n; ++k) out << (k ? "," : "") << t.weights[k];
    out << "\n";
  }
}

ThetaSetPtr build_theta_set(const LearnerConfig& config) {
  config.validate();
  switch (config.theta_source) {
    case ThetaSource::Sampled: return sample_theta_set(config.variant, config.n_particles, config.seed);
    case ThetaSource::Study: return study_theta_set(config.variant, config.seed, config.n_particles);
    case ThetaSource::File: return load_theta_csv(config.theta_path, config.variant);
  }
  throw std::logic_error("unknown theta source");
}

ObservationModel::ObservationModel(std::shared_ptr<const Environment> env, ThetaSetPtr thetas, double beta)
    : env_(std::move(env)),
      thetas_(std::move(thetas)),
      beta_(beta),
      n_objects_(env_->n_objects()),
      n_bins_(env_->n_bins()) {
  if (!(beta_ >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  const std::size_t P = thetas_->size();
  log_lik_.resize(P * n_objects_ * n_bins_);
  correct_bin_.resize(n_objects_);
  for (std::size_t o = 0; o < n_objects_; ++o)
    correct_bin_[o] = optimal_action(*env_, env_->theta_star(), static_cast<int>(o));

  accuracy_.assign(P, 0.0);
  correct_lik_.assign(P * n_objects_, 0.0);
  for (std::size_t i = 0; i < P; ++i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < n_objects_; ++o) {
      const auto l = log_action_likelihoods(*env_, static_cast<int>(o), thetas_->thetas[i], beta_);
      std::copy(l.begin(), l.end(), log_lik_.begin() + static_cast<std::ptrdiff_t>((i * n_objects_ + o) * n_bins_));
      const double p = std::exp(l[static_cast<std::size_t>(correct_bin_[o])]);
      correct_lik_[i * n_objects_ + o] = p;
      acc += p;
    }
    accuracy_[i] = acc / static_cast<double>(n_objects_);
  }
}

double ObservationModel::accuracy_on(std::size_t particle, std::span<const int> object_ids) const {
  if (object_ids.empty()) throw std::invalid_argument("accuracy over an empty object subset");
  double acc = 0.0;
  for (int o : object_ids) acc += correct_likelihood(particle, o);
  return acc / static_cast<double>(object_ids.size());
}

} // namespace teachsim
