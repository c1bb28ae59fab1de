#include "teachsim/env.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "teachsim/random.hpp"

namespace teachsim {

namespace {

constexpr double kUniqueMargin = 1e-9;
constexpr int kMaxResamples = 10000;

double match(double a, double b) { return std::lround(a) == std::lround(b) ? 1.0 : 0.0; }

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
}

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
};

} // namespace

std::string to_string(FeatureFn f) {
  return f == FeatureFn::RingIndicators ? "ring_indicators" : "neg_abs_diff";
}

std::string to_string(Ring r) {
  switch (r) {
    case Ring::Inner: return "inner";
    case Ring::Outer: return "outer";
    case Ring::None: return "none";
  }
  return "none";
}

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Environment::Environment(std::vector<ObjectState> objects, std::vector<Bin> bins,
                         FeatureFn feature_fn, std::size_t d, RewardParams theta_star)
    : objects_(std::move(objects)),
      bins_(std::move(bins)),
      feature_fn_(feature_fn),
      d_(d),
      theta_star_(std::move(theta_star)) {
  if (bins_.size() < 2) throw std::invalid_argument("environment needs at least 2 bins");
  if (objects_.empty()) throw std::invalid_argument("environment needs at least 1 object");
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].id != static_cast<int>(i))
      throw std::invalid_argument("object ids must equal their index");
    check_finite(objects_[i].descriptor, "object descriptor");
  }
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (bins_[i].id != static_cast<int>(i))
      throw std::invalid_argument("bin ids must equal their index");
    check_finite(bins_[i].descriptor, "bin descriptor");
  }

  if (feature_fn_ == FeatureFn::NegAbsDiff) {
    for (const auto& o : objects_)
      if (o.descriptor.size() != d_) throw std::invalid_argument("object descriptor length != d");
    for (const auto& b : bins_)
      if (b.descriptor.size() != d_) throw std::invalid_argument("bin descriptor length != d");
  } else {
    if (d_ != ring_feature::count) throw std::invalid_argument("ring task has 4 features");
    for (const auto& o : objects_)
      if (o.descriptor.size() != 2 || o.ring == Ring::None)
        throw std::invalid_argument("ring objects need {shape, color} and a ring tag");
    for (const auto& b : bins_)
      if (b.descriptor.size() != 2) throw std::invalid_argument("ring bins need {shape, color}");
  }

  double m = 0.0;
  for (const auto& o : objects_)
    for (const auto& b : bins_) m = std::max(m, distance(o.position, b.position));
  max_distance_ = m > 0.0 ? m : 1.0;

  theta_star_.validate();
  if (theta_star_.variant.kind() == FeatureSpaceVariant::Kind::PerBin
          ? theta_star_.variant.n_bins() != bins_.size() || theta_star_.variant.feature_dim() != d_
          : theta_star_.variant.feature_dim() != d_)
    throw std::invalid_argument("theta_star does not match the environment's feature space");
}

const ObjectState& Environment::object(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= objects_.size())
    throw std::invalid_argument("unknown object id " + std::to_string(id));
  return objects_[static_cast<std::size_t>(id)];
}

const Bin& Environment::bin(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= bins_.size())
    throw std::invalid_argument("unknown bin id " + std::to_string(id));
  return bins_[static_cast<std::size_t>(id)];
}

FeatureVector Environment::features(int object_id, int bin_id) const {
  const ObjectState& o = object(object_id);
  const Bin& b = bin(bin_id);
  FeatureVector phi(d_, 0.0);
  if (feature_fn_ == FeatureFn::NegAbsDiff) {
    for (std::size_t k = 0; k < d_; ++k) phi[k] = -std::abs(o.descriptor[k] - b.descriptor[k]);
    return phi;
  }
  const double proximity = 1.0 - distance(o.position, b.position) / max_distance_;
  const bool same_shape = match(o.descriptor[0], b.descriptor[0]) > 0.0;
  if (o.ring == Ring::Inner) phi[ring_feature::inner_proximity] = proximity;
  if (o.ring == Ring::Outer) {
    phi[ring_feature::outer_shape_match] = same_shape ? 1.0 : 0.0;
    phi[ring_feature::outer_proximity] = proximity;
  }
  phi[ring_feature::color_match] = match(o.descriptor[1], b.descriptor[1]);
  return phi;
}

FeatureVector Environment::object_features(int object_id) const {
  if (feature_fn_ != FeatureFn::NegAbsDiff)
    throw std::invalid_argument("object-only features are defined for descriptor tasks only");
  return object(object_id).descriptor;
}

int Environment::closest_bin(int object_id) const {
  const ObjectState& o = object(object_id);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& b : bins_) {
    const double dd = distance(o.position, b.position);
    if (dd < best_d) {
      best_d = dd;
      best = b.id;
    }
  }
  return best;
}

std::uint64_t Environment::fingerprint() const {
  Fnv f;
  f.add(static_cast<std::uint64_t>(feature_fn_));
  f.add(static_cast<std::uint64_t>(d_));
  for (const auto& o : objects_) {
    f.add(static_cast<std::uint64_t>(o.id));
    f.add(o.position.x);
    f.add(o.position.y);
    f.add(static_cast<std::uint64_t>(o.ring));
    for (double x : o.descriptor) f.add(x);
  }
  for (const auto& b : bins_) {
    f.add(static_cast<std::uint64_t>(b.id));
    f.add(b.position.x);
    f.add(b.position.y);
    for (double x : b.descriptor) f.add(x);
  }
  for (double w : theta_star_.weights) f.add(w);
  return f.h;
}

FeatureVector feature_vector(const Environment& env, const ObjectState& object, const Bin& bin) {
  if (object.id < 0 || static_cast<std::size_t>(object.id) >= env.n_objects() ||
      !(env.object(object.id) == object))
    throw std::invalid_argument("object is not a member of this environment");
  if (bin.id < 0 || static_cast<std::size_t>(bin.id) >= env.n_bins() || !(env.bin(bin.id) == bin))
    throw std::invalid_argument("bin is not a member of this environment");
  return env.features(object.id, bin.id);
}

double reward(const Environment& env, const RewardParams& theta, int object_id, int bin_id) {
  const auto& v = theta.variant;
  if (v.kind() == FeatureSpaceVariant::Kind::PerBin) {
    if (v.n_bins() != env.n_bins() || v.feature_dim() != env.feature_dim())
      throw std::invalid_argument("per-bin weights do not match the environment");
    const FeatureVector psi = env.object_features(object_id);
    env.bin(bin_id);
    const std::size_t off = static_cast<std::size_t>(bin_id) * v.feature_dim();
    double r = 0.0;
    for (std::size_t k = 0; k < psi.size(); ++k) r += theta.weights[off + k] * psi[k];
    return r;
  }
  if (v.feature_dim() != env.feature_dim())
    throw std::invalid_argument("reward weights do not match the environment's feature dimension");
  return dot(theta.weights, env.features(object_id, bin_id));
}

std::vector<double> bin_rewards(const Environment& env, const RewardParams& theta, int object_id) {
  std::vector<double> r(env.n_bins());
  for (std::size_t a = 0; a < r.size(); ++a) r[a] = reward(env, theta, object_id, static_cast<int>(a));
  return r;
}

int optimal_action(const Environment& env, const RewardParams& theta, int object_id) {
  const auto r = bin_rewards(env, theta, object_id);
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

int optimal_action(const Environment& env, const RewardParams& theta, const ObjectState& object) {
  return optimal_action(env, theta, object.id);
}

double optimal_margin(const Environment& env, const RewardParams& theta, int object_id) {
  auto r = bin_rewards(env, theta, object_id);
  std::sort(r.begin(), r.end(), std::greater<>());
  return r[0] - r[1];
}

Environment generate_random_task(std::size_t n_bins, std::size_t n_objects, std::size_t d,
                                 std::uint64_t seed) {
  if (n_bins < 2 || n_objects < 1 || d < 1)
    throw std::invalid_argument("random task needs n_bins >= 2, n_objects >= 1, d >= 1");
  Rng rng(derive_seed(seed, {0x7461736bULL}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = unit(rng);
    return v;
  };

  const auto variant = FeatureSpaceVariant::shared(d);
  RewardParams theta_star{sample_unit_sphere(rng, d), variant};

  std::vector<Bin> bins;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(b) / static_cast<double>(n_bins);
    bins.push_back({static_cast<int>(b), {std::cos(angle), std::sin(angle)}, draw(d)});
  }

  // Bins are fixed first so each object can be checked for a unique optimum
  // and redrawn on its own.
  std::vector<ObjectState> objects;
  std::vector<ObjectState> probe{ObjectState{0, {}, std::vector<double>(d, 0.5), Ring::None}};
  for (std::size_t o = 0; o < n_objects; ++o) {
    ObjectState obj;
    for (int attempt = 0;; ++attempt) {
      if (attempt > kMaxResamples) throw std::runtime_error("could not draw a non-degenerate object");
      obj = ObjectState{0, {unit(rng) * 2.0 - 1.0, unit(rng) * 2.0 - 1.0}, draw(d), Ring::None};
      probe[0] = obj;
      Environment single(probe, bins, FeatureFn::NegAbsDiff, d, theta_star);
      if (optimal_margin(single, theta_star, 0) > kUniqueMargin) break;
    }
    obj.id = static_cast<int>(o);
    objects.push_back(std::move(obj));
  }
  return Environment(std::move(objects), std::move(bins), FeatureFn::NegAbsDiff, d,
                     std::move(theta_star));
}

RewardParams ring_theta_star() {
  std::vector<double> w(ring_feature::count, 0.0);
  w[ring_feature::inner_proximity] = 1.0 / std::numbers::sqrt2;
  w[ring_feature::outer_shape_match] = 1.0 / std::numbers::sqrt2;
  return RewardParams{std::move(w), FeatureSpaceVariant::shared(ring_feature::count)};
}

Environment generate_ring_task(std::uint64_t seed, const RingLayout& layout) {
  if (layout.inner_per_bin < 0 || layout.outer_per_bin < 0 ||
      layout.inner_per_bin + layout.outer_per_bin == 0)
    throw std::invalid_argument("ring layout needs at least one object");
  if (!(layout.inner_radius > 0.0 && layout.inner_radius < layout.outer_radius &&
        2.0 * layout.outer_radius < layout.bin_radius * std::sqrt(3.0)))
    throw std::invalid_argument("ring radii must be ordered and rings must not overlap");

  Rng rng(derive_seed(seed, {0x72696e67ULL}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> color_draw(0, 2);

  constexpr int kBins = 3;
  std::vector<int> bin_colors{0, 1, 2};
  std::shuffle(bin_colors.begin(), bin_colors.end(), rng);

  std::vector<Bin> bins;
  for (int b = 0; b < kBins; ++b) {
    const double angle = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * b / kBins;
    bins.push_back({b,
                    {layout.bin_radius * std::cos(angle), layout.bin_radius * std::sin(angle)},
                    {static_cast<double>(b), static_cast<double>(bin_colors[b])}});
  }

  std::vector<ObjectState> objects;
  auto place_ring = [&](const Bin& bin, Ring ring, int count, double radius) {
    const double phase = unit(rng) * 2.0 * std::numbers::pi;
    for (int j = 0; j < count; ++j) {
      const double angle = phase + 2.0 * std::numbers::pi * j / count;
      // Outer shapes cycle through all three so the shape rule disagrees with
      // proximity for two thirds of the outer ring.
      const int shape = ring == Ring::Outer ? (bin.id + j) % kBins : color_draw(rng);
      const int color = color_draw(rng);
      objects.push_back({static_cast<int>(objects.size()),
                         {bin.position.x + radius * std::cos(angle),
                          bin.position.y + radius * std::sin(angle)},
                         {static_cast<double>(shape), static_cast<double>(color)},
                         ring});
    }
  };
  for (const auto& b : bins) place_ring(b, Ring::Inner, layout.inner_per_bin, layout.inner_radius);
  for (const auto& b : bins) place_ring(b, Ring::Outer, layout.outer_per_bin, layout.outer_radius);

  return Environment(std::move(objects), std::move(bins), FeatureFn::RingIndicators,
                     ring_feature::count, ring_theta_star());
}

} // namespace teachsim
