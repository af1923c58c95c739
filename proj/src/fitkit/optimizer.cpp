#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mcrl/fitkit.hpp"

namespace mcrl {

namespace {

constexpr double kMinBandwidth = 0.02;
constexpr double kMaxBandwidth = 0.5;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Parzen mixture in the unit cube: one truncated Gaussian per point plus a
// uniform prior component.
struct Parzen {
  std::vector<std::vector<double>> centers;
  std::vector<double> bandwidth;  // per dimension

  Parzen(std::vector<std::vector<double>> pts, std::size_t dim) : centers(std::move(pts)), bandwidth(dim) {
    const double n = static_cast<double>(centers.size());
    for (std::size_t d = 0; d < dim; ++d) {
      double mean = 0.0;
      for (const auto& c : centers) mean += c[d];
      mean /= n;
      double var = 0.0;
      for (const auto& c : centers) var += (c[d] - mean) * (c[d] - mean);
      const double sd = n > 1 ? std::sqrt(var / (n - 1)) : kMaxBandwidth;
      bandwidth[d] = std::clamp(1.06 * sd * std::pow(n, -0.2), kMinBandwidth, kMaxBandwidth);
    }
  }

  double prior_weight() const { return 1.0 / (static_cast<double>(centers.size()) + 1.0); }

  double log_density(const std::vector<double>& u) const {
    const double w = (1.0 - prior_weight()) / static_cast<double>(centers.size());
    double total = prior_weight();  // uniform density is 1
    for (const auto& c : centers) {
      double log_k = 0.0;
      for (std::size_t d = 0; d < u.size(); ++d) {
        const double h = bandwidth[d];
        const double z = (u[d] - c[d]) / h;
        const double mass = normal_cdf((1.0 - c[d]) / h) - normal_cdf(-c[d] / h);
        log_k += -0.5 * z * z - std::log(h * std::sqrt(2.0 * M_PI) * mass);
      }
      total += w * std::exp(log_k);
    }
    return std::log(total);
  }

  std::vector<double> sample(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> u(bandwidth.size());
    if (unit(rng) < prior_weight()) {
      for (double& x : u) x = unit(rng);
      return u;
    }
    std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
    const auto& c = centers[pick(rng)];
    for (std::size_t d = 0; d < u.size(); ++d) {
      std::normal_distribution<double> g(c[d], bandwidth[d]);
      double x = g(rng);
      for (int tries = 0; (x < 0.0 || x > 1.0) && tries < 32; ++tries) x = g(rng);
      u[d] = std::clamp(x, 0.0, 1.0);
    }
    return u;
  }
};

}  // namespace

TpeSearch::TpeSearch(std::vector<ParamSpec> space, SearchOptions options)
    : space_(std::move(space)), options_(options), rng_(derive_seed(options.seed, stream::optimizer)) {
  if (options_.n_startup < 0)
    options_.n_startup = std::min(options_.budget, 10 + static_cast<int>(space_.size()));
  if (options_.n_candidates < 1) throw std::invalid_argument("n_candidates must be positive");
}

std::vector<double> TpeSearch::to_unit(const std::vector<double>& x) const {
  std::vector<double> u(space_.size());
  for (std::size_t d = 0; d < space_.size(); ++d) {
    const auto& s = space_[d];
    if (s.hi == s.lo) {
      u[d] = 0.5;
      continue;
    }
    switch (s.scale) {
      case ParamScale::linear:
        u[d] = (x[d] - s.lo) / (s.hi - s.lo);
        break;
      case ParamScale::log:
        u[d] = std::log(x[d] / s.lo) / std::log(s.hi / s.lo);
        break;
      case ParamScale::integer:
        u[d] = (x[d] - s.lo + 0.5) / (s.hi - s.lo + 1.0);
        break;
    }
    u[d] = std::clamp(u[d], 0.0, 1.0);
  }
  return u;
}

std::vector<double> TpeSearch::from_unit(const std::vector<double>& u) const {
  std::vector<double> x(space_.size());
  for (std::size_t d = 0; d < space_.size(); ++d) {
    const auto& s = space_[d];
    switch (s.scale) {
      case ParamScale::linear:
        x[d] = s.lo + u[d] * (s.hi - s.lo);
        break;
      case ParamScale::log:
        x[d] = s.lo * std::exp(u[d] * std::log(s.hi / s.lo));
        break;
      case ParamScale::integer:
        x[d] = std::floor(s.lo + u[d] * (s.hi - s.lo + 1.0));
        break;
    }
    x[d] = std::clamp(x[d], s.lo, s.hi);
  }
  return x;
}

std::vector<double> TpeSearch::ask() {
  if (static_cast<int>(observed_.size()) < options_.n_startup || observed_.size() < 2) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> u(space_.size());
    for (double& v : u) v = unit(rng_);
    pending_local_ = false;
    return from_unit(u);
  }
  // Alternate density-ratio proposals with perturbations of the incumbent.
  pending_local_ = options_.local_search && (observed_.size() - static_cast<std::size_t>(options_.n_startup)) % 2 == 1;
  return from_unit(pending_local_ ? propose_local() : propose_modelled());
}

std::vector<double> TpeSearch::propose_local() {
  const auto best = static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
  incumbent_value_ = values_[best];
  std::vector<double> u = observed_[best];
  // Alternate isotropic moves with single-coordinate moves (round robin),
  // which can still travel along flat directions when another is sharp.
  const std::size_t dim = u.size();
  if (coord_step_.size() != dim) coord_step_.assign(dim, 0.1);
  local_dim_ = (n_local_++ % 2 == 0) ? -1 : static_cast<int>((n_local_ / 2) % dim);
  if (local_dim_ < 0) {
    std::normal_distribution<double> g(0.0, step_);
    for (double& x : u) x = std::clamp(x + g(rng_), 0.0, 1.0);
  } else {
    const auto d = static_cast<std::size_t>(local_dim_);
    std::normal_distribution<double> g(0.0, coord_step_[d]);
    u[d] = std::clamp(u[d] + g(rng_), 0.0, 1.0);
  }
  return u;
}

std::vector<double> TpeSearch::propose_modelled() {
  std::vector<std::size_t> order(values_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Stable so ties keep evaluation order.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values_[a] > values_[b]; });
  const auto n = order.size();
  // Good set grows with sqrt(n) as in hyperopt, so late proposals concentrate.
  const std::size_t n_good = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(options_.good_fraction * std::sqrt(static_cast<double>(n)))), 1, n - 1);
  std::vector<std::vector<double>> good, bad;
  for (std::size_t i = 0; i < n; ++i) (i < n_good ? good : bad).push_back(observed_[order[i]]);
  const Parzen l(std::move(good), space_.size());
  const Parzen g(std::move(bad), space_.size());

  std::vector<double> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < options_.n_candidates; ++k) {
    auto u = l.sample(rng_);
    const double score = l.log_density(u) - g.log_density(u);
    if (score > best_score) {
      best_score = score;
      best = std::move(u);
    }
  }
  return best;
}

void TpeSearch::tell(const std::vector<double>& x, double value) {
  if (x.size() != space_.size()) throw std::invalid_argument("point dimension mismatch");
  observed_.push_back(to_unit(x));
  // Non-finite values rank last.
  values_.push_back(std::isfinite(value) ? value : -std::numeric_limits<double>::max());
  if (pending_local_) {
    // 1/5 success rule on the perturbation scale.
    double& scale = local_dim_ < 0 ? step_ : coord_step_[static_cast<std::size_t>(local_dim_)];
    scale = std::clamp(values_.back() > incumbent_value_ ? scale * 1.5 : scale * 0.9, 1e-4, 0.5);
    pending_local_ = false;
  }
}

SearchResult maximize(const std::vector<ParamSpec>& space, const std::function<double(const std::vector<double>&)>& f,
                      SearchOptions options) {
  if (options.budget < 1) throw std::invalid_argument("budget must be at least 1");
  TpeSearch search(space, options);
  SearchResult r;
  r.best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < options.budget; ++i) {
    const auto x = search.ask();
    const double v = f(x);
    search.tell(x, v);
    r.values.push_back(v);
    if (v > r.best_value || r.best_x.empty()) {
      r.best_value = v;
      r.best_x = x;
    }
    r.best_so_far.push_back(r.best_value);
  }
  return r;
}

}  // namespace mcrl
