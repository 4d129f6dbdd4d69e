#include "bwshare/distribution.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <string>

#include "bwshare/numeric.hpp"

namespace bwshare {

namespace {

// antiderivative pieces for exponential partial moments:
// int x r e^{-rx} dx over (a, b]  =  (a + 1/r) e^{-ra} - (b + 1/r) e^{-rb}
double exp_partial_mean(double rate, double a, double b) {
  const auto at = [rate](double x) {
    return std::isinf(x) ? 0.0 : (x + 1.0 / rate) * std::exp(-rate * x);
  };
  return at(a) - at(b);
}

// int x e^{-tx} dx over (a, b]  =  (a/t + 1/t^2) e^{-ta} - (b/t + 1/t^2) e^{-tb}
double exp_weighted_x_integral(double t, double a, double b) {
  const auto at = [t](double x) {
    return std::isinf(x) ? 0.0 : (x / t + 1.0 / (t * t)) * std::exp(-t * x);
  };
  return at(a) - at(b);
}

}  // namespace

Distribution::Distribution(Spec spec) : spec_(std::move(spec)) {}

Distribution Distribution::exponential(double rate) {
  require(rate > 0.0 && std::isfinite(rate), ErrorCode::InvalidInput,
          "exponential rate must be positive finite");
  return Distribution(ExponentialSpec{rate});
}

Distribution Distribution::deterministic(double value) {
  require(value > 0.0 && std::isfinite(value), ErrorCode::InvalidInput,
          "deterministic value must be positive finite");
  return Distribution(DeterministicSpec{value});
}

Distribution Distribution::uniform_interval(double lower, double upper) {
  require(lower > 0.0 && upper > lower && std::isfinite(upper), ErrorCode::InvalidInput,
          "uniform interval requires 0 < lower < upper");
  return Distribution(UniformIntervalSpec{lower, upper});
}

Distribution Distribution::hyper_exponential(std::vector<double> weights,
                                             std::vector<double> rates) {
  require(!weights.empty() && weights.size() == rates.size(), ErrorCode::InvalidInput,
          "hyperexponential weights/rates must be nonempty and equal length");
  double sum = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), ErrorCode::InvalidInput,
            "hyperexponential weights must be nonnegative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::InvalidInput,
          "hyperexponential weights must sum to 1");
  for (double& w : weights) w /= sum;
  for (double r : rates) {
    require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidInput,
            "hyperexponential rates must be positive");
  }
  return Distribution(HyperExponentialSpec{std::move(weights), std::move(rates)});
}

Distribution Distribution::empirical(AtomicMeasure atoms) {
  require(!atoms.empty(), ErrorCode::InvalidInput, "empirical distribution needs atoms");
  const double total = atoms.total_mass();
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::InvalidInput,
          "empirical distribution must have total mass 1");
  require(atoms.atoms().front().location > 0.0, ErrorCode::InvalidInput,
          "empirical distribution may not place mass at 0");
  AtomicMeasure normalized = total == 1.0 ? std::move(atoms) : atoms.scaled(1.0 / total);
  return Distribution(EmpiricalSpec{std::move(normalized)});
}

double Distribution::mean() const {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExponentialSpec>) {
          return 1.0 / s.rate;
        } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
          return s.value;
        } else if constexpr (std::is_same_v<T, UniformIntervalSpec>) {
          return 0.5 * (s.lower + s.upper);
        } else if constexpr (std::is_same_v<T, HyperExponentialSpec>) {
          double m = 0.0;
          for (std::size_t k = 0; k < s.weights.size(); ++k) m += s.weights[k] / s.rates[k];
          return m;
        } else {
          return s.atoms.first_moment();
        }
      },
      spec_);
}

double Distribution::second_moment() const {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExponentialSpec>) {
          return 2.0 / (s.rate * s.rate);
        } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
          return s.value * s.value;
        } else if constexpr (std::is_same_v<T, UniformIntervalSpec>) {
          const double a = s.lower, b = s.upper;
          return (a * a + a * b + b * b) / 3.0;
        } else if constexpr (std::is_same_v<T, HyperExponentialSpec>) {
          double m = 0.0;
          for (std::size_t k = 0; k < s.weights.size(); ++k) {
            m += s.weights[k] * 2.0 / (s.rates[k] * s.rates[k]);
          }
          return m;
        } else {
          double m = 0.0;
          for (const auto& a : s.atoms.atoms()) m += a.mass * a.location * a.location;
          return m;
        }
      },
      spec_);
}

double Distribution::tail(double x) const {
  if (x < 0.0) return 1.0;
  return std::visit(
      [x](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExponentialSpec>) {
          return std::exp(-s.rate * x);
        } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
          return x < s.value ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, UniformIntervalSpec>) {
          if (x < s.lower) return 1.0;
          if (x >= s.upper) return 0.0;
          return (s.upper - x) / (s.upper - s.lower);
        } else if constexpr (std::is_same_v<T, HyperExponentialSpec>) {
          double t = 0.0;
          for (std::size_t k = 0; k < s.weights.size(); ++k) {
            t += s.weights[k] * std::exp(-s.rates[k] * x);
          }
          return t;
        } else {
          double t = 0.0;
          for (const auto& a : s.atoms.atoms()) {
            if (a.location > x) t += a.mass;
          }
          return t;
        }
      },
      spec_);
}

double Distribution::quantile(double u) const {
  require(u >= 0.0 && u < 1.0, ErrorCode::InvalidInput, "quantile argument must lie in [0,1)");
  return std::visit(
      [this, u](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExponentialSpec>) {
          return -std::log1p(-u) / s.rate;
        } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
          return s.value;
        } else if constexpr (std::is_same_v<T, UniformIntervalSpec>) {
          return s.lower + (s.upper - s.lower) * u;
        } else if constexpr (std::is_same_v<T, HyperExponentialSpec>) {
          if (u == 0.0) return 0.0;
          double min_rate = s.rates[0];
          for (double r : s.rates) min_rate = std::min(min_rate, r);
          const double hi = -std::log1p(-u) / min_rate;
          return bisect_increasing([this, u](double x) { return cdf(x) - u; }, 0.0, hi,
                                   1e-13 * std::max(1.0, hi));
        } else {
          double acc = 0.0;
          for (const auto& a : s.atoms.atoms()) {
            acc += a.mass;
            if (acc >= u) return a.location;
          }
          return s.atoms.atoms().back().location;
        }
      },
      spec_);
}

double Distribution::sample(RngStream& rng) const {
  if (std::holds_alternative<DeterministicSpec>(spec_)) {
    return std::get<DeterministicSpec>(spec_).value;
  }
  const double v = quantile(rng.uniform01());
  return v > 0.0 ? v : DBL_MIN;  // samples are strictly positive
}

double Distribution::partial_mean(double a, double b) const {
  if (!(b > a)) return 0.0;
  a = std::max(a, 0.0);
  return std::visit(
      [a, b](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExponentialSpec>) {
          return exp_partial_mean(s.rate, a, b);
        } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
          return (a < s.value && s.value <= b) ? s.value : 0.0;
        } else if constexpr (std::is_same_v<T, UniformIntervalSpec>) {
          const double lo = std::max(a, s.lower);
          const double hi = std::min(b, s.upper);
          if (hi <= lo) return 0.0;
          return 0.5 * (hi * hi - lo * lo) / (s.upper - s.lower);
        } else if constexpr (std::is_same_v<T, HyperExponentialSpec>) {
          double m = 0.0;
          for (std::size_t k = 0; k < s.weights.size(); ++k) {
            m += s.weights[k] * exp_partial_mean(s.rates[k], a, b);
          }
          return m;
        } else {
          double m = 0.0;
          for (const auto& atom : s.atoms.atoms()) {
            if (atom.location > a && atom.location <= b) m += atom.mass * atom.location;
          }
          return m;
        }
      },
      spec_);
}

double Distribution::laplace(double theta) const {
  return std::visit(
      [theta](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExponentialSpec>) {
          return s.rate / (s.rate + theta);
        } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
          return std::exp(-theta * s.value);
        } else if constexpr (std::is_same_v<T, UniformIntervalSpec>) {
          return (std::exp(-theta * s.lower) - std::exp(-theta * s.upper)) /
                 (theta * (s.upper - s.lower));
        } else if constexpr (std::is_same_v<T, HyperExponentialSpec>) {
          double v = 0.0;
          for (std::size_t k = 0; k < s.weights.size(); ++k) {
            v += s.weights[k] * s.rates[k] / (s.rates[k] + theta);
          }
          return v;
        } else {
          double v = 0.0;
          for (const auto& a : s.atoms.atoms()) v += a.mass * std::exp(-theta * a.location);
          return v;
        }
      },
      spec_);
}

double Distribution::laplace_x(double theta) const {
  return std::visit(
      [theta](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExponentialSpec>) {
          const double d = s.rate + theta;
          return s.rate / (d * d);
        } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
          return s.value * std::exp(-theta * s.value);
        } else if constexpr (std::is_same_v<T, UniformIntervalSpec>) {
          return exp_weighted_x_integral(theta, s.lower, s.upper) / (s.upper - s.lower);
        } else if constexpr (std::is_same_v<T, HyperExponentialSpec>) {
          double v = 0.0;
          for (std::size_t k = 0; k < s.weights.size(); ++k) {
            const double d = s.rates[k] + theta;
            v += s.weights[k] * s.rates[k] / (d * d);
          }
          return v;
        } else {
          double v = 0.0;
          for (const auto& a : s.atoms.atoms()) {
            v += a.mass * a.location * std::exp(-theta * a.location);
          }
          return v;
        }
      },
      spec_);
}

AtomicMeasure Distribution::discretize(int n) const {
  require(n >= 1, ErrorCode::InvalidInput, "discretization needs at least one atom");
  if (std::holds_alternative<DeterministicSpec>(spec_)) {
    return AtomicMeasure::dirac(std::get<DeterministicSpec>(spec_).value);
  }
  if (std::holds_alternative<EmpiricalSpec>(spec_)) {
    return std::get<EmpiricalSpec>(spec_).atoms;
  }
  std::vector<AtomicMeasure::Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  const double cell_mass = 1.0 / n;
  double lo = 0.0;
  double consumed = 0.0;
  for (int k = 0; k < n; ++k) {
    const bool last = (k == n - 1);
    const double hi = last ? std::numeric_limits<double>::infinity()
                           : quantile(static_cast<double>(k + 1) / n);
    double pm = last ? mean() - consumed : partial_mean(lo, hi);
    if (!last) consumed += pm;
    double location = pm / cell_mass;
    // clamp against roundoff: the conditional mean lies inside the cell
    location = std::max(location, lo);
    if (!last) location = std::min(location, hi);
    atoms.push_back({location, cell_mass});
    lo = hi;
  }
  return AtomicMeasure(std::move(atoms));
}

ExcessLifetime::ExcessLifetime(Distribution base) : base_(std::move(base)) {
  mu_ = 1.0 / base_.mean();
  if (const auto* emp = std::get_if<EmpiricalSpec>(&base_.spec())) {
    // piecewise-linear CDF between atom locations
    emp_x_.push_back(0.0);
    emp_tail_.push_back(1.0);
    emp_integral_.push_back(0.0);
    double tail = 1.0;
    for (const auto& a : emp->atoms.atoms()) {
      const double span = a.location - emp_x_.back();
      emp_integral_.push_back(emp_integral_.back() + tail * span);
      emp_x_.push_back(a.location);
      tail -= a.mass;
      emp_tail_.push_back(std::max(tail, 0.0));
    }
  }
}

double ExcessLifetime::density(double x) const {
  if (x < 0.0) return 0.0;
  return mu_ * base_.tail(x);
}

double ExcessLifetime::mean() const { return 0.5 * mu_ * base_.second_moment(); }

double ExcessLifetime::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  const auto& spec = base_.spec();
  if (const auto* e = std::get_if<ExponentialSpec>(&spec)) {
    return 1.0 - std::exp(-e->rate * x);  // memoryless fixed point
  }
  if (const auto* d = std::get_if<DeterministicSpec>(&spec)) {
    return std::min(x / d->value, 1.0);  // uniform on [0, value]
  }
  if (const auto* u = std::get_if<UniformIntervalSpec>(&spec)) {
    const double a = u->lower, b = u->upper;
    double integral;
    if (x <= a) {
      integral = x;
    } else if (x < b) {
      integral = a + ((b - a) * (b - a) - (b - x) * (b - x)) / (2.0 * (b - a));
    } else {
      integral = 0.5 * (a + b);
    }
    return mu_ * integral;
  }
  if (const auto* h = std::get_if<HyperExponentialSpec>(&spec)) {
    double integral = 0.0;
    for (std::size_t k = 0; k < h->weights.size(); ++k) {
      integral += h->weights[k] * (1.0 - std::exp(-h->rates[k] * x)) / h->rates[k];
    }
    return std::min(mu_ * integral, 1.0);
  }
  // empirical: piecewise linear between atom locations
  const auto it = std::upper_bound(emp_x_.begin(), emp_x_.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - emp_x_.begin()) - 1;
  if (j + 1 >= emp_x_.size()) return 1.0;
  return std::min(mu_ * (emp_integral_[j] + emp_tail_[j] * (x - emp_x_[j])), 1.0);
}

double ExcessLifetime::quantile(double u) const {
  require(u >= 0.0 && u < 1.0, ErrorCode::InvalidInput, "quantile argument must lie in [0,1)");
  if (u == 0.0) return 0.0;
  const auto& spec = base_.spec();
  if (const auto* e = std::get_if<ExponentialSpec>(&spec)) {
    return -std::log1p(-u) / e->rate;
  }
  if (const auto* d = std::get_if<DeterministicSpec>(&spec)) {
    return u * d->value;
  }
  if (std::holds_alternative<EmpiricalSpec>(spec)) {
    const double target = u / mu_;
    auto it = std::upper_bound(emp_integral_.begin(), emp_integral_.end(), target);
    std::size_t j = static_cast<std::size_t>(it - emp_integral_.begin());
    j = std::min(j, emp_integral_.size() - 1) - 1;
    if (emp_tail_[j] <= 0.0) return emp_x_[j];
    return emp_x_[j] + (target - emp_integral_[j]) / emp_tail_[j];
  }
  // uniform-interval and hyperexponential: invert the smooth CDF
  double hi = std::max(base_.mean(), 1.0);
  while (cdf(hi) < u) hi *= 2.0;
  return bisect_increasing([this, u](double x) { return cdf(x) - u; }, 0.0, hi,
                           1e-13 * std::max(1.0, hi));
}

double ExcessLifetime::sample(RngStream& rng) const {
  const double v = quantile(rng.uniform01());
  return v > 0.0 ? v : DBL_MIN;
}

double ExcessLifetime::partial_mean(double a, double b) const {
  if (!(b > a)) return 0.0;
  a = std::max(a, 0.0);
  const auto& spec = base_.spec();
  if (const auto* e = std::get_if<ExponentialSpec>(&spec)) {
    return exp_partial_mean(e->rate, a, b);
  }
  if (const auto* d = std::get_if<DeterministicSpec>(&spec)) {
    const double hi = std::min(b, d->value);
    if (hi <= a) return 0.0;
    return 0.5 * (hi * hi - a * a) / d->value;
  }
  if (const auto* u = std::get_if<UniformIntervalSpec>(&spec)) {
    const double a0 = u->lower, b0 = u->upper;
    double out = 0.0;
    const double hi1 = std::min(b, a0);
    if (hi1 > a) out += mu_ * 0.5 * (hi1 * hi1 - a * a);  // density mu on [0, a0]
    const double lo2 = std::max(a, a0);
    const double hi2 = std::min(b, b0);
    if (hi2 > lo2) {
      // density mu (b0 - x) / (b0 - a0) on [a0, b0]
      const double c = mu_ / (b0 - a0);
      out += c * (0.5 * b0 * (hi2 * hi2 - lo2 * lo2) - (hi2 * hi2 * hi2 - lo2 * lo2 * lo2) / 3.0);
    }
    return out;
  }
  if (const auto* h = std::get_if<HyperExponentialSpec>(&spec)) {
    double out = 0.0;
    for (std::size_t k = 0; k < h->weights.size(); ++k) {
      out += h->weights[k] * exp_weighted_x_integral(h->rates[k], a, b);
    }
    return mu_ * out;
  }
  // empirical: density mu * tail, piecewise constant
  double out = 0.0;
  for (std::size_t j = 0; j + 1 < emp_x_.size(); ++j) {
    const double lo = std::max(a, emp_x_[j]);
    const double hi = std::isinf(b) ? emp_x_[j + 1] : std::min(b, emp_x_[j + 1]);
    if (hi > lo) out += mu_ * emp_tail_[j] * 0.5 * (hi * hi - lo * lo);
  }
  return out;
}

AtomicMeasure ExcessLifetime::discretize(int n) const {
  require(n >= 1, ErrorCode::InvalidInput, "discretization needs at least one atom");
  std::vector<AtomicMeasure::Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  const double cell_mass = 1.0 / n;
  double lo = 0.0;
  double consumed = 0.0;
  for (int k = 0; k < n; ++k) {
    const bool last = (k == n - 1);
    const double hi = last ? std::numeric_limits<double>::infinity()
                           : quantile(static_cast<double>(k + 1) / n);
    double pm = last ? mean() - consumed : partial_mean(lo, hi);
    if (!last) consumed += pm;
    double location = std::max(pm / cell_mass, lo);
    if (!last) location = std::min(location, hi);
    if (location <= 0.0) location = std::nextafter(0.0, 1.0);  // never an atom at 0
    atoms.push_back({location, cell_mass});
    lo = hi;
  }
  return AtomicMeasure(std::move(atoms));
}

std::vector<double> ExcessLifetime::breakpoints() const {
  const auto& spec = base_.spec();
  if (const auto* d = std::get_if<DeterministicSpec>(&spec)) return {0.0, d->value};
  if (const auto* u = std::get_if<UniformIntervalSpec>(&spec)) return {0.0, u->lower, u->upper};
  if (std::holds_alternative<EmpiricalSpec>(spec)) return emp_x_;
  return {0.0};
}

ExcessLifetime excess_lifetime(const Distribution& theta) { return ExcessLifetime(theta); }

}  // namespace bwshare
