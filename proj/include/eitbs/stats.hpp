// stats.hpp - closed-form two- and three-particle correlations, classical
// bounds, and overlap-ratio envelopes I(delta_tau).

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eitbs/core.hpp"

namespace eitbs {

enum class EnvelopeKind { gaussian, from_solver };

inline std::string to_string(EnvelopeKind k) { return k == EnvelopeKind::gaussian ? "gaussian" : "from_solver"; }

/// I(delta_tau) = i0 exp(-delta_tau^2 / width^2) (gaussian), or linear
/// interpolation of a sampled table, held constant beyond its ends.
class OverlapEnvelope {
 public:
  /// Gaussian pulses of intensity FWHM `fwhm`: their overlap ratio at lag
  /// delta_tau is exp(-2 ln2 delta_tau^2 / fwhm^2).
  static OverlapEnvelope gaussian(double fwhm, double i0 = 1.0) {
    if (!(fwhm > 0.0)) throw ConfigError("OverlapEnvelope: fwhm must be > 0");
    return gaussian_width(fwhm / std::sqrt(2.0 * std::log(2.0)), i0);
  }

  static OverlapEnvelope gaussian_width(double width, double i0) {
    if (!(width > 0.0)) throw ConfigError("OverlapEnvelope: width must be > 0");
    if (!(i0 >= 0.0 && i0 <= 1.0)) throw ConfigError("OverlapEnvelope: I(0) must lie in [0, 1]");
    OverlapEnvelope e;
    e.kind_ = EnvelopeKind::gaussian;
    e.width_ = width;
    e.i0_ = i0;
    return e;
  }

  /// `lags` strictly ascending; values in [0, 1].
  static OverlapEnvelope from_solver(std::vector<double> lags, std::vector<double> values) {
    if (lags.empty() || lags.size() != values.size())
      throw ConfigError("OverlapEnvelope: table needs matching, non-empty lag and value columns");
    for (std::size_t j = 1; j < lags.size(); ++j)
      if (!(lags[j] > lags[j - 1])) throw ConfigError("OverlapEnvelope: lags must be strictly ascending");
    for (double v : values)
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("OverlapEnvelope: overlap ratios must lie in [0, 1]");
    OverlapEnvelope e;
    e.kind_ = EnvelopeKind::from_solver;
    e.lags_ = std::move(lags);
    e.values_ = std::move(values);
    return e;
  }

  /// An envelope that is identically `value`.
  static OverlapEnvelope constant(double value) { return from_solver({0.0}, {value}); }

  double operator()(double delta_tau) const {
    if (kind_ == EnvelopeKind::gaussian) {
      if (std::isinf(delta_tau)) return 0.0;
      const double x = delta_tau / width_;
      return i0_ * std::exp(-x * x);
    }
    if (std::isinf(delta_tau) && lags_.size() > 1) return delta_tau > 0 ? values_.back() : values_.front();
    if (delta_tau <= lags_.front()) return values_.front();
    if (delta_tau >= lags_.back()) return values_.back();
    const auto hi = std::upper_bound(lags_.begin(), lags_.end(), delta_tau);
    const std::size_t j = static_cast<std::size_t>(hi - lags_.begin());
    const double w = (delta_tau - lags_[j - 1]) / (lags_[j] - lags_[j - 1]);
    return (1.0 - w) * values_[j - 1] + w * values_[j];
  }

  EnvelopeKind kind() const { return kind_; }
  double width() const { return width_; }
  double peak() const { return kind_ == EnvelopeKind::gaussian ? i0_ : (*this)(0.0); }
  const std::vector<double>& lags() const { return lags_; }
  const std::vector<double>& values() const { return values_; }

 private:
  EnvelopeKind kind_ = EnvelopeKind::gaussian;
  double width_ = 1.0;
  double i0_ = 1.0;
  std::vector<double> lags_;
  std::vector<double> values_;
};

/// g2 = 1 + I(delta_tau) cos(phi_rt).
inline double g2(double delta_tau, double phi_rt, const OverlapEnvelope& env) {
  return 1.0 + env(delta_tau) * std::cos(phi_rt);
}

/// g3 = (1 + I(delta_tau1)) (1 + I(delta_tau2)). Stated for phi_rt = 0 only.
inline double g3(double delta_tau1, double delta_tau2, const OverlapEnvelope& env, double phi_rt = 0.0) {
  if (angle_distance(phi_rt, 0.0) > 1e-12)
    throw DomainError("g3: the product form holds only at phi_rt = 0");
  return (1.0 + env(delta_tau1)) * (1.0 + env(delta_tau2));
}

struct ClassicalBounds {
  double g2_low = 0.5;
  double g2_high = 1.5;
  double g3_high = 2.25;
};

inline constexpr ClassicalBounds classical_bounds() { return {}; }

enum class Regime { sub_classical, classical, super_classical };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::sub_classical: return "sub_classical";
    case Regime::classical: return "classical";
    case Regime::super_classical: return "super_classical";
  }
  return "?";
}

inline Regime classify_g2(double g2_value) {
  const auto b = classical_bounds();
  if (g2_value < b.g2_low) return Regime::sub_classical;
  if (g2_value > b.g2_high) return Regime::super_classical;
  return Regime::classical;
}

inline Regime classify_g3(double g3_value) {
  return g3_value > classical_bounds().g3_high ? Regime::super_classical : Regime::classical;
}

struct EnvelopeFit {
  OverlapEnvelope envelope;
  double residual = 0.0;  // root of the summed squared g2 misfit
};

namespace detail {

struct GaussianResidual {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::vector<double> lag;
  std::vector<double> overlap;

  int inputs() const { return 2; }
  int values() const { return static_cast<int>(lag.size()); }

  // x = (I0, log width)
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const double w = std::exp(x(1));
    for (std::size_t k = 0; k < lag.size(); ++k) {
      const double u = lag[k] / w;
      f(static_cast<Eigen::Index>(k)) = x(0) * std::exp(-u * u) - overlap[k];
    }
    return 0;
  }
};

}  // namespace detail

/// Least-squares gaussian I(delta_tau) through samples of g2, inverted with
/// I = (g2 - 1) / cos(phi_rt).
inline EnvelopeFit fit_envelope(std::span<const std::pair<double, double>> samples, double phi_rt) {
  if (samples.size() < 3) throw DomainError("fit_envelope: at least 3 samples required");
  const double c = std::cos(phi_rt);
  if (std::abs(c) <= 0.1) throw DomainError("fit_envelope: envelope unobservable, |cos(phi_rt)| <= 0.1");

  detail::GaussianResidual fn;
  double peak = 0.0, m2 = 0.0, mass = 0.0, span = 0.0;
  for (const auto& [lag, value] : samples) {
    const double i = (value - 1.0) / c;
    fn.lag.push_back(lag);
    fn.overlap.push_back(i);
    peak = std::max(peak, i);
    if (i > 0.0) {
      m2 += i * lag * lag;
      mass += i;
    }
    span = std::max(span, std::abs(lag));
  }

  auto misfit = [&](const OverlapEnvelope& e) {
    double s = 0.0;
    for (const auto& [lag, value] : samples) {
      const double d = g2(lag, phi_rt, e) - value;
      s += d * d;
    }
    return std::sqrt(s);
  };

  const double fallback_width = span > 0.0 ? span : 1.0;
  if (peak <= 1e-12) {
    const auto e = OverlapEnvelope::gaussian_width(fallback_width, 0.0);
    return {e, misfit(e)};
  }

  // Second moment of a gaussian exp(-x^2/w^2) is w^2 / 2.
  const double w0 = mass > 0.0 && m2 > 0.0 ? std::sqrt(2.0 * m2 / mass) : fallback_width;
  Eigen::VectorXd x(2);
  x << peak, std::log(w0);
  Eigen::NumericalDiff<detail::GaussianResidual> nd(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::GaussianResidual>> lm(nd);
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-12;
  lm.minimize(x);

  const double i0 = std::clamp(x(0), 0.0, 1.0);
  const double w = std::exp(x(1));
  if (!std::isfinite(w) || !(w > 0.0)) throw SolverError("fit_envelope: fit diverged");
  const auto e = OverlapEnvelope::gaussian_width(w, i0);
  return {e, misfit(e)};
}

inline EnvelopeFit fit_envelope(const std::vector<std::pair<double, double>>& samples, double phi_rt) {
  return fit_envelope(std::span<const std::pair<double, double>>(samples), phi_rt);
}

}  // namespace eitbs
