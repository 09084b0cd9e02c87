// core.hpp - shared domain types for the EIT hybrid beam-splitter simulator.
//
// Unit conventions (used everywhere below the CLI):
//   time      in units of 1/gamma31
//   length    in units of the medium length L0 (so z in [0, 1] by default)
//   rates     (Rabi frequencies, detuning, decay) in units of gamma31
// Conversion to lab units happens only when a config file is parsed.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eitbs {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Integrator failure (norm growth, non-finite values).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A quantity is undefined for the given input (zero norm, pole, zero amplitude).
class DomainError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Grid

struct Grid {
  double length = 1.0;
  std::size_t n = 0;
  double dz = 0.0;

  double z(std::size_t j) const { return static_cast<double>(j) * dz; }

  std::vector<double> points() const {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = z(j);
    out.back() = length;
    return out;
  }

  bool operator==(const Grid&) const = default;
};

inline constexpr std::size_t kMinGridPoints = 16;

/// Uniform grid on [0, length] including both endpoints.
inline Grid make_grid(double length, std::size_t n_points) {
  if (!(length > 0.0) || !std::isfinite(length))
    throw ConfigError("make_grid: length must be positive, got " + std::to_string(length));
  if (n_points < kMinGridPoints)
    throw ConfigError("make_grid: under-resolved grid, n_points = " + std::to_string(n_points) +
                      " (need at least " + std::to_string(kMinGridPoints) + ")");
  return Grid{length, n_points, length / static_cast<double>(n_points - 1)};
}

// ---------------------------------------------------------------------------
// Medium

/// Atomic-ensemble parameters in normalized units.
///
/// The optical depth and the collective coupling g*sqrt(N) are tied together by
/// od = 2 coupling^2 L / (gamma31 c_eff); `from_od` and `from_coupling` each derive
/// one from the other so the pair is always consistent.
struct MediumParams {
  double od = 0.0;
  double gamma31 = 1.0;
  double gamma12 = 0.0;
  double delta = 0.0;
  double length = 1.0;
  double c_eff = 5.0;     // light speed in the co-moving frame, units of L0*gamma31
  double coupling = 0.0;  // g*sqrt(N)

  static MediumParams from_od(double od, double delta = 0.0, double gamma12 = 0.0,
                              double c_eff = 5.0, double length = 1.0, double gamma31 = 1.0) {
    MediumParams m;
    m.od = od;
    m.delta = delta;
    m.gamma12 = gamma12;
    m.c_eff = c_eff;
    m.length = length;
    m.gamma31 = gamma31;
    m.validate_rates();
    if (!(od >= 0.0)) throw ConfigError("MediumParams: od must be >= 0");
    m.coupling = std::sqrt(od * gamma31 * c_eff / (2.0 * length));
    return m;
  }

  static MediumParams from_coupling(double coupling, double delta = 0.0, double gamma12 = 0.0,
                                    double c_eff = 5.0, double length = 1.0,
                                    double gamma31 = 1.0) {
    MediumParams m;
    m.coupling = coupling;
    m.delta = delta;
    m.gamma12 = gamma12;
    m.c_eff = c_eff;
    m.length = length;
    m.gamma31 = gamma31;
    m.validate_rates();
    if (!(coupling >= 0.0)) throw ConfigError("MediumParams: coupling must be >= 0");
    m.od = 2.0 * coupling * coupling * length / (gamma31 * c_eff);
    return m;
  }

  /// EIT group velocity for a constant control field of full Rabi frequency |omega|.
  double group_velocity(double omega) const {
    const double half = 0.5 * omega;
    return c_eff * half * half / (half * half + coupling * coupling);
  }

  void validate_rates() const {
    if (!(gamma31 > 0.0)) throw ConfigError("MediumParams: gamma31 must be > 0");
    if (!(gamma12 >= 0.0)) throw ConfigError("MediumParams: gamma12 must be >= 0");
    if (!(length > 0.0)) throw ConfigError("MediumParams: length must be > 0");
    if (!(c_eff > 0.0)) throw ConfigError("MediumParams: c_eff must be > 0");
    if (!std::isfinite(delta)) throw ConfigError("MediumParams: delta must be finite");
  }

  void validate() const {
    validate_rates();
    if (!(od >= 0.0)) throw ConfigError("MediumParams: od must be >= 0");
    if (!(coupling >= 0.0)) throw ConfigError("MediumParams: coupling must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Control timeline

enum class SegmentLabel { storage, beamsplit, readout, off };

inline std::string to_string(SegmentLabel l) {
  switch (l) {
    case SegmentLabel::storage: return "storage";
    case SegmentLabel::beamsplit: return "beamsplit";
    case SegmentLabel::readout: return "readout";
    case SegmentLabel::off: return "off";
  }
  return "?";
}

/// One control pulse. Inside [t_start, t_end] the Rabi frequency is `rabi`
/// times a sin^2 edge of length ramp_in (rising) and ramp_out (falling).
struct ControlSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  cplx rabi{0.0, 0.0};
  double ramp_in = 0.0;
  double ramp_out = 0.0;
  SegmentLabel label = SegmentLabel::off;

  cplx value(double t) const {
    if (t < t_start || t > t_end) return {0.0, 0.0};
    double s = 1.0;
    if (ramp_in > 0.0 && t < t_start + ramp_in) {
      const double x = std::sin(0.5 * kPi * (t - t_start) / ramp_in);
      s = std::min(s, x * x);
    }
    if (ramp_out > 0.0 && t > t_end - ramp_out) {
      const double x = std::sin(0.5 * kPi * (t_end - t) / ramp_out);
      s = std::min(s, x * x);
    }
    return rabi * s;
  }
};

class ControlTimeline {
 public:
  ControlTimeline() = default;
  explicit ControlTimeline(std::vector<ControlSegment> segments) : segments_(std::move(segments)) {
    validate();
  }

  const std::vector<ControlSegment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }

  cplx rabi_at(double t) const {
    for (const auto& s : segments_) {
      if (t < s.t_start) break;
      if (t <= s.t_end) return s.value(t);
    }
    return {0.0, 0.0};
  }

  double end_time() const { return segments_.empty() ? 0.0 : segments_.back().t_end; }

  std::optional<ControlSegment> last_of(SegmentLabel label) const {
    std::optional<ControlSegment> out;
    for (const auto& s : segments_)
      if (s.label == label) out = s;
    return out;
  }

  std::optional<ControlSegment> first_of(SegmentLabel label) const {
    for (const auto& s : segments_)
      if (s.label == label) return s;
    return std::nullopt;
  }

  bool has(SegmentLabel label) const { return first_of(label).has_value(); }

 private:
  void validate() const {
    double prev_end = -std::numeric_limits<double>::infinity();
    for (const auto& s : segments_) {
      if (!(s.t_end > s.t_start))
        throw ConfigError("ControlTimeline: segment with t_end <= t_start");
      if (s.t_start < prev_end)
        throw ConfigError("ControlTimeline: segments overlap or are not time-ordered");
      if (s.ramp_in < 0.0 || s.ramp_out < 0.0 || s.ramp_in + s.ramp_out > s.t_end - s.t_start + 1e-12)
        throw ConfigError("ControlTimeline: ramps do not fit inside their segment");
      prev_end = s.t_end;
    }
  }

  std::vector<ControlSegment> segments_;
};

// ---------------------------------------------------------------------------
// Input pulse

enum class PulseShape { gaussian, sampled };

/// Temporal single-photon envelope. Normalized so that the photon flux
/// c_eff*|E(0,t)|^2 integrates to amplitude_norm.
struct PulseEnvelope {
  PulseShape shape = PulseShape::gaussian;
  double fwhm = 1.0;  // intensity FWHM
  double t_center = 0.0;
  double amplitude_norm = 1.0;
  // sampled shape: f(t_center + k*sample_dt - (samples.size()-1)*sample_dt/2), any scale
  CVec samples;
  double sample_dt = 0.0;

  void validate() const {
    if (!(fwhm > 0.0)) throw ConfigError("PulseEnvelope: fwhm must be > 0");
    if (!(amplitude_norm >= 0.0 && amplitude_norm <= 1.0))
      throw ConfigError("PulseEnvelope: amplitude_norm must lie in [0, 1]");
    if (shape == PulseShape::sampled && (samples.size() < 2 || !(sample_dt > 0.0)))
      throw ConfigError("PulseEnvelope: sampled shape needs >= 2 samples and sample_dt > 0");
  }

  /// Gaussian 1/e intensity half-width.
  double tau_p() const { return fwhm / (2.0 * std::sqrt(std::log(2.0))); }

  /// Unit-norm envelope f(t), with integral |f|^2 dt = 1.
  cplx unit_envelope(double t) const {
    if (shape == PulseShape::gaussian) {
      const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
      const double x = t - t_center;
      return {std::pow(kTwoPi * sigma * sigma, -0.25) * std::exp(-x * x / (4.0 * sigma * sigma)),
              0.0};
    }
    double norm2 = 0.0;
    for (const auto& s : samples) norm2 += std::norm(s) * sample_dt;
    const double half_span = 0.5 * sample_dt * static_cast<double>(samples.size() - 1);
    const double u = (t - t_center + half_span) / sample_dt;
    if (u < 0.0 || u > static_cast<double>(samples.size() - 1)) return {0.0, 0.0};
    const auto k = std::min(static_cast<std::size_t>(u), samples.size() - 2);
    const double w = u - static_cast<double>(k);
    return ((1.0 - w) * samples[k] + w * samples[k + 1]) / std::sqrt(norm2);
  }

  /// Boundary value E(0, t) for a medium with light speed c_eff.
  cplx boundary_field(double t, double c_eff) const {
    return std::sqrt(amplitude_norm / c_eff) * unit_envelope(t);
  }
};

// ---------------------------------------------------------------------------
// Field state

/// Single-excitation amplitudes on the spatial grid at one instant.
///
/// sigma12 and sigma13 hold collective amplitudes (sqrt(N) times the atomic
/// coherence), normalized so that sum |x_j|^2 dz is a probability.
struct FieldState {
  Grid grid;
  CVec e_field;
  CVec sigma12;
  CVec sigma13;
  double t_now = 0.0;
  double loss_accum = 0.0;
  double emitted_norm = 0.0;
  double input_norm = 0.0;

  static FieldState vacuum(const Grid& g, double t0 = 0.0) {
    FieldState s;
    s.grid = g;
    s.e_field.assign(g.n, cplx{});
    s.sigma12.assign(g.n, cplx{});
    s.sigma13.assign(g.n, cplx{});
    s.t_now = t0;
    return s;
  }
};

inline double weighted_norm(std::span<const cplx> v, double weight) {
  double acc = 0.0;
  for (const auto& x : v) acc += std::norm(x);
  return acc * weight;
}

struct NormBreakdown {
  double photon = 0.0;   // light inside the medium
  double magnon = 0.0;   // spin coherence
  double excited = 0.0;  // optical coherence, decays into loss
  double loss = 0.0;
  double emitted = 0.0;

  double total() const { return photon + magnon + excited + loss + emitted; }
};

inline NormBreakdown norm_decomposition(const FieldState& state, const MediumParams& /*medium*/) {
  const double dz = state.grid.dz;
  NormBreakdown b;
  b.photon = weighted_norm(state.e_field, dz);
  b.magnon = weighted_norm(state.sigma12, dz);
  b.excited = weighted_norm(state.sigma13, dz);
  b.loss = state.loss_accum;
  b.emitted = state.emitted_norm;
  return b;
}

/// Relative bookkeeping residual |accounted - input| / input.
inline double bookkeeping_residual(const FieldState& state) {
  const NormBreakdown b = norm_decomposition(state, MediumParams{});
  if (state.input_norm <= 0.0) return std::abs(b.total());
  return std::abs(b.total() - state.input_norm) / state.input_norm;
}

// ---------------------------------------------------------------------------
// Splitter and correlation results

/// Effective 2x2 hybrid beam splitter,
///   [M_out]   [t1 r2] [M_in]
///   [A_out] = [r1 t2] [A_in],
/// with M the magnon port and A the photon port.
struct SplitterMatrix {
  cplx t1{1.0, 0.0};
  cplx r1{0.0, 0.0};
  cplx t2{1.0, 0.0};
  cplx r2{0.0, 0.0};

  double magnon_port_sum() const { return std::norm(t1) + std::norm(r1); }
  double photon_port_sum() const { return std::norm(t2) + std::norm(r2); }
};

/// Output occupation pattern over signal modes -> probability.
using Distribution = std::map<std::vector<int>, double>;

struct CorrelationResult {
  double g2 = 1.0;
  std::optional<double> g3;
  Distribution output_probs;
  double overlap = 0.0;
  double phi_rt = 0.0;
};

/// Wraps an angle into [0, 2 pi).
inline double wrap_two_pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

/// Smallest distance between two angles on the circle.
inline double angle_distance(double a, double b) {
  const double d = wrap_two_pi(a - b);
  return std::min(d, kTwoPi - d);
}

}  // namespace eitbs
