// splitter.hpp - the quantum memory as a 2x2 non-Hermitian beam splitter.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>

#include "eitbs/core.hpp"
#include "eitbs/mbloch.hpp"

namespace eitbs {

// ---------------------------------------------------------------------------
// Analytic non-Hermiticity phase

struct PhiRtParams {
  double omega_c = 0.0;  // control Rabi frequency magnitude
  double tau_p = 1.0;    // input photon temporal length
  double gamma31 = 1.0;
  double delta = 0.0;
  double eta = 0.0;  // optical depth

  void validate() const {
    if (!(tau_p > 0.0)) throw ConfigError("PhiRtParams: tau_p must be > 0");
    if (!(gamma31 > 0.0)) throw ConfigError("PhiRtParams: gamma31 must be > 0");
    if (!(eta >= 0.0)) throw ConfigError("PhiRtParams: eta must be >= 0");
  }
};

/// phi_rt = arg[1 - 1/xi] + arg[eta (xi - 1) / (zeta - eta (1 - xi))], in [0, 2 pi),
/// with xi = exp(-|Omega|^2 tau_p / (4 (gamma31 - i Delta))) and
/// zeta = |Omega|^2 tau_p / (4 gamma31).
inline double phi_rt_analytic(const PhiRtParams& p) {
  p.validate();
  if (p.eta == 0.0) throw DomainError("phi_rt_analytic: degenerate medium (eta = 0)");
  const cplx i{0.0, 1.0};
  const double a = p.omega_c * p.omega_c * p.tau_p / 4.0;
  const double zeta = a / p.gamma31;
  // w = -log(xi)
  const cplx w = a / (p.gamma31 - i * p.delta);
  if (std::abs(w) == 0.0)
    throw DomainError("phi_rt_analytic: xi = 1, the first argument is undefined (Omega_c = 0)");
  const cplx xi = std::exp(-w);
  // arg(1 - e^w) evaluated as arg(e^{-Re w} - e^{i Im w}) so large Re w does not overflow.
  const cplx first = std::exp(-w.real()) - std::exp(i * w.imag());
  const cplx num = p.eta * (xi - 1.0);
  const cplx den = zeta - p.eta * (1.0 - xi);
  const double scale = std::max(std::abs(num), 1e-300);
  if (std::abs(den) < 1e-12 * scale)
    throw DomainError("phi_rt_analytic: singular configuration, zeta = eta (1 - xi)");
  return wrap_two_pi(std::arg(first) + std::arg(num / den));
}

/// One (optical depth, detuning) point with the phase it should produce.
struct PhaseTarget {
  double eta = 0.0;
  double delta = 0.0;
  double phi = 0.0;
};

struct PhaseCalibration {
  double omega_c = 0.0;
  double worst = 0.0;  // largest angle distance over the non-reference targets
};

/// Control Rabi frequency on a grid of spacing `step` in (0, omega_max] for
/// which `reference` is hit within 1e-9 rad and the worst miss over `others`
/// is smallest. The first grid point wins ties.
inline PhaseCalibration calibrate_omega_c(const PhaseTarget& reference, std::span<const PhaseTarget> others,
                                          double tau_p, double omega_max = 60.0, double step = 1e-3) {
  if (!(omega_max > 0.0) || !(step > 0.0)) throw ConfigError("calibrate_omega_c: bad search grid");
  PhaseCalibration best{0.0, std::numeric_limits<double>::infinity()};
  auto phi_at = [&](double omega, const PhaseTarget& t) {
    PhiRtParams p;
    p.omega_c = omega;
    p.tau_p = tau_p;
    p.delta = t.delta;
    p.eta = t.eta;
    return phi_rt_analytic(p);
  };
  const auto n = static_cast<long>(omega_max / step);
  for (long k = 1; k <= n; ++k) {
    const double omega = static_cast<double>(k) * step;
    try {
      if (angle_distance(phi_at(omega, reference), reference.phi) > 1e-9) continue;
      double worst = 0.0;
      for (const auto& t : others) worst = std::max(worst, angle_distance(phi_at(omega, t), t.phi));
      if (worst < best.worst) best = {omega, worst};
    } catch (const DomainError&) {
    }
  }
  if (best.omega_c == 0.0) throw DomainError("calibrate_omega_c: no control strength hits the reference phase");
  return best;
}

// ---------------------------------------------------------------------------
// Matrix phase and diagnostics

/// phi_rt = phi_1r - phi_2t + phi_2r - phi_1t, in [0, 2 pi).
inline double phi_rt_of_matrix(const SplitterMatrix& m) {
  constexpr double kTiny = 1e-14;
  if (std::abs(m.t1) < kTiny || std::abs(m.r1) < kTiny || std::abs(m.t2) < kTiny ||
      std::abs(m.r2) < kTiny)
    throw DomainError("phi_rt_of_matrix: a zero amplitude leaves the phase undefined");
  return wrap_two_pi(std::arg(m.r1) - std::arg(m.t2) + std::arg(m.r2) - std::arg(m.t1));
}

inline Eigen::Matrix2cd as_eigen(const SplitterMatrix& m) {
  Eigen::Matrix2cd a;
  a << m.t1, m.r2, m.r1, m.t2;
  return a;
}

struct HermiticityReport {
  double magnon_port_sum = 0.0;
  double photon_port_sum = 0.0;
  std::array<double, 2> singular_values{};
  std::optional<double> phi_rt;
  double unitarity_distance = 0.0;  // Frobenius distance to the nearest unitary
  bool unitary = false;
  bool passive = false;
};

inline HermiticityReport hermiticity_report(const SplitterMatrix& m) {
  HermiticityReport r;
  r.magnon_port_sum = m.magnon_port_sum();
  r.photon_port_sum = m.photon_port_sum();
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(as_eigen(m));
  const auto sv = svd.singularValues();
  r.singular_values = {sv(0), sv(1)};
  // The nearest unitary in Frobenius norm is the polar factor U V^*.
  r.unitarity_distance = std::sqrt((sv(0) - 1.0) * (sv(0) - 1.0) + (sv(1) - 1.0) * (sv(1) - 1.0));
  r.unitary = r.unitarity_distance < 1e-9;
  r.passive = sv(0) <= 1.0 + 1e-9;
  try {
    r.phi_rt = phi_rt_of_matrix(m);
  } catch (const DomainError&) {
    r.phi_rt.reset();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Extraction from port outputs

/// Output of one single-input run, split by port. Inner products use the
/// given weights (dz for both the emitted time series and the spin wave).
struct PortOutputs {
  CVec photon;
  double photon_weight = 1.0;
  CVec magnon;
  double magnon_weight = 1.0;

  double surviving_norm() const {
    return weighted_norm(photon, photon_weight) + weighted_norm(magnon, magnon_weight);
  }
};

namespace detail {

inline cplx inner(std::span<const cplx> a, std::span<const cplx> b, double w) {
  if (a.size() != b.size()) throw DomainError("inner product of mismatched samples");
  cplx acc{};
  for (std::size_t j = 0; j < a.size(); ++j) acc += std::conj(a[j]) * b[j];
  return acc * w;
}

// Projections <u|a>, <u|b> onto the dominant mode u of span{a, b}.
inline std::array<cplx, 2> dominant_mode_projections(std::span<const cplx> a, std::span<const cplx> b,
                                                     double w) {
  Eigen::Matrix2cd gram;
  gram(0, 0) = inner(a, a, w);
  gram(0, 1) = inner(a, b, w);
  gram(1, 0) = inner(b, a, w);
  gram(1, 1) = inner(b, b, w);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> eig(gram);
  const double lambda = std::max(0.0, eig.eigenvalues()(1));
  const Eigen::Vector2cd v = eig.eigenvectors().col(1);
  const double sigma = std::sqrt(lambda);
  return {sigma * std::conj(v(0)), sigma * std::conj(v(1))};
}

inline cplx unit_phase(cplx x) { return std::abs(x) > 0.0 ? x / std::abs(x) : cplx{1.0, 0.0}; }

}  // namespace detail

/// Builds the single-mode splitter matrix from a magnon-only run and a
/// photon-only run. Each port is projected onto its dominant output mode (the
/// mode carrying the most of both runs' output). Mode phases are fixed so that
/// t1 and t2 are real and non-negative.
inline SplitterMatrix project_outputs(const PortOutputs& magnon_run, const PortOutputs& photon_run,
                                      double min_surviving = 1e-3) {
  if (magnon_run.surviving_norm() < min_surviving || photon_run.surviving_norm() < min_surviving)
    throw DomainError("extract_matrix: a run keeps less than 1e-3 of its input (total absorber)");
  const auto m = detail::dominant_mode_projections(magnon_run.magnon, photon_run.magnon,
                                                   magnon_run.magnon_weight);
  const auto a = detail::dominant_mode_projections(magnon_run.photon, photon_run.photon,
                                                   magnon_run.photon_weight);
  SplitterMatrix s;
  const cplx gauge_m = std::conj(detail::unit_phase(m[0]));
  const cplx gauge_a = std::conj(detail::unit_phase(a[1]));
  s.t1 = m[0] * gauge_m;
  s.r2 = m[1] * gauge_m;
  s.r1 = a[0] * gauge_a;
  s.t2 = a[1] * gauge_a;
  return s;
}

/// Port outputs per unit input norm.
inline PortOutputs port_outputs(const Trajectory& traj) {
  const double in = traj.final_state().input_norm;
  if (!(in > 0.0)) throw DomainError("extract_matrix: a run has no input");
  const double scale = 1.0 / std::sqrt(in);
  PortOutputs out;
  out.photon = traj.emitted_field;
  out.photon_weight = traj.emitted_weight;
  out.magnon = traj.final_magnon;
  out.magnon_weight = traj.final_state().grid.dz;
  for (auto& x : out.photon) x *= scale;
  for (auto& x : out.magnon) x *= scale;
  return out;
}

struct ExtractedSplitter {
  SplitterMatrix matrix;
  Trajectory magnon_run;
  Trajectory photon_run;
};

/// Runs the magnon-only and photon-only configurations and projects their
/// outputs, each divided by the square root of its run's input norm. The
/// photon port is everything emitted during a run; the magnon port is the spin
/// wave left at t_end. Both runs must share grid and time step.
inline ExtractedSplitter extract_matrix(const SimulationConfig& magnon_only,
                                        const SimulationConfig& photon_only) {
  if (!magnon_only.initial_magnon || magnon_only.input_pulse)
    throw ConfigError("extract_matrix: the magnon run needs a magnon and no photon");
  if (!photon_only.input_pulse || photon_only.initial_magnon)
    throw ConfigError("extract_matrix: the photon run needs a photon and no magnon");
  if (!(magnon_only.grid() == photon_only.grid()) || magnon_only.medium.c_eff != photon_only.medium.c_eff ||
      magnon_only.t_start != photon_only.t_start || magnon_only.t_end != photon_only.t_end)
    throw ConfigError("extract_matrix: the two runs must share grid and time axis");
  ExtractedSplitter out;
  out.magnon_run = evolve(magnon_only);
  out.photon_run = evolve(photon_only);
  out.matrix = project_outputs(port_outputs(out.magnon_run), port_outputs(out.photon_run));
  return out;
}

/// Both runs share the control timeline of `base`: a unit-norm magnon in the
/// magnon port, then a single photon in the photon port.
inline ExtractedSplitter extract_matrix(const SimulationConfig& base, const CVec& magnon_in,
                                        const PulseEnvelope& photon_in) {
  const Grid g = base.grid();
  const double mnorm = weighted_norm(magnon_in, g.dz);
  if (!(mnorm > 0.0)) throw DomainError("extract_matrix: empty magnon input");
  if (!(photon_in.amplitude_norm > 0.0)) throw DomainError("extract_matrix: empty photon input");

  SimulationConfig a = base;
  a.input_pulse.reset();
  a.initial_magnon = magnon_in;
  for (auto& x : *a.initial_magnon) x /= std::sqrt(mnorm);

  SimulationConfig b = base;
  b.initial_magnon.reset();
  PulseEnvelope p = photon_in;
  p.amplitude_norm = 1.0;
  b.input_pulse = p;
  return extract_matrix(a, b);
}

}  // namespace eitbs
