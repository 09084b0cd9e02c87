// mbloch.hpp - 1D Maxwell-Bloch propagation of a weak probe in a Lambda-type
// EIT medium: slow light, storage, retrieval and dark-state-polariton beam splitting.
//
// Equations of motion (normalized units, single excitation):
//   (d/dt + c d/dz) E = i G P
//   d/dt P = -(gamma31 - i Delta) P + i G E + (i/2) Omega S
//   d/dt S = -gamma12 S + (i/2) conj(Omega) P
// with P = sqrt(N) sigma13, S = sqrt(N) sigma12 and G = g sqrt(N).
//
// Integration: Strang splitting of the advection (an exact one-cell shift per
// step, dt = dz / c) and the local atom-light update (exact 3x3 matrix
// exponential per grid point). The local update is the only non-unitary piece,
// so the spontaneous-emission loss is accumulated exactly from the norm it removes.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "eitbs/core.hpp"

namespace eitbs {

struct SimulationConfig {
  MediumParams medium;
  ControlTimeline timeline;
  std::optional<PulseEnvelope> input_pulse;  // photon port, enters at z = 0
  std::optional<CVec> initial_magnon;        // magnon port, S(z) on the grid
  std::size_t n_points = 401;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t record_every = 0;  // 0: only the initial and final snapshot
  std::vector<double> mark_times;  // ascending; the state is also kept at the first step reaching each

  Grid grid() const { return make_grid(medium.length, n_points); }

  /// The advection shift is exactly one cell per step.
  double dt() const { return grid().dz / medium.c_eff; }

  void validate() const {
    const Grid g = grid();
    if (!(t_end > t_start)) throw ConfigError("SimulationConfig: t_end must exceed t_start");
    if (!timeline.empty() && !(t_end > timeline.end_time()))
      throw ConfigError("SimulationConfig: t_end must exceed the last control segment end");
    // dt = dz / c saturates the CFL bound; the group velocity never exceeds c.
    if (dt() > g.dz / medium.c_eff * (1.0 + 1e-12))
      throw ConfigError("SimulationConfig: time step violates dt <= dz / c");
    if (input_pulse) input_pulse->validate();
    if (initial_magnon && initial_magnon->size() != g.n)
      throw ConfigError("SimulationConfig: initial magnon profile does not match the grid");
    if (!std::is_sorted(mark_times.begin(), mark_times.end()))
      throw ConfigError("SimulationConfig: mark_times must be ascending");
  }
};

struct Efficiencies {
  std::optional<double> storage;    // magnon norm at end of storage / photon input
  std::optional<double> retrieval;  // photons emitted after readout start / magnon at readout start
  std::optional<double> total;      // photons emitted after readout start / photon input
};

struct Trajectory {
  std::vector<FieldState> snapshots;
  std::vector<FieldState> marked;  // one per SimulationConfig::mark_times entry reached
  CVec emitted_field;  // E(L, t) at emitted_times
  std::vector<double> emitted_times;
  double emitted_weight = 0.0;  // norm carried by one emitted sample: sum |e|^2 * weight
  CVec final_magnon;
  Efficiencies efficiencies;
  double photon_input_norm = 0.0;

  const FieldState& final_state() const { return snapshots.back(); }
};

namespace detail {

// Local generator for x = (E, P, S) at a point with relative atomic density rho.
inline Eigen::Matrix3cd local_generator(const MediumParams& m, double rho, cplx omega) {
  const cplx i{0.0, 1.0};
  const double g = m.coupling * std::sqrt(rho);
  Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
  a(0, 1) = i * g;
  a(1, 0) = i * g;
  a(1, 1) = -(m.gamma31 - i * m.delta);
  a(1, 2) = 0.5 * i * omega;
  a(2, 1) = 0.5 * i * std::conj(omega);
  a(2, 2) = -m.gamma12;
  return a;
}

// Half-step propagators for interior points (rho = 1) and the two endpoints,
// which carry half an atomic slab each (trapezoid weights keep the OD exact).
struct LocalPropagator {
  cplx omega;
  Eigen::Matrix3cd interior;
  Eigen::Matrix3cd edge;
};

class PropagatorCache {
 public:
  PropagatorCache(const MediumParams& m, double h) : medium_(m), h_(h) {}

  const LocalPropagator& get(cplx omega) {
    for (auto& e : entries_)
      if (e && e->omega == omega) return *e;
    auto& slot = entries_[next_];
    next_ = (next_ + 1) % entries_.size();
    slot = LocalPropagator{omega, (local_generator(medium_, 1.0, omega) * h_).exp(),
                           (local_generator(medium_, 0.5, omega) * h_).exp()};
    return *slot;
  }

 private:
  MediumParams medium_;
  double h_;
  std::array<std::optional<LocalPropagator>, 3> entries_;
  std::size_t next_ = 0;
};

// Applies the local propagator to every point; returns the norm removed (times dz).
inline double apply_local(FieldState& s, const LocalPropagator& p) {
  const std::size_t n = s.grid.n;
  double before = 0.0;
  double after = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::Matrix3cd& u = (j == 0 || j + 1 == n) ? p.edge : p.interior;
    const cplx e = s.e_field[j];
    const cplx pp = s.sigma13[j];
    const cplx sp = s.sigma12[j];
    const cplx e2 = u(0, 0) * e + u(0, 1) * pp + u(0, 2) * sp;
    const cplx p2 = u(1, 0) * e + u(1, 1) * pp + u(1, 2) * sp;
    const cplx s2 = u(2, 0) * e + u(2, 1) * pp + u(2, 2) * sp;
    before += std::norm(e) + std::norm(pp) + std::norm(sp);
    after += std::norm(e2) + std::norm(p2) + std::norm(s2);
    s.e_field[j] = e2;
    s.sigma13[j] = p2;
    s.sigma12[j] = s2;
  }
  return (before - after) * s.grid.dz;
}

inline double accounted_norm(const FieldState& s) {
  return norm_decomposition(s, MediumParams{}).total();
}

}  // namespace detail

/// Integrates the Maxwell-Bloch system described by `config`.
///
/// Throws SolverError if the accounted norm ever exceeds the injected norm by
/// more than 1e-3 (relative), reporting the time at which it happened.
inline Trajectory evolve(const SimulationConfig& config) {
  config.validate();
  const Grid grid = config.grid();
  const MediumParams& medium = config.medium;
  const double dt = config.dt();
  const double dz = grid.dz;
  const auto n_steps = static_cast<std::size_t>(std::ceil((config.t_end - config.t_start) / dt));

  FieldState state = FieldState::vacuum(grid, config.t_start);
  if (config.initial_magnon) {
    state.sigma12 = *config.initial_magnon;
    state.input_norm = weighted_norm(state.sigma12, dz);
  }

  Trajectory traj;
  traj.emitted_weight = dz;
  traj.emitted_field.reserve(n_steps);
  traj.emitted_times.reserve(n_steps);
  traj.snapshots.push_back(state);

  const auto storage = config.timeline.last_of(SegmentLabel::storage);
  const auto readout = config.timeline.first_of(SegmentLabel::readout);
  std::optional<double> magnon_at_storage_end;
  std::optional<double> magnon_at_readout_start;
  std::optional<double> emitted_at_readout_start;
  std::size_t next_mark = 0;
  while (next_mark < config.mark_times.size() && config.mark_times[next_mark] <= config.t_start) {
    traj.marked.push_back(state);
    ++next_mark;
  }

  detail::PropagatorCache cache(medium, 0.5 * dt);
  const bool has_pulse = config.input_pulse && config.input_pulse->amplitude_norm > 0.0;
  double photon_in = 0.0;

  auto check = [&](const FieldState& s) {
    const double total = detail::accounted_norm(s);
    const double ref = s.input_norm;
    if (!std::isfinite(total) || total > ref * (1.0 + 1e-3) + 1e-12) {
      std::ostringstream msg;
      msg << "evolve: integrator instability at t = " << s.t_now << " (accounted norm " << total
          << " vs input " << ref << ")";
      throw SolverError(msg.str());
    }
  };

  for (std::size_t step = 0; step < n_steps; ++step) {
    const double t = config.t_start + static_cast<double>(step) * dt;

    if (readout && !magnon_at_readout_start && t >= readout->t_start) {
      magnon_at_readout_start = weighted_norm(state.sigma12, dz);
      emitted_at_readout_start = state.emitted_norm;
    }

    state.loss_accum += detail::apply_local(state, cache.get(config.timeline.rabi_at(t + 0.25 * dt)));

    // Advection: the last cell leaves through z = L, a new sample enters at z = 0.
    // A sample sits on node j for one step and stands for the light in
    // [z_j - dz/2, z_j + dz/2], so the entering sample is the boundary field half
    // a step after the shift and the leaving one crossed z = L half a step before.
    const cplx out = state.e_field.back();
    traj.emitted_field.push_back(out);
    traj.emitted_times.push_back(t);
    state.emitted_norm += std::norm(out) * dz;
    for (std::size_t j = grid.n - 1; j > 0; --j) state.e_field[j] = state.e_field[j - 1];
    const cplx in = has_pulse ? config.input_pulse->boundary_field(t + dt, medium.c_eff) : cplx{};
    state.e_field[0] = in;
    const double in_norm = std::norm(in) * dz;
    state.input_norm += in_norm;
    photon_in += in_norm;

    state.loss_accum += detail::apply_local(state, cache.get(config.timeline.rabi_at(t + 0.75 * dt)));
    state.t_now = t + dt;

    if (storage && !magnon_at_storage_end && state.t_now >= storage->t_end)
      magnon_at_storage_end = weighted_norm(state.sigma12, dz);

    while (next_mark < config.mark_times.size() && state.t_now >= config.mark_times[next_mark] - 1e-12) {
      traj.marked.push_back(state);
      ++next_mark;
    }

    if (config.record_every > 0 && (step + 1) % config.record_every == 0 && step + 1 < n_steps) {
      check(state);
      traj.snapshots.push_back(state);
    }
  }
  check(state);
  traj.snapshots.push_back(state);
  traj.final_magnon = state.sigma12;
  traj.photon_input_norm = photon_in;

  Efficiencies& eff = traj.efficiencies;
  if (storage && magnon_at_storage_end && photon_in > 0.0)
    eff.storage = *magnon_at_storage_end / photon_in;
  if (readout && magnon_at_readout_start) {
    const double out = state.emitted_norm - *emitted_at_readout_start;
    if (*magnon_at_readout_start > 0.0) eff.retrieval = out / *magnon_at_readout_start;
    if (photon_in > 0.0) eff.total = out / photon_in;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Dark-state polaritons

/// Mixing angle of the dark state for control Rabi frequency omega:
/// cos(theta) = (|omega|/2) / sqrt(|omega|^2/4 + G^2).
inline double dsp_cos_theta(cplx omega, const MediumParams& medium) {
  const double half = 0.5 * std::abs(omega);
  const double denom = std::hypot(half, medium.coupling);
  return denom > 0.0 ? half / denom : 1.0;
}

/// Psi(z) = cos(theta) E(z) - sin(theta) S(z), the dark-state polariton amplitude.
/// For complex omega the photon component is referenced to the control phase.
inline CVec dsp_project(const FieldState& state, cplx omega, const MediumParams& medium) {
  const double c = dsp_cos_theta(omega, medium);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const cplx phase = std::abs(omega) > 0.0 ? std::conj(omega) / std::abs(omega) : cplx{1.0, 0.0};
  CVec psi(state.e_field.size());
  for (std::size_t j = 0; j < psi.size(); ++j)
    psi[j] = c * phase * state.e_field[j] - s * state.sigma12[j];
  return psi;
}

/// Normalized overlap |<a|b>|^2 / (<a|a><b|b>) of two sampled wavefunctions.
inline double overlap(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw DomainError("overlap: wavefunctions live on different grids");
  cplx ab{};
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    ab += std::conj(a[j]) * b[j];
    aa += std::norm(a[j]);
    bb += std::norm(b[j]);
  }
  if (!(aa > 0.0) || !(bb > 0.0)) throw DomainError("overlap: zero-norm wavefunction");
  const double r = std::norm(ab) / (aa * bb);
  if (r > 1.0 + 1e-6) throw SolverError("overlap: ratio exceeds 1, inputs are not finite wavefunctions");
  // Rounding alone can push an exact self-overlap a few ulps above 1.
  return std::min(1.0, r);
}

// ---------------------------------------------------------------------------
// Storage

struct StorageControl {
  double omega = 1.0;       // Rabi frequency during storage
  double t_off = 0.0;       // time at which the control is fully off
  double ramp = 0.1;        // switch-off ramp length
  double settle = 8.0;      // time after switch-off for the optical coherence to decay
};

struct StoredMagnon {
  CVec profile;
  double efficiency = 0.0;
  Grid grid;
  Trajectory trajectory;
};

/// Stores `pulse` as a spin wave: control on from t = 0 until control.t_off.
inline StoredMagnon store_magnon(const MediumParams& medium, const StorageControl& control,
                                 const PulseEnvelope& pulse, std::size_t n_points,
                                 std::size_t record_every = 0) {
  if (!(control.t_off > control.ramp)) throw ConfigError("store_magnon: t_off must exceed the ramp");
  SimulationConfig cfg;
  cfg.medium = medium;
  cfg.timeline = ControlTimeline({ControlSegment{0.0, control.t_off, cplx{control.omega, 0.0}, 0.0,
                                                 control.ramp, SegmentLabel::storage}});
  cfg.input_pulse = pulse;
  cfg.n_points = n_points;
  cfg.t_start = 0.0;
  cfg.t_end = control.t_off + control.settle;
  cfg.record_every = record_every;
  StoredMagnon out;
  out.trajectory = evolve(cfg);
  out.grid = cfg.grid();
  out.profile = out.trajectory.final_magnon;
  const double in = out.trajectory.photon_input_norm;
  out.efficiency = in > 0.0 ? weighted_norm(out.profile, out.grid.dz) / in : 0.0;
  return out;
}

}  // namespace eitbs
