// scenario.hpp - the magnon-photon interferometer built from Maxwell-Bloch runs.
//
// Stage 1 stores photon 1 as a magnon under Omega_S. Stage 2 is the beam
// splitter: Omega_BS is switched on, releasing the magnon, photon 2 enters
// `photon_delay` later, and Omega_BS is switched off while both polaritons
// straddle the exit face. The magnon-only and photon-only runs of stage 2 share
// one control timeline, so together they are one passive linear map.
//
// The aligned overlap is a separate, shape-only measure: the stored magnon
// against photon 2's polariton after photon 2 has spent under control the time
// photon 1 spent before storage, shifted by a lag.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eitbs/core.hpp"
#include "eitbs/mbloch.hpp"
#include "eitbs/splitter.hpp"

namespace eitbs {

enum class SwitchOff {
  balanced,  // solve |t1 t2| = |r1 r2| for the switch-off time
  centre,    // the midpoint of the two polariton centroids reaches z = L
  fixed,     // HybridConfig::bs_duration after Omega_BS starts ramping up
};

inline std::string to_string(SwitchOff s) {
  switch (s) {
    case SwitchOff::balanced: return "balanced";
    case SwitchOff::centre: return "centre";
    case SwitchOff::fixed: return "fixed";
  }
  return "?";
}

struct HybridConfig {
  MediumParams medium;
  double fwhm = 1.885;        // both photons; 100 ns at gamma31 = 2 pi x 3 MHz
  double omega_s = 1.0;       // storage control
  double store_hold = 1.0;    // storage control is fully off this many FWHM after photon 1's centre
  double omega_bs = 4.0;      // beam-splitter control
  double photon_delay = 0.0;  // photon 2's centre enters this long after Omega_BS starts ramping up
  SwitchOff switch_off = SwitchOff::balanced;
  double bs_duration = 0.0;  // SwitchOff::fixed only
  double ramp = 0.1;
  double settle = 8.0;
  std::size_t n_points = 201;
  double balance_tol = 1e-4;     // on log(|t1 t2| / |r1 r2|)
  std::size_t record_every = 0;  // snapshot stride of every run; bookkeeping is checked on snapshots

  void validate() const {
    medium.validate();
    if (!(fwhm > 0.0)) throw ConfigError("HybridConfig: fwhm must be > 0");
    if (!(omega_s > 0.0)) throw ConfigError("HybridConfig: omega_s must be > 0");
    if (!(omega_bs > 0.0)) throw ConfigError("HybridConfig: omega_bs must be > 0");
    if (!(store_hold > 0.0)) throw ConfigError("HybridConfig: store_hold must be > 0");
    if (!(ramp >= 0.0) || !(settle > 0.0)) throw ConfigError("HybridConfig: bad ramp or settle");
    if (!std::isfinite(photon_delay)) throw ConfigError("HybridConfig: photon_delay must be finite");
    if (switch_off == SwitchOff::fixed && !(bs_duration > 2.0 * ramp))
      throw ConfigError("HybridConfig: bs_duration must exceed both ramps");
    if (!(balance_tol > 0.0)) throw ConfigError("HybridConfig: balance_tol must be > 0");
  }
};

inline PulseEnvelope gaussian_pulse(double fwhm, double t_center, double norm = 1.0) {
  PulseEnvelope p;
  p.fwhm = fwhm;
  p.t_center = t_center;
  p.amplitude_norm = norm;
  return p;
}

/// Centroid of |psi|^2 on the grid.
inline double centroid(std::span<const cplx> psi, const Grid& g) {
  double w = 0.0;
  double m = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    w += std::norm(psi[j]);
    m += std::norm(psi[j]) * g.z(j);
  }
  if (!(w > 0.0)) throw DomainError("centroid: zero-norm profile");
  return m / w;
}

inline StoredMagnon store_photon(const HybridConfig& cfg) {
  const double lead = 2.5 * cfg.fwhm;
  StorageControl sc;
  sc.omega = cfg.omega_s;
  sc.t_off = lead + cfg.store_hold * cfg.fwhm;
  sc.ramp = cfg.ramp;
  sc.settle = cfg.settle;
  return store_magnon(cfg.medium, sc, gaussian_pulse(cfg.fwhm, lead), cfg.n_points, cfg.record_every);
}

/// Beam-splitter stage timing on its own clock, which starts with the magnon
/// stored and the control off.
struct HybridTiming {
  double t_release = 0.0;  // Omega_BS starts ramping up
  double t_photon = 0.0;   // photon 2's centre at z = 0
  double t_off = 0.0;      // Omega_BS fully off
  double t_end = 0.0;
  double group_velocity = 0.0;
  double magnon_centroid = 0.0;
};

namespace detail {

inline double end_time(const HybridConfig& cfg, const HybridTiming& tm) {
  return std::max(tm.t_off, tm.t_photon + 2.5 * cfg.fwhm) + cfg.settle;
}

}  // namespace detail

inline HybridTiming hybrid_timing(const HybridConfig& cfg, double magnon_centroid) {
  HybridTiming tm;
  tm.group_velocity = cfg.medium.group_velocity(cfg.omega_bs);
  tm.magnon_centroid = magnon_centroid;
  tm.t_release = std::max(cfg.ramp, 2.5 * cfg.fwhm - cfg.photon_delay);
  tm.t_photon = tm.t_release + cfg.photon_delay;
  const double centre = (2.0 * cfg.medium.length - magnon_centroid) / (2.0 * tm.group_velocity) +
                        0.5 * (tm.t_release + tm.t_photon);
  tm.t_off = cfg.switch_off == SwitchOff::fixed ? tm.t_release + cfg.bs_duration
                                                : std::max(centre, tm.t_release + 2.0 * cfg.ramp + 1e-6);
  tm.t_end = detail::end_time(cfg, tm);
  return tm;
}

/// Magnon-only and photon-only beam-splitter runs for the given timing. Both
/// share one control timeline and keep their state at the start of the
/// switch-off ramp.
inline std::pair<SimulationConfig, SimulationConfig> beamsplit_configs(const HybridConfig& cfg,
                                                                       const HybridTiming& tm,
                                                                       const CVec& magnon) {
  SimulationConfig a;
  a.medium = cfg.medium;
  a.n_points = cfg.n_points;
  a.t_start = 0.0;
  a.t_end = tm.t_end;
  a.record_every = cfg.record_every;
  a.timeline = ControlTimeline({ControlSegment{tm.t_release, tm.t_off, cplx{cfg.omega_bs, 0.0}, cfg.ramp,
                                               cfg.ramp, SegmentLabel::beamsplit}});
  a.mark_times = {tm.t_off - cfg.ramp};
  const double norm = weighted_norm(magnon, a.grid().dz);
  if (!(norm > 0.0)) throw DomainError("beamsplit: the stored magnon is empty");

  SimulationConfig b = a;
  a.initial_magnon = magnon;
  for (auto& x : *a.initial_magnon) x /= std::sqrt(norm);
  b.input_pulse = gaussian_pulse(cfg.fwhm, tm.t_photon);
  return {a, b};
}

/// Coincidence ratio of the full multimode outputs: one particle in each port
/// for the input |1 magnon, 1 photon>, over the same quantity for
/// distinguishable particles.
inline double multimode_g2(const PortOutputs& a, const PortOutputs& b) {
  const double ma = weighted_norm(a.magnon, a.magnon_weight);
  const double mb = weighted_norm(b.magnon, b.magnon_weight);
  const double ea = weighted_norm(a.photon, a.photon_weight);
  const double eb = weighted_norm(b.photon, b.photon_weight);
  const double ref = ma * eb + mb * ea;
  if (!(ref > 0.0)) throw DomainError("multimode_g2: zero coincidence reference");
  const cplx mm = detail::inner(a.magnon, b.magnon, a.magnon_weight);
  const cplx ee = detail::inner(b.photon, a.photon, a.photon_weight);
  return (ref + 2.0 * std::real(mm * ee)) / ref;
}

/// log(|t1 t2| / |r1 r2|); zero for a balanced splitter.
inline double balance_log(const SplitterMatrix& m) {
  const double num = std::abs(m.t1 * m.t2);
  const double den = std::abs(m.r1 * m.r2);
  if (!(num > 0.0) || !(den > 0.0)) return num > 0.0 ? 50.0 : -50.0;
  return std::log(num / den);
}

struct HybridResult {
  HybridConfig config;
  double storage_efficiency = 0.0;
  HybridTiming timing;
  SplitterMatrix matrix;
  double overlap = 0.0;          // polariton overlap I as Omega_BS starts switching off
  double aligned_overlap = 0.0;  // shape-only overlap at zero lag
  double g2_multimode = 0.0;
  double bookkeeping = 0.0;  // worst relative residual over storage and every beam-splitter run
  int balance_iterations = 0;
  bool balanced = false;  // |t1 t2| = |r1 r2| was reached within balance_tol
  Trajectory magnon_run;
  Trajectory photon_run;
};

namespace detail {

inline double worst_bookkeeping(const Trajectory& t) {
  double w = 0.0;
  for (const auto& s : t.snapshots) w = std::max(w, bookkeeping_residual(s));
  for (const auto& s : t.marked) w = std::max(w, bookkeeping_residual(s));
  return w;
}

inline void run_pair(HybridResult& r, const HybridConfig& cfg, const StoredMagnon& stored) {
  auto [a, b] = beamsplit_configs(cfg, r.timing, stored.profile);
  ExtractedSplitter ex = extract_matrix(a, b);
  r.matrix = ex.matrix;
  r.magnon_run = std::move(ex.magnon_run);
  r.photon_run = std::move(ex.photon_run);
}

inline double overlap_or_zero(std::span<const cplx> a, std::span<const cplx> b) {
  return weighted_norm(a, 1.0) > 0.0 && weighted_norm(b, 1.0) > 0.0 ? overlap(a, b) : 0.0;
}

// Overlap of the two beam-splitter runs' polaritons as Omega_BS starts switching off.
inline double in_run_overlap(const HybridResult& r, const HybridConfig& cfg) {
  const cplx omega{cfg.omega_bs, 0.0};
  return overlap_or_zero(dsp_project(r.magnon_run.marked.at(0), omega, cfg.medium),
                         dsp_project(r.photon_run.marked.at(0), omega, cfg.medium));
}

}  // namespace detail

struct OverlapScan {
  std::vector<double> overlap;  // one per requested lag
  double bookkeeping = 0.0;     // worst relative residual of the photon run
};

/// Aligned overlap of the stored magnon with photon 2's polariton for each lag
/// in `delta_taus`: photon 2 has spent store_hold * fwhm - lag under Omega_BS.
/// One photon-only run serves all lags.
inline OverlapScan overlap_envelope(const HybridConfig& cfg, const StoredMagnon& stored,
                                    std::span<const double> delta_taus) {
  cfg.validate();
  if (delta_taus.empty()) return {};
  const double hold = cfg.store_hold * cfg.fwhm;
  const double max_lag = *std::max_element(delta_taus.begin(), delta_taus.end());
  const double min_lag = *std::min_element(delta_taus.begin(), delta_taus.end());
  const double lead = 2.5 * cfg.fwhm + cfg.ramp;
  const double t_photon = lead + std::max(0.0, max_lag - hold);
  std::vector<double> times(delta_taus.size());
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = t_photon + hold - delta_taus[k];
  std::vector<std::size_t> order(times.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return times[x] < times[y]; });

  SimulationConfig b;
  b.medium = cfg.medium;
  b.n_points = cfg.n_points;
  b.record_every = cfg.record_every;
  b.t_end = t_photon + hold - min_lag + cfg.ramp + 1e-3;
  b.timeline = ControlTimeline({ControlSegment{0.0, b.t_end - 1e-6, cplx{cfg.omega_bs, 0.0}, cfg.ramp, 0.0,
                                               SegmentLabel::beamsplit}});
  b.input_pulse = gaussian_pulse(cfg.fwhm, t_photon);
  for (auto k : order) b.mark_times.push_back(times[k]);
  const Trajectory tr = evolve(b);

  OverlapScan out;
  out.overlap.resize(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const CVec psi = dsp_project(tr.marked.at(i), cplx{cfg.omega_bs, 0.0}, cfg.medium);
    out.overlap[order[i]] = detail::overlap_or_zero(stored.profile, psi);
  }
  out.bookkeeping = detail::worst_bookkeeping(tr);
  return out;
}

/// Beam-splitter stage for an already stored magnon.
inline HybridResult run_beamsplit(const HybridConfig& cfg, const StoredMagnon& stored) {
  cfg.validate();
  HybridResult r;
  r.config = cfg;
  r.storage_efficiency = stored.efficiency;
  r.timing = hybrid_timing(cfg, centroid(stored.profile, stored.grid));
  if (cfg.switch_off != SwitchOff::balanced) {
    detail::run_pair(r, cfg, stored);
  } else {
    // Scan the switch-off window for sign changes of the balance. Among them
    // take the one where the polaritons overlap most, then bisect it. The
    // window opens once the release ramp is complete and closes two FWHM past
    // the centre estimate, where |t1| and |r2| have vanished and the ratio only
    // tracks noise.
    const double lo = r.timing.t_release + 2.0 * cfg.ramp + 1e-6;
    const double hi = r.timing.t_off + 2.0 * cfg.fwhm;
    const double step = 0.125 * cfg.fwhm;
    struct Sample {
      double t_off, balance, overlap;
    };
    auto eval = [&](double t_off) {
      r.timing.t_off = t_off;
      r.timing.t_end = detail::end_time(cfg, r.timing);
      detail::run_pair(r, cfg, stored);
      ++r.balance_iterations;
      return Sample{t_off, balance_log(r.matrix), detail::in_run_overlap(r, cfg)};
    };
    // A switch-off that leaves one run with no output is skipped.
    std::vector<Sample> scan;
    const auto n = static_cast<int>(std::floor((hi - lo) / step));
    for (int k = 0; k <= n; ++k) {
      try {
        scan.push_back(eval(lo + k * step));
      } catch (const DomainError&) {
      }
    }
    if (scan.empty()) throw DomainError("run_beamsplit: no switch-off time leaves output in both runs");
    Sample best = *std::min_element(scan.begin(), scan.end(), [](const Sample& x, const Sample& y) {
      return std::abs(x.balance) < std::abs(y.balance);
    });
    const Sample* bracket = nullptr;
    for (std::size_t k = 0; k + 1 < scan.size(); ++k) {
      if (scan[k].balance * scan[k + 1].balance > 0.0 || scan[k + 1].t_off - scan[k].t_off > 1.5 * step) continue;
      if (!bracket || scan[k].overlap + scan[k + 1].overlap > bracket[0].overlap + bracket[1].overlap)
        bracket = &scan[k];
    }
    if (bracket) {
      Sample a = bracket[0], b = bracket[1];
      best = std::abs(a.balance) < std::abs(b.balance) ? a : b;
      for (int k = 0; k < 60 && std::abs(best.balance) >= cfg.balance_tol; ++k) {
        const Sample m = eval(0.5 * (a.t_off + b.t_off));
        if (std::abs(m.balance) < std::abs(best.balance)) best = m;
        if (a.balance * m.balance <= 0.0) {
          b = m;
        } else {
          a = m;
        }
      }
    }
    r.balanced = std::abs(best.balance) < cfg.balance_tol;
    if (r.timing.t_off != best.t_off) eval(best.t_off);
  }

  r.overlap = detail::in_run_overlap(r, cfg);
  const std::vector<double> zero{0.0};
  const OverlapScan aligned = overlap_envelope(cfg, stored, zero);
  r.aligned_overlap = aligned.overlap[0];
  r.g2_multimode = multimode_g2(port_outputs(r.magnon_run), port_outputs(r.photon_run));
  r.bookkeeping = std::max({detail::worst_bookkeeping(stored.trajectory), detail::worst_bookkeeping(r.magnon_run),
                            detail::worst_bookkeeping(r.photon_run), aligned.bookkeeping});
  return r;
}

inline HybridResult run_hybrid(const HybridConfig& cfg) {
  cfg.validate();
  return run_beamsplit(cfg, store_photon(cfg));
}

}  // namespace eitbs
