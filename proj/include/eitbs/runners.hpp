// runners.hpp - figure scenarios, sweeps and single runs, as CSV tables.
//
// Jobs run on up to `workers` threads; results are assembled by job index, so
// the tables do not depend on the worker count or on completion order.

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include "eitbs/config.hpp"
#include "eitbs/csv.hpp"
#include "eitbs/fock_oracle.hpp"
#include "eitbs/scenario.hpp"
#include "eitbs/splitter.hpp"
#include "eitbs/stats.hpp"

namespace eitbs {

/// f(0) ... f(n - 1) on up to `workers` threads. The exception of the lowest
/// failing index is rethrown.
template <typename R>
std::vector<R> parallel_map(std::size_t n, std::size_t workers, const std::function<R(std::size_t)>& f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        out[k] = f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace detail {

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

inline HybridConfig with_medium(HybridConfig h, double od, double delta) {
  h.medium = MediumParams::from_od(od, delta, h.medium.gamma12, h.medium.c_eff, h.medium.length, h.medium.gamma31);
  return h;
}

/// Aligned overlap envelope from the solver, sampled at `lags`.
inline OverlapEnvelope solver_envelope(HybridConfig h, double omega, const std::vector<double>& lags,
                                       double* bookkeeping = nullptr) {
  h.omega_s = omega;
  h.omega_bs = omega;
  const StoredMagnon stored = store_photon(h);
  const OverlapScan scan = overlap_envelope(h, stored, lags);
  if (bookkeeping)
    *bookkeeping = std::max(scan.bookkeeping, worst_bookkeeping(stored.trajectory));
  std::vector<double> values;
  for (double v : scan.overlap) values.push_back(clamp_unit(v));
  return OverlapEnvelope::from_solver(lags, values);
}

inline OverlapEnvelope configured_envelope(EnvelopeSource src, double i0, const ScenarioConfig& c,
                                           const HybridConfig& h, const std::vector<double>& lags,
                                           double* bookkeeping = nullptr) {
  if (bookkeeping) *bookkeeping = 0.0;
  switch (src) {
    case EnvelopeSource::gaussian: return OverlapEnvelope::gaussian(h.fwhm, i0);
    case EnvelopeSource::constant: return OverlapEnvelope::constant(i0);
    case EnvelopeSource::solver: return solver_envelope(h, c.envelope_omega, lags, bookkeeping);
  }
  throw ConfigError("unknown envelope source");
}

inline double oracle_g2(const SplitterMatrix& m, double overlap) {
  try {
    const auto net = dilate(m);
    const auto in = pair_input(clamp_unit(overlap));
    return g2_from_distribution(output_distribution(net, in), net, in);
  } catch (const DomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline double phi_or_nan(const SplitterMatrix& m) {
  try {
    return phi_rt_of_matrix(m);
  } catch (const DomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// fig2: overlap and predicted g2 against the storage control

struct Fig2Point {
  double od = 0.0;
  double omega_s = 0.0;
  double efficiency = 0.0;
  double overlap = 0.0;
  double bookkeeping = 0.0;
  CVec profile;
  Grid grid;
};

inline Fig2Point fig2_point(const ScenarioConfig& c, double od, double omega_s) {
  HybridConfig h = detail::with_medium(c.hybrid, od, c.hybrid.medium.delta);
  h.omega_s = omega_s;
  h.omega_bs = c.fig2_omega_bs;
  Fig2Point p;
  p.od = od;
  p.omega_s = omega_s;
  const StoredMagnon stored = store_photon(h);
  p.efficiency = stored.efficiency;
  p.profile = stored.profile;
  p.grid = stored.grid;
  const std::vector<double> zero{0.0};
  const OverlapScan scan = overlap_envelope(h, stored, zero);
  p.overlap = detail::clamp_unit(scan.overlap[0]);
  p.bookkeeping = std::max(scan.bookkeeping, detail::worst_bookkeeping(stored.trajectory));
  return p;
}

inline std::vector<Fig2Point> fig2_points(const ScenarioConfig& c) {
  const std::size_t n_om = c.fig2_omega_s.size();
  return parallel_map<Fig2Point>(c.fig2_ods.size() * n_om, c.workers, [&](std::size_t k) {
    return fig2_point(c, c.fig2_ods[k / n_om], c.fig2_omega_s[k % n_om]);
  });
}

inline std::vector<Table> run_fig2(const ScenarioConfig& c) {
  const auto points = fig2_points(c);
  Table curve{"fig2_overlap",
              {"g2 = 1 + I: the prediction at zero lag with phi_rt = 0",
               "overlap: stored magnon against photon 2's polariton after the same time under control"},
              {"od", "omega_s", "omega_bs", "storage_efficiency", "overlap", "g2", "bookkeeping"},
              {}};
  Table prof{"fig2_profiles",
             {"z in units of L; magnon amplitude S(z) at the end of storage, sum |S|^2 dz = storage efficiency"},
             {"od", "omega_s", "z", "magnon_re", "magnon_im", "magnon_abs2"},
             {}};
  for (const auto& p : points) {
    curve.add(row(p.od, p.omega_s, c.fig2_omega_bs, p.efficiency, p.overlap,
                  g2(0.0, 0.0, OverlapEnvelope::constant(p.overlap)), p.bookkeeping));
    for (std::size_t j = 0; j < p.profile.size(); ++j)
      prof.add(row(p.od, p.omega_s, p.grid.z(j), p.profile[j].real(), p.profile[j].imag(), std::norm(p.profile[j])));
  }
  return {curve, prof};
}

// ---------------------------------------------------------------------------
// fig3: crossover from a bump to a dip with detuning and optical depth

/// Control strength for the analytic phase: configured, or calibrated so the
/// first triple gives phi_rt = 0 and the others land as close as possible to
/// evenly spaced targets up to pi.
inline PhaseCalibration fig3_omega_c(const ScenarioConfig& c) {
  const double tau_p = gaussian_pulse(c.hybrid.fwhm, 0.0).tau_p();
  const auto& tr = c.fig3_triples;
  std::vector<PhaseTarget> others;
  for (std::size_t k = 1; k < tr.size(); ++k)
    others.push_back({tr[k].od, tr[k].delta, kPi * static_cast<double>(k) / static_cast<double>(tr.size() - 1)});
  if (!c.fig3_omega_c) return calibrate_omega_c({tr[0].od, tr[0].delta, 0.0}, others, tau_p);
  PhaseCalibration cal{*c.fig3_omega_c, 0.0};
  for (const auto& t : others) {
    PhiRtParams p{*c.fig3_omega_c, tau_p, 1.0, t.delta, t.eta};
    cal.worst = std::max(cal.worst, angle_distance(phi_rt_analytic(p), t.phi));
  }
  return cal;
}

struct Fig3Curve {
  Fig3Triple triple;
  double phi_rt = 0.0;
  OverlapEnvelope envelope = OverlapEnvelope::constant(0.0);
  double bookkeeping = 0.0;
};

inline std::vector<Fig3Curve> fig3_curves(const ScenarioConfig& c, const PhaseCalibration& cal) {
  const double tau_p = gaussian_pulse(c.hybrid.fwhm, 0.0).tau_p();
  const auto lags = c.fig3_lags.values();
  return parallel_map<Fig3Curve>(c.fig3_triples.size(), c.workers, [&](std::size_t k) {
    Fig3Curve cv;
    cv.triple = c.fig3_triples[k];
    PhiRtParams p{cal.omega_c, tau_p, 1.0, cv.triple.delta, cv.triple.od};
    cv.phi_rt = phi_rt_analytic(p);
    const HybridConfig h = detail::with_medium(c.hybrid, cv.triple.od, cv.triple.delta);
    cv.envelope = detail::configured_envelope(c.fig3_envelope, c.fig3_i0, c, h, lags, &cv.bookkeeping);
    return cv;
  });
}

inline std::vector<Table> run_fig3(const ScenarioConfig& c) {
  const PhaseCalibration cal = fig3_omega_c(c);
  const auto curves = fig3_curves(c, cal);
  const auto bounds = classical_bounds();
  const std::string calib = "omega_c = " + format_number(cal.omega_c) +
                            " [gamma31]; worst phase miss of the later triples = " + format_number(cal.worst) +
                            " rad";
  Table lag{"fig3_lag", {calib, "g2 = 1 + I(lag) cos(phi_rt); lag_ns in ns, lag in 1/gamma31"},
            {"triple", "od", "delta_mhz", "phi_rt", "lag_ns", "lag", "overlap", "g2", "classical_low", "classical_high"},
            {}};
  Table phase{"fig3_phase", {calib, "g2 against phi_rt at zero lag, with each triple's I(0)"},
              {"triple", "phi_rt", "overlap", "g2", "classical_low", "classical_high"},
              {}};
  Table summary{"fig3_triples", {calib},
                {"triple", "od", "delta_mhz", "phi_rt", "overlap", "g2", "regime", "bookkeeping"},
                {}};
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& cv = curves[k];
    for (double t : c.fig3_lags.values())
      lag.add(row(k, cv.triple.od, cv.triple.delta_mhz, cv.phi_rt, c.time_to_ns(t), t, cv.envelope(t),
                  g2(t, cv.phi_rt, cv.envelope), bounds.g2_low, bounds.g2_high));
    for (std::size_t j = 0; j < c.fig3_phi_steps; ++j) {
      const double phi = kTwoPi * static_cast<double>(j) / static_cast<double>(c.fig3_phi_steps - 1);
      phase.add(row(k, phi, cv.envelope(0.0), g2(0.0, phi, cv.envelope), bounds.g2_low, bounds.g2_high));
    }
    const double g = g2(0.0, cv.phi_rt, cv.envelope);
    summary.add(row(k, cv.triple.od, cv.triple.delta_mhz, cv.phi_rt, cv.envelope(0.0), g, to_string(classify_g2(g)),
                    cv.bookkeeping));
  }
  return {lag, phase, summary};
}

// ---------------------------------------------------------------------------
// fig4: three-photon correlation

inline std::vector<Table> run_fig4(const ScenarioConfig& c) {
  const auto lags = c.fig4_lags.values();
  std::vector<double> env_lags = lags;
  env_lags.push_back(0.0);
  std::sort(env_lags.begin(), env_lags.end());
  env_lags.erase(std::unique(env_lags.begin(), env_lags.end()), env_lags.end());
  const OverlapEnvelope env = detail::configured_envelope(c.fig4_envelope, c.fig4_i0, c, c.hybrid, env_lags);
  const double threshold = classical_bounds().g3_high;

  Table surface{"fig4_surface", {"g3 = (1 + I(lag1)) (1 + I(lag2)) at phi_rt = 0; lags in ns"},
                {"lag1_ns", "lag2_ns", "g3", "classical_threshold"},
                {}};
  for (double a : lags)
    for (double b : lags) surface.add(row(c.time_to_ns(a), c.time_to_ns(b), g3(a, b, env), threshold));

  // Oracle: two ideal phi_rt = 0 stages; particles 1 and 3 overlap by I1 I2.
  const auto net = cascade_three(ideal_nonhermitian_stage(), ideal_nonhermitian_stage());
  Table corners{"fig4_corners", {"oracle: cascade of two balanced phi_rt = 0 stages and a readout"},
                {"lag1_ns", "lag2_ns", "overlap1", "overlap2", "g3_formula", "g3_oracle", "classical_threshold"},
                {}};
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (double a : {lags.front(), lags.back()})
    for (double b : {lags.front(), lags.back()}) pts.emplace_back(a, b);
  for (const auto& [a, b] : pts) {
    const auto in = chain_input(env(a), env(b));
    corners.add(row(c.time_to_ns(a), c.time_to_ns(b), env(a), env(b), g3(a, b, env),
                    g3_from_distribution(output_distribution(net, in), net, in), threshold));
  }
  return {surface, corners};
}

// ---------------------------------------------------------------------------
// Single runs and sweeps of the full interferometer

inline const std::vector<std::string>& run_columns() {
  static const std::vector<std::string> cols{
      "storage_efficiency", "balanced", "balance_iterations", "t_off_ns", "abs_t1", "abs_r1", "abs_t2", "abs_r2",
      "phi_rt", "overlap", "aligned_overlap", "g2_oracle", "g2_formula", "g2_multimode", "bookkeeping"};
  return cols;
}

inline std::vector<std::string> run_cells(const ScenarioConfig& c, const HybridResult& r) {
  const auto& m = r.matrix;
  const double phi = detail::phi_or_nan(m);
  const double formula = std::isnan(phi) ? phi : g2(0.0, phi, OverlapEnvelope::constant(detail::clamp_unit(r.overlap)));
  return row(r.storage_efficiency, r.balanced, r.balance_iterations, c.time_to_ns(r.timing.t_off - r.timing.t_release),
             std::abs(m.t1), std::abs(m.r1), std::abs(m.t2), std::abs(m.r2), phi, r.overlap, r.aligned_overlap,
             detail::oracle_g2(m, r.overlap), formula,
             r.g2_multimode, r.bookkeeping);
}

inline std::vector<Table> run_single(const ScenarioConfig& c) {
  const HybridResult r = run_hybrid(c.hybrid);
  Table t{"run",
          {"t_off_ns: Omega_BS fully off, after it starts ramping up",
           "overlap: polaritons as Omega_BS starts switching off; g2_formula = 1 + overlap cos(phi_rt)"},
          run_columns(),
          {}};
  t.add(run_cells(c, r));
  return {t};
}

/// Sweep values: evenly spaced, or uniform draws from the seeded generator.
inline std::vector<double> sweep_values(const ScenarioConfig& c) {
  std::vector<double> out(c.sweep_steps);
  if (c.sweep_random) {
    std::mt19937_64 rng(c.seed);
    // 53 random bits, so the draws do not depend on the library's distributions.
    for (auto& v : out) v = c.sweep_from + (c.sweep_to - c.sweep_from) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return out;
  }
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = c.sweep_steps == 1 ? c.sweep_from
                                : c.sweep_from + (c.sweep_to - c.sweep_from) * static_cast<double>(k) /
                                                     static_cast<double>(c.sweep_steps - 1);
  return out;
}

inline std::vector<Table> run_sweep(const ScenarioConfig& c) {
  const auto values = sweep_values(c);
  const auto cells = parallel_map<std::vector<std::string>>(values.size(), c.workers, [&](std::size_t k) {
    RawConfig raw = c.raw;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", values[k]);
    raw.set(c.sweep_param, buf);
    const ScenarioConfig point = resolve(raw);
    return run_cells(point, run_hybrid(point.hybrid));
  });
  std::vector<std::string> cols{"index", "value"};
  cols.insert(cols.end(), run_columns().begin(), run_columns().end());
  Table t{"sweep", {"swept key: " + c.sweep_param + (c.sweep_random ? " (random draws)" : " (grid)")}, cols, {}};
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::vector<std::string> r{cell(k), cell(values[k])};
    r.insert(r.end(), cells[k].begin(), cells[k].end());
    t.add(std::move(r));
  }
  return {t};
}

inline std::vector<Table> run_scenario(const ScenarioConfig& c) {
  if (c.id == "fig2_overlap") return run_fig2(c);
  if (c.id == "fig3_crossover") return run_fig3(c);
  if (c.id == "fig4_threephoton") return run_fig4(c);
  if (c.id == "sweep") return run_sweep(c);
  if (c.id == "single_run") return run_single(c);
  throw ConfigError("unknown scenario '" + c.id + "'");
}

/// Runs the scenario and writes one CSV per table into the output directory.
inline std::vector<std::filesystem::path> run_and_write(const ScenarioConfig& c) {
  const auto header = header_lines(c);
  std::vector<std::filesystem::path> paths;
  for (const auto& t : run_scenario(c)) paths.push_back(write_table(c.out_dir, header, t));
  return paths;
}

}  // namespace eitbs
