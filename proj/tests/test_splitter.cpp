#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "eitbs/splitter.hpp"

using namespace eitbs;

namespace {

constexpr double kFwhm = 1.885;
const double kTauP = kFwhm / (2.0 * std::sqrt(std::log(2.0)));

// Direct transcription of the phase formula with no overflow or pole handling;
// valid for moderate |Omega|^2 tau_p.
double phi_rt_naive(double omega, double tau_p, double gamma, double delta, double eta) {
  const cplx i{0.0, 1.0};
  const cplx xi = std::exp(-omega * omega * tau_p / (4.0 * (gamma - i * delta)));
  const double zeta = 0.25 * omega * omega * tau_p / gamma;
  const double a = std::arg(1.0 - 1.0 / xi) + std::arg(eta * (xi - 1.0) / (zeta - eta * (1.0 - xi)));
  return wrap_two_pi(a);
}

cplx unit(double phase) { return std::polar(1.0, phase); }

CVec random_mode(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  CVec v(n);
  double s = 0.0;
  for (auto& x : v) {
    x = {g(rng), g(rng)};
    s += std::norm(x);
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

CVec scaled(const CVec& v, cplx a) {
  CVec out(v);
  for (auto& x : out) x *= a;
  return out;
}

}  // namespace

TEST(PhiRtAnalytic, MatchesDirectEvaluation) {
  for (double omega : {3.0, 5.0, 7.0})
    for (double delta : {0.0, 2.0, 10.0, -5.0})
      for (double eta : {5.0, 30.0, 100.0}) {
        const double lib = phi_rt_analytic({omega, kTauP, 1.0, delta, eta});
        EXPECT_LT(angle_distance(lib, phi_rt_naive(omega, kTauP, 1.0, delta, eta)), 1e-9)
            << omega << " " << delta << " " << eta;
        EXPECT_GE(lib, 0.0);
        EXPECT_LT(lib, kTwoPi);
      }
}

TEST(PhiRtAnalytic, ZeroDetuningIsZeroOrPi) {
  for (double omega : {2.0, 8.0, 12.0, 30.0}) {
    const double phi = phi_rt_analytic({omega, kTauP, 1.0, 0.0, 30.0});
    EXPECT_LT(std::min(angle_distance(phi, 0.0), angle_distance(phi, kPi)), 1e-9);
  }
  // Strong enough control puts the od = 30, resonant point at 0.
  EXPECT_LT(angle_distance(phi_rt_analytic({30.0, kTauP, 1.0, 0.0, 30.0}), 0.0), 0.2);
}

TEST(PhiRtAnalytic, LargeExponentDoesNotOverflow) {
  const double phi = phi_rt_analytic({400.0, kTauP, 1.0, 0.5, 30.0});
  EXPECT_TRUE(std::isfinite(phi));
}

TEST(PhiRtAnalytic, DegenerateAndSingular) {
  EXPECT_THROW(phi_rt_analytic({5.0, kTauP, 1.0, 0.0, 0.0}), DomainError);
  EXPECT_THROW(phi_rt_analytic({0.0, kTauP, 1.0, 0.0, 30.0}), DomainError);
  // zeta = eta (1 - xi) at zero detuning when eta = a / (1 - e^-a), a = zeta.
  const double omega = 3.0;
  const double a = 0.25 * omega * omega * kTauP;
  EXPECT_THROW(phi_rt_analytic({omega, kTauP, 1.0, 0.0, a / (1.0 - std::exp(-a))}), DomainError);
  EXPECT_THROW(phi_rt_analytic({omega, 0.0, 1.0, 0.0, 30.0}), ConfigError);
  EXPECT_THROW(phi_rt_analytic({omega, kTauP, 0.0, 0.0, 30.0}), ConfigError);
}

TEST(CalibrateOmegaC, HitsReferenceAndMinimizesWorstMiss) {
  const PhaseTarget ref{30.0, 0.0, 0.0};
  const std::vector<PhaseTarget> others{{66.0, 10.0, kPi / 2}, {100.0, 20.0, kPi}};
  const auto cal = calibrate_omega_c(ref, others, kTauP);
  PhiRtParams p;
  p.omega_c = cal.omega_c;
  p.tau_p = kTauP;
  p.eta = 30.0;
  EXPECT_LT(angle_distance(phi_rt_analytic(p), 0.0), 1e-9);
  double worst = 0.0;
  for (const auto& t : others) {
    p.eta = t.eta;
    p.delta = t.delta;
    worst = std::max(worst, angle_distance(phi_rt_analytic(p), t.phi));
  }
  EXPECT_DOUBLE_EQ(worst, cal.worst);
  // Neighbouring grid points that also hit the reference do no better.
  for (double d : {-1e-3, 1e-3}) {
    p.omega_c = cal.omega_c + d;
    p.eta = 30.0;
    p.delta = 0.0;
    if (angle_distance(phi_rt_analytic(p), 0.0) > 1e-9) continue;
    double w = 0.0;
    for (const auto& t : others) {
      p.eta = t.eta;
      p.delta = t.delta;
      w = std::max(w, angle_distance(phi_rt_analytic(p), t.phi));
    }
    EXPECT_GE(w, cal.worst);
  }
}

TEST(CalibrateOmegaC, UnreachableReferenceThrows) {
  // On resonance the phase is 0 or pi only.
  EXPECT_THROW(calibrate_omega_c(PhaseTarget{30.0, 0.0, 1.0}, {}, kTauP), DomainError);
  EXPECT_THROW(calibrate_omega_c(PhaseTarget{30.0, 0.0, 0.0}, {}, kTauP, 0.0), ConfigError);
}

TEST(PhiRtOfMatrix, Examples) {
  const double c = std::cos(0.4), s = std::sin(0.4);
  const cplx i{0.0, 1.0};
  EXPECT_NEAR(phi_rt_of_matrix({c, i * s, c, i * s}), kPi, 1e-14);
  EXPECT_NEAR(phi_rt_of_matrix({0.3, 0.4, 0.5, 0.2}), 0.0, 1e-14);
  EXPECT_THROW(phi_rt_of_matrix({1.0, 0.0, 1.0, 0.2}), DomainError);
}

TEST(PhiRtOfMatrix, InvariantUnderPortPhases) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ph(-kPi, kPi), mag(0.1, 0.7);
  for (int trial = 0; trial < 200; ++trial) {
    SplitterMatrix m{std::polar(mag(rng), ph(rng)), std::polar(mag(rng), ph(rng)), std::polar(mag(rng), ph(rng)),
                     std::polar(mag(rng), ph(rng))};
    const double ref = phi_rt_of_matrix(m);
    // Rows are output ports, columns input ports: [[t1, r2], [r1, t2]].
    const cplx out_m = unit(ph(rng)), out_a = unit(ph(rng)), in_m = unit(ph(rng)), in_a = unit(ph(rng));
    SplitterMatrix g{m.t1 * out_m * in_m, m.r1 * out_a * in_m, m.t2 * out_a * in_a, m.r2 * out_m * in_a};
    EXPECT_LT(angle_distance(phi_rt_of_matrix(g), ref), 1e-12);
  }
}

TEST(Hermiticity, Identity) {
  const auto r = hermiticity_report(SplitterMatrix{});
  EXPECT_NEAR(r.unitarity_distance, 0.0, 1e-15);
  EXPECT_TRUE(r.unitary);
  EXPECT_NEAR(r.magnon_port_sum, 1.0, 1e-15);
  EXPECT_NEAR(r.photon_port_sum, 1.0, 1e-15);
  EXPECT_FALSE(r.phi_rt.has_value());
}

TEST(Hermiticity, LossyMeasuredMagnitudes) {
  const SplitterMatrix m{std::sqrt(0.15), std::sqrt(0.20), std::sqrt(0.26), std::sqrt(0.22)};
  const auto r = hermiticity_report(m);
  EXPECT_NEAR(r.magnon_port_sum, 0.35, 1e-12);
  EXPECT_NEAR(r.photon_port_sum, 0.48, 1e-12);
  EXPECT_GT(r.unitarity_distance, 0.1);
  EXPECT_FALSE(r.unitary);
  EXPECT_TRUE(r.passive);
  ASSERT_TRUE(r.phi_rt.has_value());
  EXPECT_NEAR(*r.phi_rt, 0.0, 1e-14);
}

TEST(Hermiticity, HalfIdentity) {
  const auto r = hermiticity_report(SplitterMatrix{0.5, 0.0, 0.5, 0.0});
  EXPECT_NEAR(r.magnon_port_sum, 0.25, 1e-15);
  EXPECT_NEAR(r.photon_port_sum, 0.25, 1e-15);
  EXPECT_NEAR(r.singular_values[0], 0.5, 1e-15);
  EXPECT_NEAR(r.singular_values[1], 0.5, 1e-15);
  EXPECT_NEAR(r.unitarity_distance, std::sqrt(0.5), 1e-15);
}

TEST(ProjectOutputs, RoundTripsInjectedMatrix) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ph(-kPi, kPi), mag(0.05, 0.7);
  for (int trial = 0; trial < 50; ++trial) {
    const SplitterMatrix m{mag(rng), std::polar(mag(rng), ph(rng)), mag(rng), std::polar(mag(rng), ph(rng))};
    const CVec u_m = random_mode(rng, 64), u_a = random_mode(rng, 300);
    // Arbitrary common phases of the output modes must not matter.
    const cplx pm = unit(ph(rng)), pa = unit(ph(rng));
    PortOutputs a{scaled(u_a, m.r1 * pa), 1.0, scaled(u_m, m.t1 * pm), 1.0};
    PortOutputs b{scaled(u_a, m.t2 * pa), 1.0, scaled(u_m, m.r2 * pm), 1.0};
    const auto got = project_outputs(a, b);
    EXPECT_NEAR(std::abs(got.t1 - m.t1), 0.0, 1e-6);
    EXPECT_NEAR(std::abs(got.r1 - m.r1), 0.0, 1e-6);
    EXPECT_NEAR(std::abs(got.t2 - m.t2), 0.0, 1e-6);
    EXPECT_NEAR(std::abs(got.r2 - m.r2), 0.0, 1e-6);
  }
}

TEST(ProjectOutputs, HonoursSampleWeights) {
  std::mt19937_64 rng(3);
  const CVec u_m = random_mode(rng, 40), u_a = random_mode(rng, 40);
  // Same physical amplitudes, sampled at dz = 0.25: samples are 2x larger.
  PortOutputs a{scaled(u_a, 2.0 * 0.5), 0.25, scaled(u_m, 2.0 * 0.6), 0.25};
  PortOutputs b{scaled(u_a, 2.0 * 0.4), 0.25, scaled(u_m, 2.0 * 0.3), 0.25};
  const auto got = project_outputs(a, b);
  EXPECT_NEAR(std::abs(got.t1), 0.6, 1e-12);
  EXPECT_NEAR(std::abs(got.r1), 0.5, 1e-12);
  EXPECT_NEAR(std::abs(got.t2), 0.4, 1e-12);
  EXPECT_NEAR(std::abs(got.r2), 0.3, 1e-12);
}

TEST(ProjectOutputs, TotalAbsorberRejected) {
  PortOutputs dead{CVec(10, 1e-4), 1.0, CVec(10, 0.0), 1.0};
  PortOutputs ok{CVec(10, 0.2), 1.0, CVec(10, 0.1), 1.0};
  EXPECT_THROW(project_outputs(dead, ok), DomainError);
  EXPECT_THROW(project_outputs(ok, dead), DomainError);
}

namespace {

SimulationConfig beamsplit_base(double od, double omega, std::size_t n = 201) {
  SimulationConfig c;
  c.medium = MediumParams::from_od(od);
  c.n_points = n;
  c.t_end = 5.0 * kFwhm + 8.0;
  if (omega > 0.0)
    c.timeline = ControlTimeline(
        {ControlSegment{0.0, 3.5 * kFwhm, omega, 0.1, 0.1, SegmentLabel::beamsplit}});
  return c;
}

CVec gaussian_magnon(const Grid& g, double centre, double width) {
  CVec m(g.n);
  for (std::size_t j = 0; j < g.n; ++j) {
    const double x = (g.z(j) - centre) / width;
    m[j] = std::exp(-x * x);
  }
  return m;
}

PulseEnvelope pulse_at(double t) {
  PulseEnvelope p;
  p.fwhm = kFwhm;
  p.t_center = t;
  return p;
}

}  // namespace

TEST(ExtractMatrix, NoControlNoAtomsIsIdentity) {
  const auto base = beamsplit_base(0.0, 0.0);
  const auto ex = extract_matrix(base, gaussian_magnon(base.grid(), 0.5, 0.2), pulse_at(2.5 * kFwhm));
  EXPECT_NEAR(std::abs(ex.matrix.t1), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(ex.matrix.r1), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(ex.matrix.t2), 1.0, 1e-6);
  EXPECT_NEAR(std::abs(ex.matrix.r2), 0.0, 1e-9);
}

TEST(ExtractMatrix, IndependentOfInputAmplitude) {
  const auto base = beamsplit_base(30.0, 4.0);
  const CVec magnon = gaussian_magnon(base.grid(), 0.4, 0.15);

  auto run = [&](double magnon_scale, double photon_norm) {
    SimulationConfig a = base, b = base;
    a.initial_magnon = scaled(magnon, magnon_scale);
    auto p = pulse_at(2.5 * kFwhm);
    p.amplitude_norm = photon_norm;
    b.input_pulse = p;
    return extract_matrix(a, b).matrix;
  };
  const auto m1 = run(1.0, 1.0);
  const auto m2 = run(0.3, 0.25);
  EXPECT_NEAR(std::abs(m2.t1 - m1.t1), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(m2.r1 - m1.r1), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(m2.t2 - m1.t2), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(m2.r2 - m1.r2), 0.0, 1e-9);

  const auto normalized = extract_matrix(base, magnon, pulse_at(2.5 * kFwhm)).matrix;
  EXPECT_NEAR(std::abs(normalized.t1 - m1.t1), 0.0, 1e-9);
  EXPECT_LE(hermiticity_report(normalized).singular_values[0], 1.0 + 1e-6);
}

TEST(ExtractMatrix, RejectsMismatchedRuns) {
  auto base = beamsplit_base(30.0, 4.0);
  SimulationConfig a = base, b = base;
  a.initial_magnon = gaussian_magnon(base.grid(), 0.5, 0.2);
  b.input_pulse = pulse_at(2.5 * kFwhm);
  b.n_points = 301;
  EXPECT_THROW(extract_matrix(a, b), ConfigError);
  b.n_points = base.n_points;
  a.input_pulse = pulse_at(1.0);
  EXPECT_THROW(extract_matrix(a, b), ConfigError);
}
