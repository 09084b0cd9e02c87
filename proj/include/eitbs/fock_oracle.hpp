// fock_oracle.hpp - exact few-particle statistics through a lossy linear network.
//
// A subunitary transfer matrix is embedded in a unitary on twice as many modes
// (the extra modes are loss channels). Each input particle is expanded through
// the dilation, and probabilities are read off the resulting Fock amplitudes.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "eitbs/core.hpp"

namespace eitbs {

inline constexpr int kMaxSignalModes = 4;
inline constexpr int kMaxParticles = 3;

struct ModeNetwork {
  Eigen::MatrixXcd transfer;  // signal modes, out x in
  Eigen::MatrixXcd dilation;  // unitary, top-left block is `transfer`
  std::vector<std::string> port_labels;

  int signal_modes() const { return static_cast<int>(transfer.rows()); }
  int total_modes() const { return static_cast<int>(dilation.rows()); }
};

/// Occupations are 0 or 1 per signal mode. `overlaps(j, k)` is the overlap
/// ratio between the j-th and k-th particle (in mode order), i.e. the squared
/// modulus of their wavepacket inner product.
struct FockInput {
  std::vector<int> occupations;
  Eigen::MatrixXd overlaps;

  int particles() const { return std::accumulate(occupations.begin(), occupations.end(), 0); }
};

/// All particles fully indistinguishable.
inline FockInput identical_input(std::vector<int> occupations) {
  FockInput in;
  in.occupations = std::move(occupations);
  const int n = in.particles();
  in.overlaps = Eigen::MatrixXd::Ones(n, n);
  return in;
}

/// The |1,1> magnon-photon input with overlap ratio `overlap`.
inline FockInput pair_input(double overlap) {
  FockInput in;
  in.occupations = {1, 1};
  in.overlaps.resize(2, 2);
  in.overlaps << 1.0, overlap, overlap, 1.0;
  return in;
}

/// Three particles in modes (0, 1, 2) with neighbour overlaps `i12`, `i23`.
/// Particles 1 and 3 never meet directly; their amplitude overlap is the
/// product of the neighbour amplitude overlaps, which keeps the Gram matrix
/// positive semidefinite for any pair of inputs in [0, 1].
inline FockInput chain_input(double i12, double i23) {
  FockInput in;
  in.occupations = {1, 1, 1};
  in.overlaps.resize(3, 3);
  const double i13 = i12 * i23;
  in.overlaps << 1.0, i12, i13, i12, 1.0, i23, i13, i23, 1.0;
  return in;
}

namespace detail {

inline std::vector<std::string> default_labels(int m) {
  static const char* kTwo[] = {"magnon", "photon"};
  static const char* kThree[] = {"photon_1", "photon_2", "readout"};
  std::vector<std::string> out;
  for (int j = 0; j < m; ++j) {
    if (m == 2)
      out.emplace_back(kTwo[j]);
    else if (m == 3)
      out.emplace_back(kThree[j]);
    else
      out.push_back("mode_" + std::to_string(j));
  }
  for (int j = 0; j < m; ++j) out.push_back("loss_" + std::to_string(j));
  return out;
}

}  // namespace detail

/// Unitary dilation [[T, -(1 - T T^*)^1/2], [(1 - T^* T)^1/2, T^*]]. The
/// identity dilates to the identity; loss modes start in vacuum.
inline ModeNetwork dilate(const Eigen::MatrixXcd& transfer) {
  const Eigen::Index m = transfer.rows();
  if (m == 0 || transfer.cols() != m) throw DomainError("dilate: transfer matrix must be square and non-empty");
  if (m > kMaxSignalModes) throw DomainError("dilate: at most 4 signal modes are supported");
  if (!transfer.allFinite()) throw DomainError("dilate: non-finite transfer matrix");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(transfer, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv(0) > 1.0 + 1e-9)
    throw DomainError("dilate: non-physical gain, largest singular value " + std::to_string(sv(0)) + " > 1");
  Eigen::VectorXd defect(m);
  for (Eigen::Index j = 0; j < m; ++j) defect(j) = std::sqrt(std::max(0.0, 1.0 - sv(j) * sv(j)));
  const Eigen::MatrixXcd& u = svd.matrixU();
  const Eigen::MatrixXcd& v = svd.matrixV();

  ModeNetwork net;
  net.transfer = transfer;
  net.dilation.resize(2 * m, 2 * m);
  net.dilation.topLeftCorner(m, m) = transfer;
  net.dilation.topRightCorner(m, m) = -(u * defect.asDiagonal() * u.adjoint());
  net.dilation.bottomLeftCorner(m, m) = v * defect.asDiagonal() * v.adjoint();
  net.dilation.bottomRightCorner(m, m) = transfer.adjoint();
  net.port_labels = detail::default_labels(static_cast<int>(m));

  const double err =
      (net.dilation.adjoint() * net.dilation - Eigen::MatrixXcd::Identity(2 * m, 2 * m)).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw SolverError("dilate: unitarity check failed (" + std::to_string(err) + ")");
  return net;
}

inline ModeNetwork dilate(const SplitterMatrix& m) {
  Eigen::Matrix2cd t;
  // Inputs (magnon, photon) -> outputs (magnon, photon).
  t << m.t1, m.r2, m.r1, m.t2;
  return dilate(Eigen::MatrixXcd(t));
}

namespace detail {

// Rows are the particles' internal states in an orthonormal basis: row j dotted
// into row k gives sqrt(overlaps(j, k)).
inline Eigen::MatrixXcd internal_states(const Eigen::MatrixXd& overlaps) {
  const Eigen::Index n = overlaps.rows();
  if (overlaps.cols() != n) throw ConfigError("FockInput: overlap matrix must be square");
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double x = overlaps(j, k);
      if (!(x >= 0.0 && x <= 1.0 + 1e-12)) throw ConfigError("FockInput: overlaps must lie in [0, 1]");
      if (std::abs(x - overlaps(k, j)) > 1e-12) throw ConfigError("FockInput: overlap matrix must be symmetric");
      gram(j, k) = std::sqrt(std::min(1.0, x));
    }
    if (std::abs(overlaps(j, j) - 1.0) > 1e-12) throw ConfigError("FockInput: overlap diagonal must be 1");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.eigenvalues().minCoeff() < -1e-10)
    throw ConfigError("FockInput: amplitude Gram matrix is not positive semidefinite");
  // gram = V diag(l) V^T = B B^T with B = V diag(sqrt l).
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return (eig.eigenvectors() * root.asDiagonal()).cast<cplx>();
}

}  // namespace detail

inline void validate(const ModeNetwork& net, const FockInput& in) {
  if (static_cast<int>(in.occupations.size()) != net.signal_modes())
    throw ConfigError("FockInput: one occupation per signal mode required");
  for (int n : in.occupations)
    if (n < 0 || n > 1) throw ConfigError("FockInput: occupations must be 0 or 1");
  const int n = in.particles();
  if (n > kMaxParticles) throw DomainError("output_distribution: more than 3 particles is unsupported");
  if (in.overlaps.rows() != n) throw ConfigError("FockInput: overlap matrix must be particles x particles");
}

/// Probability of every signal-mode occupation pattern, loss modes and
/// internal states traced out. Patterns with fewer particles than the input
/// are loss outcomes. The probabilities sum to 1.
inline Distribution output_distribution(const ModeNetwork& net, const FockInput& in) {
  validate(net, in);
  const int n = in.particles();
  const int m_sig = net.signal_modes();
  const int m_all = net.total_modes();
  Distribution out;
  if (n == 0) {
    out[std::vector<int>(m_sig, 0)] = 1.0;
    return out;
  }

  std::vector<int> source;
  for (int j = 0; j < m_sig; ++j)
    if (in.occupations[j] == 1) source.push_back(j);
  const Eigen::MatrixXcd states = detail::internal_states(in.overlaps);
  const int m_int = static_cast<int>(states.cols());

  // Each particle becomes sum_{o, s} U(o, src) B(j, s) a^dag_{o, s}. A term of
  // the product is a monomial in the joint (o, s) modes; sorting the indices
  // collects equal monomials.
  const int slots = m_all * m_int;
  std::map<std::vector<int>, cplx> amp;
  std::vector<int> idx(n, 0);
  std::vector<int> key(n);
  const long long terms = static_cast<long long>(std::pow(slots, n));
  for (long long t = 0; t < terms; ++t) {
    long long rest = t;
    cplx a{1.0, 0.0};
    for (int j = 0; j < n; ++j) {
      idx[j] = static_cast<int>(rest % slots);
      rest /= slots;
      const int o = idx[j] / m_int;
      const int s = idx[j] % m_int;
      a *= net.dilation(o, source[j]) * states(j, s);
    }
    if (a == cplx{}) continue;
    key = idx;
    std::sort(key.begin(), key.end());
    amp[key] += a;
  }

  for (const auto& [k, a] : amp) {
    // prod (a^dag)^{n_i} |0> = prod sqrt(n_i!) |n>.
    double mult = 1.0;
    for (std::size_t p = 0; p < k.size();) {
      std::size_t q = p;
      while (q < k.size() && k[q] == k[p]) ++q;
      for (std::size_t f = 2; f <= q - p; ++f) mult *= static_cast<double>(f);
      p = q;
    }
    std::vector<int> pattern(m_sig, 0);
    for (int slot : k) {
      const int o = slot / m_int;
      if (o < m_sig) ++pattern[o];
    }
    out[pattern] += std::norm(a) * mult;
  }
  return out;
}

inline double total_probability(const Distribution& d) {
  double s = 0.0;
  for (const auto& [k, p] : d) s += p;
  return s;
}

/// Probability that the signal modes hold no particle lost to the environment,
/// i.e. that every input particle is found in some signal mode.
inline double survival_probability(const Distribution& d, int particles) {
  double s = 0.0;
  for (const auto& [k, p] : d)
    if (std::accumulate(k.begin(), k.end(), 0) == particles) s += p;
  return s;
}

/// P(one particle in each of `ports`) divided by the same coincidence for
/// independently routed particles, sum over assignments of prod |T(port, src)|^2.
inline double coincidence_correlation(const Distribution& probs, const ModeNetwork& net, const FockInput& in,
                                      const std::vector<int>& ports) {
  validate(net, in);
  const int n = in.particles();
  if (static_cast<int>(ports.size()) != n)
    throw DomainError("coincidence_correlation: need one detection port per particle");
  std::vector<int> source;
  for (int j = 0; j < net.signal_modes(); ++j)
    if (in.occupations[j] == 1) source.push_back(j);

  std::vector<int> pattern(net.signal_modes(), 0);
  for (int p : ports) {
    if (p < 0 || p >= net.signal_modes()) throw DomainError("coincidence_correlation: port out of range");
    ++pattern[p];
  }
  for (int c : pattern)
    if (c > 1) throw DomainError("coincidence_correlation: ports must be distinct");

  std::vector<int> perm(ports);
  std::sort(perm.begin(), perm.end());
  double reference = 0.0;
  do {
    double prod = 1.0;
    for (int j = 0; j < n; ++j) prod *= std::norm(net.transfer(perm[j], source[j]));
    reference += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (!(reference > 1e-15)) throw DomainError("correlation undefined: zero reference coincidence probability");

  const auto it = probs.find(pattern);
  const double coincidence = it == probs.end() ? 0.0 : it->second;
  return coincidence / reference;
}

/// Magnon-photon cross-correlation of a two-particle, two-mode distribution.
inline double g2_from_distribution(const Distribution& probs, const ModeNetwork& net, const FockInput& in) {
  if (net.signal_modes() != 2 || in.particles() != 2)
    throw DomainError("g2_from_distribution: needs a two-mode network and two particles");
  return coincidence_correlation(probs, net, in, {0, 1});
}

/// Threefold correlation across the three output modes of a cascade.
inline double g3_from_distribution(const Distribution& probs, const ModeNetwork& net, const FockInput& in) {
  if (net.signal_modes() != 3 || in.particles() != 3)
    throw DomainError("g3_from_distribution: needs a three-mode network and three particles");
  return coincidence_correlation(probs, net, in, {0, 1, 2});
}

/// Transfer matrix of two splitter passes and a readout. Inputs are (stored
/// magnon, photon 2, photon 3); outputs are (photon emitted in pass 1, photon
/// emitted in pass 2, readout of the remaining magnon). Pass 2 acts on the
/// magnon left by pass 1.
inline Eigen::MatrixXcd cascade_transfer(const SplitterMatrix& s1, const SplitterMatrix& s2,
                                         cplx readout = {1.0, 0.0}) {
  Eigen::MatrixXcd t(3, 3);
  t << s1.r1, s1.t2, 0.0,                                          //
      s2.r1 * s1.t1, s2.r1 * s1.r2, s2.t2,                         //
      readout * s2.t1 * s1.t1, readout * s2.t1 * s1.r2, readout * s2.r2;
  return t;
}

inline ModeNetwork cascade_three(const SplitterMatrix& s1, const SplitterMatrix& s2, cplx readout = {1.0, 0.0}) {
  if (std::abs(readout) > 1.0 + 1e-12) throw DomainError("cascade_three: readout efficiency above 1");
  return dilate(cascade_transfer(s1, s2, readout));
}

inline ModeNetwork cascade_three(const std::vector<SplitterMatrix>& stages, cplx readout = {1.0, 0.0}) {
  if (stages.size() != 2) throw ConfigError("cascade_three: exactly two splitter stages required");
  return cascade_three(stages[0], stages[1], readout);
}

/// Balanced rank-one stage with phi_rt = 0: every amplitude 1/2.
inline SplitterMatrix ideal_nonhermitian_stage() { return SplitterMatrix{0.5, 0.5, 0.5, 0.5}; }

}  // namespace eitbs
