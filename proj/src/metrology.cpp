#include "darkspin/metrology.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "darkspin/errors.hpp"

namespace darkspin {

double qfi_pair(const PairState& p) {
  double f = 0;
  for (int J = 0; J < static_cast<int>(p.c.size()); ++J) {
    const double b = pair_coeff(PairCoeff::B, p.S, J, -J);
    f += std::norm(p.c[J]) * b * b;
  }
  return 4 * f;
}

Wineland wineland(const PairState& p) {
  const int n = static_cast<int>(p.c.size());
  double var = 0;
  cd z = 0;
  for (int J = 0; J < n; ++J) {
    var += std::norm(p.c[J]) * J / 2.0;
    if (J + 1 < n) z += std::conj(p.c[J + 1]) * p.c[J] * pair_coeff(PairCoeff::BMinus, p.S, J, -J);
  }
  Wineland w;
  w.var_y_plus = var;
  w.spin_length = z.real();
  w.xi2 = 4 * p.S.value() * var / (w.spin_length * w.spin_length);
  return w;
}

double prior_characteristic(const PhasePrior& prior, int n) {
  switch (prior.kind) {
    case PhasePrior::Kind::Delta:
      return 1.0;
    case PhasePrior::Kind::Uniform:
      return n == 0 ? 1.0 : 0.0;
    case PhasePrior::Kind::VonMises:
      if (!(prior.kappa >= 0) || prior.kappa > 500) throw DomainError("von Mises kappa outside [0, 500]");
      if (prior.kappa == 0) return n == 0 ? 1.0 : 0.0;
      return std::cyl_bessel_i(double(std::abs(n)), prior.kappa) / std::cyl_bessel_i(0.0, prior.kappa);
  }
  return 0.0;
}

double qfi_mixed(const CMat& rho, const CMat& G, double floor) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (rho + rho.adjoint()));
  const Eigen::VectorXd lam = es.eigenvalues().unaryExpr([floor](double x) { return x < floor ? 0.0 : x; });
  const CMat Gk = es.eigenvectors().adjoint() * G * es.eigenvectors();
  double f = 0;
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    for (Eigen::Index l = 0; l < lam.size(); ++l) {
      const double s = lam(k) + lam(l);
      if (s <= 0) continue;
      const double d = lam(k) - lam(l);
      f += d * d / s * std::norm(Gk(k, l));
    }
  return 2 * f;
}

CMat dephased_pair_rho(const PairState& p, const PhasePrior& prior) {
  const CVec v = pair_state_vector(p);
  const int d = spin_dim(p.S);
  std::vector<int> twice_M(d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) twice_M[a * d + b] = p.S.twice * 2 - 2 * a - 2 * b;
  CMat rho = v * v.adjoint();
  for (int i = 0; i < d * d; ++i)
    for (int j = 0; j < d * d; ++j) rho(i, j) *= prior_characteristic(prior, (twice_M[i] - twice_M[j]) / 2);
  return rho;
}

double qfi_dephased(const PairState& p, const PhasePrior& prior) {
  if (prior.kind == PhasePrior::Kind::Delta) return qfi_pair(p);
  if (prior.kind == PhasePrior::Kind::Uniform || prior.kappa == 0) {
    // Dephasing projects onto fixed Sz1+Sz2; each block is rank one.
    const ChainState st{p.S, 2, pair_state_vector(p)};
    return qfi_dephased_weighted(st, {1, -1}, {{1, 1}});
  }
  const int d = spin_dim(p.S);
  CMat G = CMat::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) G(a * d + b, a * d + b) = index_to_m(p.S, a).value() - index_to_m(p.S, b).value();
  return qfi_mixed(dephased_pair_rho(p, prior), G);
}

namespace {

// exp(-i pi/2 Sy), real in the standard basis.
Eigen::MatrixXd small_d_half_pi(HalfInt S) {
  const auto s = spin_matrices(S);
  Eigen::SelfAdjointEigenSolver<CMat> es(s.sy);
  CVec ph(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, -std::numbers::pi / 2 * es.eigenvalues()(k));
  const CMat dm = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  return dm.real();
}

// Readout amplitudes with the common-phase-independent factors folded in.
struct Readout {
  Eigen::MatrixXd dm;
  CMat psi;  // psi(i1, i2) * exp(-i pi (m1+m2)/2 - i phi (m1-m2))
  std::vector<double> m;
};

Readout make_readout(const PairState& p, double phi) {
  const int d = spin_dim(p.S);
  Readout r;
  r.dm = small_d_half_pi(p.S);
  const CVec v = pair_state_vector(p);
  r.psi.resize(d, d);
  r.m.resize(d);
  for (int i = 0; i < d; ++i) r.m[i] = index_to_m(p.S, i).value();
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      r.psi(a, b) = v(a * d + b) * std::polar(1.0, -std::numbers::pi / 2 * (r.m[a] + r.m[b]) - phi * (r.m[a] - r.m[b]));
  return r;
}

Eigen::MatrixXd readout_probs(const Readout& r, double theta) {
  const Eigen::Index d = r.psi.rows();
  CVec ph(d);
  for (Eigen::Index i = 0; i < d; ++i) ph(i) = std::polar(1.0, -theta * r.m[i]);
  const CMat x = ph.asDiagonal() * r.psi * ph.asDiagonal();
  const Eigen::MatrixXd re = r.dm * x.real() * r.dm.transpose();
  const Eigen::MatrixXd im = r.dm * x.imag() * r.dm.transpose();
  return re.cwiseAbs2() + im.cwiseAbs2();
}

}  // namespace

EllipsePmf ellipse_pmf_fixed(const PairState& p, double phi, double theta) {
  const Readout r = make_readout(p, phi);
  return {p.S, readout_probs(r, theta), 0};
}

EllipsePmf ellipse_pmf(const PairState& p, double phi, double tol) {
  const Readout r = make_readout(p, phi);
  const Eigen::Index d = r.psi.rows();
  int n = 8;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < n; ++k) sum += readout_probs(r, 2 * std::numbers::pi * k / n);
  Eigen::MatrixXd prev = sum / n;
  while (n < (1 << 16)) {
    for (int k = 0; k < n; ++k) sum += readout_probs(r, 2 * std::numbers::pi * (k + 0.5) / n);
    n *= 2;
    Eigen::MatrixXd cur = sum / n;
    const double change = (cur - prev).cwiseAbs().maxCoeff();
    prev.swap(cur);
    if (change < tol) return {p.S, prev, n};
  }
  throw AccuracyError("ellipse_pmf: theta quadrature did not converge");
}

namespace {

double fisher_from(const Eigen::MatrixXd& P, const Eigen::MatrixXd& dP) {
  double f = 0;
  for (Eigen::Index i = 0; i < P.size(); ++i) {
    const double pv = P.data()[i];
    if (pv <= 1e-14) continue;
    f += dP.data()[i] * dP.data()[i] / pv;
  }
  return f;
}

}  // namespace

double cfi(const PairState& p, double phi) {
  const Eigen::MatrixXd P = ellipse_pmf(p, phi).P;
  double h = 1e-3;
  double last = 0;
  for (int attempt = 0; attempt < 8; ++attempt, h /= 2) {
    const Eigen::MatrixXd dh = (ellipse_pmf(p, phi + h).P - ellipse_pmf(p, phi - h).P) / (2 * h);
    const Eigen::MatrixXd dh2 = (ellipse_pmf(p, phi + h / 2).P - ellipse_pmf(p, phi - h / 2).P) / h;
    const double f1 = fisher_from(P, dh), f2 = fisher_from(P, dh2);
    last = (4 * f2 - f1) / 3;
    if (std::abs(f2 - f1) <= 1e-4 * std::max(f2, 1e-12)) return last;
  }
  throw AccuracyError("cfi: finite-difference derivative did not stabilise (last " + std::to_string(last) + ")");
}

FourQfi four_qfi_components(HalfInt S, const std::vector<cd>& g) {
  const int n = S.twice + 1;
  const double norm = 3.0 * n * n;
  FourQfi f{0, 0, 0, 0};
  for (int j = 0; j < n; ++j) {
    f.ppmm += j * (j + 1.0) * (2 * j + 1) * std::norm(g[j]);
    const cd next = j + 1 < n ? g[j + 1] : cd(0, 0);
    const double w = double(S.twice - j) * (S.twice + j + 2) * (j + 1);
    f.pmpm += w * std::norm(g[j] + next);
    f.pmmp += w * std::norm(g[j] - next);
  }
  f.ppmm *= 16 / norm;
  f.pmpm *= 8 / norm;
  f.pmmp *= 8 / norm;
  return f;
}

namespace {

std::vector<double> weighted_m(const ChainState& s, const std::vector<double>& w) {
  if (static_cast<int>(w.size()) != s.L) throw DomainError("weights must have one entry per site");
  std::vector<double> g(static_cast<std::size_t>(s.amp.size()), 0.0);
  for (Eigen::Index i = 0; i < s.amp.size(); ++i)
    for (int l = 0; l < s.L; ++l) g[i] += w[l] * 0.5 * site_twice_m(s.S, s.L, i, l);
  return g;
}

}  // namespace

double qfi_pure_weighted(const ChainState& s, const std::vector<double>& weights) {
  const auto g = weighted_m(s, weights);
  double mean = 0, sq = 0;
  for (Eigen::Index i = 0; i < s.amp.size(); ++i) {
    const double pr = std::norm(s.amp(i));
    mean += pr * g[i];
    sq += pr * g[i] * g[i];
  }
  return 4 * (sq - mean * mean);
}

double qfi_dephased_weighted(const ChainState& s, const std::vector<double>& weights,
                             const std::vector<std::vector<double>>& dephase) {
  const auto g = weighted_m(s, weights);
  std::vector<std::vector<double>> labels;
  for (const auto& v : dephase) labels.push_back(weighted_m(s, v));
  struct Acc {
    double p = 0, mean = 0, sq = 0;
  };
  std::map<std::vector<long>, Acc> blocks;
  std::vector<long> key(labels.size());
  for (Eigen::Index i = 0; i < s.amp.size(); ++i) {
    for (std::size_t k = 0; k < labels.size(); ++k) key[k] = std::lround(2 * labels[k][i]);
    Acc& a = blocks[key];
    const double pr = std::norm(s.amp(i));
    a.p += pr;
    a.mean += pr * g[i];
    a.sq += pr * g[i] * g[i];
  }
  double f = 0;
  for (const auto& [k, a] : blocks)
    if (a.p > 1e-14) f += 4 * (a.sq - a.mean * a.mean / a.p);
  return f;
}

}  // namespace darkspin
