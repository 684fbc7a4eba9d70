#include "darkspin/mps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "darkspin/errors.hpp"
#include "darkspin/wigner.hpp"

namespace darkspin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign_pow(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

CMat MPSUnitCell::coupled(int J, HalfInt m) const {
  const int n = d();
  CMat out = CMat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const HalfInt ma = index_to_m(S, a), mb = index_to_m(S, b);
      if (ma + mb != m) continue;
      const double cg = clebsch_gordan(S, ma, S, mb, J, m);
      if (cg != 0) out += cg * A[a * n + b];
    }
  return out;
}

std::vector<cd> f_coeffs(HalfInt S, double delta_e, double delta_b, double chi) {
  const std::vector<double> th = gate_phases(S, -delta_e / 2, delta_b / 2, chi);
  const std::vector<double> tt = gate_phases(S, -delta_e / 2, -delta_b / 2, chi);
  const int n = S.twice + 1;
  std::vector<cd> f(n, cd(0, 0));
  for (int J = 0; J < n; ++J)
    for (int j = 0; j < n; ++j)
      for (int jp = 0; jp < n; ++jp) {
        const double w = sign_pow(std::abs(j - J)) * (2 * j + 1) * (2 * jp + 1) * wigner_6j(S, S, j, S, S, jp) *
                         wigner_6j(S, S, J, S, S, jp);
        f[J] += w * std::polar(1.0, th[j] + tt[jp]);
      }
  return f;
}

MPSUnitCell unit_cell_large_omega(HalfInt S, const std::vector<cd>& f) {
  const int n = S.twice + 1;
  if (static_cast<int>(f.size()) != n) throw DomainError("unit_cell_large_omega: need 2S+1 amplitudes");
  MPSUnitCell cell;
  cell.S = S;
  cell.A.assign(n * n, CMat::Zero(n, n));
  const double norm = 1.0 / std::sqrt(double(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const HalfInt ma = index_to_m(S, a), mb = index_to_m(S, b), M = ma + mb;
      CMat& A = cell.A[a * n + b];
      for (int J = std::abs(M.twice) / 2; J < n; ++J) {
        const double outer = clebsch_gordan(S, ma, S, mb, J, M);
        if (outer == 0) continue;
        for (int al = 0; al < n; ++al)
          for (int be = 0; be < n; ++be) {
            const HalfInt alpha = index_to_m(S, al), beta = index_to_m(S, be);
            if (alpha - beta != M) continue;
            const double inner = clebsch_gordan(S, alpha, S, -beta, J, M);
            A(al, be) += outer * sign_pow((S.twice + beta.twice) / 2) * norm * inner * f[J];
          }
      }
    }
  cell.v_left.assign(n, CVec::Zero(n));
  cell.v_right.assign(n, CVec::Zero(n));
  for (int i = 0; i < n; ++i) {
    cell.v_left[i](n - 1 - i) = sign_pow(i) * norm;
    cell.v_right[i](i) = 1.0;
  }
  return cell;
}

MPSUnitCell unit_cell_from_circuit(HalfInt S, double delta_e, double delta_b, double chi, double omega) {
  const int n = S.twice + 1;
  const CMat U_ab = pair_gate(S, gate_phases(S, -delta_e / 2, delta_b / 2, chi));
  const CMat U_bc = pair_gate(S, gate_phases(S, -delta_e / 2, -delta_b / 2, chi));
  const CVec dimer = pair_state_vector(pair_coeffs(S, delta_b, chi, omega));
  const CVec edge = pair_state_vector(pair_coeffs(S, delta_e, chi, omega));
  MPSUnitCell cell;
  cell.S = S;
  cell.A.assign(n * n, CMat::Zero(n, n));
  for (int al = 0; al < n; ++al) {
    CVec x = CVec::Zero(n * n * n);
    x.segment(al * n * n, n * n) = dimer;
    apply_two_site(x, S, 3, 0, U_ab);
    apply_two_site(x, S, 3, 1, U_bc);
    for (int s = 0; s < n * n; ++s)
      for (int be = 0; be < n; ++be) cell.A[s](al, be) = x(s * n + be);
  }
  cell.v_left.assign(n, CVec::Zero(n));
  cell.v_right.assign(n, CVec::Zero(n));
  for (int i = 0; i < n; ++i) {
    cell.v_left[i] = edge.segment(i * n, n);
    cell.v_right[i](i) = 1.0;
  }
  return cell;
}

ChainState contract(const MPSUnitCell& cell, int L, std::size_t budget_bytes) {
  if (L < 2 || L % 2) throw DomainError("contract: L must be even and >= 2");
  const int n = cell.d();
  const double dim = std::pow(double(n), L);
  const double bytes = dim * 16.0 * 2;
  if (bytes > double(budget_bytes))
    throw CapacityError("contract: dense chain exceeds memory budget", static_cast<std::size_t>(bytes));
  CMat cur(n, n);
  for (int i = 0; i < n; ++i) cur.row(i) = cell.v_left[i].transpose();
  for (int k = 0; k < L / 2 - 1; ++k) {
    CMat next(cur.rows() * n * n, n);
    for (Eigen::Index p = 0; p < cur.rows(); ++p)
      for (int s = 0; s < n * n; ++s) next.row(p * n * n + s) = cur.row(p) * cell.A[s];
    cur.swap(next);
  }
  ChainState out{cell.S, L, CVec(cur.rows() * n)};
  for (Eigen::Index p = 0; p < cur.rows(); ++p)
    for (int i = 0; i < n; ++i) out.amp(p * n + i) = (cur.row(p) * cell.v_right[i]).value();
  return out;
}

CMat transfer_matrix(const MPSUnitCell& cell, const CMat& O) {
  const int n = cell.d();
  CMat T = CMat::Zero(n * n, n * n);
  for (int s = 0; s < n * n; ++s)
    for (int sp = 0; sp < n * n; ++sp) {
      const cd o = O(sp, s);
      if (o == cd(0, 0)) continue;
      const CMat& A = cell.A[s];
      const CMat B = cell.A[sp].conjugate();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (A(i, j) != cd(0, 0)) T.block(i * n, j * n, n, n) += o * A(i, j) * B;
    }
  return T;
}

CMat cell_identity(HalfInt S) {
  const int n = S.twice + 1;
  return CMat::Identity(n * n, n * n);
}

CMat cell_sz(HalfInt S) {
  const int n = S.twice + 1;
  CMat O = CMat::Zero(n * n, n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) O(a * n + b, a * n + b) = (index_to_m(S, a) + index_to_m(S, b)).value();
  return O;
}

CMat cell_string(HalfInt S, double phi) {
  const int n = S.twice + 1;
  CMat O = CMat::Zero(n * n, n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      O(a * n + b, a * n + b) = std::polar(1.0, phi * (index_to_m(S, a) + index_to_m(S, b)).value());
  return O;
}

Dominant dominant_eigen(const CMat& T) {
  Eigen::ComplexEigenSolver<CMat> right(T), left(T.transpose());
  Eigen::Index kr = 0;
  right.eigenvalues().cwiseAbs().maxCoeff(&kr);
  const cd lam = right.eigenvalues()(kr);
  Eigen::Index kl = 0;
  (left.eigenvalues().array() - lam).abs().minCoeff(&kl);
  Dominant d{lam, left.eigenvectors().col(kl), right.eigenvectors().col(kr)};
  const cd overlap = d.left.transpose() * d.right;
  if (std::abs(overlap) < 1e-14) throw AccuracyError("dominant_eigen: left and right eigenvectors orthogonal");
  d.left /= overlap;
  return d;
}

void normalize_cell(MPSUnitCell& cell) {
  const CMat T = transfer_matrix(cell, cell_identity(cell.S));
  const double rho = Eigen::ComplexEigenSolver<CMat>(T, false).eigenvalues().cwiseAbs().maxCoeff();
  for (auto& A : cell.A) A /= std::sqrt(rho);
}

namespace {

// |lambda_1| / |lambda_0| with one copy of the dominant eigenvalue removed.
double second_ratio(const CMat& T) {
  Eigen::VectorXd mod = Eigen::ComplexEigenSolver<CMat>(T, false).eigenvalues().cwiseAbs();
  std::sort(mod.data(), mod.data() + mod.size(), std::greater<>());
  return mod.size() > 1 ? mod(1) / mod(0) : 0.0;
}

double length_from(double ratio) {
  if (ratio <= 1e-13) return 0.0;
  return -2.0 / std::log(ratio);
}

double identity_radius(const MPSUnitCell& cell) {
  return Eigen::ComplexEigenSolver<CMat>(transfer_matrix(cell, cell_identity(cell.S)), false)
      .eigenvalues()
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace

CorrelationLengths correlation_lengths(const MPSUnitCell& cell, double phi) {
  CorrelationLengths c{};
  const double r1 = second_ratio(transfer_matrix(cell, cell_identity(cell.S)));
  c.lambda1_abs = r1;
  c.corr_infinite = r1 >= 1 - 1e-12;
  c.L_corr = c.corr_infinite ? kInf : length_from(r1);
  const double rho = identity_radius(cell);
  const double rG = Eigen::ComplexEigenSolver<CMat>(transfer_matrix(cell, cell_string(cell.S, phi)), false)
                        .eigenvalues()
                        .cwiseAbs()
                        .maxCoeff() /
                    rho;
  c.lambdaG_abs = rG;
  c.string_infinite = std::abs(rG - 1) <= 1e-12;
  c.L_string = c.string_infinite ? kInf : length_from(rG);
  return c;
}

double string_order(const MPSUnitCell& cell, double phi) {
  const Dominant I = dominant_eigen(transfer_matrix(cell, cell_identity(cell.S)));
  const CMat TG = transfer_matrix(cell, cell_string(cell.S, phi)) / I.lambda;
  const Dominant G = dominant_eigen(TG);
  if (std::abs(std::abs(G.lambda) - 1) > 1e-12) return 0.0;
  const CMat Sz = cell_sz(cell.S);
  const CMat TL = transfer_matrix(cell, Sz * cell_string(cell.S, phi)) / I.lambda;
  const CMat TR = transfer_matrix(cell, Sz) / I.lambda;
  const cd left = I.left.transpose() * TL * G.right;
  const cd right = G.left.transpose() * TR * I.right;
  return (left * right).real();
}

double string_order_closed(HalfInt S, const std::vector<cd>& f, double phi) {
  const double s = S.value();
  double acc = 0;
  for (int J = 0; J < static_cast<int>(f.size()); ++J) acc += J * (J + 1.0) * (2 * J + 1) * std::norm(f[J]);
  acc /= 2 * s * (s + 1) * std::pow(2 * s + 1, 3);
  const double h = h_closed(S, phi);
  return acc * acc * h * h;
}

double h_sum(HalfInt S, double phi) {
  double h = 0;
  for (int t = -S.twice; t <= S.twice; t += 2) h += 0.5 * t * std::sin(0.5 * t * phi);
  return h;
}

double h_closed(HalfInt S, double phi) {
  const double sh = std::sin(phi / 2);
  if (std::abs(sh) < 1e-6) return h_sum(S, phi);
  const double s = S.value();
  return ((s + 1) * std::sin(s * phi) - s * std::sin((s + 1) * phi)) / (2 * sh * sh);
}

double sz_connected(const MPSUnitCell& cell, int cells) {
  if (cells < 1) throw DomainError("sz_connected: separation must be at least one cell");
  const int n = cell.d();
  CMat sza = CMat::Zero(n * n, n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) sza(a * n + b, a * n + b) = index_to_m(cell.S, a).value();
  const Dominant I = dominant_eigen(transfer_matrix(cell, cell_identity(cell.S)));
  const CMat T = transfer_matrix(cell, cell_identity(cell.S)) / I.lambda;
  const CMat Tz = transfer_matrix(cell, sza) / I.lambda;
  const cd mean = I.left.transpose() * Tz * I.right;
  CVec v = Tz * I.right;
  for (int k = 1; k < cells; ++k) v = T * v;
  const cd corr = I.left.transpose() * Tz * v;
  return (corr - mean * mean).real();
}

ChainState aklt_reference(int L) {
  const std::vector<cd> f{0.0, 2.0 / std::sqrt(3.0)};
  return contract(unit_cell_large_omega(half(1), f), L);
}

double aklt_fidelity(const ChainState& s) {
  if (s.S != half(1)) throw DomainError("aklt_fidelity: requires S = 1/2");
  if (s.L < 2 || s.L % 2) throw DomainError("aklt_fidelity: requires even L");
  const ChainState ref = aklt_reference(s.L);
  return std::norm(ref.amp.dot(s.amp)) / (ref.amp.squaredNorm() * s.amp.squaredNorm());
}

}  // namespace darkspin
