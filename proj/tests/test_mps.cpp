#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "darkspin/errors.hpp"
#include "darkspin/mps.hpp"
#include "darkspin/wigner.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace darkspin;

namespace {

const double kSqrt2 = std::numbers::sqrt2;

std::vector<double> staircase(int L, double de, double db) {
  std::vector<double> d(L);
  d[0] = de / 2;
  d[L - 1] = -de / 2;
  for (int k = 1; k < L - 1; ++k) d[k] = (k % 2 ? db : -db) / 2;
  return d;
}

ChainState dense_chain(HalfInt S, int L, double de, double db, double chi, double omega) {
  ChainModel m;
  m.S = S;
  m.deltas = staircase(L, de, db);
  m.chi = chi;
  m.omega = omega;
  return assemble_chain(m);
}

// Max amplitude difference after removing the relative global phase.
double phase_aligned_diff(const CVec& a, const CVec& b) {
  const cd ov = b.dot(a);
  const cd ph = ov / std::abs(ov);
  return (a - ph * b).cwiseAbs().maxCoeff();
}

std::vector<cd> random_f(HalfInt S, std::mt19937& rng) {
  std::normal_distribution<double> n01;
  std::vector<cd> f(S.twice + 1);
  double s = 0;
  for (int J = 0; J <= S.twice; ++J) {
    f[J] = cd(n01(rng), n01(rng));
    s += (2 * J + 1) * std::norm(f[J]);
  }
  for (auto& x : f) x *= (S.twice + 1) / std::sqrt(s);
  return f;
}

double sum_rule(const std::vector<cd>& f) {
  double s = 0;
  for (int J = 0; J < static_cast<int>(f.size()); ++J) s += (2 * J + 1) * std::norm(f[J]);
  return s;
}

}  // namespace

TEST_SUITE("mps") {

TEST_CASE("f amplitudes: special points and spin-1/2 closed form") {
  for (int tS = 1; tS <= 6; ++tS)
    for (cd f : f_coeffs(half(tS), 0.0, 0.0, 1.0)) CHECK(std::abs(f - 1.0) < 1e-12);
  const auto aklt = f_coeffs(half(1), 0.0, kSqrt2, 1.0);
  CHECK(std::abs(aklt[0]) < 1e-12);
  CHECK(std::abs(aklt[1] - 2.0 / 3 * cd(1, kSqrt2)) < 1e-12);
  CHECK(std::norm(aklt[1]) == doctest::Approx(4.0 / 3));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 20; ++k) {
    const double de = u(rng), db = u(rng), chi = std::abs(u(rng)) + 0.1;
    const cd den = (cd((de + db) / 2, chi)) * cd((de - db) / 2, chi);
    const cd f1 = -cd(chi * chi, chi * db) / den;
    const cd f0 = cd((db * db - de * de) / 2 - chi * chi, chi * de) / den;
    const auto f = f_coeffs(half(1), de, db, chi);
    CHECK(std::abs(f[0] - f0) < 1e-10);
    CHECK(std::abs(f[1] - f1) < 1e-10);
  }
}

TEST_CASE("f sum rule") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int tS = 1; tS <= 8; ++tS)
    for (int k = 0; k < 5; ++k) {
      const HalfInt S = half(tS);
      CHECK(sum_rule(f_coeffs(S, u(rng), u(rng), std::abs(u(rng)) + 0.05)) ==
            doctest::Approx(std::pow(tS + 1.0, 2)).epsilon(1e-12));
    }
}

TEST_CASE("spin-1/2 cell reduces to Pauli matrices") {
  const cd f0(0.3, -0.2), f1(0.5, 0.9);
  const MPSUnitCell c = unit_cell_large_omega(half(1), {f0, f1});
  CMat sp(2, 2), sm(2, 2), sz(2, 2);
  sp << 0, 1, 0, 0;
  sm << 0, 0, 1, 0;
  sz << 1, 0, 0, -1;
  CHECK((c.coupled(1, 1) - f1 / kSqrt2 * sp).norm() < 1e-14);
  CHECK((c.coupled(1, 0) + f1 / 2.0 * sz).norm() < 1e-14);
  CHECK((c.coupled(1, -1) + f1 / kSqrt2 * sm).norm() < 1e-14);
  CHECK((c.coupled(0, 0) + f0 / 2.0 * CMat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("cell matrices are spherical tensors on the bond") {
  std::mt19937 rng(2);
  for (int tS = 1; tS <= 4; ++tS) {
    const HalfInt S = half(tS);
    const MPSUnitCell c = unit_cell_large_omega(S, random_f(S, rng));
    const auto s = oracle::spin(S);
    for (int J = 0; J <= tS; ++J)
      for (int tm = -2 * J; tm <= 2 * J; tm += 2) {
        const HalfInt m = half(tm);
        const double mv = m.value();
        const CMat T = c.coupled(J, m);
        CHECK((s.z * T - T * s.z - mv * T).norm() < 1e-12);
        const CMat up = s.p * T - T * s.p;
        const CMat want_up = tm < 2 * J ? CMat(std::sqrt(J * (J + 1.0) - mv * (mv + 1)) * c.coupled(J, half(tm + 2)))
                                        : CMat::Zero(T.rows(), T.cols());
        CHECK((up - want_up).norm() < 1e-12);
      }
  }
}

TEST_CASE("contraction reproduces the dense chain") {
  const double inf = std::numeric_limits<double>::infinity();
  for (int L : {4, 6})
    for (auto [de, db] : {std::pair{0.0, kSqrt2}, std::pair{0.8, -1.7}, std::pair{2.2, 0.4}}) {
      const ChainState mps = contract(unit_cell_large_omega(half(1), f_coeffs(half(1), de, db, 1.0)), L);
      CHECK(mps.amp.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(phase_aligned_diff(mps.amp, dense_chain(half(1), L, de, db, 1.0, inf).amp) < 1e-8);
      for (double omega : {0.7, 3.0}) {
        const ChainState fin = contract(unit_cell_from_circuit(half(1), de, db, 1.0, omega), L);
        CHECK(fin.amp.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(phase_aligned_diff(fin.amp, dense_chain(half(1), L, de, db, 1.0, omega).amp) < 1e-8);
      }
    }
  for (int tS : {2, 3}) {
    const HalfInt S = half(tS);
    CHECK(phase_aligned_diff(contract(unit_cell_large_omega(S, f_coeffs(S, 0.5, 1.3, 0.8)), 4).amp,
                             dense_chain(S, 4, 0.5, 1.3, 0.8, inf).amp) < 1e-8);
    CHECK(phase_aligned_diff(contract(unit_cell_from_circuit(S, 0.5, 1.3, 0.8, 1.5), 4).amp,
                             dense_chain(S, 4, 0.5, 1.3, 0.8, 1.5).amp) < 1e-8);
  }
  CHECK_THROWS_AS(contract(unit_cell_large_omega(half(1), {1.0, 1.0}), 5), DomainError);
}

TEST_CASE("circuit cell approaches the large-drive cell") {
  const auto f = f_coeffs(half(1), 0.0, kSqrt2, 1.0);
  const ChainState big = contract(unit_cell_large_omega(half(1), f), 6);
  const ChainState fin = contract(unit_cell_from_circuit(half(1), 0.0, kSqrt2, 1.0, 1e3), 6);
  CHECK(oracle::fidelity(big.amp, fin.amp) > 0.99);
  // weak drive: close to all spins down
  for (int tS : {1, 2}) {
    const ChainState weak = contract(unit_cell_from_circuit(half(tS), 0.3, 1.1, 1.0, 1e-3), 4);
    CHECK(std::norm(weak.amp(weak.amp.size() - 1)) > 0.99);
  }
}

TEST_CASE("transfer matrix spectra and eigenvectors") {
  std::mt19937 rng(8);
  for (int tS = 1; tS <= 4; ++tS) {
    const HalfInt S = half(tS);
    const int d = tS + 1;
    const MPSUnitCell c = unit_cell_large_omega(S, random_f(S, rng));
    const Dominant I = dominant_eigen(transfer_matrix(c, cell_identity(S)));
    CHECK(std::abs(I.lambda - 1.0) < 1e-10);
    const CVec delta = CMat::Identity(d, d).reshaped<Eigen::RowMajor>() / std::sqrt(double(d));
    CHECK(oracle::fidelity(I.right, delta) > 1 - 1e-10);
    CHECK(oracle::fidelity(I.left, delta) > 1 - 1e-10);
    const double phi = 0.9;
    const Dominant G = dominant_eigen(transfer_matrix(c, cell_string(S, phi)));
    CHECK(std::abs(std::abs(G.lambda) - 1.0) < 1e-10);
    CVec phased = CVec::Zero(d * d);
    for (int a = 0; a < d; ++a) phased(a * d + a) = std::polar(1.0, index_to_m(S, a).value() * phi);
    CHECK(oracle::fidelity(G.right, phased) > 1 - 1e-10);
    // circuit cells are isometries
    const MPSUnitCell fin = unit_cell_from_circuit(S, 0.4, 1.2, 1.0, 2.0);
    const Dominant F = dominant_eigen(transfer_matrix(fin, cell_identity(S)));
    CHECK(std::abs(F.lambda - 1.0) < 1e-10);
  }
}

TEST_CASE("correlation lengths") {
  const MPSUnitCell aklt = unit_cell_large_omega(half(1), f_coeffs(half(1), 0.0, kSqrt2, 1.0));
  const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<CMat>(transfer_matrix(aklt, cell_identity(half(1)))).eigenvalues();
  int thirds = 0;
  for (cd e : ev) thirds += std::abs(e + 1.0 / 3) < 1e-12;
  CHECK(thirds == 3);
  const CorrelationLengths cl = correlation_lengths(aklt, std::numbers::pi);
  CHECK(cl.L_corr == doctest::Approx(2 / std::log(3.0)).epsilon(1e-10));
  CHECK(cl.string_infinite);
  CHECK(std::isinf(cl.L_string));
  // lambda_1 = (|f0|^2 - |f1|^2)/4 for spin 1/2
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 10; ++k) {
    const auto f = f_coeffs(half(1), u(rng), u(rng), 1.0);
    const double want = std::abs(std::norm(f[0]) - std::norm(f[1])) / 4;
    CHECK(correlation_lengths(unit_cell_large_omega(half(1), f), 1.0).lambda1_abs == doctest::Approx(want));
  }
  // disorder lines
  for (double de : {0.3, 1.7}) {
    for (double db : {de, -de, std::sqrt(de * de + 8)}) {
      const auto c = unit_cell_large_omega(half(1), f_coeffs(half(1), de, db, 1.0));
      CHECK(correlation_lengths(c, 1.0).L_corr == 0.0);
    }
  }
  for (int tS = 1; tS <= 3; ++tS)
    CHECK(correlation_lengths(unit_cell_large_omega(half(tS), f_coeffs(half(tS), 0, 0, 1)), 1.0).L_corr == 0.0);
}

TEST_CASE("string correlation length grows as the square of the drive") {
  std::vector<double> x, y;
  for (double om : {20.0, 40.0, 80.0, 160.0, 320.0}) {
    const CorrelationLengths cl =
        correlation_lengths(unit_cell_from_circuit(half(1), 0.0, kSqrt2, 1.0, om), std::numbers::pi);
    REQUIRE_FALSE(cl.string_infinite);
    x.push_back(std::log(om));
    y.push_back(std::log(cl.L_string));
  }
  const double n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("string order") {
  const auto f_aklt = f_coeffs(half(1), 0.0, kSqrt2, 1.0);
  const MPSUnitCell aklt = unit_cell_large_omega(half(1), f_aklt);
  CHECK(string_order(aklt, std::numbers::pi) == doctest::Approx(4.0 / 9).epsilon(1e-10));
  CHECK(string_order_closed(half(1), f_aklt, std::numbers::pi) == doctest::Approx(4.0 / 9).epsilon(1e-12));
  std::mt19937 rng(21);
  for (int tS = 1; tS <= 4; ++tS)
    for (int k = 0; k < 4; ++k) {
      const HalfInt S = half(tS);
      const auto f = random_f(S, rng);
      const MPSUnitCell c = unit_cell_large_omega(S, f);
      for (double phi : {0.4, 1.9, std::numbers::pi}) {
        CHECK(std::abs(string_order(c, phi) - string_order_closed(S, f, phi)) < 1e-8);
        if (tS == 1) CHECK(string_order_closed(S, f, phi) == doctest::Approx(std::pow(std::norm(f[1]), 2) / 4 *
                                                                             std::pow(std::sin(phi / 2), 2)));
      }
      if (tS % 2 == 0) CHECK(std::abs(string_order_closed(S, f, std::numbers::pi)) < 1e-12);
    }
  // finite drive: the string eigenvalue leaves the unit circle
  CHECK(string_order(unit_cell_from_circuit(half(1), 0.0, kSqrt2, 1.0, 5.0), std::numbers::pi) == 0.0);
}

TEST_CASE("h closed form") {
  for (int tS = 1; tS <= 8; ++tS)
    for (int k = 1; k <= 100; ++k) {
      const double phi = 2 * std::numbers::pi * k / 101.0;
      CHECK(std::abs(h_sum(half(tS), phi) - h_closed(half(tS), phi)) < 1e-10);
    }
}

TEST_CASE("connected correlator decays with the subleading eigenvalue") {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const auto f = random_f(half(1), rng);
    const MPSUnitCell c = unit_cell_large_omega(half(1), f);
    const double lam1 = std::abs(std::norm(f[0]) - std::norm(f[1])) / 4;
    std::vector<double> y;
    for (int n = 1; n <= 8; ++n) y.push_back(std::log(std::abs(sz_connected(c, n))));
    for (std::size_t i = 1; i < y.size(); ++i) CHECK(std::abs(y[i] - y[i - 1] - std::log(lam1)) < 1e-3);
  }
}

TEST_CASE("AKLT reference") {
  for (int L : {2, 4, 6}) CHECK(aklt_fidelity(aklt_reference(L)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(aklt_fidelity(dense_chain(half(1), 6, 0.0, kSqrt2, 1.0, 1e3)) > 0.95);
  double prev = 1.0;
  for (int L : {4, 6, 8, 10}) {
    const double f = aklt_fidelity(dense_chain(half(1), L, 0.0, kSqrt2, 1.0, 8.0));
    CHECK(f < prev);
    prev = f;
  }
  CHECK_THROWS_AS(aklt_fidelity(dense_chain(half(2), 4, 0.0, 1.0, 1.0, 2.0)), DomainError);
}

}  // TEST_SUITE
