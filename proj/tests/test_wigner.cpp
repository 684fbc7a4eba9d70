#include <cmath>
#include <random>

#include "darkspin/errors.hpp"
#include "darkspin/wigner.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace darkspin;

TEST_SUITE("wigner") {

TEST_CASE("halfint arithmetic and parsing") {
  CHECK(HalfInt::from_double(1.5).twice == 3);
  CHECK(HalfInt::from_double(-2).twice == -4);
  CHECK_THROWS_AS(HalfInt::from_double(0.3), DomainError);
  CHECK((half(1) + half(1)) == HalfInt(1));
  CHECK(half(3).str() == "3/2");
  CHECK(HalfInt(2).is_integer());
}

TEST_CASE("clebsch-gordan matches diagonalisation of J^2") {
  for (int t1 = 1; t1 <= 5; ++t1)
    for (int t2 = 1; t2 <= 4; ++t2) {
      const HalfInt j1 = half(t1), j2 = half(t2);
      const oracle::CoupledBasis ref(j1, j2);
      for (int tJ = std::abs(t1 - t2); tJ <= t1 + t2; tJ += 2)
        for (int tm1 = -t1; tm1 <= t1; tm1 += 2)
          for (int tm2 = -t2; tm2 <= t2; tm2 += 2) {
            const int tM = tm1 + tm2;
            if (std::abs(tM) > tJ) continue;
            const double got = clebsch_gordan(j1, half(tm1), j2, half(tm2), half(tJ), half(tM));
            const double want = ref.cg(half(tm1), half(tm2), half(tJ), half(tM));
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
          }
    }
}

TEST_CASE("clebsch-gordan tabulated values") {
  const double r2 = std::sqrt(0.5);
  CHECK(clebsch_gordan(half(1), half(1), half(1), half(-1), 1, 0) == doctest::Approx(r2));
  CHECK(clebsch_gordan(half(1), half(1), half(1), half(-1), 0, 0) == doctest::Approx(r2));
  CHECK(clebsch_gordan(half(1), half(-1), half(1), half(1), 0, 0) == doctest::Approx(-r2));
  CHECK(clebsch_gordan(1, 1, 1, -1, 0, 0) == doctest::Approx(1 / std::sqrt(3.0)));
  // exact rational values: sqrt(210)/35, 1/3; a large-j value
  CHECK(clebsch_gordan(half(5), half(3), 2, -1, half(5), half(1)) ==
        doctest::Approx(std::sqrt(210.0) / 35).epsilon(1e-15));
  CHECK(clebsch_gordan(half(7), half(-1), half(5), half(3), 3, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(clebsch_gordan(40, 3, 39, -5, 21, -2) == doctest::Approx(0.062958172607699050).epsilon(1e-14));
}

TEST_CASE("clebsch-gordan orthonormality and symmetries") {
  for (int tS = 1; tS <= 6; ++tS) {
    const HalfInt S = half(tS);
    for (int tJ = 0; tJ <= 2 * tS; tJ += 2)
      for (int tJp = 0; tJp <= 2 * tS; tJp += 2)
        for (int tM = -std::min(tJ, tJp); tM <= std::min(tJ, tJp); tM += 2) {
          double sum = 0;
          for (int tm1 = -tS; tm1 <= tS; tm1 += 2) {
            const int tm2 = tM - tm1;
            if (std::abs(tm2) > tS) continue;
            sum += clebsch_gordan(S, half(tm1), S, half(tm2), half(tJ), half(tM)) *
                   clebsch_gordan(S, half(tm1), S, half(tm2), half(tJp), half(tM));
          }
          CHECK(sum == doctest::Approx(tJ == tJp ? 1.0 : 0.0).epsilon(1e-13));
        }
  }
  const HalfInt j1 = half(3), j2 = 2;
  for (int tJ = 1; tJ <= 7; tJ += 2)
    for (int tm1 = -3; tm1 <= 3; tm1 += 2)
      for (int tm2 = -4; tm2 <= 4; tm2 += 2) {
        const int tM = tm1 + tm2;
        if (std::abs(tM) > tJ) continue;
        const double c = clebsch_gordan(j1, half(tm1), j2, half(tm2), half(tJ), half(tM));
        const double ph = ((j1.twice + j2.twice - tJ) / 2) % 2 ? -1.0 : 1.0;
        CHECK(clebsch_gordan(j2, half(tm2), j1, half(tm1), half(tJ), half(tM)) == doctest::Approx(ph * c));
        CHECK(clebsch_gordan(j1, half(-tm1), j2, half(-tm2), half(tJ), half(-tM)) == doctest::Approx(ph * c));
      }
}

TEST_CASE("clebsch-gordan selection rules and parity errors") {
  CHECK(clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0);   // triangle
  CHECK(clebsch_gordan(1, 1, 1, 0, 2, 0) == 0.0);   // m1 + m2 != M
  CHECK(clebsch_gordan(1, 2, 1, -1, 1, 1) == 0.0);  // |m| > j
  CHECK_THROWS_AS(clebsch_gordan(1, half(1), 1, half(-1), 1, 0), DomainError);
  CHECK_THROWS_AS(clebsch_gordan(half(1), half(1), half(1), half(-1), half(1), 0), DomainError);
}

TEST_CASE("6-j symbols match recoupled Clebsch-Gordan sums") {
  const int tmax = 4;
  for (int a = 1; a <= tmax; ++a)
    for (int b = 1; b <= tmax; ++b)
      for (int c = 1; c <= 3; ++c)
        for (int ab = std::abs(a - b); ab <= a + b; ab += 2)
          for (int bc = std::abs(b - c); bc <= b + c; bc += 2)
            for (int J = std::max(std::abs(ab - c), std::abs(a - bc)); J <= std::min(ab + c, a + bc); J += 2) {
              const double want =
                  oracle::sixj_recoupling(half(a), half(b), half(ab), half(c), half(J), half(bc));
              const double got = wigner_6j(half(a), half(b), half(ab), half(c), half(J), half(bc));
              CHECK(got == doctest::Approx(want).epsilon(1e-11));
            }
}

TEST_CASE("6-j tabulated values, symmetries and sum rule") {
  CHECK(wigner_6j(half(1), half(1), 0, half(1), half(1), 0) == doctest::Approx(-0.5));
  CHECK(wigner_6j(half(1), half(1), 1, half(1), half(1), 1) == doctest::Approx(1.0 / 6));
  CHECK(wigner_6j(3, half(5), half(3), 2, half(3), half(5)) ==
        doctest::Approx(11 * std::sqrt(21.0) / 420).epsilon(1e-15));
  CHECK(wigner_6j(20, 30, 25, 31, 19, 28) == doctest::Approx(0.0039646742882850669).epsilon(1e-13));

  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, 8);
  int checked = 0;
  while (checked < 200) {
    const int a = pick(rng), b = pick(rng), c = pick(rng), d = pick(rng), e = pick(rng), f = pick(rng);
    if ((a + b + c) % 2 || (a + e + f) % 2 || (d + b + f) % 2 || (d + e + c) % 2) continue;
    const double v = wigner_6j(half(a), half(b), half(c), half(d), half(e), half(f));
    CHECK(wigner_6j(half(b), half(a), half(c), half(e), half(d), half(f)) == doctest::Approx(v));
    CHECK(wigner_6j(half(a), half(c), half(b), half(d), half(f), half(e)) == doctest::Approx(v));
    CHECK(wigner_6j(half(d), half(e), half(c), half(a), half(b), half(f)) == doctest::Approx(v));
    ++checked;
  }
  for (int ta = 0; ta <= 6; ++ta)
    for (int tb = 0; tb <= 6; ++tb)
      for (int tf = 0; tf <= 6; tf += 2) {
        if ((ta + tb) % 2) continue;
        double sum = 0;
        for (int tx = std::abs(ta - tb); tx <= ta + tb; tx += 2) {
          const double ph = ((ta + tb + tx) / 2) % 2 ? -1.0 : 1.0;
          sum += (tx + 1) * ph * wigner_6j(half(ta), half(tb), half(tx), half(tb), half(ta), half(tf));
        }
        const double want = tf == 0 ? std::sqrt((ta + 1.0) * (tb + 1.0)) : 0.0;
        CHECK(sum == doctest::Approx(want).epsilon(1e-12));
      }
  CHECK(wigner_6j(1, 1, 3, 1, 1, 1) == 0.0);
  CHECK_THROWS_AS(wigner_6j(half(1), 1, 1, 1, 1, 1), DomainError);
}

TEST_CASE("6-j Regge symmetry") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> pick(0, 10);
  int checked = 0;
  while (checked < 100) {
    const int a = pick(rng), b = pick(rng), c = pick(rng), d = pick(rng), e = pick(rng), f = pick(rng);
    if ((a + b + c) % 2 || (a + e + f) % 2 || (d + b + f) % 2 || (d + e + c) % 2) continue;
    if ((b + c + e + f) % 4) continue;
    const int s = (b + c + e + f) / 2;  // twice of (b+c+e+f)/2
    if (s < std::max({b, c, e, f})) continue;
    const double v = wigner_6j(half(a), half(b), half(c), half(d), half(e), half(f));
    const double r = wigner_6j(half(a), half(s - b), half(s - c), half(d), half(s - e), half(s - f));
    CHECK(r == doctest::Approx(v).epsilon(1e-12));
    ++checked;
  }
}

TEST_CASE("9-j symbols") {
  CHECK(wigner_9j(half(1), half(1), 1, half(1), half(1), 1, 1, 1, 2) == doctest::Approx(1.0 / 9));
  CHECK(wigner_9j(1, 2, 3, 2, 1, 2, 3, 1, 2) == doctest::Approx(std::sqrt(6.0) / 525).epsilon(1e-14));
  CHECK(wigner_9j(2, 2, 2, 2, 2, 2, 2, 2, 2) == doctest::Approx(41.0 / 2450).epsilon(1e-14));
  CHECK(wigner_9j(1, 1, 1, 1, 1, 1, 1, 1, 1) == doctest::Approx(0.0));

  // reduction when the last entry vanishes
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b)
      for (int c = 0; c <= 4; ++c)
        for (int d = 0; d <= 4; ++d)
          for (int e = 0; e <= 6; ++e)
            for (int f = 0; f <= 6; ++f) {
              if ((a + b + e) % 2 || (c + d + e) % 2 || (a + c + f) % 2 || (b + d + f) % 2) continue;
              const double v = wigner_9j(half(a), half(b), half(e), half(c), half(d), half(e), half(f),
                                         half(f), 0);
              const int ph = (b + c + e + f) / 2;
              const double want = (ph % 2 ? -1.0 : 1.0) / std::sqrt((e + 1.0) * (f + 1.0)) *
                                  wigner_6j(half(a), half(b), half(e), half(d), half(c), half(f));
              CHECK(v == doctest::Approx(want).epsilon(1e-12));
            }

  // transpose invariance and odd row exchange phase
  const int t[9] = {3, 1, 2, 2, 4, 2, 1, 3, 4};
  const double v = wigner_9j(half(t[0]), half(t[1]), half(t[2]), half(t[3]), half(t[4]), half(t[5]),
                             half(t[6]), half(t[7]), half(t[8]));
  const double tr = wigner_9j(half(t[0]), half(t[3]), half(t[6]), half(t[1]), half(t[4]), half(t[7]),
                              half(t[2]), half(t[5]), half(t[8]));
  CHECK(tr == doctest::Approx(v));
  int sum = 0;
  for (int x : t) sum += x;
  const double sw = wigner_9j(half(t[3]), half(t[4]), half(t[5]), half(t[0]), half(t[1]), half(t[2]),
                              half(t[6]), half(t[7]), half(t[8]));
  CHECK(sw == doctest::Approx(((sum / 2) % 2 ? -1.0 : 1.0) * v));
}

TEST_CASE("cache is transparent") {
  clear_wigner_cache();
  for (int i = 0; i < 2; ++i) {
    CHECK(clebsch_gordan(3, 1, 2, -1, 4, 0) == clebsch_gordan_uncached(3, 1, 2, -1, 4, 0));
    CHECK(wigner_6j(3, 2, 4, 2, 3, 3) == wigner_6j_uncached(3, 2, 4, 2, 3, 3));
    CHECK(wigner_9j(1, 2, 3, 2, 1, 2, 3, 1, 2) == wigner_9j_uncached(1, 2, 3, 2, 1, 2, 3, 1, 2));
  }
}

TEST_CASE("pair coefficients match brute-force matrix elements") {
  for (int tS = 1; tS <= 6; ++tS) {
    const HalfInt S = half(tS);
    const oracle::CoupledBasis basis(S, S);
    const auto s = oracle::spin(S);
    const auto I = oracle::eye(tS + 1);
    const oracle::CMat sz1 = oracle::kron(s.z, I), sz2 = oracle::kron(I, s.z);
    const oracle::CMat sp1 = oracle::kron(s.p, I), sp2 = oracle::kron(I, s.p);
    const oracle::CMat sm1 = sp1.adjoint(), sm2 = sp2.adjoint();
    const oracle::CMat opA = sp1 + sp2, opB = sz1 - sz2, opC = sp1 * sm2 - sm1 * sp2;
    const oracle::CMat opBp = sp1 - sp2, opBm = sm1 - sm2;
    for (int J = 0; J <= tS; ++J)
      for (int m = -J; m <= J; ++m) {
        const auto& ket = basis.state(J, m);
        auto elem = [&](const oracle::CMat& op, int Jb, int mb) {
          if (Jb > tS || std::abs(mb) > Jb) return 0.0;
          const cd v = basis.state(Jb, mb).dot(op * ket);
          CHECK(std::abs(v.imag()) < 1e-12);
          return v.real();
        };
        CHECK(pair_coeff(PairCoeff::A, S, J, m) == doctest::Approx(elem(opA, J, m + 1)).epsilon(1e-12));
        CHECK(pair_coeff(PairCoeff::B, S, J, m) == doctest::Approx(elem(opB, J + 1, m)).epsilon(1e-12));
        CHECK(pair_coeff(PairCoeff::C, S, J, m) == doctest::Approx(elem(opC, J + 1, m)).epsilon(1e-12));
        CHECK(pair_coeff(PairCoeff::BPlus, S, J, m) == doctest::Approx(elem(opBp, J + 1, m + 1)).epsilon(1e-12));
        CHECK(pair_coeff(PairCoeff::BMinus, S, J, m) == doctest::Approx(elem(opBm, J + 1, m - 1)).epsilon(1e-12));
      }
  }
  CHECK(pair_coeff(PairCoeff::B, half(1), 0, 0) == doctest::Approx(1.0));
  CHECK(pair_coeff(PairCoeff::BMinus, half(1), 0, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(pair_coeff(PairCoeff::A, half(1), 2, 0), DomainError);
  CHECK_THROWS_AS(pair_coeff(PairCoeff::B, 1, 1, 2), DomainError);
}

TEST_CASE("exchange symmetry of coupled pairs") {
  for (int tS = 1; tS <= 6; ++tS) {
    const HalfInt S = half(tS);
    for (int J = 0; J <= tS; ++J)
      for (int tm1 = -tS; tm1 <= tS; tm1 += 2)
        for (int tm2 = -tS; tm2 <= tS; tm2 += 2) {
          const int tM = tm1 + tm2;
          if (std::abs(tM) > 2 * J) continue;
          const double ph = (tS - J) % 2 ? -1.0 : 1.0;  // (-1)^{2S-J}
          CHECK(clebsch_gordan(S, half(tm1), S, half(tm2), J, half(tM)) ==
                doctest::Approx(ph * clebsch_gordan(S, half(tm2), S, half(tm1), J, half(tM))));
        }
  }
}

}  // TEST_SUITE
