#include "darkspin/wigner.hpp"

#include <gmpxx.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "darkspin/errors.hpp"

namespace darkspin {

HalfInt HalfInt::from_double(double x) {
  const double t = std::round(2.0 * x);
  if (std::abs(2.0 * x - t) > 1e-9) throw DomainError("not a multiple of 1/2: " + std::to_string(x));
  return from_twice(static_cast<int>(t));
}

std::string HalfInt::str() const {
  if (is_integer()) return std::to_string(twice / 2);
  return std::to_string(twice) + "/2";
}

namespace {

// Per-thread factorial table; grown before a coefficient is evaluated so the
// references handed out stay valid for the whole evaluation.
thread_local std::vector<mpz_class> fact_table{mpz_class(1)};

void ensure_factorials(int n) {
  while (static_cast<int>(fact_table.size()) <= n) {
    const auto k = static_cast<unsigned long>(fact_table.size());
    fact_table.push_back(fact_table.back() * k);
  }
}

const mpz_class& fact(int n) { return fact_table[static_cast<std::size_t>(n)]; }

double signed_sqrt(const mpq_class& square, int sign) {
  if (sign == 0) return 0.0;
  mpf_class f(square, 192);
  f = sqrt(f);
  return sign > 0 ? f.get_d() : -f.get_d();
}

bool triangle(int ta, int tb, int tc) { return tc <= ta + tb && tc >= std::abs(ta - tb); }

void require_triad_parity(int ta, int tb, int tc, const char* who) {
  if (ta < 0 || tb < 0 || tc < 0) throw DomainError(std::string(who) + ": negative angular momentum");
  if ((ta + tb + tc) % 2 != 0) throw DomainError(std::string(who) + ": triad sums to a half-integer");
}

// Squared triangle coefficient (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!.
mpq_class delta_sq(int ta, int tb, int tc) {
  mpq_class q(fact((ta + tb - tc) / 2) * fact((ta - tb + tc) / 2) * fact((-ta + tb + tc) / 2),
              fact((ta + tb + tc) / 2 + 1));
  q.canonicalize();
  return q;
}

// Racah sum of the 6-j symbol without the triangle prefactors.
mpq_class racah_sum(int ta, int tb, int tc, int td, int te, int tf) {
  const int abc = (ta + tb + tc) / 2, aef = (ta + te + tf) / 2;
  const int dbf = (td + tb + tf) / 2, dec = (td + te + tc) / 2;
  const int abde = (ta + tb + td + te) / 2, acdf = (ta + tc + td + tf) / 2;
  const int bcef = (tb + tc + te + tf) / 2;
  const int tmin = std::max({abc, aef, dbf, dec});
  const int tmax = std::min({abde, acdf, bcef});
  mpq_class sum(0);
  for (int t = tmin; t <= tmax; ++t) {
    mpz_class den = fact(t - abc) * fact(t - aef) * fact(t - dbf) * fact(t - dec) *
                    fact(abde - t) * fact(acdf - t) * fact(bcef - t);
    mpq_class term(fact(t + 1), den);
    term.canonicalize();
    if (t % 2) sum -= term; else sum += term;
  }
  return sum;
}

double cg_exact(int tj1, int tm1, int tj2, int tm2, int tJ, int tM) {
  if (tj1 < 0 || tj2 < 0 || tJ < 0) throw DomainError("clebsch_gordan: negative angular momentum");
  if ((tj1 + tm1) % 2 || (tj2 + tm2) % 2 || (tJ + tM) % 2)
    throw DomainError("clebsch_gordan: projection parity does not match its angular momentum");
  if ((tj1 + tj2 + tJ) % 2) throw DomainError("clebsch_gordan: j1 + j2 + J is not an integer");
  if (tm1 + tm2 != tM) return 0.0;
  if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tM) > tJ) return 0.0;
  if (!triangle(tj1, tj2, tJ)) return 0.0;

  ensure_factorials((tj1 + tj2 + tJ) / 2 + 2);
  const int n1 = (tj1 + tj2 - tJ) / 2;
  const int jm1 = (tj1 - tm1) / 2, jp1 = (tj1 + tm1) / 2;
  const int jm2 = (tj2 - tm2) / 2, jp2 = (tj2 + tm2) / 2;
  const int s1 = (tJ - tj2 + tm1) / 2, s2 = (tJ - tj1 - tm2) / 2;

  mpq_class pref(mpz_class(tJ + 1) * fact(n1) * fact((tj1 - tj2 + tJ) / 2) *
                     fact((-tj1 + tj2 + tJ) / 2) * fact((tJ + tM) / 2) * fact((tJ - tM) / 2) *
                     fact(jm1) * fact(jp1) * fact(jm2) * fact(jp2),
                 fact((tj1 + tj2 + tJ) / 2 + 1));
  pref.canonicalize();

  const int kmin = std::max({0, -s1, -s2});
  const int kmax = std::min({n1, jm1, jp2});
  mpq_class sum(0);
  for (int k = kmin; k <= kmax; ++k) {
    mpq_class term(1, fact(k) * fact(n1 - k) * fact(jm1 - k) * fact(jp2 - k) * fact(s1 + k) *
                          fact(s2 + k));
    term.canonicalize();
    if (k % 2) sum -= term; else sum += term;
  }
  return signed_sqrt(pref * sum * sum, sgn(sum));
}

double sixj_exact(int ta, int tb, int tc, int td, int te, int tf) {
  require_triad_parity(ta, tb, tc, "wigner_6j");
  require_triad_parity(ta, te, tf, "wigner_6j");
  require_triad_parity(td, tb, tf, "wigner_6j");
  require_triad_parity(td, te, tc, "wigner_6j");
  if (!triangle(ta, tb, tc) || !triangle(ta, te, tf) || !triangle(td, tb, tf) ||
      !triangle(td, te, tc))
    return 0.0;
  ensure_factorials((ta + tb + tc + td + te + tf) / 2 + 2);
  const mpq_class d = delta_sq(ta, tb, tc) * delta_sq(ta, te, tf) * delta_sq(td, tb, tf) *
                      delta_sq(td, te, tc);
  const mpq_class s = racah_sum(ta, tb, tc, td, te, tf);
  return signed_sqrt(d * s * s, sgn(s));
}

// Sum over x of products of three 6-j symbols. The x-dependent triangle
// factors appear squared, so everything except one overall square root stays
// rational.
double ninej_exact(const std::array<int, 9>& t) {
  const int j1 = t[0], j2 = t[1], j3 = t[2], j4 = t[3], j5 = t[4], j6 = t[5], j7 = t[6],
            j8 = t[7], j9 = t[8];
  const std::array<std::array<int, 3>, 6> triads{{{j1, j2, j3}, {j4, j5, j6}, {j7, j8, j9},
                                                  {j1, j4, j7}, {j2, j5, j8}, {j3, j6, j9}}};
  for (const auto& tr : triads) require_triad_parity(tr[0], tr[1], tr[2], "wigner_9j");
  for (const auto& tr : triads)
    if (!triangle(tr[0], tr[1], tr[2])) return 0.0;

  int total = 0;
  for (int v : t) total += v;
  ensure_factorials(total + 4);

  mpq_class c(1);
  for (const auto& tr : triads) c *= delta_sq(tr[0], tr[1], tr[2]);

  const int xmin = std::max({std::abs(j1 - j9), std::abs(j4 - j8), std::abs(j2 - j6)});
  const int xmax = std::min({j1 + j9, j4 + j8, j2 + j6});
  mpq_class sum(0);
  for (int x = xmin; x <= xmax; x += 2) {
    if ((j1 + j9 + x) % 2 || (j4 + j8 + x) % 2 || (j2 + j6 + x) % 2) continue;
    mpq_class term = delta_sq(j1, j9, x) * delta_sq(j4, j8, x) * delta_sq(j2, j6, x);
    term *= racah_sum(j1, j4, j7, j8, j9, x);
    term *= racah_sum(j2, j5, j8, j4, x, j6);
    term *= racah_sum(j3, j6, j9, x, j1, j2);
    term *= (x + 1);
    if (x % 2) term = -term;  // (-1)^{2x}
    sum += term;
  }
  return signed_sqrt(c * sum * sum, sgn(sum));
}

template <std::size_t N>
struct ArrayHash {
  std::size_t operator()(const std::array<int, N>& a) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (int v : a) h = (h ^ static_cast<std::size_t>(v + 0x9e37)) * 1099511628211ull;
    return h;
  }
};

template <std::size_t N>
class Memo {
 public:
  template <class F>
  double get(const std::array<int, N>& key, F&& compute) {
    {
      std::shared_lock lock(mutex_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    const double v = compute();
    std::unique_lock lock(mutex_);
    map_.emplace(key, v);
    return v;
  }
  void clear() {
    std::unique_lock lock(mutex_);
    map_.clear();
  }

 private:
  std::shared_mutex mutex_;
  std::unordered_map<std::array<int, N>, double, ArrayHash<N>> map_;
};

Memo<6>& cg_memo() {
  static Memo<6> m;
  return m;
}
Memo<6>& sixj_memo() {
  static Memo<6> m;
  return m;
}
Memo<9>& ninej_memo() {
  static Memo<9> m;
  return m;
}

}  // namespace

double clebsch_gordan_uncached(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J,
                               HalfInt M) {
  return cg_exact(j1.twice, m1.twice, j2.twice, m2.twice, J.twice, M.twice);
}

double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  // Cheap zero cases skip the cache; parity errors still come from cg_exact.
  if (m1.twice + m2.twice != M.twice && (j1.twice + m1.twice) % 2 == 0 &&
      (j2.twice + m2.twice) % 2 == 0 && (J.twice + M.twice) % 2 == 0 &&
      (j1.twice + j2.twice + J.twice) % 2 == 0 && j1.twice >= 0 && j2.twice >= 0 && J.twice >= 0)
    return 0.0;
  const std::array<int, 6> key{j1.twice, m1.twice, j2.twice, m2.twice, J.twice, M.twice};
  return cg_memo().get(key, [&] { return cg_exact(key[0], key[1], key[2], key[3], key[4], key[5]); });
}

double wigner_6j_uncached(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5,
                          HalfInt j6) {
  return sixj_exact(j1.twice, j2.twice, j3.twice, j4.twice, j5.twice, j6.twice);
}

double wigner_6j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6) {
  const std::array<int, 6> key{j1.twice, j2.twice, j3.twice, j4.twice, j5.twice, j6.twice};
  return sixj_memo().get(key,
                         [&] { return sixj_exact(key[0], key[1], key[2], key[3], key[4], key[5]); });
}

double wigner_9j_uncached(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5,
                          HalfInt j6, HalfInt j7, HalfInt j8, HalfInt j9) {
  return ninej_exact({j1.twice, j2.twice, j3.twice, j4.twice, j5.twice, j6.twice, j7.twice,
                      j8.twice, j9.twice});
}

double wigner_9j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6,
                 HalfInt j7, HalfInt j8, HalfInt j9) {
  const std::array<int, 9> key{j1.twice, j2.twice, j3.twice, j4.twice, j5.twice,
                               j6.twice, j7.twice, j8.twice, j9.twice};
  return ninej_memo().get(key, [&] { return ninej_exact(key); });
}

void clear_wigner_cache() {
  cg_memo().clear();
  sixj_memo().clear();
  ninej_memo().clear();
}

double pair_coeff(PairCoeff kind, HalfInt S, int J, int m) {
  const int two_s = S.twice;
  if (two_s <= 0) throw DomainError("pair_coeff: S must be positive");
  if (J < 0 || J > two_s) throw DomainError("pair_coeff: J outside [0, 2S]");
  if (std::abs(m) > J) throw DomainError("pair_coeff: |m| > J");
  const double j = J, mm = m;
  const double up = double(two_s - J) * double(two_s + J + 2) / ((2 * j + 1) * (2 * j + 3));
  switch (kind) {
    case PairCoeff::A:
      return std::sqrt((j - mm) * (j + mm + 1));
    case PairCoeff::B:
      return std::sqrt(up * (j + mm + 1) * (j - mm + 1));
    case PairCoeff::C:
      return -(j + 1) * std::sqrt(up * (j + mm + 1) * (j - mm + 1));
    case PairCoeff::BPlus:
      return -std::sqrt(up * (j + mm + 1) * (j + mm + 2));
    case PairCoeff::BMinus:
      return std::sqrt(up * (j - mm + 1) * (j - mm + 2));
  }
  return 0.0;
}

}  // namespace darkspin
