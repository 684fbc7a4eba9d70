#pragma once

#include <compare>
#include <string>

namespace darkspin {

// Angular momentum stored as twice its value so half-integers are exact.
struct HalfInt {
  int twice = 0;

  constexpr HalfInt() = default;
  constexpr HalfInt(int n) : twice(2 * n) {}  // NOLINT: implicit from integer
  static constexpr HalfInt from_twice(int t) {
    HalfInt h;
    h.twice = t;
    return h;
  }
  // Accepts multiples of 1/2 only.
  static HalfInt from_double(double x);

  constexpr double value() const { return 0.5 * twice; }
  constexpr bool is_integer() const { return twice % 2 == 0; }

  constexpr HalfInt operator-() const { return from_twice(-twice); }
  constexpr HalfInt operator+(HalfInt o) const { return from_twice(twice + o.twice); }
  constexpr HalfInt operator-(HalfInt o) const { return from_twice(twice - o.twice); }
  constexpr auto operator<=>(const HalfInt&) const = default;

  std::string str() const;
};

constexpr HalfInt half(int twice) { return HalfInt::from_twice(twice); }

// <j1 m1; j2 m2 | J M>, Condon-Shortley phases.
// Returns 0 when the triangle rule, |m| <= j or m1 + m2 = M fails.
// Throws DomainError when a projection has the wrong parity for its j, or
// j1 + j2 + J is not an integer.
double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M);

// {j1 j2 j3; j4 j5 j6}. Zero when a triad violates the triangle rule,
// DomainError when a triad sums to a half-integer.
double wigner_6j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6);

// {j1 j2 j3; j4 j5 j6; j7 j8 j9}, triads are the rows and columns.
double wigner_9j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6,
                 HalfInt j7, HalfInt j8, HalfInt j9);

// The three functions above memoise results; these bypass the cache.
double clebsch_gordan_uncached(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J,
                               HalfInt M);
double wigner_6j_uncached(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5,
                          HalfInt j6);
double wigner_9j_uncached(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5,
                          HalfInt j6, HalfInt j7, HalfInt j8, HalfInt j9);

void clear_wigner_cache();

// Matrix elements of two-spin operators between coupled states |J,m> of two
// spin-S ensembles (integer J, m).
enum class PairCoeff {
  A,       // <J,m+1| S1+ + S2+ |J,m>
  B,       // <J+1,m| S1z - S2z |J,m>
  C,       // <J+1,m| S1+ S2- - S1- S2+ |J,m>
  BPlus,   // <J+1,m+1| S1+ - S2+ |J,m>
  BMinus,  // <J+1,m-1| S1- - S2- |J,m>
};

// Closed forms; require 0 <= J <= 2S and |m| <= J.
double pair_coeff(PairCoeff kind, HalfInt S, int J, int m);

}  // namespace darkspin
