#include "darkspin/spin_ops.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

#include "darkspin/errors.hpp"

namespace darkspin {

SpinMatrices spin_matrices(HalfInt S) {
  if (S.twice <= 0) throw DomainError("spin_matrices: S must be positive");
  const int d = spin_dim(S);
  SpinMatrices s;
  s.sz = CMat::Zero(d, d);
  s.sp = CMat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = index_to_m(S, i).value();
    s.sz(i, i) = m;
    if (i > 0) {
      // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>, and m+1 sits at index i-1
      s.sp(i - 1, i) = std::sqrt(S.value() * (S.value() + 1) - m * (m + 1));
    }
  }
  s.sm = s.sp.adjoint();
  s.sx = 0.5 * (s.sp + s.sm);
  s.sy = cd(0, -0.5) * (s.sp - s.sm);
  return s;
}

SpMat identity_sparse(Eigen::Index n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

SpMat embed(const SpMat& op, int site, int L, int d) {
  Eigen::Index left = 1, right = 1;
  for (int l = 0; l < site; ++l) left *= d;
  for (int l = site + 1; l < L; ++l) right *= d;
  SpMat tmp = Eigen::kroneckerProduct(identity_sparse(left), op).eval();
  return Eigen::kroneckerProduct(tmp, identity_sparse(right)).eval();
}

SpMat embed_pair(const SpMat& a, int site_a, const SpMat& b, int site_b, int L, int d) {
  return (embed(a, site_a, L, d) * embed(b, site_b, L, d)).pruned();
}

SpMat chain_hamiltonian(const ChainModel& m) {
  const int L = m.L();
  const int d = spin_dim(m.S);
  const auto s = spin_matrices(m.S);
  const SpMat sx = s.sx.sparseView(), sz = s.sz.sparseView();
  const SpMat sp = s.sp.sparseView(), sm = s.sm.sparseView();
  Eigen::Index D = 1;
  for (int l = 0; l < L; ++l) D *= d;
  SpMat H(D, D);
  for (int l = 0; l < L; ++l) H += embed((m.omega * sx + m.deltas[l] * sz).pruned(), l, L, d);
  if (m.chi != 0.0) {
    for (int k = 0; k < L; ++k)
      for (int l = k + 1; l < L; ++l) {
        SpMat t = embed_pair(sp, k, sm, l, L, d) - embed_pair(sm, k, sp, l, L, d);
        H += cd(0, 0.5 * m.chi) * t;
      }
  }
  H.prune(cd(0, 0));
  return H;
}

SpMat collective_lowering(HalfInt S, int L) {
  const int d = spin_dim(S);
  const SpMat sm = spin_matrices(S).sm.sparseView();
  Eigen::Index D = 1;
  for (int l = 0; l < L; ++l) D *= d;
  SpMat K(D, D);
  for (int l = 0; l < L; ++l) K += embed(sm, l, L, d);
  return K;
}

SpMat weighted_sz(HalfInt S, const std::vector<double>& weights) {
  const int L = static_cast<int>(weights.size());
  const int d = spin_dim(S);
  const SpMat sz = spin_matrices(S).sz.sparseView();
  Eigen::Index D = 1;
  for (int l = 0; l < L; ++l) D *= d;
  SpMat G(D, D);
  for (int l = 0; l < L; ++l)
    if (weights[l] != 0.0) G += weights[l] * embed(sz, l, L, d);
  return G;
}

int site_twice_m(HalfInt S, int L, Eigen::Index flat, int site) {
  const int d = spin_dim(S);
  for (int l = L - 1; l > site; --l) flat /= d;
  const int i = static_cast<int>(flat % d);
  return S.twice - 2 * i;
}

}  // namespace darkspin
