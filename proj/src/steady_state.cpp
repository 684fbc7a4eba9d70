#include "darkspin/steady_state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "darkspin/errors.hpp"

namespace darkspin {

namespace {

Eigen::Index ipow(int d, int L) {
  Eigen::Index D = 1;
  for (int l = 0; l < L; ++l) D *= d;
  return D;
}

}  // namespace

PairState pair_coeffs(HalfInt S, double delta, double chi, double omega) {
  if (S.twice <= 0) throw DomainError("pair_coeffs: S must be positive");
  if (!(omega > 0)) throw DomainError("pair_coeffs: omega must be positive");
  if (!std::isfinite(delta) || !std::isfinite(chi)) throw DomainError("pair_coeffs: non-finite input");
  const int n = S.twice + 1;
  PairState p;
  p.S = S;
  p.degenerate = (delta == 0.0 && chi == 0.0);

  // Ratios can overflow for large S, so accumulate log-modulus and phase.
  std::vector<double> logmag(n, 0.0), phase(n, 0.0);
  std::vector<bool> zero(n, false);
  for (int J = 0; J + 1 < n; ++J) {
    if (zero[J] || std::isinf(omega)) {
      zero[J + 1] = true;
      continue;
    }
    const double b = pair_coeff(PairCoeff::B, S, J, -J);
    const double a = pair_coeff(PairCoeff::A, S, J + 1, -J - 1);
    const cd r = -cd(delta, -chi * (J + 1)) / omega * (b / a);
    if (r == cd(0, 0)) {
      zero[J + 1] = true;
      continue;
    }
    logmag[J + 1] = logmag[J] + std::log(std::abs(r));
    phase[J + 1] = phase[J] + std::arg(r);
  }
  double top = -std::numeric_limits<double>::infinity();
  for (int J = 0; J < n; ++J)
    if (!zero[J]) top = std::max(top, logmag[J]);
  p.c.assign(n, cd(0, 0));
  double norm = 0;
  for (int J = 0; J < n; ++J) {
    if (zero[J]) continue;
    p.c[J] = std::polar(std::exp(logmag[J] - top), phase[J]);
    norm += std::norm(p.c[J]);
  }
  norm = std::sqrt(norm);
  for (auto& c : p.c) c /= norm;
  return p;
}

CVec pair_state_vector(const PairState& p) {
  const HalfInt S = p.S;
  const int d = spin_dim(S);
  CVec v = CVec::Zero(d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const HalfInt ma = index_to_m(S, a), mb = index_to_m(S, b);
      const int twice_M = ma.twice + mb.twice;
      if (twice_M > 0) continue;
      const int J = -twice_M / 2;
      v(a * d + b) = p.c[J] * clebsch_gordan(S, ma, S, mb, HalfInt(J), HalfInt(-J));
    }
  return v;
}

std::vector<double> gate_phases(HalfInt S, double delta_left, double delta_right, double chi) {
  const double d = delta_left - delta_right;
  if (d == 0.0 && chi == 0.0)
    throw DomainError("gate_phases: equal detunings with chi = 0 leave the gate undefined");
  const int n = S.twice + 1;
  std::vector<double> theta(n, 0.0);
  for (int J = 0; J + 1 < n; ++J) {
    const cd ratio = cd(-d, -chi * (J + 1)) / cd(d, -chi * (J + 1));
    double step = std::arg(ratio);
    if (step <= -std::numbers::pi) step += 2 * std::numbers::pi;  // branch (-pi, pi]
    theta[J + 1] = theta[J] + step;
  }
  return theta;
}

CMat pair_gate(HalfInt S, const std::vector<double>& theta) {
  const int d = spin_dim(S);
  CMat U = CMat::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const HalfInt ma = index_to_m(S, a), mb = index_to_m(S, b);
      const HalfInt M = ma + mb;
      for (int a2 = 0; a2 < d; ++a2) {
        const HalfInt ma2 = index_to_m(S, a2);
        const HalfInt mb2 = M - ma2;
        if (std::abs(mb2.twice) > S.twice) continue;
        const int b2 = m_to_index(S, mb2);
        cd sum = 0;
        for (int J = std::abs(M.twice) / 2; J <= S.twice; ++J)
          sum += std::polar(1.0, theta[J]) * clebsch_gordan(S, ma, S, mb, HalfInt(J), M) *
                 clebsch_gordan(S, ma2, S, mb2, HalfInt(J), M);
        U(a * d + b, a2 * d + b2) = sum;
      }
    }
  return U;
}

std::vector<double> heisenberg_poly(HalfInt S, const std::vector<double>& theta) {
  const int n = S.twice + 1;
  if (static_cast<int>(theta.size()) != n) throw DomainError("heisenberg_poly: need 2S+1 phases");
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const long double s = S.value();
  LMat V(n, n);
  LVec rhs(n);
  for (int J = 0; J < n; ++J) {
    const long double x = (J * (J + 1.0L) - 2 * s * (s + 1)) / 2;
    long double p = 1;
    for (int q = 0; q < n; ++q) {
      V(J, q) = p;
      p *= x;
    }
    rhs(J) = theta[J];
  }
  const LVec a = V.fullPivLu().solve(rhs);
  std::vector<double> out(n);
  for (int q = 0; q < n; ++q) out[q] = static_cast<double>(a(q));
  return out;
}

SwapSchedule swap_schedule(const std::vector<double>& deltas, double chi) {
  const int L = static_cast<int>(deltas.size());
  if (L < 2 || L % 2) throw DomainError("swap_schedule: need an even number of ensembles");
  double scale = 0;
  for (double x : deltas) scale = std::max(scale, std::abs(x));
  const double tol = 1e-12 * std::max(scale, 1.0);

  SwapSchedule sch;
  std::vector<int> partner(L, -1);
  std::vector<int> first_of_pair;
  for (int i = 0; i < L; ++i) {
    if (partner[i] >= 0) continue;
    int j = i + 1;
    for (; j < L; ++j)
      if (partner[j] < 0 && std::abs(deltas[j] + deltas[i]) <= tol) break;
    if (j == L)
      throw DomainError("no dark state: detuning " + std::to_string(deltas[i]) + " at site " +
                        std::to_string(i) + " has no opposite partner");
    partner[i] = j;
    partner[j] = i;
    first_of_pair.push_back(i);
  }
  if (chi == 0.0) {
    for (int i = 0; i < L; ++i) {
      if (std::abs(deltas[i]) <= tol) sch.unique = false;
      for (int j = i + 1; j < L; ++j)
        if (std::abs(deltas[i] - deltas[j]) <= tol) sch.unique = false;
    }
  }

  // Element e of the dimerised order: dimer k = e/2, first or second member.
  std::vector<int> target(L);
  sch.delta_init.resize(L);
  for (int k = 0; k < L / 2; ++k) {
    const int i = first_of_pair[k], j = partner[i];
    target[2 * k] = i;
    target[2 * k + 1] = j;
    sch.delta_init[2 * k] = deltas[i];
    sch.delta_init[2 * k + 1] = deltas[j];
    sch.dimer_delta.push_back(2 * deltas[i]);
  }
  std::vector<double> cur = sch.delta_init;
  bool moved = true;
  while (moved) {
    moved = false;
    for (int l = 0; l + 1 < L; ++l) {
      if (target[l] > target[l + 1]) {
        sch.swaps.push_back({l, cur[l], cur[l + 1]});
        std::swap(target[l], target[l + 1]);
        std::swap(cur[l], cur[l + 1]);
        moved = true;
      }
    }
  }
  return sch;
}

void apply_two_site(CVec& amp, HalfInt S, int L, int site, const CMat& U) {
  const int d = spin_dim(S);
  const Eigen::Index R = ipow(d, L - site - 2);
  const Eigen::Index block = R * d * d;
  const Eigen::Index P = amp.size() / block;
  const CMat Ut = U.transpose();
  CMat tmp(R, d * d);
  for (Eigen::Index p = 0; p < P; ++p) {
    Eigen::Map<CMat> chunk(amp.data() + p * block, R, d * d);
    tmp.noalias() = chunk * Ut;
    chunk = tmp;
  }
}

ChainState assemble_chain(const ChainModel& m, std::size_t budget_bytes) {
  const int L = m.L();
  const HalfInt S = m.S;
  const int d = spin_dim(S);
  const double D = std::pow(double(d), L);
  const double bytes = D * sizeof(cd) * 2;
  if (bytes > double(budget_bytes))
    throw CapacityError("assemble_chain: state needs " + std::to_string(bytes) + " bytes",
                        static_cast<std::size_t>(bytes));

  const SwapSchedule sch = swap_schedule(m.deltas, m.chi);
  ChainState st;
  st.S = S;
  st.L = L;
  st.amp = CVec::Ones(1);
  for (double dk : sch.dimer_delta) {
    const CVec pv = pair_state_vector(pair_coeffs(S, dk, m.chi, m.omega));
    CVec next(st.amp.size() * pv.size());
    for (Eigen::Index i = 0; i < st.amp.size(); ++i) next.segment(i * pv.size(), pv.size()) = st.amp(i) * pv;
    st.amp.swap(next);
  }
  for (const Swap& sw : sch.swaps) {
    if (sw.delta_left == sw.delta_right) continue;  // identical detunings: identity
    apply_two_site(st.amp, S, L, sw.site, pair_gate(S, gate_phases(S, sw.delta_left, sw.delta_right, m.chi)));
  }
  Eigen::Index imax = 0;
  st.amp.cwiseAbs().maxCoeff(&imax);
  const cd ph = st.amp(imax) / std::abs(st.amp(imax));
  st.amp *= std::conj(ph);
  st.amp.normalize();
  return st;
}

std::vector<cd> four_largeomega(HalfInt S, double dA, double dB, double chi) {
  const auto th = gate_phases(S, -dA / 2, dB / 2, chi);
  const auto tt = gate_phases(S, -dA / 2, -dB / 2, chi);
  const int n = S.twice + 1;
  std::vector<cd> g(n, cd(0, 0));
  for (int jp = 0; jp < n; ++jp)
    for (int j = 0; j < n; ++j) {
      const int sign = (S.twice + j + jp) % 2 ? -1 : 1;  // (-1)^{2S+j+j'}
      g[jp] += double(sign) * std::polar(1.0, th[j] + tt[jp]) * double(2 * j + 1) *
               wigner_6j(S, S, HalfInt(jp), S, S, HalfInt(j));
    }
  return g;
}

ChainState four_state_from_g(HalfInt S, const std::vector<cd>& g) {
  const int d = spin_dim(S);
  ChainState st;
  st.S = S;
  st.L = 4;
  st.amp = CVec::Zero(ipow(d, 4));
  for (int i1 = 0; i1 < d; ++i1)
    for (int i2 = 0; i2 < d; ++i2)
      for (int i3 = 0; i3 < d; ++i3)
        for (int i4 = 0; i4 < d; ++i4) {
          const HalfInt m1 = index_to_m(S, i1), m2 = index_to_m(S, i2);
          const HalfInt m3 = index_to_m(S, i3), m4 = index_to_m(S, i4);
          const HalfInt mu = m1 + m2, nu = m4 + m3;
          if (mu.twice + nu.twice != 0) continue;
          cd a = 0;
          for (int j = std::abs(mu.twice) / 2; j <= S.twice; ++j)
            a += std::sqrt(2.0 * j + 1) * g[j] * clebsch_gordan(HalfInt(j), mu, HalfInt(j), nu, 0, 0) *
                 clebsch_gordan(S, m1, S, m2, HalfInt(j), mu) *
                 clebsch_gordan(S, m4, S, m3, HalfInt(j), nu);
          st.amp(((i1 * d + i2) * d + i3) * d + i4) = a / double(d);
        }
  return st;
}

ChainState permute_sites(const ChainState& s, const std::vector<int>& perm) {
  const int L = s.L;
  const int d = spin_dim(s.S);
  std::vector<Eigen::Index> stride(L);
  for (int l = 0; l < L; ++l) stride[l] = ipow(d, L - 1 - l);
  ChainState out{s.S, L, CVec(s.amp.size())};
  std::vector<int> digit(L);
  for (Eigen::Index in = 0; in < s.amp.size(); ++in) {
    Eigen::Index r = in;
    for (int l = L - 1; l >= 0; --l) {
      digit[l] = static_cast<int>(r % d);
      r /= d;
    }
    Eigen::Index o = 0;
    for (int i = 0; i < L; ++i) o += digit[perm[i]] * stride[i];
    out.amp(o) = s.amp(in);
  }
  return out;
}

double reduced_entropy(const ChainState& s, const std::vector<int>& keep) {
  const int L = s.L;
  const int d = spin_dim(s.S);
  std::vector<int> perm = keep;
  for (int l = 0; l < L; ++l)
    if (std::find(keep.begin(), keep.end(), l) == keep.end()) perm.push_back(l);
  if (static_cast<int>(perm.size()) != L) throw DomainError("reduced_entropy: invalid site list");
  const ChainState p = permute_sites(s, perm);
  const Eigen::Index dk = ipow(d, static_cast<int>(keep.size()));
  const Eigen::Index dr = p.amp.size() / dk;
  using RowMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> M(p.amp.data(), dk, dr);
  const CMat rho = dk <= dr ? CMat(M * M.adjoint()) : CMat(M.adjoint() * M);
  Eigen::SelfAdjointEigenSolver<CMat> es(rho, Eigen::EigenvaluesOnly);
  double S = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam > 1e-12) S -= lam * std::log(lam);
  }
  return S;
}

namespace {
constexpr char kMagic[4] = {'D', 'S', 'C', 'S'};
constexpr std::uint32_t kEndianTag = 0x01020304u;
constexpr std::uint32_t kVersion = 1;

template <class T>
T byteswap_any(T v) {
  auto* b = reinterpret_cast<unsigned char*>(&v);
  std::reverse(b, b + sizeof(T));
  return v;
}
}  // namespace

void write_chain_state(const ChainState& s, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::uint32_t version = kVersion, tag = kEndianTag;
  const std::int32_t L = s.L, twice_s = s.S.twice;
  const std::uint64_t n = static_cast<std::uint64_t>(s.amp.size());
  f.write(kMagic, 4);
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&tag), 4);
  f.write(reinterpret_cast<const char*>(&L), 4);
  f.write(reinterpret_cast<const char*>(&twice_s), 4);
  f.write(reinterpret_cast<const char*>(&n), 8);
  f.write(reinterpret_cast<const char*>(s.amp.data()), static_cast<std::streamsize>(n * sizeof(cd)));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

ChainState read_chain_state(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  std::uint32_t version, tag;
  std::int32_t L, twice_s;
  std::uint64_t n;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&tag), 4);
  if (!f || !std::equal(magic, magic + 4, kMagic)) throw std::runtime_error("not a chain state file");
  const bool swapped = tag != kEndianTag;
  if (swapped && byteswap_any(tag) != kEndianTag) throw std::runtime_error("bad endianness tag");
  if (swapped) version = byteswap_any(version);
  if (version != kVersion) throw std::runtime_error("unsupported chain state version");
  f.read(reinterpret_cast<char*>(&L), 4);
  f.read(reinterpret_cast<char*>(&twice_s), 4);
  f.read(reinterpret_cast<char*>(&n), 8);
  if (swapped) {
    L = byteswap_any(L);
    twice_s = byteswap_any(twice_s);
    n = byteswap_any(n);
  }
  ChainState s;
  s.S = half(twice_s);
  s.L = L;
  if (twice_s <= 0 || L <= 0 || double(n) != std::pow(double(twice_s + 1), L))
    throw std::runtime_error("inconsistent chain state header");
  s.amp.resize(static_cast<Eigen::Index>(n));
  std::vector<double> raw(2 * n);
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(double)));
  if (!f) throw std::runtime_error("truncated chain state file");
  for (std::uint64_t i = 0; i < n; ++i) {
    double re = raw[2 * i], im = raw[2 * i + 1];
    if (swapped) {
      re = byteswap_any(re);
      im = byteswap_any(im);
    }
    s.amp(static_cast<Eigen::Index>(i)) = cd(re, im);
  }
  return s;
}

}  // namespace darkspin
