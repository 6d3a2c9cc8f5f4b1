// Property testers: the four-query diamond test for direct sums over F_p with
// its character/swap reduction, and the direct-product consistency test with
// classification, voting, and global recovery.
//
// Diamond test: sample a, b uniform on the domain and a mask x on {0,1}^n;
// accept iff f(a) - f(m_x(a,b)) - f(m_x(b,a)) + f(b) = 0 mod p, where
// m_x(a,b) takes coordinate i from a when x_i = 1 and from b otherwise.
// Every direct sum f(a) = sum_i f_i(a_i) passes with probability 1.
//
// Direct-product test DP(rho, alpha): F maps each subset A of [n] to a vector
// assignment on A with values in [0,1]^K. Sample C with per-coordinate rate
// alpha*rho and A, B independent rate-rho supersets of C; accept iff
// ||F[A]|_C - F[B]|_C||_2 <= D.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swapkit/core.hpp"
#include "swapkit/norms.hpp"

namespace swapkit {

// ---------------------------------------------------------------------------
// Diamond direct-sum tester
// ---------------------------------------------------------------------------

// Coordinate-wise merge: out_i = a_i if mask_i = 1, else b_i.
inline std::vector<int> merge_by_mask(const std::vector<int>& mask, const std::vector<int>& a,
                                      const std::vector<int>& b) {
  if (mask.size() != a.size() || a.size() != b.size())
    throw std::invalid_argument("merge_by_mask: arity mismatch");
  std::vector<int> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (mask[i] != 0 && mask[i] != 1) throw std::invalid_argument("merge_by_mask: mask must be 0/1");
    out[i] = mask[i] == 1 ? a[i] : b[i];
  }
  return out;
}

namespace detail {

// Extracts the residues of a table whose values must be integers mod p.
inline std::vector<int> residues_mod_p(const FunctionTable& f, int p) {
  if (p < 2 || p > 31) throw std::invalid_argument("residues_mod_p: p must be a prime in [2,31]");
  std::vector<int> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double re = f.values[i].real();
    long r = std::lround(re);
    if (std::abs(f.values[i].imag()) > 1e-9 || std::abs(re - static_cast<double>(r)) > 1e-9)
      throw std::invalid_argument("residues_mod_p: values must be integers (mod p)");
    r %= p;
    if (r < 0) r += p;
    out[i] = static_cast<int>(r);
  }
  return out;
}

}  // namespace detail

inline constexpr std::uint64_t kDiamondExactBudget = 100000000ULL;

// Probability over uniform a, b and mask x that the diamond residual
// f(a) - f(m_x(a,b)) - f(m_x(b,a)) + f(b) vanishes mod p.
inline double diamond_pass_prob(const FunctionTable& f, int p, const std::string& mode = "exact",
                                std::int64_t samples = 0, Rng rng = Rng(0)) {
  std::vector<int> res = detail::residues_mod_p(f, p);
  const int n = f.n();
  const std::size_t M = f.size();
  std::vector<std::size_t> strides = strides_of(f.alphabets);
  if (mode == "exact") {
    if (n >= 63) throw std::runtime_error("diamond_pass_prob: too many coordinates for exact mode");
    const std::uint64_t masks = 1ULL << n;
    std::uint64_t work = static_cast<std::uint64_t>(M) * static_cast<std::uint64_t>(M) * masks;
    if (work > kDiamondExactBudget)
      throw std::runtime_error("diamond_pass_prob: exact budget exceeded");
    std::vector<std::uint64_t> hits(M, 0);
    parallel_for(M, [&](std::size_t ia) {
      std::vector<int> a, b;
      index_tuple(f.alphabets, ia, a);
      std::uint64_t h = 0;
      for (std::size_t ib = 0; ib < M; ++ib) {
        index_tuple(f.alphabets, ib, b);
        for (std::uint64_t mask = 0; mask < masks; ++mask) {
          std::size_t iab = 0, iba = 0;
          for (int c = 0; c < n; ++c) {
            bool take_a = ((mask >> c) & 1ULL) != 0ULL;
            iab += strides[static_cast<std::size_t>(c)] *
                   static_cast<std::size_t>(take_a ? a[static_cast<std::size_t>(c)]
                                                   : b[static_cast<std::size_t>(c)]);
            iba += strides[static_cast<std::size_t>(c)] *
                   static_cast<std::size_t>(take_a ? b[static_cast<std::size_t>(c)]
                                                   : a[static_cast<std::size_t>(c)]);
          }
          int r = (res[ia] - res[iab] - res[iba] + res[ib]) % p;
          if (r < 0) r += p;
          if (r == 0) ++h;
        }
      }
      hits[ia] = h;
    });
    std::uint64_t total = 0;
    for (std::uint64_t h : hits) total += h;
    return static_cast<double>(total) / static_cast<double>(work);
  }
  if (mode == "mc") {
    if (samples < 1) throw std::invalid_argument("diamond_pass_prob: samples must be >= 1 in mc mode");
    std::vector<char> hit(static_cast<std::size_t>(samples));
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
      Rng r = rng.child(s);
      std::size_t ia = 0, ib = 0, iab = 0, iba = 0;
      for (int c = 0; c < n; ++c) {
        int ac = r.next_int(f.alphabets[static_cast<std::size_t>(c)]);
        int bc = r.next_int(f.alphabets[static_cast<std::size_t>(c)]);
        bool take_a = r.next_bool(0.5);
        std::size_t st = strides[static_cast<std::size_t>(c)];
        ia += st * static_cast<std::size_t>(ac);
        ib += st * static_cast<std::size_t>(bc);
        iab += st * static_cast<std::size_t>(take_a ? ac : bc);
        iba += st * static_cast<std::size_t>(take_a ? bc : ac);
      }
      int v = (res[ia] - res[iab] - res[iba] + res[ib]) % p;
      if (v < 0) v += p;
      hit[s] = v == 0 ? 1 : 0;
    });
    std::uint64_t total = 0;
    for (char h : hit) total += static_cast<std::uint64_t>(h);
    return static_cast<double>(total) / static_cast<double>(samples);
  }
  throw std::invalid_argument("diamond_pass_prob: mode must be 'exact' or 'mc'");
}

// The character reduction of the diamond test: for each nonzero residue j the
// quantity E[w^{j * residual}] over the equivalent one-sided-exchange form
// equals swap(w^{j f}) with w a primitive p-th root of unity. The returned
// best value satisfies best >= (p*q - 1)/(p - 1) where q is the exact pass
// probability, because sum_{j != 0} Re swap(w^{j f}) = p*q - 1.
struct CharacterReduction {
  int best_j = 1;
  double best_value = 0.0;
  std::vector<double> values;  // values[j-1] = Re swap(w^{j f}), j = 1..p-1
  double pass_prob = 0.0;      // q, computed exactly
  double identity_lhs = 0.0;   // p*q - 1
  double identity_rhs = 0.0;   // sum_{j != 0} Re swap(w^{j f})

  json to_json() const {
    json j;
    j["best_j"] = best_j;
    j["best_value"] = best_value;
    j["values"] = values;
    j["pass_prob"] = pass_prob;
    j["identity_lhs"] = identity_lhs;
    j["identity_rhs"] = identity_rhs;
    return j;
  }
};

inline CharacterReduction character_swap_reduction(const FunctionTable& f, int p) {
  std::vector<int> res = detail::residues_mod_p(f, p);
  if (f.size() > kExactDomainMax)
    throw std::runtime_error("character_swap_reduction: domain too large for exact enumeration");
  CharacterReduction out;
  out.pass_prob = diamond_pass_prob(f, p, "exact");
  out.identity_lhs = static_cast<double>(p) * out.pass_prob - 1.0;
  out.values.resize(static_cast<std::size_t>(p - 1));
  for (int j = 1; j < p; ++j) {
    FunctionTable F = FunctionTable::zeros(f.alphabets);
    for (std::size_t i = 0; i < f.size(); ++i) {
      double t = 2.0 * kPi * static_cast<double>(j * res[i]) / static_cast<double>(p);
      F.values[i] = cplx{std::cos(t), std::sin(t)};
    }
    out.values[static_cast<std::size_t>(j - 1)] = swap_inner(F).value.real();
  }
  out.best_j = 1;
  out.best_value = out.values[0];
  double sum = 0.0;
  for (int j = 1; j < p; ++j) {
    double v = out.values[static_cast<std::size_t>(j - 1)];
    sum += v;
    if (v > out.best_value) {
      out.best_value = v;
      out.best_j = j;
    }
  }
  out.identity_rhs = sum;
  return out;
}

// ---------------------------------------------------------------------------
// Direct-product test
// ---------------------------------------------------------------------------

// The DP(rho, alpha) sampling can be rephrased as: A with rate rho, B obtained
// from A by resampling each coordinate with probability gamma (to rate rho),
// and C keeping each element of A&B with probability gamma_prime. The
// parameters below are solved from (rho, alpha) by matching per-coordinate
// inclusion probabilities.
struct DPReformulation {
  double q = 0.0;            // P(i in A | i not in C) in the original form
  double gamma = 0.0;        // resampling rate for B given A
  double gamma_prime = 0.0;  // P(i in C | i in A & B)
};

inline DPReformulation dp_reformulation(double rho, double alpha) {
  if (rho <= 0.0 || rho >= 1.0) throw std::invalid_argument("dp_reformulation: rho must be in (0,1)");
  if (alpha <= 0.0 || alpha > 1.0)
    throw std::invalid_argument("dp_reformulation: alpha must be in (0,1]");
  DPReformulation d;
  double ar = alpha * rho;
  d.q = (rho - ar) / (1.0 - ar);
  d.gamma = (1.0 - ar) * d.q * (1.0 - d.q) / (rho * (1.0 - rho));
  d.gamma_prime = ar / (ar + (1.0 - ar) * d.q * d.q);
  return d;
}

// Generator-backed instances compute F[A]_x on demand, deterministically from
// (seed, A, x).
//   planted:     a hidden global g; each (A, x) slot is replaced by a fresh
//                uniform vector with probability eta.
//   random:      every (A, x) slot is an independent uniform vector.
//   two_cluster: two well-separated globals g0 (entries in [0, 0.3]) and
//                g1 (entries in [0.7, 1]); each A votes wholly for one of them.
struct DPGenerator {
  std::string kind = "planted";  // planted | random | two_cluster
  std::uint64_t seed = 1;
  double eta = 0.0;  // planted corruption rate
};

namespace detail {

inline constexpr std::uint64_t kDPGlobalStream = 0x51;
inline constexpr std::uint64_t kDPNoiseStream = 0x52;
inline constexpr std::uint64_t kDPClusterStream = 0x53;

inline std::vector<double> dp_uniform_vec(Rng r, int K) {
  std::vector<double> v(static_cast<std::size_t>(K));
  for (auto& e : v) e = r.next_double();
  return v;
}

}  // namespace detail

struct DPInstance {
  int n = 0;
  int K = 1;
  double rho = 0.5;
  double alpha = 0.5;
  double D = 1.0;
  // Explicit backing: subset bitmask -> one vector per element, ascending.
  std::map<std::uint64_t, std::vector<std::vector<double>>> table;
  bool has_generator = false;
  DPGenerator gen;

  void validate() const {
    if (n < 1 || n > 62) throw std::invalid_argument("DPInstance: n must be in [1,62]");
    if (K < 1) throw std::invalid_argument("DPInstance: K must be >= 1");
    dp_reformulation(rho, alpha);
    if (D < 0.0) throw std::invalid_argument("DPInstance: D must be >= 0");
    for (const auto& [mask, vecs] : table) {
      if (mask >> n) throw std::invalid_argument("DPInstance: table mask out of range");
      if (vecs.size() != static_cast<std::size_t>(std::popcount(mask)))
        throw std::invalid_argument("DPInstance: table entry must hold one vector per element");
      for (const auto& v : vecs) {
        if (v.size() != static_cast<std::size_t>(K))
          throw std::invalid_argument("DPInstance: vector dimension mismatch");
        for (double e : v)
          if (e < 0.0 || e > 1.0) throw std::invalid_argument("DPInstance: values must lie in [0,1]");
      }
    }
    if (has_generator && gen.kind != "planted" && gen.kind != "random" &&
        gen.kind != "two_cluster")
      throw std::invalid_argument("DPInstance: unknown generator kind");
  }

  // The hidden global of a planted instance; cluster 0 or 1 of a two_cluster one.
  std::vector<double> planted_value(int x, int cluster = 0) const {
    if (!has_generator) throw std::logic_error("DPInstance: no generator");
    Rng base(gen.seed);
    if (gen.kind == "planted")
      return detail::dp_uniform_vec(
          base.child(detail::kDPGlobalStream).child(static_cast<std::uint64_t>(x)), K);
    if (gen.kind == "two_cluster") {
      std::vector<double> v = detail::dp_uniform_vec(
          base.child(detail::kDPGlobalStream)
              .child(static_cast<std::uint64_t>(cluster))
              .child(static_cast<std::uint64_t>(x)),
          K);
      for (auto& e : v) e = cluster == 0 ? 0.3 * e : 0.7 + 0.3 * e;
      return v;
    }
    throw std::logic_error("DPInstance: generator has no planted global");
  }

  int cluster_of(std::uint64_t A) const {
    if (!has_generator || gen.kind != "two_cluster")
      throw std::logic_error("DPInstance: not a two_cluster instance");
    Rng r = Rng(gen.seed).child(detail::kDPClusterStream).child(A);
    return r.next_bool(0.5) ? 1 : 0;
  }

  // F[A]_x; defined only for x in A.
  std::vector<double> value_at(std::uint64_t A, int x) const {
    if (x < 0 || x >= n || ((A >> x) & 1ULL) == 0ULL)
      throw std::invalid_argument("DPInstance::value_at: x must be an element of A");
    if (has_generator) {
      Rng base(gen.seed);
      if (gen.kind == "planted") {
        Rng noise = base.child(detail::kDPNoiseStream).child(A).child(static_cast<std::uint64_t>(x));
        if (noise.next_bool(gen.eta)) return detail::dp_uniform_vec(noise, K);
        return planted_value(x);
      }
      if (gen.kind == "random")
        return detail::dp_uniform_vec(
            base.child(detail::kDPNoiseStream).child(A).child(static_cast<std::uint64_t>(x)), K);
      if (gen.kind == "two_cluster") return planted_value(x, cluster_of(A));
      throw std::logic_error("DPInstance: unknown generator kind");
    }
    auto it = table.find(A);
    if (it == table.end()) throw std::out_of_range("DPInstance::value_at: subset not in table");
    std::uint64_t below = A & ((1ULL << x) - 1ULL);
    return it->second[static_cast<std::size_t>(std::popcount(below))];
  }

  static DPInstance planted(int n, int K, double rho, double alpha, double D, double eta,
                            std::uint64_t seed) {
    DPInstance inst;
    inst.n = n;
    inst.K = K;
    inst.rho = rho;
    inst.alpha = alpha;
    inst.D = D;
    inst.has_generator = true;
    inst.gen = DPGenerator{"planted", seed, eta};
    inst.validate();
    return inst;
  }
  static DPInstance random_instance(int n, int K, double rho, double alpha, double D,
                                    std::uint64_t seed) {
    DPInstance inst = planted(n, K, rho, alpha, D, 0.0, seed);
    inst.gen.kind = "random";
    return inst;
  }
  static DPInstance two_cluster(int n, int K, double rho, double alpha, double D,
                                std::uint64_t seed) {
    DPInstance inst = planted(n, K, rho, alpha, D, 0.0, seed);
    inst.gen.kind = "two_cluster";
    return inst;
  }
};

// ||F[A]|_C - F[B]|_C||_2; requires C subset of A & B.
inline double dp_restricted_distance(const DPInstance& inst, std::uint64_t A, std::uint64_t B,
                                     std::uint64_t C) {
  if ((C & ~A) != 0ULL || (C & ~B) != 0ULL)
    throw std::invalid_argument("dp_restricted_distance: C must be contained in A and B");
  double acc = 0.0;
  for (std::uint64_t m = C; m != 0ULL; m &= m - 1ULL) {
    int x = std::countr_zero(m);
    std::vector<double> va = inst.value_at(A, x);
    std::vector<double> vb = inst.value_at(B, x);
    for (int k = 0; k < inst.K; ++k)
      acc += sqr(va[static_cast<std::size_t>(k)] - vb[static_cast<std::size_t>(k)]);
  }
  return std::sqrt(acc);
}

namespace detail {

inline std::uint64_t dp_sample_mask(int n, double p, Rng& r) {
  std::uint64_t m = 0;
  for (int i = 0; i < n; ++i)
    if (r.next_bool(p)) m |= 1ULL << i;
  return m;
}

// C plus each remaining coordinate independently with probability q.
inline std::uint64_t dp_sample_superset(std::uint64_t C, int n, double q, Rng& r) {
  std::uint64_t m = C;
  for (int i = 0; i < n; ++i)
    if (((C >> i) & 1ULL) == 0ULL && r.next_bool(q)) m |= 1ULL << i;
  return m;
}

// B from A: each coordinate kept with probability 1 - gamma, else resampled
// at rate rho. Leaves the marginal of B at rate rho.
inline std::uint64_t dp_sample_correlated(std::uint64_t A, int n, double gamma, double rho,
                                          Rng& r) {
  std::uint64_t m = 0;
  for (int i = 0; i < n; ++i) {
    bool bit = ((A >> i) & 1ULL) != 0ULL;
    if (r.next_bool(gamma)) bit = r.next_bool(rho);
    if (bit) m |= 1ULL << i;
  }
  return m;
}

}  // namespace detail

// Monte-Carlo estimate of the DP(rho, alpha) pass probability.
inline double dp_pass_prob(const DPInstance& inst, std::int64_t samples, Rng rng) {
  if (samples < 1) throw std::invalid_argument("dp_pass_prob: samples must be >= 1");
  inst.validate();
  DPReformulation ref = dp_reformulation(inst.rho, inst.alpha);
  std::vector<char> hit(static_cast<std::size_t>(samples));
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
    Rng r = rng.child(s);
    std::uint64_t C = detail::dp_sample_mask(inst.n, inst.alpha * inst.rho, r);
    std::uint64_t A = detail::dp_sample_superset(C, inst.n, ref.q, r);
    std::uint64_t B = detail::dp_sample_superset(C, inst.n, ref.q, r);
    hit[s] = dp_restricted_distance(inst, A, B, C) <= inst.D ? 1 : 0;
  });
  std::uint64_t total = 0;
  for (char h : hit) total += static_cast<std::uint64_t>(h);
  return static_cast<double>(total) / static_cast<double>(samples);
}

struct DPThresholds {
  double D_prime = 1.0;         // consistency threshold
  double D_double_prime = 2.0;  // second-moment threshold for excellence
  double eps = 0.5;             // good means consistent rate >= eps/3
  double r = 0.1;               // excellence tolerates bad-rate <= r
};

struct DPClassifyResult {
  double consistent_rate = 0.0;  // Pr_{B ~ A}[B consistent with A]
  double consistent_stderr = 0.0;
  double degree = 0.0;  // same defining probability as consistent_rate
  bool good = false;
  bool excellent = false;
  bool vacuously_excellent = false;  // conditioning pool was empty
  double excellent_bad_rate = 0.0;
  double excellent_bad_stderr = 0.0;

  json to_json() const {
    json j;
    j["consistent_rate"] = consistent_rate;
    j["consistent_stderr"] = consistent_stderr;
    j["degree"] = degree;
    j["good"] = good;
    j["excellent"] = excellent;
    j["vacuously_excellent"] = vacuously_excellent;
    j["excellent_bad_rate"] = excellent_bad_rate;
    j["excellent_bad_stderr"] = excellent_bad_stderr;
    return j;
  }
};

// Classifies a set A: estimates its consistent rate (= degree), decides
// goodness against eps/3, and excellence against the conditional second
// moment bound D''^2 with tolerated bad-rate r. Verdicts are conservative:
// good requires the estimate minus 3 standard errors to clear eps/3, and
// excellent requires the bad-rate estimate plus 3 standard errors to stay
// under r. If no consistent conditioning set is found the conditional second
// moment is undefined; the verdict falls back to goodness and is flagged.
inline DPClassifyResult dp_classify(const DPInstance& inst, std::uint64_t A,
                                    const DPThresholds& th, int samples, Rng rng) {
  if (samples < 2) throw std::invalid_argument("dp_classify: samples must be >= 2");
  if (th.D_prime < 0.0 || th.D_double_prime < 0.0 || th.eps <= 0.0 || th.r < 0.0)
    throw std::invalid_argument("dp_classify: thresholds must be positive");
  inst.validate();
  DPReformulation ref = dp_reformulation(inst.rho, inst.alpha);
  const std::size_t m = static_cast<std::size_t>(samples);

  // Sampled neighbours of A and their consistency with A.
  std::vector<std::uint64_t> Bs(m);
  std::vector<char> cons(m);
  parallel_for(m, [&](std::size_t s) {
    Rng r = rng.child(s);
    std::uint64_t B = detail::dp_sample_correlated(A, inst.n, ref.gamma, inst.rho, r);
    Bs[s] = B;
    cons[s] = dp_restricted_distance(inst, A, B, A & B) <= th.D_prime ? 1 : 0;
  });
  DPClassifyResult out;
  std::uint64_t nc = 0;
  for (char c : cons) nc += static_cast<std::uint64_t>(c);
  out.consistent_rate = static_cast<double>(nc) / static_cast<double>(m);
  out.consistent_stderr =
      std::sqrt(out.consistent_rate * (1.0 - out.consistent_rate) / static_cast<double>(m));
  out.degree = out.consistent_rate;
  out.good = out.consistent_rate - 3.0 * out.consistent_stderr >= th.eps / 3.0;

  // Conditioning pool for the second moment: an independent batch of
  // neighbours of A, filtered to those consistent with A.
  std::vector<std::uint64_t> pool;
  {
    Rng pr = rng.child(0xC0FFEE);
    for (std::size_t s = 0; s < m; ++s) {
      Rng r = pr.child(s);
      std::uint64_t B = detail::dp_sample_correlated(A, inst.n, ref.gamma, inst.rho, r);
      if (dp_restricted_distance(inst, A, B, A & B) <= th.D_prime) pool.push_back(B);
    }
  }
  if (pool.empty()) {
    out.vacuously_excellent = true;
    out.excellent = out.good;
    return out;
  }
  std::vector<char> bad(m);
  parallel_for(m, [&](std::size_t s) {
    if (!cons[s]) {
      bad[s] = 0;
      return;
    }
    double acc = 0.0;
    for (std::uint64_t Bp : pool) acc += sqr(dp_restricted_distance(inst, Bs[s], Bp, Bs[s] & Bp));
    acc /= static_cast<double>(pool.size());
    bad[s] = acc > sqr(th.D_double_prime) ? 1 : 0;
  });
  std::uint64_t nb = 0;
  for (char b : bad) nb += static_cast<std::uint64_t>(b);
  out.excellent_bad_rate = static_cast<double>(nb) / static_cast<double>(m);
  out.excellent_bad_stderr = std::sqrt(out.excellent_bad_rate * (1.0 - out.excellent_bad_rate) /
                                       static_cast<double>(m));
  out.excellent = out.good && out.excellent_bad_rate + 3.0 * out.excellent_bad_stderr <= th.r;
  return out;
}

struct DPVoteParams {
  double D_prime = 1.0;  // consistency threshold for the voting pool
  int candidates = 64;   // candidate values per coordinate
  int pool = 128;        // neighbours sampled for the voting expectation
  int max_attempts = 4096;  // cap on neighbour draws while collecting candidates
};

struct DPVote {
  std::uint64_t A = 0;
  std::vector<std::vector<double>> g;     // per coordinate; meaningful iff assigned
  std::vector<std::uint64_t> provenance;  // the set whose value was elected
  std::vector<char> assigned;
  bool empty = false;  // no consistent neighbour found
  int pool_consistent = 0;

  json to_json() const {
    json j;
    j["A"] = A;
    j["empty"] = empty;
    j["pool_consistent"] = pool_consistent;
    json coords = json::array();
    for (std::size_t x = 0; x < g.size(); ++x) {
      json c;
      c["x"] = x;
      c["assigned"] = assigned[x] != 0;
      if (assigned[x]) {
        c["value"] = g[x];
        c["provenance"] = provenance[x];
      }
      coords.push_back(std::move(c));
    }
    j["coords"] = std::move(coords);
    return j;
  }
};

// The vote of A at coordinate x elects, among candidate values F[B']_x for
// sampled neighbours B' containing x, the minimizer of the expected squared
// distance to F[B]_x over neighbours B consistent with A (indicator-weighted,
// so inconsistent or x-avoiding B contribute zero). The elected value is
// always some F[B']_x, so provenance is structural.
inline DPVote dp_vote(const DPInstance& inst, std::uint64_t A, const DPVoteParams& params,
                      Rng rng) {
  if (params.candidates < 1 || params.pool < 1)
    throw std::invalid_argument("dp_vote: candidates and pool must be >= 1");
  inst.validate();
  DPReformulation ref = dp_reformulation(inst.rho, inst.alpha);
  DPVote out;
  out.A = A;
  out.g.resize(static_cast<std::size_t>(inst.n));
  out.provenance.assign(static_cast<std::size_t>(inst.n), 0);
  out.assigned.assign(static_cast<std::size_t>(inst.n), 0);

  // Shared voting pool: neighbours of A, with their consistency indicator.
  std::vector<std::uint64_t> pool(static_cast<std::size_t>(params.pool));
  std::vector<char> pool_cons(static_cast<std::size_t>(params.pool));
  Rng pr = rng.child(1);
  parallel_for(pool.size(), [&](std::size_t s) {
    Rng r = pr.child(s);
    std::uint64_t B = detail::dp_sample_correlated(A, inst.n, ref.gamma, inst.rho, r);
    pool[s] = B;
    pool_cons[s] = dp_restricted_distance(inst, A, B, A & B) <= params.D_prime ? 1 : 0;
  });
  for (char c : pool_cons) out.pool_consistent += static_cast<int>(c);
  if (out.pool_consistent == 0) {
    out.empty = true;
    return out;
  }

  Rng cr = rng.child(2);
  parallel_for(static_cast<std::size_t>(inst.n), [&](std::size_t xi) {
    int x = static_cast<int>(xi);
    Rng r = cr.child(xi);
    // Candidate values: F[B']_x over neighbours containing x.
    std::vector<std::pair<std::uint64_t, std::vector<double>>> cands;
    for (int att = 0; att < params.max_attempts &&
                      static_cast<int>(cands.size()) < params.candidates;
         ++att) {
      std::uint64_t Bp = detail::dp_sample_correlated(A, inst.n, ref.gamma, inst.rho, r);
      if (((Bp >> x) & 1ULL) != 0ULL) cands.emplace_back(Bp, inst.value_at(Bp, x));
    }
    if (cands.empty()) return;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      double acc = 0.0;
      for (std::size_t s = 0; s < pool.size(); ++s) {
        if (!pool_cons[s] || ((pool[s] >> x) & 1ULL) == 0ULL) continue;
        std::vector<double> vb = inst.value_at(pool[s], x);
        for (int k = 0; k < inst.K; ++k)
          acc += sqr(cands[ci].second[static_cast<std::size_t>(k)] -
                     vb[static_cast<std::size_t>(k)]);
      }
      acc /= static_cast<double>(pool.size());
      if (acc < best - 1e-15) {
        best = acc;
        best_i = ci;
      }
    }
    out.assigned[xi] = 1;
    out.provenance[xi] = cands[best_i].first;
    out.g[xi] = std::move(cands[best_i].second);
  });
  return out;
}

// ||g|_A - F[A]||_2 for a full assignment g, summed over the elements of A
// where g is assigned; coordinates of A without a vote contribute `penalty`
// squared each.
inline double dp_vote_distance(const DPInstance& inst, const DPVote& vote, std::uint64_t A,
                               double penalty = 0.0) {
  double acc = 0.0;
  for (std::uint64_t m = A; m != 0ULL; m &= m - 1ULL) {
    int x = std::countr_zero(m);
    if (!vote.assigned[static_cast<std::size_t>(x)]) {
      acc += sqr(penalty);
      continue;
    }
    std::vector<double> va = inst.value_at(A, x);
    for (int k = 0; k < inst.K; ++k)
      acc += sqr(vote.g[static_cast<std::size_t>(x)][static_cast<std::size_t>(k)] -
                 va[static_cast<std::size_t>(k)]);
  }
  return std::sqrt(acc);
}

struct DPRecoverParams {
  DPThresholds thresholds;
  DPVoteParams vote;
  int candidate_sets = 40;      // A's sampled and classified
  int classify_samples = 128;
  double cluster_radius = 1.0;  // per-coordinate vote clustering radius
  int test_sets = 50;           // A's sampled for the agreement rate
  double agreement_threshold = 1.0;
};

struct DPRecovery {
  std::vector<std::vector<double>> g;     // full assignment on [n]
  std::vector<std::uint64_t> provenance;  // g(x) = F[provenance[x]]_x
  double agreement_rate = 0.0;
  int num_excellent = 0;

  json to_json() const {
    json j;
    j["agreement_rate"] = agreement_rate;
    j["num_excellent"] = num_excellent;
    j["g"] = g;
    json prov = json::array();
    for (std::uint64_t p : provenance) prov.push_back(p);
    j["provenance"] = std::move(prov);
    return j;
  }
};

// Global recovery: classify sampled A's, keep the excellent ones, collect
// their votes, and per coordinate take the plurality cluster of votes
// (greedy clustering at the given radius). Every output value is some
// F[B]_x by construction. Coordinates never covered by an excellent vote
// fall back to F[A]_x for a freshly sampled A containing x.
inline DPRecovery dp_recover_global(const DPInstance& inst, const DPRecoverParams& params,
                                    Rng rng) {
  inst.validate();
  std::vector<std::uint64_t> As(static_cast<std::size_t>(params.candidate_sets));
  std::vector<char> excellent(As.size());
  Rng ar = rng.child(1);
  parallel_for(As.size(), [&](std::size_t s) {
    Rng r = ar.child(s);
    std::uint64_t A = detail::dp_sample_mask(inst.n, inst.rho, r);
    As[s] = A;
    DPClassifyResult c =
        dp_classify(inst, A, params.thresholds, params.classify_samples, r.child(1));
    excellent[s] = c.excellent ? 1 : 0;
  });
  std::vector<std::size_t> exc_idx;
  for (std::size_t s = 0; s < As.size(); ++s)
    if (excellent[s]) exc_idx.push_back(s);
  if (exc_idx.empty()) throw std::runtime_error("dp_recover_global: no excellent set found");

  std::vector<DPVote> votes(exc_idx.size());
  parallel_for(exc_idx.size(), [&](std::size_t i) {
    votes[i] = dp_vote(inst, As[exc_idx[i]], params.vote, ar.child(exc_idx[i]).child(2));
  });

  DPRecovery out;
  out.num_excellent = static_cast<int>(exc_idx.size());
  out.g.resize(static_cast<std::size_t>(inst.n));
  out.provenance.assign(static_cast<std::size_t>(inst.n), 0);
  Rng fr = rng.child(2);
  for (int x = 0; x < inst.n; ++x) {
    // Cluster the votes at this coordinate greedily; plurality cluster wins
    // and its first member (always some F[B]_x) becomes g(x).
    std::vector<std::size_t> voters;
    for (std::size_t i = 0; i < votes.size(); ++i)
      if (!votes[i].empty && votes[i].assigned[static_cast<std::size_t>(x)]) voters.push_back(i);
    if (!voters.empty()) {
      std::vector<std::vector<std::size_t>> clusters;
      for (std::size_t v : voters) {
        bool placed = false;
        for (auto& cl : clusters) {
          double d2 = 0.0;
          const auto& rep = votes[cl.front()].g[static_cast<std::size_t>(x)];
          const auto& cur = votes[v].g[static_cast<std::size_t>(x)];
          for (int k = 0; k < inst.K; ++k)
            d2 += sqr(rep[static_cast<std::size_t>(k)] - cur[static_cast<std::size_t>(k)]);
          if (std::sqrt(d2) <= params.cluster_radius) {
            cl.push_back(v);
            placed = true;
            break;
          }
        }
        if (!placed) clusters.push_back({v});
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < clusters.size(); ++c)
        if (clusters[c].size() > clusters[best].size()) best = c;
      std::size_t rep = clusters[best].front();
      out.g[static_cast<std::size_t>(x)] = votes[rep].g[static_cast<std::size_t>(x)];
      out.provenance[static_cast<std::size_t>(x)] =
          votes[rep].provenance[static_cast<std::size_t>(x)];
    } else {
      // Fallback: F[A]_x for a fresh A forced to contain x.
      Rng r = fr.child(static_cast<std::uint64_t>(x));
      std::uint64_t A = detail::dp_sample_mask(inst.n, inst.rho, r) | (1ULL << x);
      out.g[static_cast<std::size_t>(x)] = inst.value_at(A, x);
      out.provenance[static_cast<std::size_t>(x)] = A;
    }
  }

  // Agreement: fraction of freshly sampled sets within the threshold of g.
  Rng tr = rng.child(3);
  std::vector<char> agree(static_cast<std::size_t>(params.test_sets));
  parallel_for(agree.size(), [&](std::size_t s) {
    Rng r = tr.child(s);
    std::uint64_t A = detail::dp_sample_mask(inst.n, inst.rho, r);
    double acc = 0.0;
    for (std::uint64_t m = A; m != 0ULL; m &= m - 1ULL) {
      int x = std::countr_zero(m);
      std::vector<double> va = inst.value_at(A, x);
      for (int k = 0; k < inst.K; ++k)
        acc += sqr(out.g[static_cast<std::size_t>(x)][static_cast<std::size_t>(k)] -
                   va[static_cast<std::size_t>(k)]);
    }
    agree[s] = std::sqrt(acc) <= params.agreement_threshold ? 1 : 0;
  });
  std::uint64_t na = 0;
  for (char a : agree) na += static_cast<std::uint64_t>(a);
  out.agreement_rate = static_cast<double>(na) / static_cast<double>(agree.size());
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline json dp_instance_to_json(const DPInstance& inst) {
  inst.validate();
  json j;
  j["n"] = inst.n;
  j["K"] = inst.K;
  j["rho"] = inst.rho;
  j["alpha"] = inst.alpha;
  j["D"] = inst.D;
  if (inst.has_generator) {
    json g;
    g["kind"] = inst.gen.kind;
    g["seed"] = inst.gen.seed;
    g["eta"] = inst.gen.eta;
    j["generator"] = std::move(g);
  } else {
    if (inst.n > 16)
      throw std::invalid_argument("dp_instance_to_json: explicit tables only for n <= 16");
    json t = json::object();
    for (const auto& [mask, vecs] : inst.table) t[std::to_string(mask)] = vecs;
    j["table"] = std::move(t);
  }
  return j;
}

inline DPInstance dp_instance_from_json(const json& j) {
  for (const char* field : {"n", "K", "rho", "alpha", "D"})
    if (!j.contains(field))
      throw std::invalid_argument(std::string("DPInstance JSON: missing field '") + field + "'");
  DPInstance inst;
  inst.n = j.at("n").get<int>();
  inst.K = j.at("K").get<int>();
  inst.rho = j.at("rho").get<double>();
  inst.alpha = j.at("alpha").get<double>();
  inst.D = j.at("D").get<double>();
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    inst.has_generator = true;
    inst.gen.kind = g.at("kind").get<std::string>();
    inst.gen.seed = g.at("seed").get<std::uint64_t>();
    inst.gen.eta = g.value("eta", 0.0);
  } else if (j.contains("table")) {
    for (const auto& [key, vecs] : j.at("table").items())
      inst.table[std::stoull(key)] = vecs.get<std::vector<std::vector<double>>>();
  } else {
    throw std::invalid_argument("DPInstance JSON: need 'table' or 'generator'");
  }
  inst.validate();
  return inst;
}

}  // namespace swapkit
