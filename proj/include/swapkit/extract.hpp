// Partition SVDs, greedy product-function extraction, the iterative
// peel-and-restrict scheme with its potential trace, heuristic best-product
// search over random restrictions, phase-invariant embeddings of product
// functions, short lists, and the conversion to exactly unimodular products.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "swapkit/core.hpp"
#include "swapkit/norms.hpp"

namespace swapkit {

// ---------------------------------------------------------------------------
// Partition SVD: f = sum_i lambda_i g_i(x_J) h_i(x_Jbar) with g, h orthonormal
// under uniform expectation inner products and lambda nonincreasing.
// ---------------------------------------------------------------------------

struct SvdTriple {
  double lambda = 0.0;
  FunctionTable g;  // on the J coordinates
  FunctionTable h;  // on the complementary coordinates
};

struct PartitionSVD {
  std::vector<int> alphabets;  // of the original function
  std::vector<int> J, Jbar;    // sorted coordinate sets
  std::vector<SvdTriple> triples;

  // Rebuild sum of the first k triples (all if k < 0) on the full domain.
  FunctionTable reconstruct(int k = -1) const {
    FunctionTable out = FunctionTable::zeros(alphabets);
    auto offJ = detail::partial_offsets(alphabets, J);
    auto offI = detail::partial_offsets(alphabets, Jbar);
    std::size_t kk = (k < 0) ? triples.size() : std::min<std::size_t>((std::size_t)k, triples.size());
    for (std::size_t t = 0; t < kk; ++t) {
      const auto& tr = triples[t];
      for (std::size_t a = 0; a < offJ.size(); ++a)
        for (std::size_t b = 0; b < offI.size(); ++b)
          out.values[offJ[a] + offI[b]] += tr.lambda * tr.g.values[a] * tr.h.values[b];
    }
    return out;
  }
};

inline PartitionSVD partition_svd(const FunctionTable& f, const std::vector<int>& J_in) {
  PartitionSVD out;
  out.alphabets = f.alphabets;
  out.J = J_in;
  std::sort(out.J.begin(), out.J.end());
  for (int c = 0; c < f.n(); ++c)
    if (!std::binary_search(out.J.begin(), out.J.end(), c)) out.Jbar.push_back(c);
  auto offJ = detail::partial_offsets(f.alphabets, out.J);
  auto offI = detail::partial_offsets(f.alphabets, out.Jbar);
  const std::size_t R = offJ.size(), C = offI.size();
  if (R * C > 4'000'000) throw std::runtime_error("partition_svd: matricization too large");

  Eigen::MatrixXcd M((Eigen::Index)R, (Eigen::Index)C);
  for (std::size_t a = 0; a < R; ++a)
    for (std::size_t b = 0; b < C; ++b) M((Eigen::Index)a, (Eigen::Index)b) = f.values[offJ[a] + offI[b]];

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  double top = s.size() > 0 ? s(0) : 0.0;
  // Singular values below numerical noise are dropped; f = 0 yields no triples.
  double cutoff = std::max(1e-13, top * 1e-12);
  const double scale = 1.0 / std::sqrt((double)R * (double)C);

  std::vector<int> alphaJ, alphaI;
  for (int c : out.J) alphaJ.push_back(f.alphabets[(std::size_t)c]);
  for (int c : out.Jbar) alphaI.push_back(f.alphabets[(std::size_t)c]);

  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) <= cutoff) break;
    SvdTriple tr;
    tr.lambda = s(i) * scale;
    tr.g = FunctionTable::zeros(alphaJ);
    tr.h = FunctionTable::zeros(alphaI);
    double sr = std::sqrt((double)R), sc = std::sqrt((double)C);
    for (std::size_t a = 0; a < R; ++a) tr.g.values[a] = sr * svd.matrixU()((Eigen::Index)a, i);
    for (std::size_t b = 0; b < C; ++b) tr.h.values[b] = sc * std::conj(svd.matrixV()((Eigen::Index)b, i));
    // Phase convention: largest-magnitude entry of g made real nonnegative;
    // ties broken by the first (lexicographically smallest) index.
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t a = 0; a < R; ++a)
      if (std::abs(tr.g.values[a]) > best + 1e-15) {
        best = std::abs(tr.g.values[a]);
        arg = a;
      }
    if (best > 0.0) {
      cplx phase = tr.g.values[arg] / std::abs(tr.g.values[arg]);
      for (auto& v : tr.g.values) v /= phase;
      for (auto& v : tr.h.values) v *= phase;
    }
    out.triples.push_back(std::move(tr));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Greedy product extraction: coordinate-by-coordinate top singular vectors.
// ---------------------------------------------------------------------------

struct ExtractResult {
  ProductFunction P;
  double corr = 0.0;  // |<f, P_1...P_n>| under the uniform measure
};

inline double product_correlation(const FunctionTable& f, const ProductFunction& P) {
  FunctionTable pt = product_to_table(P);
  return std::abs(inner_product(f, pt, ProductMeasure::uniform(f.alphabets)));
}

inline ExtractResult extract_product_99(const FunctionTable& f) {
  if (l2_norm(f) > 1.0 + 1e-9) throw std::invalid_argument("extract_product_99: ||f||_2 <= 1 required");
  ExtractResult out;
  FunctionTable h = f;  // residual on the remaining coordinates
  int n = f.n();
  for (int c = 0; c < n; ++c) {
    if (h.n() == 0) break;
    PartitionSVD svd = partition_svd(h, {0});
    if (svd.triples.empty()) break;  // zero residual: pad below
    out.P.factors.push_back(svd.triples[0].g.values);
    h = svd.triples[0].h;
  }
  // Degenerate residual: pad with unit-norm constant factors.
  for (int c = (int)out.P.factors.size(); c < n; ++c)
    out.P.factors.push_back(std::vector<cplx>((std::size_t)f.alphabets[(std::size_t)c], cplx{1, 0}));
  out.corr = product_correlation(f, out.P);
  return out;
}

// ---------------------------------------------------------------------------
// Iterative peeling: alternate top-t SVD subtraction on a random partition
// with random restrictions, tracking the potential
//   Phi_t = (eps^{-5} swap(f_t)^{1/2} - ||Delta_t||_2^2) / ||f_t||_2^2.
// ---------------------------------------------------------------------------

struct PeelStep {
  int t = 0;
  std::vector<int> R, S, T;  // original coordinate labels
  double f_l2 = 0.0, delta_l2 = 0.0;
  double swap_f = 0.0, swap_delta = 0.0;
  double phi = 0.0;
  FunctionTable f_t;                      // retained for exact-restriction oracles
  std::vector<int> restricted_coords;     // labels fixed when moving to step t+1
  std::vector<int> restriction_values;
  std::string termination;  // nonempty on the final step

  json to_json() const {
    json j;
    j["t"] = t;
    j["R"] = R;
    j["S"] = S;
    j["T"] = T;
    j["f_l2"] = f_l2;
    j["delta_l2"] = delta_l2;
    j["swap_f"] = swap_f;
    j["swap_delta"] = swap_delta;
    j["phi"] = phi;
    if (!restricted_coords.empty()) {
      j["restricted_coords"] = restricted_coords;
      j["restriction_values"] = restriction_values;
    }
    if (!termination.empty()) j["termination"] = termination;
    return j;
  }
};

struct PeelTrace {
  std::vector<PeelStep> steps;
  std::string termination;
  // Terminal decomposition diagnostic: which incremental case fired and the
  // constructed pair; inequalities are logged, not asserted.
  int terminal_case = 0;  // 0 none, 1 dominant-singular, 2 cross-term, 3 single-h
  double terminal_eta = 0.0;
  std::optional<FunctionTable> terminal_g, terminal_h;
};

namespace detail {
// Positions (within the sorted list `all`) of the members of `subset`.
inline std::vector<int> positions_in(const std::vector<int>& all, const std::vector<int>& subset) {
  std::vector<int> pos;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (std::binary_search(subset.begin(), subset.end(), all[i])) pos.push_back((int)i);
  return pos;
}
}  // namespace detail

inline PeelTrace peel_iterate(const FunctionTable& f, double eps, double gamma, int T_max,
                              Rng rng) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("peel_iterate: gamma in (0,1)");
  if (T_max < 1) throw std::invalid_argument("peel_iterate: T_max >= 1");
  PeelTrace trace;
  FunctionTable ft = f;
  std::vector<int> R, S, T;
  for (int c = 0; c < f.n(); ++c) R.push_back(c);
  for (int c : R) (rng.next_bool(0.5) ? S : T).push_back(c);

  double ceps = std::pow(eps, -5.0);
  PartitionSVD last_svd;
  for (int t = 0; t <= T_max; ++t) {
    PeelStep step;
    step.t = t;
    step.R = R;
    step.S = S;
    step.T = T;
    step.f_t = ft;
    step.f_l2 = l2_norm(ft);

    // Delta_t: subtract the top-t triples of the S_t-SVD of f_t.
    std::vector<int> Jpos = detail::positions_in(R, S);
    last_svd = partition_svd(ft, Jpos);
    FunctionTable delta = sub(ft, last_svd.reconstruct(t));
    step.delta_l2 = l2_norm(delta);
    step.swap_f = swap_inner(ft).value.real();
    step.swap_delta = swap_inner(delta).value.real();
    double fl2sq = sqr(step.f_l2);
    step.phi = fl2sq > 0.0
                   ? (ceps * std::sqrt(std::max(0.0, step.swap_f)) - sqr(step.delta_l2)) / fl2sq
                   : 0.0;

    std::string reason;
    if (std::sqrt(std::max(0.0, step.swap_delta)) < gamma * fl2sq) reason = "delta_small";
    else if (t >= T_max) reason = "t_max";
    if (reason.empty()) {
      // Refine the partition and restrict onto the surviving coordinates.
      std::vector<int> S1, T1;
      for (int c : S)
        if (rng.next_bool(0.5)) S1.push_back(c);
      for (int c : T)
        if (!rng.next_bool(0.5)) T1.push_back(c);
      std::vector<int> R1 = S1;
      R1.insert(R1.end(), T1.begin(), T1.end());
      std::sort(R1.begin(), R1.end());
      if (S1.empty() || T1.empty()) {
        reason = "domain_exhausted";
      } else {
        std::vector<int> dropped;
        for (int c : R)
          if (!std::binary_search(R1.begin(), R1.end(), c)) dropped.push_back(c);
        Restriction rest;
        rest.fixed_set = detail::positions_in(R, dropped);
        for (int pos : rest.fixed_set)
          rest.assignment.push_back((int)rng.next_int(ft.alphabets[(std::size_t)pos]));
        step.restricted_coords = dropped;
        step.restriction_values = rest.assignment;
        ft = restrict_table(ft, rest);
        R = R1;
        S = S1;
        T = T1;
      }
    }
    step.termination = reason;
    trace.steps.push_back(std::move(step));
    if (!reason.empty()) {
      trace.termination = reason;
      break;
    }
  }

  // Terminal diagnostic: classify the incremental decomposition case on the
  // final f_t, normalized to unit 2-norm.
  const PeelStep& fin = trace.steps.back();
  if (fin.f_l2 > 1e-12 && !last_svd.triples.empty()) {
    double inv = 1.0 / fin.f_l2;
    std::vector<double> lam;
    std::vector<FunctionTable> gs, hs;
    for (const auto& tr : last_svd.triples) {
      lam.push_back(tr.lambda * inv);
      gs.push_back(tr.g);
      hs.push_back(tr.h);
    }
    double swap_f_unit = fin.swap_f * std::pow(inv, 4.0);
    if (lam[0] >= 1.0 - eps * eps / 1e10) {
      trace.terminal_case = 1;
      trace.terminal_eta = lam[0];
      trace.terminal_g = gs[0];
      trace.terminal_h = hs[0];
    } else {
      double delta1 = 1.0 - sqr(lam[0]);
      double cross = 0.0;
      std::size_t m = std::min<std::size_t>(lam.size(), 8);  // diagnostic budget
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
          cross += 2.0 * sqr(lam[i]) * sqr(lam[j]) *
                   swap_inner(hs[i], hs[j], hs[i], hs[j]).value.real();
      if (cross >= delta1 / 4.0 * swap_f_unit) {
        trace.terminal_case = 2;
        trace.terminal_eta = 1.0 / std::sqrt((double)m);
        FunctionTable g = FunctionTable::zeros(gs[0].alphabets);
        FunctionTable h = FunctionTable::zeros(hs[0].alphabets);
        for (std::size_t i = 0; i < m; ++i) {
          cplx beta = rng.next_unit_complex();
          cplx alphac = std::conj(beta) / std::sqrt((double)m);
          for (std::size_t a = 0; a < g.size(); ++a) g.values[a] += alphac * gs[i].values[a];
          for (std::size_t b = 0; b < h.size(); ++b) h.values[b] += beta * lam[i] * hs[i].values[b];
        }
        trace.terminal_g = g;
        trace.terminal_h = h;
      } else {
        trace.terminal_case = 3;
        std::size_t pick = 0;
        double bestv = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
          if (sqr(lam[i]) <= delta1 * swap_f_unit / 10.0) continue;
          double v = swap_inner(hs[i]).value.real();
          if (v > bestv) { bestv = v; pick = i; }
        }
        trace.terminal_eta = lam[pick];
        trace.terminal_g = gs[pick];
        trace.terminal_h = hs[pick];
      }
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Heuristic best-product search over random restrictions.
// ---------------------------------------------------------------------------

struct SearchBudget {
  std::vector<double> keep_rates{1.0, 0.7, 0.5, 0.3};
  int restarts_per_rate = 4;
  int refine_iters = 4;
  bool empty_only = false;
};

struct BestProduct {
  Restriction restriction;  // on the coordinates of f
  ProductFunction P;        // on the surviving coordinates
  double corr = 0.0;
};

namespace detail {
// Alternating refinement: coordinate-wise optimal unit-norm factor given the
// others, P_i(a) proportional to E[f conj(prod_{j != i} P_j) | x_i = a].
inline double refine_product(const FunctionTable& f, ProductFunction& P, int iters) {
  int n = f.n();
  double corr = 0.0;
  std::vector<int> x;
  for (int it = 0; it < iters; ++it) {
    for (int i = 0; i < n; ++i) {
      int k = f.alphabets[(std::size_t)i];
      std::vector<cplx> m((std::size_t)k, cplx{0, 0});
      for (std::size_t idx = 0; idx < f.size(); ++idx) {
        index_tuple(f.alphabets, idx, x);
        cplx rest{1, 0};
        for (int j = 0; j < n; ++j)
          if (j != i) rest *= P.factors[(std::size_t)j][(std::size_t)x[(std::size_t)j]];
        m[(std::size_t)x[(std::size_t)i]] += f.values[idx] * std::conj(rest);
      }
      double others = (double)(f.size() / (std::size_t)k);
      double norm2 = 0.0;
      for (auto& v : m) {
        v /= others;  // conditional expectation over the other coordinates
        norm2 += std::norm(v);
      }
      norm2 /= (double)k;
      if (norm2 < 1e-28) continue;
      double scale = 1.0 / std::sqrt(norm2);
      for (int a = 0; a < k; ++a) P.factors[(std::size_t)i][(std::size_t)a] = m[(std::size_t)a] * scale;
    }
  }
  corr = product_correlation(f, P);
  return corr;
}
}  // namespace detail

inline BestProduct best_product_correlation(const FunctionTable& f, const SearchBudget& budget,
                                            Rng rng) {
  BestProduct best;
  auto consider = [&](const Restriction& rest, const FunctionTable& g, Rng seed) {
    (void)seed;
    if (g.n() == 0) return;
    double l2 = l2_norm(g);
    if (l2 < 1e-12) return;
    FunctionTable gn = scale(g, cplx{1.0 / std::max(1.0, l2), 0.0});
    ExtractResult ex = extract_product_99(gn);
    double corr = detail::refine_product(g, ex.P, budget.refine_iters);
    if (corr > best.corr) {
      best.corr = corr;
      best.P = ex.P;
      best.restriction = rest;
    }
  };
  consider(Restriction{}, f, rng.child(0));
  if (!budget.empty_only) {
    std::uint64_t stream = 1;
    for (double rate : budget.keep_rates) {
      if (rate >= 1.0 - 1e-12) continue;
      for (int s = 0; s < budget.restarts_per_rate; ++s) {
        Rng r = rng.child(stream++);
        auto [rest, g] = random_restriction(f, rate, ProductMeasure::uniform(f.alphabets), r);
        consider(rest, g, r);
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Phase-invariant embedding of product functions and phase alignment.
// ---------------------------------------------------------------------------

inline std::vector<double> embed_pi(const ProductFunction& P, int reference) {
  std::vector<double> out;
  for (const auto& fac : P.factors) {
    if (reference < 0 || (std::size_t)reference >= fac.size())
      throw std::invalid_argument("embed_pi: reference symbol out of range");
    cplx ref = fac[(std::size_t)reference];
    if (std::abs(ref) == 0.0) throw std::invalid_argument("embed_pi: zero factor at the reference symbol");
    cplx c = std::conj(ref) / std::abs(ref);  // c * fac(reference) is real nonnegative
    for (const auto& v : fac) {
      cplx w = c * v;
      out.push_back(w.real());
      out.push_back(w.imag());
    }
  }
  return out;
}

struct PhaseAlign {
  cplx c{1.0, 0.0};
  bool bound_ok = false;
  double lhs = 0.0;  // ||cP - Q||_2^2 (expectation norm)
  double rhs = 0.0;  // ||pi(P) - pi(Q)||_2^2
};

inline PhaseAlign phase_align(const ProductFunction& P, const ProductFunction& Q,
                              int reference = 0) {
  if (P.factors.size() != Q.factors.size())
    throw std::invalid_argument("phase_align: arity mismatch");
  PhaseAlign out;
  double prod_abs = 1.0;
  for (std::size_t i = 0; i < P.factors.size(); ++i) {
    const auto& pi = P.factors[i];
    const auto& qi = Q.factors[i];
    if (pi.size() != qi.size()) throw std::invalid_argument("phase_align: alphabet mismatch");
    cplx ip{0, 0};
    for (std::size_t a = 0; a < pi.size(); ++a) ip += pi[a] * std::conj(qi[a]);
    ip /= (double)pi.size();
    double mag = std::abs(ip);
    cplx ci = mag > 0.0 ? std::conj(ip) / mag : cplx{1, 0};  // c_i <P_i,Q_i> real nonneg
    out.c *= ci;
    prod_abs *= mag;
  }
  out.lhs = 2.0 - 2.0 * prod_abs;  // unimodular factors: ||P||_2 = ||Q||_2 = 1
  std::vector<double> pp = embed_pi(P, reference), pq = embed_pi(Q, reference);
  for (std::size_t i = 0; i < pp.size(); ++i) out.rhs += sqr(pp[i] - pq[i]);
  out.bound_ok = out.lhs <= out.rhs + 1e-9;
  return out;
}

// ---------------------------------------------------------------------------
// Short list of near-orthogonal correlated products.
// ---------------------------------------------------------------------------

inline double product_inner_abs(const ProductFunction& P, const ProductFunction& Q) {
  double prod = 1.0;
  for (std::size_t i = 0; i < P.factors.size(); ++i) {
    cplx ip{0, 0};
    for (std::size_t a = 0; a < P.factors[i].size(); ++a)
      ip += P.factors[i][a] * std::conj(Q.factors[i][a]);
    prod *= std::abs(ip) / (double)P.factors[i].size();
  }
  return prod;
}

inline std::vector<ProductFunction> short_list(const FunctionTable& f, double eps, double delta,
                                               const SearchBudget& budget, Rng rng,
                                               int max_members = 16) {
  std::vector<ProductFunction> list;
  std::vector<double> list_corr;
  FunctionTable residual = f;
  SearchBudget inner = budget;
  inner.empty_only = true;
  for (int round = 0; round < max_members; ++round) {
    BestProduct bp = best_product_correlation(residual, inner, rng.child((std::uint64_t)round));
    if (bp.P.factors.empty()) break;
    double corr_f = product_correlation(f, bp.P);
    if (corr_f < eps) break;
    // Subtract the projection onto the found product from the residual.
    FunctionTable pt = product_to_table(bp.P);
    cplx proj = inner_product(residual, pt, ProductMeasure::uniform(f.alphabets));
    residual = sub(residual, scale(pt, proj));
    // Greedy pruning: when two members are delta-close keep the one with the
    // larger correlation to f.
    bool keep = true;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (product_inner_abs(bp.P, list[i]) >= delta) {
        if (corr_f > list_corr[i]) {
          list[i] = bp.P;
          list_corr[i] = corr_f;
        }
        keep = false;
        break;
      }
    }
    if (keep) {
      list.push_back(bp.P);
      list_corr.push_back(corr_f);
    }
  }
  return list;
}

// ---------------------------------------------------------------------------
// Conversion to an exactly unimodular product via a frequency-grid search.
// ---------------------------------------------------------------------------

struct BoundedProductResult {
  ProductFunction P_prime;  // every value on the unit circle
  double corr = 0.0;
  double theta = 0.0;
};

inline BoundedProductResult to_bounded_product(const FunctionTable& f, const ProductFunction& P,
                                               double delta, double theta_max = -1.0) {
  if (lp_norm(f, 4.0) > 1.0 + 1e-9) throw std::invalid_argument("to_bounded_product: ||f||_4 <= 1");
  int n = f.n();
  if ((int)P.factors.size() != n) throw std::invalid_argument("to_bounded_product: arity mismatch");
  // Split P into unimodular phase Q and positive magnitude R.
  ProductFunction Q;
  std::vector<std::vector<double>> lnR((std::size_t)n);
  double ln_range = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<cplx> qi;
    double mx = 0.0;
    for (const auto& v : P.factors[(std::size_t)i]) {
      double m = std::abs(v);
      if (m == 0.0)
        throw std::invalid_argument("to_bounded_product: P has a zero value (perturb first)");
      qi.push_back(v / m);
      lnR[(std::size_t)i].push_back(std::log(m));
      mx = std::max(mx, std::abs(std::log(m)));
    }
    Q.factors.push_back(std::move(qi));
    ln_range += mx;
  }
  // g(x) = f(x) conj(Q(x)); the search maximizes |E[g e^{-2 pi i theta ln R(x)}]|.
  std::vector<cplx> g(f.size());
  std::vector<double> l(f.size());
  std::vector<int> x;
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    index_tuple(f.alphabets, idx, x);
    cplx q{1, 0};
    double lv = 0.0;
    for (int i = 0; i < n; ++i) {
      q *= Q.factors[(std::size_t)i][(std::size_t)x[(std::size_t)i]];
      lv += lnR[(std::size_t)i][(std::size_t)x[(std::size_t)i]];
    }
    g[idx] = f.values[idx] * std::conj(q);
    l[idx] = lv;
  }
  auto eval = [&](double theta) {
    cplx acc{0, 0};
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      double phase = -2.0 * kPi * theta * l[idx];
      acc += g[idx] * cplx{std::cos(phase), std::sin(phase)};
    }
    return std::abs(acc) / (double)f.size();
  };

  BoundedProductResult out;
  if (theta_max < 0.0) theta_max = 64.0 / std::pow(delta, 3.0);
  double best_theta = 0.0, best_val = eval(0.0);
  if (ln_range > 1e-15) {
    // Three refinement levels; the finest step moves the phase by < 0.01
    // across the instance's total ln-magnitude range.
    double fine_step = 0.01 / (2.0 * kPi * ln_range);
    double span = theta_max;
    double center = 0.0;
    for (int level = 0; level < 3; ++level) {
      double step = std::max(fine_step, 2.0 * span / 4096.0);
      for (double th = center - span; th <= center + span + step / 2; th += step) {
        double v = eval(th);
        if (v > best_val) { best_val = v; best_theta = th; }
      }
      center = best_theta;
      span = step * 2.0;
      if (step <= fine_step * (1.0 + 1e-12)) break;
    }
  }
  out.theta = best_theta;
  out.corr = best_val;
  out.P_prime = Q;
  for (int i = 0; i < n; ++i)
    for (std::size_t a = 0; a < out.P_prime.factors[(std::size_t)i].size(); ++a) {
      double phase = 2.0 * kPi * best_theta * lnR[(std::size_t)i][a];
      out.P_prime.factors[(std::size_t)i][a] *= cplx{std::cos(phase), std::sin(phase)};
    }
  return out;
}

}  // namespace swapkit
