// Restricted-triple machinery on product domains: constraint sets with
// diagonal/connectivity validation, dense subsets of Sigma^n, exhaustive
// valid-triple search, the slightly-off-diagonal three-point distribution,
// coordinate merging (forcing groups of coordinates equal), Dirichlet
// approximation on the torus, and a single desk-scale density-increment step.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swapkit/core.hpp"
#include "swapkit/extract.hpp"
#include "swapkit/tridist.hpp"

namespace swapkit {

// ---------------------------------------------------------------------------
// Constraint sets and dense sets
// ---------------------------------------------------------------------------

struct ConstraintVerdict {
  bool diagonal = false;   // (x,x,x) present for every symbol
  bool connected = false;  // all three pairwise supports connected
};

struct ConstraintSet {
  int sigma = 0;                            // common alphabet size
  std::vector<std::array<int, 3>> triples;  // sorted, distinct

  void validate() const {
    if (sigma < 1) throw std::invalid_argument("ConstraintSet: sigma must be >= 1");
    if (triples.empty()) throw std::invalid_argument("ConstraintSet: must be nonempty");
    for (const auto& t : triples)
      for (int v : t)
        if (v < 0 || v >= sigma) throw std::out_of_range("ConstraintSet: symbol out of range");
    for (std::size_t i = 1; i < triples.size(); ++i)
      if (!(triples[i - 1] < triples[i]))
        throw std::invalid_argument("ConstraintSet: triples must be sorted and distinct");
  }

  bool contains(int a, int b, int c) const {
    return std::binary_search(triples.begin(), triples.end(), std::array<int, 3>{a, b, c});
  }

  int diagonal_count() const {
    int d = 0;
    for (const auto& t : triples)
      if (t[0] == t[1] && t[1] == t[2]) ++d;
    return d;
  }

  // The restricted progression set {(x, x+a, x+2a) : x in F_p, a in {0,1}}.
  static ConstraintSet three_ap(int p) {
    ConstraintSet s;
    s.sigma = p;
    for (int x = 0; x < p; ++x)
      for (int a = 0; a < 2; ++a)
        s.triples.push_back({x, (x + a) % p, (x + 2 * a) % p});
    std::sort(s.triples.begin(), s.triples.end());
    s.triples.erase(std::unique(s.triples.begin(), s.triples.end()), s.triples.end());
    s.validate();
    return s;
  }

  // Uniform three-point distribution over the triples.
  TriDist uniform_dist() const {
    validate();
    TriDist d;
    d.sx = d.sy = d.sz = sigma;
    d.probs.assign(static_cast<std::size_t>(sigma) * static_cast<std::size_t>(sigma) *
                       static_cast<std::size_t>(sigma),
                   0.0);
    double w = 1.0 / static_cast<double>(triples.size());
    for (const auto& t : triples)
      d.probs[(static_cast<std::size_t>(t[0]) * static_cast<std::size_t>(sigma) +
               static_cast<std::size_t>(t[1])) *
                  static_cast<std::size_t>(sigma) +
              static_cast<std::size_t>(t[2])] += w;
    return d;
  }

  json to_json() const {
    validate();
    json j;
    j["sigma"] = sigma;
    json ts = json::array();
    for (const auto& t : triples) ts.push_back(json::array({t[0], t[1], t[2]}));
    j["triples"] = std::move(ts);
    return j;
  }

  static ConstraintSet from_json(const json& j) {
    if (!j.contains("sigma")) throw std::invalid_argument("ConstraintSet JSON: missing field 'sigma'");
    if (!j.contains("triples"))
      throw std::invalid_argument("ConstraintSet JSON: missing field 'triples'");
    ConstraintSet s;
    s.sigma = j.at("sigma").get<int>();
    for (const auto& t : j.at("triples")) {
      if (!t.is_array() || t.size() != 3)
        throw std::invalid_argument("ConstraintSet JSON: each triple must be [a,b,c]");
      s.triples.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
    }
    std::sort(s.triples.begin(), s.triples.end());
    s.validate();
    return s;
  }
};

inline ConstraintVerdict validate_constraint_set(const ConstraintSet& s) {
  s.validate();
  ConstraintVerdict v;
  v.diagonal = s.diagonal_count() == s.sigma;
  v.connected = pairwise_connected(s.uniform_dist()).connected;
  return v;
}

// Bit-packed subset of Sigma^n.
struct DenseSet {
  int sigma = 0;
  int n = 0;
  std::vector<std::uint64_t> bits;

  static DenseSet empty(int sigma, int n) {
    if (sigma < 1 || n < 1) throw std::invalid_argument("DenseSet: sigma and n must be >= 1");
    DenseSet s;
    s.sigma = sigma;
    s.n = n;
    std::size_t M = s.size();
    s.bits.assign((M + 63) / 64, 0ULL);
    return s;
  }
  static DenseSet full(int sigma, int n) {
    DenseSet s = empty(sigma, n);
    for (std::size_t i = 0; i < s.size(); ++i) s.set(i, true);
    return s;
  }

  std::size_t size() const {
    std::size_t M = 1;
    for (int c = 0; c < n; ++c) M *= static_cast<std::size_t>(sigma);
    return M;
  }
  std::vector<int> alphabets() const { return std::vector<int>(static_cast<std::size_t>(n), sigma); }

  bool contains(std::size_t idx) const { return (bits[idx >> 6] >> (idx & 63)) & 1ULL; }
  void set(std::size_t idx, bool v) {
    if (v)
      bits[idx >> 6] |= 1ULL << (idx & 63);
    else
      bits[idx >> 6] &= ~(1ULL << (idx & 63));
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (std::uint64_t w : bits) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  double density() const { return static_cast<double>(count()) / static_cast<double>(size()); }

  // Indicator as a dense table (values 0/1).
  FunctionTable indicator() const {
    FunctionTable f = FunctionTable::zeros(alphabets());
    for (std::size_t i = 0; i < f.size(); ++i)
      if (contains(i)) f.values[i] = cplx{1.0, 0.0};
    return f;
  }

  static DenseSet random(int sigma, int n, double density, Rng& rng) {
    DenseSet s = empty(sigma, n);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (rng.next_bool(density)) s.set(i, true);
    return s;
  }

  json to_json() const {
    json j;
    j["sigma"] = sigma;
    j["n"] = n;
    json words = json::array();
    for (std::uint64_t w : bits) words.push_back(w);
    j["bits"] = std::move(words);
    return j;
  }

  static DenseSet from_json(const json& j) {
    for (const char* field : {"sigma", "n", "bits"})
      if (!j.contains(field))
        throw std::invalid_argument(std::string("DenseSet JSON: missing field '") + field + "'");
    DenseSet s = empty(j.at("sigma").get<int>(), j.at("n").get<int>());
    std::vector<std::uint64_t> words = j.at("bits").get<std::vector<std::uint64_t>>();
    if (words.size() != s.bits.size())
      throw std::invalid_argument("DenseSet JSON: bit table length mismatch");
    s.bits = std::move(words);
    std::size_t M = s.size();
    if ((M & 63) != 0 && (s.bits.back() >> (M & 63)) != 0ULL)
      throw std::invalid_argument("DenseSet JSON: stray bits beyond the domain");
    return s;
  }
};

// ---------------------------------------------------------------------------
// Valid triples
// ---------------------------------------------------------------------------

struct Triple {
  std::vector<int> x, y, z;
};

inline constexpr std::uint64_t kTripleSearchBudget = 50000000ULL;

// Checks that (x,y,z) is a valid triple: not all equal and per-coordinate in S.
inline bool is_valid_triple(const ConstraintSet& S, const std::vector<int>& x,
                            const std::vector<int>& y, const std::vector<int>& z) {
  if (x == y && y == z) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!S.contains(x[i], y[i], z[i])) return false;
  return true;
}

// Exhaustive search for a valid triple in A: for each member x, walk the
// product of per-coordinate constraint slices {(b,c) : (x_i,b,c) in S} and
// test membership of the resulting (y, z). Returns the first witness in
// scan order, or nullopt after certifying that none exists.
inline std::optional<Triple> find_valid_triple(const DenseSet& A, const ConstraintSet& S,
                                               std::uint64_t budget = kTripleSearchBudget) {
  S.validate();
  if (A.sigma != S.sigma) throw std::invalid_argument("find_valid_triple: alphabet mismatch");
  const int n = A.n;
  std::vector<int> alphabets = A.alphabets();
  // Constraint slices per first symbol.
  std::vector<std::vector<std::array<int, 2>>> slice(static_cast<std::size_t>(S.sigma));
  for (const auto& t : S.triples)
    slice[static_cast<std::size_t>(t[0])].push_back({t[1], t[2]});
  std::vector<int> x, y(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n));
  std::uint64_t work = 0;
  for (std::size_t ix = 0; ix < A.size(); ++ix) {
    if (!A.contains(ix)) continue;
    index_tuple(alphabets, ix, x);
    std::uint64_t branches = 1;
    bool feasible = true;
    for (int c = 0; c < n && feasible; ++c) {
      std::size_t k = slice[static_cast<std::size_t>(x[static_cast<std::size_t>(c)])].size();
      if (k == 0) feasible = false;
      branches *= static_cast<std::uint64_t>(k);
      if (branches > budget) throw std::runtime_error("find_valid_triple: budget exceeded");
    }
    if (!feasible) continue;
    work += branches;
    if (work > budget) throw std::runtime_error("find_valid_triple: budget exceeded");
    // Odometer over the per-coordinate slice choices.
    std::vector<std::size_t> pick(static_cast<std::size_t>(n), 0);
    for (std::uint64_t step = 0; step < branches; ++step) {
      for (int c = 0; c < n; ++c) {
        const auto& opt = slice[static_cast<std::size_t>(x[static_cast<std::size_t>(c)])]
                               [pick[static_cast<std::size_t>(c)]];
        y[static_cast<std::size_t>(c)] = opt[0];
        z[static_cast<std::size_t>(c)] = opt[1];
      }
      if (A.contains(tuple_index(alphabets, y)) && A.contains(tuple_index(alphabets, z)) &&
          !(x == y && y == z))
        return Triple{x, y, z};
      for (int c = n - 1; c >= 0; --c) {
        std::size_t k = slice[static_cast<std::size_t>(x[static_cast<std::size_t>(c)])].size();
        if (++pick[static_cast<std::size_t>(c)] < k) break;
        pick[static_cast<std::size_t>(c)] = 0;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// The slightly-off-diagonal three-point distribution
// ---------------------------------------------------------------------------

// Mass 1/m - delta/(m*sqrt(n)) on each diagonal atom (a,a,a), and
// delta/(sqrt(n) * (|S| - m)) on each off-diagonal atom of S.
inline TriDist build_mu_increment(const ConstraintSet& S, double delta, int n) {
  S.validate();
  if (n < 1) throw std::invalid_argument("build_mu_increment: n must be >= 1");
  if (delta < 0.0) throw std::invalid_argument("build_mu_increment: delta must be >= 0");
  const int m = S.sigma;
  if (S.diagonal_count() != m)
    throw std::invalid_argument("build_mu_increment: S must contain the full diagonal");
  const int off = static_cast<int>(S.triples.size()) - m;
  if (delta > 0.0 && off == 0)
    throw std::invalid_argument("build_mu_increment: need off-diagonal atoms when delta > 0");
  const double rootn = std::sqrt(static_cast<double>(n));
  const double diag_mass = 1.0 / m - delta / (m * rootn);
  if (diag_mass <= 0.0) throw std::invalid_argument("build_mu_increment: nonpositive diagonal mass");
  const double off_mass = off > 0 ? delta / (rootn * static_cast<double>(off)) : 0.0;
  TriDist d;
  d.sx = d.sy = d.sz = m;
  d.probs.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m) *
                     static_cast<std::size_t>(m),
                 0.0);
  for (const auto& t : S.triples) {
    double mass = (t[0] == t[1] && t[1] == t[2]) ? diag_mass : off_mass;
    d.probs[(static_cast<std::size_t>(t[0]) * static_cast<std::size_t>(m) +
             static_cast<std::size_t>(t[1])) *
                static_cast<std::size_t>(m) +
            static_cast<std::size_t>(t[2])] = mass;
  }
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Coordinate merging
// ---------------------------------------------------------------------------

// g with the coordinates of T forced equal: the output's first coordinate is
// the common value, followed by the untouched coordinates in order.
inline FunctionTable merge_coords(const FunctionTable& g, const std::vector<int>& T) {
  if (T.empty()) throw std::invalid_argument("merge_coords: T must be nonempty");
  std::vector<int> sorted = T;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("merge_coords: T must be distinct");
  if (sorted.front() < 0 || sorted.back() >= g.n())
    throw std::out_of_range("merge_coords: coordinate out of range");
  int common = g.alphabets[static_cast<std::size_t>(sorted.front())];
  for (int c : sorted)
    if (g.alphabets[static_cast<std::size_t>(c)] != common)
      throw std::invalid_argument("merge_coords: coordinates in T must share one alphabet");
  std::vector<int> rest;
  for (int c = 0; c < g.n(); ++c)
    if (!std::binary_search(sorted.begin(), sorted.end(), c)) rest.push_back(c);
  std::vector<int> out_alpha{common};
  for (int c : rest) out_alpha.push_back(g.alphabets[static_cast<std::size_t>(c)]);
  FunctionTable out = FunctionTable::zeros(out_alpha);
  std::vector<int> t, v(static_cast<std::size_t>(g.n()), 0);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    index_tuple(out_alpha, idx, t);
    for (int c : sorted) v[static_cast<std::size_t>(c)] = t[0];
    for (std::size_t j = 0; j < rest.size(); ++j)
      v[static_cast<std::size_t>(rest[j])] = t[j + 1];
    out.values[idx] = g.at(v);
  }
  return out;
}

// Several disjoint groups merged at once: output coordinates are the group
// values (one per group, in the given order) followed by the untouched
// coordinates. Pointwise equal to iterating single merges, up to coordinate
// ordering.
inline FunctionTable merge_groups(const FunctionTable& g,
                                  const std::vector<std::vector<int>>& groups) {
  std::vector<char> used(static_cast<std::size_t>(g.n()), 0);
  std::vector<int> out_alpha;
  for (const auto& T : groups) {
    if (T.empty()) throw std::invalid_argument("merge_groups: empty group");
    int common = g.alphabets[static_cast<std::size_t>(T.front())];
    for (int c : T) {
      if (c < 0 || c >= g.n()) throw std::out_of_range("merge_groups: coordinate out of range");
      if (used[static_cast<std::size_t>(c)])
        throw std::invalid_argument("merge_groups: groups must be disjoint");
      used[static_cast<std::size_t>(c)] = 1;
      if (g.alphabets[static_cast<std::size_t>(c)] != common)
        throw std::invalid_argument("merge_groups: group must share one alphabet");
    }
    out_alpha.push_back(common);
  }
  std::vector<int> rest;
  for (int c = 0; c < g.n(); ++c)
    if (!used[static_cast<std::size_t>(c)]) {
      rest.push_back(c);
      out_alpha.push_back(g.alphabets[static_cast<std::size_t>(c)]);
    }
  FunctionTable out = FunctionTable::zeros(out_alpha);
  std::vector<int> t, v(static_cast<std::size_t>(g.n()), 0);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    index_tuple(out_alpha, idx, t);
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
      for (int c : groups[gi]) v[static_cast<std::size_t>(c)] = t[gi];
    for (std::size_t j = 0; j < rest.size(); ++j)
      v[static_cast<std::size_t>(rest[j])] = t[groups.size() + j];
    out.values[idx] = g.at(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dirichlet approximation on the torus
// ---------------------------------------------------------------------------

// Distance of t to the nearest integer.
inline double torus_dist(double t) {
  double f = t - std::floor(t);
  return std::min(f, 1.0 - f);
}

inline double torus_sup_norm(const std::vector<double>& v, int k) {
  double mx = 0.0;
  for (double t : v) mx = std::max(mx, torus_dist(static_cast<double>(k) * t));
  return mx;
}

// The multiplier 1 <= k <= k_max minimizing max_i ||k v_i|| on R/Z; if
// k_max >= N^m the minimum is at most 1/N by the pigeonhole argument.
inline int dirichlet_approx(const std::vector<double>& v, int k_max) {
  if (k_max < 1) throw std::invalid_argument("dirichlet_approx: k_max must be >= 1");
  int best_k = 1;
  double best = torus_sup_norm(v, 1);
  for (int k = 2; k <= k_max; ++k) {
    double s = torus_sup_norm(v, k);
    if (s < best - 1e-15) {
      best = s;
      best_k = k;
    }
  }
  return best_k;
}

// ---------------------------------------------------------------------------
// Density increment step
// ---------------------------------------------------------------------------

struct DensityStepParams {
  double delta = 0.05;     // off-diagonal mass scale of the increment distribution
  double gamma = 0.2;      // correlation / increment threshold
  double keep_rate = 0.5;  // survival rate of the random restrictions
  int num_restrictions = 20;
  int num_merge_samples = 8;
  std::uint64_t triple_budget = kTripleSearchBudget;
};

struct DensityStepOutcome {
  std::string kind;  // triple | increment | no_triple_certificate | inconclusive
  bool triple_free_certified = false;
  std::optional<Triple> triple;
  std::optional<Restriction> restriction;
  double base_density = 0.0;
  double new_density = 0.0;
  json log = json::array();

  json to_json() const {
    json j;
    j["kind"] = kind;
    j["triple_free_certified"] = triple_free_certified;
    j["base_density"] = base_density;
    j["new_density"] = new_density;
    if (triple) {
      j["triple"] = json{{"x", triple->x}, {"y", triple->y}, {"z", triple->z}};
    }
    if (restriction) {
      j["restriction"] =
          json{{"fixed_set", restriction->fixed_set}, {"assignment", restriction->assignment}};
    }
    j["log"] = log;
    return j;
  }
};

namespace detail {

// Density of the indicator restricted by r.
inline double restricted_density(const FunctionTable& ind, const Restriction& r) {
  FunctionTable sub = restrict_table(ind, r);
  double s = 0.0;
  for (const cplx& v : sub.values) s += v.real();
  return s / static_cast<double>(sub.size());
}

// Samples a restriction whose fixed symbols follow the given per-symbol law.
inline Restriction sample_restriction(int n, int sigma, double keep_rate,
                                      const std::vector<double>& law, Rng& r) {
  Restriction out;
  for (int c = 0; c < n; ++c) {
    if (r.next_double() < keep_rate) continue;
    double u = r.next_double();
    int sym = sigma - 1;
    double acc = 0.0;
    for (int a = 0; a < sigma; ++a) {
      acc += law[static_cast<std::size_t>(a)];
      if (u < acc) {
        sym = a;
        break;
      }
    }
    out.fixed_set.push_back(c);
    out.assignment.push_back(sym);
  }
  return out;
}

}  // namespace detail

// One step of the density increment loop: (i) exhaustive triple search;
// (ii) if triple-free, look for a restriction raising the density by delta;
// (iii) otherwise run the product-phase merging construction on the best
// correlated restriction and report the best density reached. Progress is
// only guaranteed asymptotically, so "inconclusive" is a legal outcome.
inline DensityStepOutcome density_increment_step(const DenseSet& A, const ConstraintSet& S,
                                                 const DensityStepParams& params, Rng rng) {
  DensityStepOutcome out;
  out.base_density = A.density();
  const double alpha = out.base_density;

  // (i) Triple search. A budget overrun downgrades the certificate but the
  // step still hunts for an increment.
  try {
    std::optional<Triple> t = find_valid_triple(A, S, params.triple_budget);
    if (t) {
      out.kind = "triple";
      out.triple = std::move(t);
      out.log.push_back(json{{"event", "triple_found"}});
      return out;
    }
    out.triple_free_certified = true;
    out.log.push_back(json{{"event", "triple_search_exhausted"}});
  } catch (const std::runtime_error&) {
    out.log.push_back(json{{"event", "triple_search_budget_exceeded"}});
  }
  if (A.count() == 0) {
    out.kind = "no_triple_certificate";
    out.new_density = alpha;
    return out;
  }

  // (ii) Random restrictions, symbols drawn from the x-marginal of the
  // increment distribution.
  TriDist mu = build_mu_increment(S, params.delta, A.n);
  std::vector<double> law = mu.marginal_x();
  FunctionTable ind = A.indicator();
  double best_density = -1.0;
  std::optional<Restriction> correlated;  // first pair per the sampling order
  double correlated_density = 0.0;
  for (int s = 0; s < params.num_restrictions; ++s) {
    Rng r = rng.child(static_cast<std::uint64_t>(s));
    Restriction cand =
        detail::sample_restriction(A.n, A.sigma, params.keep_rate, law, r);
    if (static_cast<int>(cand.fixed_set.size()) == A.n) continue;  // keep at least one coordinate
    double dens = detail::restricted_density(ind, cand);
    out.log.push_back(json{{"event", "restriction_sampled"},
                           {"fixed", cand.fixed_set.size()},
                           {"density", dens}});
    if (dens > best_density) best_density = dens;
    if (dens >= alpha + params.delta) {
      out.kind = "increment";
      out.restriction = cand;
      out.new_density = dens;
      out.log.push_back(json{{"event", "density_increment"}, {"density", dens}});
      return out;
    }
    if (!correlated && dens >= alpha - 10.0 * params.delta / params.gamma) {
      // Candidate for the product-correlation branch; take the first
      // satisfying pair in sampling order.
      correlated = cand;
      correlated_density = dens;
    }
  }

  // (iii) Product-phase merging on the surviving restriction.
  if (correlated) {
    FunctionTable f = restrict_table(ind, *correlated);
    double sub_alpha = correlated_density;
    for (auto& v : f.values) v -= sub_alpha;  // centered indicator
    int nn = f.n();
    if (nn >= 2) {
      SearchBudget sb;
      sb.keep_rates = {1.0};
      sb.restarts_per_rate = 1;
      BestProduct bp = best_product_correlation(f, sb, rng.child(0xBEEF));
      out.log.push_back(json{{"event", "product_correlation"}, {"corr", bp.corr}});
      if (bp.corr >= params.gamma) {
        // Phase vectors of the (unimodularized) product factors.
        std::vector<std::vector<double>> phases;
        for (const auto& fac : bp.P.factors) {
          std::vector<double> v;
          for (const cplx& e : fac) {
            double ph = std::abs(e) < 1e-12 ? 0.0 : std::arg(e) / (2.0 * kPi);
            v.push_back(ph - std::floor(ph));
          }
          phases.push_back(std::move(v));
        }
        // Pigeonhole the phase vectors on a fixed grid of side n^{-1/(2m)},
        // ties broken by coordinate order.
        const double grid = std::pow(static_cast<double>(nn),
                                     -1.0 / (2.0 * static_cast<double>(A.sigma)));
        std::vector<std::vector<int>> groups;
        std::vector<std::vector<int>> keys;
        for (int j = 0; j < nn; ++j) {
          std::vector<int> key;
          for (double ph : phases[static_cast<std::size_t>(j)])
            key.push_back(static_cast<int>(std::floor(ph / grid)));
          bool placed = false;
          for (std::size_t gi = 0; gi < groups.size(); ++gi)
            if (keys[gi] == key) {
              groups[gi].push_back(j);
              placed = true;
              break;
            }
          if (!placed) {
            groups.push_back({j});
            keys.push_back(std::move(key));
          }
        }
        // Keep groups with at least two coordinates; pick Dirichlet
        // multipliers and sample merge subsets.
        const int k_cap = std::max(
            1, static_cast<int>(std::floor(std::pow(
                   static_cast<double>(nn), 1.0 / (4.0 * static_cast<double>(A.sigma))))));
        std::vector<std::vector<int>> mergeable;
        for (const auto& g : groups)
          if (g.size() >= 2) mergeable.push_back(g);
        out.log.push_back(
            json{{"event", "phase_groups"}, {"total", groups.size()}, {"mergeable", mergeable.size()}});
        if (!mergeable.empty()) {
          for (int s = 0; s < params.num_merge_samples; ++s) {
            Rng r = rng.child(0xFACE00ULL + static_cast<std::uint64_t>(s));
            std::vector<std::vector<int>> Ts;
            for (const auto& g : mergeable) {
              int ki = dirichlet_approx(phases[static_cast<std::size_t>(g.front())], k_cap);
              int take = std::min<int>(std::max(2, ki), static_cast<int>(g.size()));
              std::vector<int> pool = g;
              std::vector<int> T;
              for (int i = 0; i < take; ++i) {
                int pick = r.next_int(static_cast<int>(pool.size()));
                T.push_back(pool[static_cast<std::size_t>(pick)]);
                pool.erase(pool.begin() + pick);
              }
              std::sort(T.begin(), T.end());
              Ts.push_back(std::move(T));
            }
            FunctionTable merged = merge_groups(restrict_table(ind, *correlated), Ts);
            // Uniformly restrict the untouched coordinates (everything past
            // the merged group values).
            Restriction tail;
            for (int c = static_cast<int>(Ts.size()); c < merged.n(); ++c) {
              tail.fixed_set.push_back(c);
              tail.assignment.push_back(r.next_int(merged.alphabets[static_cast<std::size_t>(c)]));
            }
            double dens = detail::restricted_density(merged, tail);
            out.log.push_back(json{{"event", "merge_sampled"}, {"density", dens}});
            if (dens > best_density) best_density = dens;
            if (dens >= alpha + params.delta) {
              out.kind = "increment";
              out.new_density = dens;
              out.log.push_back(json{{"event", "merge_increment"}, {"density", dens}});
              return out;
            }
          }
        }
      }
    }
  }

  // No branch achieved the delta increment. A certified triple-free set is
  // a legitimate terminal answer; otherwise the step is honestly inconclusive.
  out.new_density = std::max(best_density, alpha);
  out.log.push_back(json{{"event", "no_increment"}, {"best_density", best_density}});
  out.kind = out.triple_free_certified ? "no_triple_certificate" : "inconclusive";
  return out;
}

}  // namespace swapkit
