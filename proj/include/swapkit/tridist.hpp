// Distributions over Sigma x Gamma x Phi: connectivity checks, uniform-
// component decomposition, path tricks (exact walk DP, support-compressed
// enlarged alphabets), the full-support pipeline, symmetry witnesses with the
// mu-minus construction, and the 3-wise correlation form.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "swapkit/core.hpp"
#include "swapkit/norms.hpp"

namespace swapkit {

struct TriDist {
  int sx = 1, sy = 1, sz = 1;
  std::vector<double> probs;  // index ((x*sy)+y)*sz + z

  TriDist() = default;
  TriDist(int a, int b, int c)
      : sx(a), sy(b), sz(c), probs((std::size_t)a * (std::size_t)b * (std::size_t)c, 0.0) {}

  std::size_t idx(int x, int y, int z) const {
    return ((std::size_t)x * (std::size_t)sy + (std::size_t)y) * (std::size_t)sz + (std::size_t)z;
  }
  double p(int x, int y, int z) const { return probs[idx(x, y, z)]; }
  double& p(int x, int y, int z) { return probs[idx(x, y, z)]; }

  void validate() const {
    double s = 0.0;
    for (double v : probs) {
      if (v < 0.0) throw std::invalid_argument("TriDist: negative mass");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("TriDist: mass not 1");
  }

  std::vector<double> marginal_x() const {
    std::vector<double> m((std::size_t)sx, 0.0);
    for (int x = 0; x < sx; ++x)
      for (int y = 0; y < sy; ++y)
        for (int z = 0; z < sz; ++z) m[(std::size_t)x] += p(x, y, z);
    return m;
  }
  std::vector<double> marginal_y() const {
    std::vector<double> m((std::size_t)sy, 0.0);
    for (int x = 0; x < sx; ++x)
      for (int y = 0; y < sy; ++y)
        for (int z = 0; z < sz; ++z) m[(std::size_t)y] += p(x, y, z);
    return m;
  }
  std::vector<double> marginal_z() const {
    std::vector<double> m((std::size_t)sz, 0.0);
    for (int x = 0; x < sx; ++x)
      for (int y = 0; y < sy; ++y)
        for (int z = 0; z < sz; ++z) m[(std::size_t)z] += p(x, y, z);
    return m;
  }

  struct Atom {
    int x, y, z;
    double p;
  };
  std::vector<Atom> support() const {
    std::vector<Atom> s;
    for (int x = 0; x < sx; ++x)
      for (int y = 0; y < sy; ++y)
        for (int z = 0; z < sz; ++z)
          if (p(x, y, z) > 0.0) s.push_back({x, y, z, p(x, y, z)});
    return s;
  }

  static TriDist uniform_on(int sx, int sy, int sz, const std::vector<std::array<int, 3>>& supp) {
    TriDist d(sx, sy, sz);
    if (supp.empty()) throw std::invalid_argument("TriDist::uniform_on: empty support");
    double w = 1.0 / (double)supp.size();
    for (const auto& a : supp) d.p(a[0], a[1], a[2]) += w;
    return d;
  }

  // Permute axes: perm[new_axis] = old_axis (0=x, 1=y, 2=z).
  TriDist permuted(const std::array<int, 3>& perm) const {
    std::array<int, 3> sizes{sx, sy, sz};
    TriDist out(sizes[(std::size_t)perm[0]], sizes[(std::size_t)perm[1]], sizes[(std::size_t)perm[2]]);
    std::array<int, 3> v{};
    for (int x = 0; x < sx; ++x)
      for (int y = 0; y < sy; ++y)
        for (int z = 0; z < sz; ++z) {
          std::array<int, 3> old{x, y, z};
          for (int a = 0; a < 3; ++a) v[(std::size_t)a] = old[(std::size_t)perm[(std::size_t)a]];
          out.p(v[0], v[1], v[2]) = p(x, y, z);
        }
    return out;
  }

  json to_json() const {
    json j;
    j["sigma"] = sx;
    j["gamma"] = sy;
    j["phi"] = sz;
    j["probs"] = probs;
    return j;
  }
  static TriDist from_json(const json& j) {
    for (const char* k : {"sigma", "gamma", "phi", "probs"})
      if (!j.contains(k)) throw std::invalid_argument(std::string("TriDist JSON: missing field '") + k + "'");
    TriDist d(j.at("sigma").get<int>(), j.at("gamma").get<int>(), j.at("phi").get<int>());
    auto pr = j.at("probs").get<std::vector<double>>();
    if (pr.size() != d.probs.size()) throw std::invalid_argument("TriDist JSON: probs length mismatch");
    d.probs = std::move(pr);
    d.validate();
    return d;
  }
};

// ---------------------------------------------------------------------------
// Pairwise connectivity
// ---------------------------------------------------------------------------

struct ConnectivityResult {
  bool connected = false;
  // On failure: which pair graph split, with a 2-coloring certificate
  // (component of the first left vertex = color 0).
  std::string failing_graph;                 // "xy", "xz" or "yz"
  std::vector<int> left_color, right_color;  // 0/1 per symbol
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Bipartite connectivity over ALL symbols of both sides; edges = positive
// pair marginals. Returns nullopt if connected, else the 2-coloring.
inline std::optional<std::pair<std::vector<int>, std::vector<int>>> bipartite_split(
    int left, int right, const std::vector<std::pair<int, int>>& edges) {
  UnionFind uf(left + right);
  for (const auto& [a, b] : edges) uf.unite(a, left + b);
  int root0 = uf.find(0);
  bool split = false;
  for (int v = 0; v < left + right; ++v)
    if (uf.find(v) != root0) split = true;
  if (!split) return std::nullopt;
  std::vector<int> lc(left), rc(right);
  for (int a = 0; a < left; ++a) lc[(std::size_t)a] = uf.find(a) == root0 ? 0 : 1;
  for (int b = 0; b < right; ++b) rc[(std::size_t)b] = uf.find(left + b) == root0 ? 0 : 1;
  return std::make_pair(lc, rc);
}

}  // namespace detail

inline ConnectivityResult pairwise_connected(const TriDist& mu) {
  auto supp = mu.support();
  if (supp.empty()) throw std::invalid_argument("pairwise_connected: empty support");
  auto check = [&](int left, int right, auto proj, const char* name,
                   ConnectivityResult& out) -> bool {
    std::vector<std::pair<int, int>> edges;
    for (const auto& a : supp) edges.push_back(proj(a));
    auto split = detail::bipartite_split(left, right, edges);
    if (!split) return true;
    out.connected = false;
    out.failing_graph = name;
    out.left_color = split->first;
    out.right_color = split->second;
    return false;
  };
  ConnectivityResult res;
  res.connected = true;
  if (!check(mu.sx, mu.sy, [](const TriDist::Atom& a) { return std::make_pair(a.x, a.y); }, "xy", res))
    return res;
  if (!check(mu.sx, mu.sz, [](const TriDist::Atom& a) { return std::make_pair(a.x, a.z); }, "xz", res))
    return res;
  if (!check(mu.sy, mu.sz, [](const TriDist::Atom& a) { return std::make_pair(a.y, a.z); }, "yz", res))
    return res;
  return res;
}

// ---------------------------------------------------------------------------
// Uniform-component decomposition of a marginal
// ---------------------------------------------------------------------------

struct UniformDecomposition {
  double alpha = 0.0;
  std::vector<double> nu;
  bool nu_used = true;  // false when alpha = 1 (marginal was uniform)
};

inline UniformDecomposition decompose_uniform(const std::vector<double>& marginal) {
  double s = 0.0, mn = 1.0;
  for (double v : marginal) {
    if (v < 0.0) throw std::invalid_argument("decompose_uniform: negative mass");
    s += v;
    mn = std::min(mn, v);
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("decompose_uniform: mass not 1");
  std::size_t k = marginal.size();
  UniformDecomposition out;
  out.alpha = (double)k * mn;
  if (out.alpha >= 1.0 - 1e-12) {
    out.alpha = 1.0;
    out.nu.assign(k, 1.0 / (double)k);
    out.nu_used = false;
    return out;
  }
  out.nu.resize(k);
  for (std::size_t a = 0; a < k; ++a)
    out.nu[a] = (marginal[a] - out.alpha / (double)k) / (1.0 - out.alpha);
  return out;
}

// ---------------------------------------------------------------------------
// Path tricks
// ---------------------------------------------------------------------------

struct PathTrickBudget {
  std::size_t max_work = 50'000'000;       // DP transition cap
  std::size_t max_symbols = 200'000;       // enlarged-alphabet cap
  std::size_t max_dense_entries = 8'000'000;  // dense output table cap
};

struct PathTrickResult {
  TriDist dist;  // axes back in (x, y, z) order; the chosen axis is enlarged
  char axis = 'x';
  int r = 1;
  int original_size = 0;  // alphabet size of the enlarged axis before the trick
  // Enlarged symbol -> tuple (v_1, v_1', v_2, v_2', ..., v_k) of original
  // symbols, interleaved; even positions (0-based) are unprimed.
  std::vector<std::vector<int>> symbol_decode;

  // Lift f (every coordinate on the original alphabet of the enlarged axis)
  // to the enlarged alphabet: the alternating-conjugate product over slots.
  FunctionTable lift(const FunctionTable& f) const {
    for (int k : f.alphabets)
      if (k != original_size)
        throw std::invalid_argument("PathTrickResult::lift: alphabet mismatch");
    int n = f.n();
    std::size_t K = symbol_decode.size();
    std::size_t slots = symbol_decode.empty() ? 0 : symbol_decode[0].size();
    std::vector<int> alpha((std::size_t)n, (int)K);
    FunctionTable out = FunctionTable::zeros(alpha);
    std::vector<int> X, u((std::size_t)n);
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
      index_tuple(alpha, idx, X);
      cplx v{1.0, 0.0};
      for (std::size_t s = 0; s < slots; ++s) {
        for (int c = 0; c < n; ++c) u[(std::size_t)c] = symbol_decode[(std::size_t)X[(std::size_t)c]][s];
        cplx fv = f.at(u);
        v *= (s % 2 == 0) ? fv : std::conj(fv);
      }
      out.values[idx] = v;
    }
    return out;
  }
};

namespace detail {

struct VecHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (int x : v) {
      h ^= (std::uint64_t)(x + 0x9e3779b9);
      h *= 1099511628211ULL;
    }
    return (std::size_t)h;
  }
};

// Canonical first-axis path trick on (A, B, C): walk b_1 ~ mu_B;
// (a_i, c_i) | b_i; (a_i', b_{i+1}) | c_i; output ((a_1, a_1', ..., a_k), b_1,
// c_k) with k = 2^{r-1}. Exact layered DP; intermediate anchors are
// marginalized, so the state is (output prefix, b_1, current anchor).
inline PathTrickResult first_axis_trick(const TriDist& mu, int r, const PathTrickBudget& budget) {
  if (r < 1) throw std::invalid_argument("path_trick: r >= 1");
  auto supp = mu.support();
  if (supp.empty()) throw std::invalid_argument("path_trick: empty support");
  std::vector<double> mB = mu.marginal_y(), mC = mu.marginal_z();
  std::vector<std::vector<TriDist::Atom>> by_b((std::size_t)mu.sy), by_c((std::size_t)mu.sz);
  for (const auto& a : supp) {
    by_b[(std::size_t)a.y].push_back(a);
    by_c[(std::size_t)a.z].push_back(a);
  }
  long k = 1L << (r - 1);
  long steps = 2 * k - 1;

  // State key layout: [prefix..., b1, anchor]; value = probability.
  using StateMap = std::unordered_map<std::vector<int>, double, VecHash>;
  StateMap cur;
  for (int b = 0; b < mu.sy; ++b)
    if (mB[(std::size_t)b] > 0.0) cur[{b, b}] = mB[(std::size_t)b];
  std::size_t work = 0;
  for (long step = 1; step <= steps; ++step) {
    bool unprimed = (step % 2 == 1);  // odd steps emit a_i, anchor moves b->c
    StateMap next;
    next.reserve(cur.size() * 2);
    for (const auto& [key, prob] : cur) {
      std::vector<int> prefix(key.begin(), key.end() - 2);
      int b1 = key[key.size() - 2];
      int anchor = key.back();
      const auto& atoms = unprimed ? by_b[(std::size_t)anchor] : by_c[(std::size_t)anchor];
      double denom = unprimed ? mB[(std::size_t)anchor] : mC[(std::size_t)anchor];
      for (const auto& at : atoms) {
        if (++work > budget.max_work)
          throw std::runtime_error(
              "path_trick: walk budget exceeded (r too large for the support-compressed "
              "alphabet budget)");
        std::vector<int> nk = prefix;
        nk.push_back(at.x);
        nk.push_back(b1);
        nk.push_back(unprimed ? at.z : at.y);
        next[nk] += prob * at.p / denom;
      }
    }
    cur = std::move(next);
    if (cur.size() > budget.max_symbols * 4)
      throw std::runtime_error("path_trick: enlarged alphabet budget exceeded");
  }

  // Support-compress the observed tuples (sorted lexicographically).
  std::map<std::vector<int>, int> tuple_id;
  for (const auto& [key, prob] : cur) {
    std::vector<int> t(key.begin(), key.end() - 2);
    tuple_id.emplace(t, 0);
  }
  if (tuple_id.size() > budget.max_symbols)
    throw std::runtime_error("path_trick: enlarged alphabet budget exceeded");
  PathTrickResult out;
  out.r = r;
  out.original_size = mu.sx;
  out.symbol_decode.reserve(tuple_id.size());
  int next_id = 0;
  for (auto& [t, id] : tuple_id) {
    id = next_id++;
    out.symbol_decode.push_back(t);
  }
  std::size_t dense = tuple_id.size() * (std::size_t)mu.sy * (std::size_t)mu.sz;
  if (dense > budget.max_dense_entries)
    throw std::runtime_error("path_trick: enlarged alphabet budget exceeded");
  out.dist = TriDist((int)tuple_id.size(), mu.sy, mu.sz);
  for (const auto& [key, prob] : cur) {
    std::vector<int> t(key.begin(), key.end() - 2);
    int b1 = key[key.size() - 2];
    int c = key.back();
    out.dist.p(tuple_id[t], b1, c) += prob;
  }
  return out;
}

}  // namespace detail

// Path trick on the given axis; the y and z variants are the canonical
// first-axis trick applied to the cyclic rotations (y,z,x) and (z,x,y).
inline PathTrickResult path_trick(const TriDist& mu, char axis, int r,
                                  const PathTrickBudget& budget = {}) {
  std::array<int, 3> to_canon{}, from_canon{};
  switch (axis) {
    case 'x': to_canon = {0, 1, 2}; from_canon = {0, 1, 2}; break;
    case 'y': to_canon = {1, 2, 0}; from_canon = {2, 0, 1}; break;
    case 'z': to_canon = {2, 0, 1}; from_canon = {1, 2, 0}; break;
    default: throw std::invalid_argument("path_trick: axis must be x, y or z");
  }
  PathTrickResult res = detail::first_axis_trick(mu.permuted(to_canon), r, budget);
  res.axis = axis;
  res.dist = res.dist.permuted(from_canon);
  // Pairwise-connectedness must be preserved.
  if (!pairwise_connected(res.dist).connected)
    throw std::logic_error("path_trick: output lost pairwise connectivity");
  return res;
}

// ---------------------------------------------------------------------------
// Full-support pipeline: y trick, then z trick, then x trick with r = 2.
// ---------------------------------------------------------------------------

struct PipelineResult {
  TriDist input;
  PathTrickResult step_y;  // full xz support afterwards
  PathTrickResult step_z;  // full xy support afterwards
  PathTrickResult step_x;  // final; enlarged x decodes to Sigma^3 triples
};

namespace detail {
inline bool full_xz(const TriDist& d) {
  for (int x = 0; x < d.sx; ++x)
    for (int z = 0; z < d.sz; ++z) {
      double s = 0.0;
      for (int y = 0; y < d.sy; ++y) s += d.p(x, y, z);
      if (s <= 0.0) return false;
    }
  return true;
}
inline bool full_xy(const TriDist& d) {
  for (int x = 0; x < d.sx; ++x)
    for (int y = 0; y < d.sy; ++y) {
      double s = 0.0;
      for (int z = 0; z < d.sz; ++z) s += d.p(x, y, z);
      if (s <= 0.0) return false;
    }
  return true;
}
inline int ceil_log2(int v) {
  int r = 0;
  while ((1 << r) < v) ++r;
  return r;
}
}  // namespace detail

inline PipelineResult full_support_pipeline(const TriDist& mu, const PathTrickBudget& budget = {}) {
  if (!pairwise_connected(mu).connected)
    throw std::invalid_argument("full_support_pipeline: input not pairwise-connected");
  PipelineResult out;
  out.input = mu;

  // Step 1 (y trick): smallest r, capped by 2^r >= max(|Sigma|, |Phi|), whose
  // output has full xz support. The cap is a sufficient bound; smaller r that
  // already achieves the goal keeps the walk DP tractable.
  int cap1 = std::max(1, detail::ceil_log2(std::max(mu.sx, mu.sz)));
  bool ok = false;
  for (int r = 1; r <= cap1; ++r) {
    PathTrickResult cand = path_trick(mu, 'y', r, budget);
    if (detail::full_xz(cand.dist)) {
      out.step_y = std::move(cand);
      ok = true;
      break;
    }
  }
  if (!ok) throw std::runtime_error("full_support_pipeline: y trick failed to reach full xz support");

  // Step 2 (z trick): smallest r, capped by 2^r >= max(|Sigma|, |Gamma+|),
  // whose output has full xy support.
  const TriDist& mu1 = out.step_y.dist;
  int cap2 = std::max(1, detail::ceil_log2(std::max(mu1.sx, mu1.sy)));
  ok = false;
  for (int r = 1; r <= cap2; ++r) {
    PathTrickResult cand = path_trick(mu1, 'z', r, budget);
    if (detail::full_xy(cand.dist)) {
      out.step_z = std::move(cand);
      ok = true;
      break;
    }
  }
  if (!ok) throw std::runtime_error("full_support_pipeline: z trick failed to reach full xy support");

  // Step 3: x trick with r = 2; enlarged symbols decode to triples (a, c, b).
  out.step_x = path_trick(out.step_z.dist, 'x', 2, budget);
  return out;
}

// ---------------------------------------------------------------------------
// Symmetry witness and the mu-minus decomposition
// ---------------------------------------------------------------------------

struct SymmetryWitness {
  int y = -1, z = -1;       // witness pair for the queried (a, b)
  TriDist mu_minus;         // 2|Sigma|^2 atom family, mass 1/(2|Sigma|^2) each
  double alpha = 0.0;       // maximal alpha with mu_plus = alpha mu_minus + (1-alpha) nu
  TriDist nu_rest;
};

namespace detail {
// First (y, z) in lexicographic order supporting both ((a,a,b),y,z) and
// ((b,a,a),y,z).
inline std::optional<std::pair<int, int>> find_witness(const PathTrickResult& plus,
                                                       const std::map<std::vector<int>, int>& ids,
                                                       int a, int b) {
  auto it1 = ids.find({a, a, b});
  auto it2 = ids.find({b, a, a});
  if (it1 == ids.end() || it2 == ids.end()) return std::nullopt;
  const TriDist& d = plus.dist;
  for (int y = 0; y < d.sy; ++y)
    for (int z = 0; z < d.sz; ++z)
      if (d.p(it1->second, y, z) > 0.0 && d.p(it2->second, y, z) > 0.0)
        return std::make_pair(y, z);
  return std::nullopt;
}
}  // namespace detail

inline SymmetryWitness symmetry_witness(const PathTrickResult& plus, int a, int b) {
  if (plus.axis != 'x' || plus.symbol_decode.empty() || plus.symbol_decode[0].size() != 3)
    throw std::invalid_argument("symmetry_witness: expects the pipeline's final x trick (r = 2)");
  int m = plus.original_size;
  std::map<std::vector<int>, int> ids;
  for (std::size_t s = 0; s < plus.symbol_decode.size(); ++s)
    ids[plus.symbol_decode[s]] = (int)s;

  // Witnesses for every ordered pair; existence is guaranteed for
  // pairwise-connected pipeline inputs.
  std::vector<std::vector<std::pair<int, int>>> wit((std::size_t)m,
                                                    std::vector<std::pair<int, int>>((std::size_t)m));
  for (int u = 0; u < m; ++u)
    for (int v = 0; v < m; ++v) {
      auto w = detail::find_witness(plus, ids, u, v);
      if (!w)
        throw std::runtime_error("symmetry_witness: no witness found (pipeline bug)");
      wit[(std::size_t)u][(std::size_t)v] = *w;
    }

  SymmetryWitness out;
  out.y = wit[(std::size_t)a][(std::size_t)b].first;
  out.z = wit[(std::size_t)a][(std::size_t)b].second;

  // mu_minus: for each ordered (u, v) and c in {u, v}, include ((u,c,v), y, z)
  // with mass 1/(2 m^2), using the witness of (u,v) for c=u and of (v,u) for
  // c=v (whose guarantee covers ((u,v,v), y, z)).
  const TriDist& d = plus.dist;
  out.mu_minus = TriDist(d.sx, d.sy, d.sz);
  double mass = 1.0 / (2.0 * (double)m * (double)m);
  for (int u = 0; u < m; ++u)
    for (int v = 0; v < m; ++v) {
      auto [wy1, wz1] = wit[(std::size_t)u][(std::size_t)v];
      out.mu_minus.p(ids.at({u, u, v}), wy1, wz1) += mass;
      auto [wy2, wz2] = wit[(std::size_t)v][(std::size_t)u];
      out.mu_minus.p(ids.at({u, v, v}), wy2, wz2) += mass;
    }

  // Maximal alpha with mu_plus - alpha mu_minus >= 0.
  double alpha = 1.0;
  for (std::size_t i = 0; i < d.probs.size(); ++i)
    if (out.mu_minus.probs[i] > 0.0) alpha = std::min(alpha, d.probs[i] / out.mu_minus.probs[i]);
  out.alpha = alpha;
  out.nu_rest = TriDist(d.sx, d.sy, d.sz);
  if (alpha < 1.0 - 1e-15) {
    for (std::size_t i = 0; i < d.probs.size(); ++i)
      out.nu_rest.probs[i] = (d.probs[i] - alpha * out.mu_minus.probs[i]) / (1.0 - alpha);
  } else {
    out.nu_rest = out.mu_minus;
  }
  return out;
}

// ---------------------------------------------------------------------------
// 3-wise correlation E_{mu^{tensor n}}[ f(x) g(y) h(z) ]
// ---------------------------------------------------------------------------

inline NormEstimate tri_correlation(const FunctionTable& f, const FunctionTable& g,
                                    const FunctionTable& h, const TriDist& mu,
                                    const std::string& mode = "exact",
                                    std::int64_t samples = 0, Rng rng = Rng(0)) {
  int n = f.n();
  if (g.n() != n || h.n() != n) throw std::invalid_argument("tri_correlation: arity mismatch");
  for (int c = 0; c < n; ++c) {
    if (f.alphabets[(std::size_t)c] != mu.sx || g.alphabets[(std::size_t)c] != mu.sy ||
        h.alphabets[(std::size_t)c] != mu.sz)
      throw std::invalid_argument("tri_correlation: tables must match the three alphabets");
  }
  auto supp = mu.support();
  NormEstimate e;
  if (mode == "exact") {
    double budget = std::pow((double)supp.size(), (double)n);
    if (budget > 2e7) throw std::runtime_error("tri_correlation: budget exceeded in exact mode");
    cplx acc{0, 0};
    // Recursive accumulation over per-coordinate support atoms.
    std::vector<std::size_t> ix((std::size_t)n + 1, 0), iy((std::size_t)n + 1, 0), iz((std::size_t)n + 1, 0);
    std::vector<double> w((std::size_t)n + 1, 1.0);
    std::vector<std::size_t> choice((std::size_t)n, 0);
    int depth = 0;
    while (depth >= 0) {
      if (depth == n) {
        acc += w[(std::size_t)n] * f.values[ix[(std::size_t)n]] * g.values[iy[(std::size_t)n]] *
               h.values[iz[(std::size_t)n]];
        --depth;
        continue;
      }
      std::size_t& c = choice[(std::size_t)depth];
      if (c >= supp.size()) {
        c = 0;
        --depth;
        continue;
      }
      const auto& at = supp[c++];
      ix[(std::size_t)depth + 1] = ix[(std::size_t)depth] * (std::size_t)mu.sx + (std::size_t)at.x;
      iy[(std::size_t)depth + 1] = iy[(std::size_t)depth] * (std::size_t)mu.sy + (std::size_t)at.y;
      iz[(std::size_t)depth + 1] = iz[(std::size_t)depth] * (std::size_t)mu.sz + (std::size_t)at.z;
      w[(std::size_t)depth + 1] = w[(std::size_t)depth] * at.p;
      ++depth;
    }
    e.value = acc;
    return e;
  }
  if (mode != "mc") throw std::invalid_argument("tri_correlation: mode must be exact or mc");
  if (samples < 1) throw std::invalid_argument("tri_correlation: samples >= 1 in mc mode");
  std::vector<double> cum;
  cum.reserve(supp.size());
  double run = 0.0;
  for (const auto& at : supp) {
    run += at.p;
    cum.push_back(run);
  }
  std::vector<cplx> terms((std::size_t)samples);
  parallel_for((std::size_t)samples, [&](std::size_t s) {
    Rng r = rng.child(s);
    std::size_t ix = 0, iy = 0, iz = 0;
    for (int c = 0; c < n; ++c) {
      double u = r.next_double() * run;
      std::size_t lo = (std::size_t)(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
      if (lo >= supp.size()) lo = supp.size() - 1;
      ix = ix * (std::size_t)mu.sx + (std::size_t)supp[lo].x;
      iy = iy * (std::size_t)mu.sy + (std::size_t)supp[lo].y;
      iz = iz * (std::size_t)mu.sz + (std::size_t)supp[lo].z;
    }
    terms[s] = f.values[ix] * g.values[iy] * h.values[iz];
  });
  cplx mean{0, 0};
  for (const auto& t : terms) mean += t;
  mean /= (double)samples;
  double var = 0.0;
  for (const auto& t : terms) var += std::norm(t - mean);
  var /= std::max<double>(1.0, (double)(samples - 1));
  e.value = mean;
  e.std_error = std::sqrt(var / (double)samples);
  e.method = "monte_carlo";
  e.samples = samples;
  return e;
}

// h_tilde(z) = E[ conj(f(x) g(y)) | z ] under mu^{tensor n}; the companion
// function for the lifted-correlation lower bound.
inline FunctionTable h_tilde(const FunctionTable& f, const FunctionTable& g, const TriDist& mu) {
  int n = f.n();
  std::vector<double> mz = mu.marginal_z();
  std::vector<int> alpha((std::size_t)n, mu.sz);
  FunctionTable out = FunctionTable::zeros(alpha);
  auto supp = mu.support();
  std::vector<int> z;
  std::vector<int> x((std::size_t)n), y((std::size_t)n);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    index_tuple(alpha, idx, z);
    // Enumerate (x, y) | z coordinate-wise: per coordinate the conditional
    // atoms are those with matching z.
    std::vector<std::vector<TriDist::Atom>> cond((std::size_t)n);
    bool possible = true;
    for (int c = 0; c < n; ++c) {
      if (mz[(std::size_t)z[(std::size_t)c]] <= 0.0) { possible = false; break; }
      for (const auto& at : supp)
        if (at.z == z[(std::size_t)c]) cond[(std::size_t)c].push_back(at);
    }
    if (!possible) { out.values[idx] = {0, 0}; continue; }
    // Recursive sum over the conditional product distribution.
    cplx acc{0, 0};
    std::vector<std::size_t> choice((std::size_t)n, 0);
    std::vector<double> w((std::size_t)n + 1, 1.0);
    int depth = 0;
    while (depth >= 0) {
      if (depth == n) {
        acc += w[(std::size_t)n] * std::conj(f.at(x) * g.at(y));
        --depth;
        continue;
      }
      std::size_t& ch = choice[(std::size_t)depth];
      if (ch >= cond[(std::size_t)depth].size()) {
        ch = 0;
        --depth;
        continue;
      }
      const auto& at = cond[(std::size_t)depth][ch++];
      x[(std::size_t)depth] = at.x;
      y[(std::size_t)depth] = at.y;
      w[(std::size_t)depth + 1] =
          w[(std::size_t)depth] * at.p / mz[(std::size_t)z[(std::size_t)depth]];
      ++depth;
    }
    out.values[idx] = acc;
  }
  return out;
}

}  // namespace swapkit
