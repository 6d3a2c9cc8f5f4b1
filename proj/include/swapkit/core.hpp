// Alphabets, dense function tables on product domains, product functions,
// product measures, and restriction operators.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swapkit/common.hpp"

namespace swapkit {

using json = nlohmann::json;

struct Alphabet {
  int size = 1;  // symbols are {0, ..., size-1}
};

// Exact-enumeration methods are admissible only up to this domain size;
// larger domains must use Monte-Carlo variants.
inline constexpr std::size_t kExactDomainMax = 4096;

// Index <-> tuple bijection: lexicographic row-major, coordinate 0 most significant.
inline std::size_t domain_size(const std::vector<int>& alphabets) {
  std::size_t s = 1;
  for (int k : alphabets) {
    if (k < 1) throw std::invalid_argument("alphabet size must be >= 1");
    s *= static_cast<std::size_t>(k);
  }
  return s;
}

inline std::size_t tuple_index(const std::vector<int>& alphabets, const std::vector<int>& x) {
  if (x.size() != alphabets.size()) throw std::invalid_argument("tuple_index: arity mismatch");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0 || x[i] >= alphabets[i]) throw std::out_of_range("tuple_index: symbol out of range");
    idx = idx * static_cast<std::size_t>(alphabets[i]) + static_cast<std::size_t>(x[i]);
  }
  return idx;
}

inline void index_tuple(const std::vector<int>& alphabets, std::size_t idx, std::vector<int>& out) {
  out.resize(alphabets.size());
  for (std::size_t i = alphabets.size(); i-- > 0;) {
    std::size_t k = static_cast<std::size_t>(alphabets[i]);
    out[i] = static_cast<int>(idx % k);
    idx /= k;
  }
}

// Per-coordinate strides for incremental index assembly.
inline std::vector<std::size_t> strides_of(const std::vector<int>& alphabets) {
  std::vector<std::size_t> s(alphabets.size(), 1);
  for (std::size_t i = alphabets.size(); i-- > 1;)
    s[i - 1] = s[i] * static_cast<std::size_t>(alphabets[i]);
  return s;
}

struct ProductMeasure {
  std::vector<std::vector<double>> coords;  // one probability vector per coordinate

  static ProductMeasure uniform(const std::vector<int>& alphabets) {
    ProductMeasure m;
    m.coords.reserve(alphabets.size());
    for (int k : alphabets)
      m.coords.emplace_back(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
    return m;
  }

  void validate() const {
    for (const auto& c : coords) {
      double s = 0.0;
      for (double p : c) {
        if (p < 0.0) throw std::invalid_argument("ProductMeasure: negative mass");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("ProductMeasure: mass not 1");
    }
  }

  double weight(const std::vector<int>& x) const {
    double w = 1.0;
    for (std::size_t i = 0; i < coords.size(); ++i) w *= coords[i][static_cast<std::size_t>(x[i])];
    return w;
  }
};

// Dense complex-valued function on a finite product domain.
struct FunctionTable {
  std::vector<int> alphabets;  // per-coordinate sizes
  std::vector<cplx> values;    // lexicographic order of coordinate tuples

  FunctionTable() = default;
  FunctionTable(std::vector<int> alpha, std::vector<cplx> vals)
      : alphabets(std::move(alpha)), values(std::move(vals)) {
    if (values.size() != domain_size(alphabets))
      throw std::invalid_argument("FunctionTable: values length mismatch");
  }

  static FunctionTable constant(const std::vector<int>& alphabets, cplx c) {
    return FunctionTable(alphabets, std::vector<cplx>(domain_size(alphabets), c));
  }
  static FunctionTable zeros(const std::vector<int>& alphabets) {
    return constant(alphabets, cplx{0.0, 0.0});
  }

  int n() const { return static_cast<int>(alphabets.size()); }
  std::size_t size() const { return values.size(); }

  cplx at(const std::vector<int>& x) const { return values[tuple_index(alphabets, x)]; }
  cplx& at(const std::vector<int>& x) { return values[tuple_index(alphabets, x)]; }

  void validate_finite() const {
    for (const cplx& v : values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::invalid_argument("FunctionTable: non-finite value");
  }

  bool same_shape(const FunctionTable& other) const { return alphabets == other.alphabets; }
};

// Per-coordinate factors; evaluates as a coordinate-wise product.
struct ProductFunction {
  std::vector<std::vector<cplx>> factors;

  int n() const { return static_cast<int>(factors.size()); }

  cplx eval(const std::vector<int>& x) const {
    cplx v{1.0, 0.0};
    for (std::size_t i = 0; i < factors.size(); ++i) v *= factors[i][static_cast<std::size_t>(x[i])];
    return v;
  }

  std::vector<int> alphabets() const {
    std::vector<int> a;
    a.reserve(factors.size());
    for (const auto& f : factors) a.push_back(static_cast<int>(f.size()));
    return a;
  }

  static ProductFunction ones(const std::vector<int>& alphabets) {
    ProductFunction p;
    for (int k : alphabets) p.factors.emplace_back(static_cast<std::size_t>(k), cplx{1.0, 0.0});
    return p;
  }
};

// fixed_set holds the coordinates that are FIXED; assignment gives their symbols.
struct Restriction {
  std::vector<int> fixed_set;   // sorted, distinct coordinate indices
  std::vector<int> assignment;  // same length, symbol per fixed coordinate

  void validate(const std::vector<int>& alphabets) const {
    if (fixed_set.size() != assignment.size())
      throw std::invalid_argument("Restriction: assignment/fixed_set length mismatch");
    int prev = -1;
    for (std::size_t i = 0; i < fixed_set.size(); ++i) {
      int c = fixed_set[i];
      if (c <= prev) throw std::invalid_argument("Restriction: fixed_set must be sorted distinct");
      if (c < 0 || c >= static_cast<int>(alphabets.size()))
        throw std::out_of_range("Restriction: coordinate out of range");
      if (assignment[i] < 0 || assignment[i] >= alphabets[static_cast<std::size_t>(c)])
        throw std::out_of_range("Restriction: symbol out of range");
      prev = c;
    }
  }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// E_{x ~ m}[ f(x) conj(g(x)) ].
inline cplx inner_product(const FunctionTable& f, const FunctionTable& g, const ProductMeasure& m) {
  if (!f.same_shape(g)) throw std::invalid_argument("inner_product: shape mismatch");
  if (m.coords.size() != f.alphabets.size())
    throw std::invalid_argument("inner_product: measure shape mismatch");
  cplx acc{0.0, 0.0};
  std::vector<int> x;
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    index_tuple(f.alphabets, idx, x);
    acc += f.values[idx] * std::conj(g.values[idx]) * m.weight(x);
  }
  return acc;
}

inline cplx inner_product(const FunctionTable& f, const FunctionTable& g) {
  return inner_product(f, g, ProductMeasure::uniform(f.alphabets));
}

// (E_m |f|^p)^{1/p} for p in {1,2,4}; max|f| for p = infinity.
inline double lp_norm(const FunctionTable& f, double p, const ProductMeasure& m) {
  if (std::isinf(p)) {
    double mx = 0.0;
    for (const cplx& v : f.values) mx = std::max(mx, std::abs(v));
    return mx;
  }
  if (p != 1.0 && p != 2.0 && p != 4.0) throw std::invalid_argument("lp_norm: unsupported p");
  double acc = 0.0;
  std::vector<int> x;
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    index_tuple(f.alphabets, idx, x);
    acc += std::pow(std::abs(f.values[idx]), p) * m.weight(x);
  }
  return std::pow(acc, 1.0 / p);
}

inline double lp_norm(const FunctionTable& f, double p) {
  return lp_norm(f, p, ProductMeasure::uniform(f.alphabets));
}

inline double l2_norm(const FunctionTable& f) { return lp_norm(f, 2.0); }

// Fix the coordinates in r.fixed_set; the result lives on the remaining coordinates.
inline FunctionTable restrict_table(const FunctionTable& f, const Restriction& r) {
  r.validate(f.alphabets);
  std::vector<int> free_coords;
  for (int c = 0; c < f.n(); ++c)
    if (!std::binary_search(r.fixed_set.begin(), r.fixed_set.end(), c)) free_coords.push_back(c);
  std::vector<int> sub_alpha;
  sub_alpha.reserve(free_coords.size());
  for (int c : free_coords) sub_alpha.push_back(f.alphabets[static_cast<std::size_t>(c)]);
  FunctionTable out = FunctionTable::zeros(sub_alpha);
  std::vector<int> full(static_cast<std::size_t>(f.n()), 0);
  for (std::size_t i = 0; i < r.fixed_set.size(); ++i)
    full[static_cast<std::size_t>(r.fixed_set[i])] = r.assignment[i];
  std::vector<int> y;
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    index_tuple(sub_alpha, idx, y);
    for (std::size_t j = 0; j < free_coords.size(); ++j)
      full[static_cast<std::size_t>(free_coords[j])] = y[j];
    out.values[idx] = f.at(full);
  }
  return out;
}

// Each coordinate is fixed independently with probability 1 - keep_rate; fixed
// symbols are drawn from nu.
inline std::pair<Restriction, FunctionTable> random_restriction(const FunctionTable& f,
                                                                double keep_rate,
                                                                const ProductMeasure& nu,
                                                                Rng& rng) {
  if (keep_rate < 0.0 || keep_rate > 1.0)
    throw std::invalid_argument("random_restriction: keep_rate out of [0,1]");
  Restriction r;
  for (int c = 0; c < f.n(); ++c) {
    if (rng.next_double() < 1.0 - keep_rate) {
      const auto& pv = nu.coords[static_cast<std::size_t>(c)];
      double u = rng.next_double();
      int sym = static_cast<int>(pv.size()) - 1;
      double acc = 0.0;
      for (std::size_t a = 0; a < pv.size(); ++a) {
        acc += pv[a];
        if (u < acc) { sym = static_cast<int>(a); break; }
      }
      r.fixed_set.push_back(c);
      r.assignment.push_back(sym);
    }
  }
  return {r, restrict_table(f, r)};
}

inline std::pair<Restriction, FunctionTable> random_restriction(const FunctionTable& f,
                                                                double keep_rate, Rng& rng) {
  return random_restriction(f, keep_rate, ProductMeasure::uniform(f.alphabets), rng);
}

inline FunctionTable product_to_table(const ProductFunction& p) {
  std::vector<int> alpha = p.alphabets();
  FunctionTable out = FunctionTable::zeros(alpha);
  std::vector<int> x;
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    index_tuple(alpha, idx, x);
    out.values[idx] = p.eval(x);
  }
  return out;
}

// Small table algebra used everywhere downstream.
inline FunctionTable add(const FunctionTable& a, const FunctionTable& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
  FunctionTable out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += b.values[i];
  return out;
}
inline FunctionTable sub(const FunctionTable& a, const FunctionTable& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("sub: shape mismatch");
  FunctionTable out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= b.values[i];
  return out;
}
inline FunctionTable scale(const FunctionTable& a, cplx c) {
  FunctionTable out = a;
  for (auto& v : out.values) v *= c;
  return out;
}
inline FunctionTable pointwise_mul(const FunctionTable& a, const FunctionTable& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("pointwise_mul: shape mismatch");
  FunctionTable out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= b.values[i];
  return out;
}

// Random dense table with entries uniform in [-1,1]^2 (complex box).
inline FunctionTable random_table(const std::vector<int>& alphabets, Rng& rng) {
  FunctionTable f = FunctionTable::zeros(alphabets);
  for (auto& v : f.values) v = rng.next_box_complex();
  return f;
}

// ---------------------------------------------------------------------------
// Serialization: {"alphabets":[k1,...,kn], "values":[[re,im],...]} lexicographic.
// ---------------------------------------------------------------------------

inline json function_table_to_json(const FunctionTable& f) {
  json j;
  j["alphabets"] = f.alphabets;
  json vals = json::array();
  for (const cplx& v : f.values) vals.push_back(json::array({v.real(), v.imag()}));
  j["values"] = std::move(vals);
  return j;
}

inline FunctionTable function_table_from_json(const json& j) {
  if (!j.contains("alphabets")) throw std::invalid_argument("FunctionTable JSON: missing field 'alphabets'");
  if (!j.contains("values")) throw std::invalid_argument("FunctionTable JSON: missing field 'values'");
  std::vector<int> alpha = j.at("alphabets").get<std::vector<int>>();
  const json& vals = j.at("values");
  if (!vals.is_array()) throw std::invalid_argument("FunctionTable JSON: 'values' must be an array");
  std::vector<cplx> values;
  values.reserve(vals.size());
  for (const auto& e : vals) {
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument("FunctionTable JSON: each value must be [re,im]");
    values.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  FunctionTable f(std::move(alpha), std::move(values));
  f.validate_finite();
  return f;
}

}  // namespace swapkit
