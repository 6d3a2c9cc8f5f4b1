// The swap and box inner products: exact evaluation through the box-average
// identity, a Monte-Carlo estimator, and the one-sided swap_T variant.
//
// swap(f1,f2,f3,f4) = E[ f1(x) f2(y) conj(f3(x') f4(y')) ] where (x', y') is
// obtained from (x, y) by exchanging coordinates on an independent uniform
// subset. box_S is the same form with the exchange forced on exactly S, and
// swap = 2^{-n} sum_S box_S.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "swapkit/core.hpp"

namespace swapkit {

struct NormEstimate {
  cplx value{0.0, 0.0};
  double std_error = 0.0;  // 0 for exact
  std::string method = "exact";
  std::int64_t samples = 0;

  json to_json() const {
    json j;
    j["re"] = value.real();
    j["im"] = value.imag();
    j["stderr"] = std_error;
    j["method"] = method;
    j["samples"] = samples;
    return j;
  }
};

namespace detail {

inline void require_same_shape4(const FunctionTable& f1, const FunctionTable& f2,
                                const FunctionTable& f3, const FunctionTable& f4) {
  if (!f1.same_shape(f2) || !f1.same_shape(f3) || !f1.same_shape(f4))
    throw std::invalid_argument("box/swap: the four tables must share alphabets");
}

// Partial index sums over a coordinate subset: for every tuple on `coords`,
// the contribution of those digits to the global lexicographic index.
inline std::vector<std::size_t> partial_offsets(const std::vector<int>& alphabets,
                                                const std::vector<int>& coords) {
  std::vector<std::size_t> strides = strides_of(alphabets);
  std::vector<int> sub_alpha;
  sub_alpha.reserve(coords.size());
  for (int c : coords) sub_alpha.push_back(alphabets[static_cast<std::size_t>(c)]);
  std::size_t m = domain_size(sub_alpha);
  std::vector<std::size_t> out(m, 0);
  std::vector<int> t;
  for (std::size_t idx = 0; idx < m; ++idx) {
    index_tuple(sub_alpha, idx, t);
    std::size_t off = 0;
    for (std::size_t j = 0; j < coords.size(); ++j)
      off += static_cast<std::size_t>(t[j]) * strides[static_cast<std::size_t>(coords[j])];
    out[idx] = off;
  }
  return out;
}

}  // namespace detail

// Exact box inner product on the exchange set S, via the two-matrix
// factorization: box_S = E_{xS,yS}[ A(xS,yS) * B(xS,yS) ] with
//   A(xS,yS) = E_w f1(xS,w) conj f3(yS,w)   (w on the complement)
//   B(xS,yS) = E_w f2(yS,w) conj f4(xS,w).
inline NormEstimate box_inner(const std::vector<int>& S, const FunctionTable& f1,
                              const FunctionTable& f2, const FunctionTable& f3,
                              const FunctionTable& f4) {
  detail::require_same_shape4(f1, f2, f3, f4);
  if (f1.size() > kExactDomainMax)
    throw std::runtime_error("box_inner: domain too large for exact enumeration");
  std::vector<int> comp;
  for (int c = 0; c < f1.n(); ++c)
    if (!std::binary_search(S.begin(), S.end(), c)) comp.push_back(c);
  std::vector<std::size_t> offS = detail::partial_offsets(f1.alphabets, S);
  std::vector<std::size_t> offC = detail::partial_offsets(f1.alphabets, comp);
  const double invC = 1.0 / static_cast<double>(offC.size());
  const double invS2 = 1.0 / (static_cast<double>(offS.size()) * static_cast<double>(offS.size()));
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < offS.size(); ++i) {
    for (std::size_t j = 0; j < offS.size(); ++j) {
      cplx a{0.0, 0.0}, b{0.0, 0.0};
      for (std::size_t w = 0; w < offC.size(); ++w) {
        std::size_t iw = offS[i] + offC[w];
        std::size_t jw = offS[j] + offC[w];
        a += f1.values[iw] * std::conj(f3.values[jw]);
        b += f2.values[jw] * std::conj(f4.values[iw]);
      }
      acc += (a * invC) * (b * invC);
    }
  }
  NormEstimate e;
  e.value = acc * invS2;
  return e;
}

inline NormEstimate box_inner(const std::vector<int>& S, const FunctionTable& f) {
  return box_inner(S, f, f, f, f);
}

namespace detail {
inline void subsets_of(int n, std::vector<std::vector<int>>& out) {
  out.clear();
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    std::vector<int> s;
    for (int c = 0; c < n; ++c)
      if (mask & (1ULL << c)) s.push_back(c);
    out.push_back(std::move(s));
  }
}
}  // namespace detail

// Exact swap inner product: 2^{-n} sum over all exchange sets S of box_S.
inline NormEstimate swap_inner(const FunctionTable& f1, const FunctionTable& f2,
                               const FunctionTable& f3, const FunctionTable& f4) {
  detail::require_same_shape4(f1, f2, f3, f4);
  if (f1.size() > kExactDomainMax)
    throw std::runtime_error("swap_inner: domain too large for exact enumeration (use swap_inner_mc)");
  int n = f1.n();
  std::vector<std::vector<int>> subsets;
  detail::subsets_of(n, subsets);
  cplx acc{0.0, 0.0};
  for (const auto& S : subsets) acc += box_inner(S, f1, f2, f3, f4).value;
  NormEstimate e;
  e.value = acc / static_cast<double>(subsets.size());
  return e;
}

inline NormEstimate swap_inner(const FunctionTable& f) { return swap_inner(f, f, f, f); }

// swap(f)^{1/4}; tiny negative real parts from roundoff are clamped to 0.
inline double swap_norm_from_value(cplx v) {
  double r = v.real();
  if (r < 0.0) r = 0.0;
  return std::pow(r, 0.25);
}

inline double swap_norm(const FunctionTable& f) {
  return swap_norm_from_value(swap_inner(f).value);
}

// One-sided variant: exchanges allowed only inside T (coordinates outside T
// are never exchanged). swap_T with T = [n] equals swap_inner.
inline NormEstimate swap_T(const std::vector<int>& T, const FunctionTable& f1,
                           const FunctionTable& f2, const FunctionTable& f3,
                           const FunctionTable& f4) {
  detail::require_same_shape4(f1, f2, f3, f4);
  if (f1.size() > kExactDomainMax) throw std::runtime_error("swap_T: domain too large");
  std::size_t m = T.size();
  cplx acc{0.0, 0.0};
  for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
    std::vector<int> S;
    for (std::size_t j = 0; j < m; ++j)
      if (mask & (1ULL << j)) S.push_back(T[j]);
    acc += box_inner(S, f1, f2, f3, f4).value;
  }
  NormEstimate e;
  e.value = acc / static_cast<double>(1ULL << m);
  return e;
}

inline NormEstimate swap_T(const std::vector<int>& T, const FunctionTable& f) {
  return swap_T(T, f, f, f, f);
}

// Unbiased Monte-Carlo estimator of the swap inner product, with antithetic
// pairing of each exchange pattern with its complement. Evaluators take a
// point and return a complex value; sub-seeding makes the result independent
// of the thread count.
template <class F1, class F2, class F3, class F4>
inline NormEstimate swap_inner_mc_eval(const std::vector<int>& alphabets, F1&& f1, F2&& f2,
                                       F3&& f3, F4&& f4, std::int64_t samples, Rng rng) {
  if (samples < 1) throw std::invalid_argument("swap_inner_mc: samples must be >= 1");
  int n = static_cast<int>(alphabets.size());
  std::vector<cplx> terms(static_cast<std::size_t>(samples));
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
    Rng r = rng.child(s);
    std::vector<int> x(n), y(n), xs(n), ys(n);
    for (int c = 0; c < n; ++c) {
      x[c] = r.next_int(alphabets[static_cast<std::size_t>(c)]);
      y[c] = r.next_int(alphabets[static_cast<std::size_t>(c)]);
    }
    std::uint64_t pattern = r.next_u64();
    cplx pair_sum{0.0, 0.0};
    for (int anti = 0; anti < 2; ++anti) {
      for (int c = 0; c < n; ++c) {
        bool swp = ((pattern >> c) & 1ULL) != 0ULL;
        if (anti) swp = !swp;
        xs[c] = swp ? y[c] : x[c];
        ys[c] = swp ? x[c] : y[c];
      }
      pair_sum += f1(x) * f2(y) * std::conj(f3(xs) * f4(ys));
    }
    terms[s] = pair_sum * 0.5;
  });
  cplx mean{0.0, 0.0};
  for (const cplx& t : terms) mean += t;
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (const cplx& t : terms) var += std::norm(t - mean);
  var /= std::max<double>(1.0, static_cast<double>(samples - 1));
  NormEstimate e;
  e.value = mean;
  e.std_error = std::sqrt(var / static_cast<double>(samples));
  e.method = "monte_carlo";
  e.samples = samples;
  return e;
}

inline NormEstimate swap_inner_mc(const FunctionTable& f1, const FunctionTable& f2,
                                  const FunctionTable& f3, const FunctionTable& f4,
                                  std::int64_t samples, Rng rng) {
  detail::require_same_shape4(f1, f2, f3, f4);
  auto ev = [](const FunctionTable& t) {
    return [&t](const std::vector<int>& x) { return t.at(x); };
  };
  return swap_inner_mc_eval(f1.alphabets, ev(f1), ev(f2), ev(f3), ev(f4), samples, rng);
}

inline NormEstimate swap_inner_mc(const FunctionTable& f, std::int64_t samples, Rng rng) {
  return swap_inner_mc(f, f, f, f, samples, rng);
}

}  // namespace swapkit
