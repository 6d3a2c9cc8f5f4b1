// Biased-cube machinery: correlated subset pairs, the noise operator and
// stability, Gaussian dimension reduction, and empirical small-set-expansion
// probes.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "swapkit/core.hpp"

namespace swapkit {

// x ~_rho [n] (each i independently with prob rho) and y ~_{1-gamma} x: each
// coordinate of y copies x with probability 1-gamma, else is resampled
// Bernoulli(rho). Subsets are bitmasks, n <= 64.
struct BiasedPair {
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  double rho = 0.0;
  double gamma = 0.0;
};

inline BiasedPair sample_biased_pair(int n, double rho, double gamma, Rng& rng) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("sample_biased_pair: rho in (0,1)");
  if (!(gamma >= 0.0 && gamma < 1.0 + 1e-15))
    throw std::invalid_argument("sample_biased_pair: gamma in [0,1]");
  if (n < 0 || n > 64) throw std::invalid_argument("sample_biased_pair: n in [0,64]");
  BiasedPair p;
  p.rho = rho;
  p.gamma = gamma;
  for (int i = 0; i < n; ++i) {
    bool xi = rng.next_bool(rho);
    bool yi = rng.next_bool(gamma) ? rng.next_bool(rho) : xi;
    if (xi) p.x |= (1ULL << i);
    if (yi) p.y |= (1ULL << i);
  }
  return p;
}

// Applies the per-coordinate rho-correlated resampling operator exactly:
// (Tf)(x) = E[f(y)] where each y_i = x_i with prob rho, else ~ m_i.
inline FunctionTable noise_operator(const FunctionTable& f, double rho, const ProductMeasure& m) {
  if (f.size() > kExactDomainMax) throw std::runtime_error("noise_operator: domain too large");
  FunctionTable g = f;
  std::vector<std::size_t> strides = strides_of(f.alphabets);
  for (int c = 0; c < f.n(); ++c) {
    int k = f.alphabets[(std::size_t)c];
    const auto& pv = m.coords[(std::size_t)c];
    std::size_t stride = strides[(std::size_t)c];
    std::size_t block = stride * (std::size_t)k;
    FunctionTable h = g;
    for (std::size_t base = 0; base < g.size(); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        cplx mean{0, 0};
        for (int a = 0; a < k; ++a) mean += pv[(std::size_t)a] * g.values[base + (std::size_t)a * stride + off];
        for (int a = 0; a < k; ++a) {
          std::size_t idx = base + (std::size_t)a * stride + off;
          h.values[idx] = rho * g.values[idx] + (1.0 - rho) * mean;
        }
      }
    }
    g = std::move(h);
  }
  return g;
}

// Stab_rho(f) = <f, Tf> under m; real because T is self-adjoint and PSD.
inline double noise_stability(const FunctionTable& f, double rho, const ProductMeasure& m) {
  FunctionTable tf = noise_operator(f, rho, m);
  cplx v = inner_product(f, tf, m);
  return v.real();
}

inline double noise_stability(const FunctionTable& f, double rho) {
  return noise_stability(f, rho, ProductMeasure::uniform(f.alphabets));
}

// Shared-direction Gaussian projection u -> m^{-1/2} (<u,g_1>, ..., <u,g_m>).
inline std::vector<std::vector<double>> gaussian_project(
    const std::vector<std::vector<double>>& vectors, int m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("gaussian_project: m >= 1");
  if (vectors.empty()) return {};
  std::size_t M = vectors[0].size();
  for (const auto& v : vectors)
    if (v.size() != M) throw std::invalid_argument("gaussian_project: ragged input");
  std::vector<std::vector<double>> dirs((std::size_t)m, std::vector<double>(M));
  for (auto& g : dirs)
    for (auto& e : g) e = rng.next_gaussian();
  double scale = 1.0 / std::sqrt((double)m);
  std::vector<std::vector<double>> out(vectors.size(), std::vector<double>((std::size_t)m));
  for (std::size_t v = 0; v < vectors.size(); ++v)
    for (int j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < M; ++i) dot += vectors[v][i] * dirs[(std::size_t)j][i];
      out[v][(std::size_t)j] = scale * dot;
    }
  return out;
}

struct SseProbeResult {
  double p_local = 0.0;   // Pr over correlated pairs of ||f(x)-f(y)|| <= D
  double p_global = 0.0;  // same over independent pairs at the blown-up threshold
  double global_threshold = 0.0;
  // Grid cell of maximal empirical mass; side 2*D*sqrt(m).
  std::optional<std::vector<long long>> bucket_witness;
  double bucket_mass = 0.0;
  double bucket_side = 0.0;
};

// point_map: subset (bitmask) -> real vector; must be pure.
template <class PointMap>
inline SseProbeResult sse_probe(PointMap&& point_map, int n, double rho, double gamma, double D,
                                std::int64_t samples, Rng rng, double global_const = 4.0) {
  if (samples < 1) throw std::invalid_argument("sse_probe: samples >= 1");
  SseProbeResult res;
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += sqr(a[i] - b[i]);
    return std::sqrt(s);
  };
  std::int64_t local_hits = 0;
  std::map<std::vector<long long>, double> buckets;
  std::size_t dim = 1;
  for (std::int64_t s = 0; s < samples; ++s) {
    Rng r = rng.child((std::uint64_t)s);
    BiasedPair p = sample_biased_pair(n, rho, gamma, r);
    std::vector<double> fx = point_map(p.x);
    std::vector<double> fy = point_map(p.y);
    dim = fx.size();
    if (dist(fx, fy) <= D) ++local_hits;
    // Bucket the x sample on the grid of side 2*D*sqrt(m).
    double side = 2.0 * D * std::sqrt((double)std::max<std::size_t>(1, dim));
    if (side > 0.0) {
      std::vector<long long> cell(dim);
      for (std::size_t i = 0; i < dim; ++i) cell[i] = (long long)std::floor(fx[i] / side);
      buckets[cell] += 1.0 / (double)samples;
    }
  }
  res.p_local = (double)local_hits / (double)samples;
  res.bucket_side = 2.0 * D * std::sqrt((double)std::max<std::size_t>(1, dim));
  double p_for_log = std::max(res.p_local, 1.0 / (double)samples);
  res.global_threshold = global_const * D * std::log(1.0 / std::min(0.999, p_for_log));
  if (res.p_local >= 0.999) res.global_threshold = std::max(res.global_threshold, D);
  std::int64_t global_hits = 0;
  for (std::int64_t s = 0; s < samples; ++s) {
    Rng r = rng.child((std::uint64_t)(samples + s));
    BiasedPair p = sample_biased_pair(n, rho, 1.0 - 1e-12, r);  // gamma ~ 1: independent
    if (dist(point_map(p.x), point_map(p.y)) <= res.global_threshold) ++global_hits;
  }
  res.p_global = (double)global_hits / (double)samples;
  for (const auto& [cell, mass] : buckets) {
    if (mass > res.bucket_mass) {
      res.bucket_mass = mass;
      res.bucket_witness = cell;
    }
  }
  return res;
}

// Exact correlated-pair collision probability of an indicator set A on the
// rho-biased cube: Pr[x in A, y in A] with y ~_{1-gamma} x. Used by the
// small-set-expansion invariant.
inline double collision_probability(const std::vector<bool>& A, int n, double rho, double gamma) {
  std::vector<int> alpha((std::size_t)n, 2);
  FunctionTable ind = FunctionTable::zeros(alpha);
  if (A.size() != ind.size()) throw std::invalid_argument("collision_probability: size mismatch");
  for (std::size_t i = 0; i < A.size(); ++i) ind.values[i] = A[i] ? cplx{1, 0} : cplx{0, 0};
  ProductMeasure m;
  // Coordinate 0 is the most significant index digit; bit i of the bitmask
  // convention is immaterial here since all coordinates share the measure.
  for (int c = 0; c < n; ++c) m.coords.push_back({1.0 - rho, rho});
  FunctionTable t = noise_operator(ind, 1.0 - gamma, m);
  return inner_product(ind, t, m).real();
}

}  // namespace swapkit
