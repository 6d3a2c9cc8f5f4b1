#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "swapkit/extract.hpp"

using namespace swapkit;

namespace {

FunctionTable random_unimodular_product_table(const std::vector<int>& alpha, Rng& rng,
                                              ProductFunction* out_p = nullptr) {
  ProductFunction P;
  for (int k : alpha) {
    std::vector<cplx> fac;
    for (int a = 0; a < k; ++a) fac.push_back(rng.next_unit_complex());
    P.factors.push_back(std::move(fac));
  }
  if (out_p) *out_p = P;
  return product_to_table(P);
}

// Unit-2-norm function built as product + noise; returns (f, c = 1 - swap(f)).
std::pair<FunctionTable, double> perturbed_product(const std::vector<int>& alpha, double sigma,
                                                   Rng& rng) {
  FunctionTable f = random_unimodular_product_table(alpha, rng);
  for (auto& v : f.values) v += sigma * cplx{rng.next_gaussian(), rng.next_gaussian()};
  double l2 = l2_norm(f);
  for (auto& v : f.values) v /= l2;
  double c = 1.0 - swap_inner(f).value.real();
  return {f, c};
}

// Independent oracle for the singular values: eigenvalues of the scaled Gram
// matrix M M^H / (R C).
std::vector<double> gram_singulars(const FunctionTable& f, const std::vector<int>& J) {
  std::vector<int> Js = J, comp;
  std::sort(Js.begin(), Js.end());
  for (int c = 0; c < f.n(); ++c)
    if (!std::binary_search(Js.begin(), Js.end(), c)) comp.push_back(c);
  auto offJ = detail::partial_offsets(f.alphabets, Js);
  auto offI = detail::partial_offsets(f.alphabets, comp);
  std::size_t R = offJ.size(), C = offI.size();
  Eigen::MatrixXcd G((Eigen::Index)R, (Eigen::Index)R);
  for (std::size_t a = 0; a < R; ++a)
    for (std::size_t b = 0; b < R; ++b) {
      cplx acc{0, 0};
      for (std::size_t w = 0; w < C; ++w)
        acc += f.values[offJ[a] + offI[w]] * std::conj(f.values[offJ[b] + offI[w]]);
      G((Eigen::Index)a, (Eigen::Index)b) = acc / ((double)R * (double)C);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  std::vector<double> out;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i)
    out.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i))));
  return out;
}

}  // namespace

TEST_CASE("partition SVD: rank-one, zero, and Gram-matrix oracle") {
  Rng rng(3);
  SECTION("a product function across the split is rank one with lambda = ||f||_2") {
    ProductFunction P;
    auto f = random_unimodular_product_table({2, 3, 2}, rng, &P);
    PartitionSVD svd = partition_svd(f, {0, 2});
    REQUIRE(svd.triples.size() == 1);
    REQUIRE(svd.triples[0].lambda == Catch::Approx(1.0).margin(1e-9));  // unimodular: ||f||_2 = 1
  }
  SECTION("the zero function has an empty decomposition") {
    auto z = FunctionTable::zeros({2, 2, 2});
    REQUIRE(partition_svd(z, {1}).triples.empty());
  }
  SECTION("singular values match the Gram eigensolve on random tables") {
    for (int t = 0; t < 20; ++t) {
      auto f = random_table({2, 2, 2, 2}, rng);
      PartitionSVD svd = partition_svd(f, {0, 1});
      auto oracle = gram_singulars(f, {0, 1});
      REQUIRE(svd.triples.size() <= oracle.size());
      for (std::size_t i = 0; i < svd.triples.size(); ++i)
        REQUIRE(svd.triples[i].lambda == Catch::Approx(oracle[i]).margin(1e-8));
    }
  }
}

TEST_CASE("partition SVD invariants: ordering, orthonormality, reconstruction, phases") {
  Rng rng(5);
  ProductMeasure mJ, mI;
  for (int t = 0; t < 10; ++t) {
    auto f = random_table({2, 3, 2}, rng);
    PartitionSVD svd = partition_svd(f, {1});
    double sum2 = 0.0;
    for (std::size_t i = 0; i < svd.triples.size(); ++i) {
      const auto& tr = svd.triples[i];
      if (i > 0) REQUIRE(tr.lambda <= svd.triples[i - 1].lambda + 1e-12);
      sum2 += sqr(tr.lambda);
      // Orthonormality in the expectation inner product.
      for (std::size_t j = i; j < svd.triples.size(); ++j) {
        cplx gij = inner_product(tr.g, svd.triples[j].g, ProductMeasure::uniform(tr.g.alphabets));
        cplx hij = inner_product(tr.h, svd.triples[j].h, ProductMeasure::uniform(tr.h.alphabets));
        double expect = (i == j) ? 1.0 : 0.0;
        REQUIRE(std::abs(gij - cplx{expect, 0}) < 1e-8);
        REQUIRE(std::abs(hij - cplx{expect, 0}) < 1e-8);
      }
      // Phase convention: largest-magnitude entry of g is real nonnegative.
      std::size_t arg = 0;
      double best = -1.0;
      for (std::size_t a = 0; a < tr.g.size(); ++a)
        if (std::abs(tr.g.values[a]) > best + 1e-15) { best = std::abs(tr.g.values[a]); arg = a; }
      REQUIRE(tr.g.values[arg].imag() == Catch::Approx(0.0).margin(1e-9));
      REQUIRE(tr.g.values[arg].real() >= -1e-12);
    }
    REQUIRE(sum2 == Catch::Approx(sqr(l2_norm(f))).margin(1e-9));
    FunctionTable rec = svd.reconstruct();
    REQUIRE(l2_norm(sub(rec, f)) < 1e-8);
  }
}

TEST_CASE("singular vectors of large singular values are sup-norm bounded") {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    auto f = random_table({2, 2, 3}, rng);
    double B = lp_norm(f, std::numeric_limits<double>::infinity());
    PartitionSVD svd = partition_svd(f, {0, 2});
    for (const auto& tr : svd.triples) {
      REQUIRE(lp_norm(tr.g, std::numeric_limits<double>::infinity()) <= B / tr.lambda + 1e-9);
      REQUIRE(lp_norm(tr.h, std::numeric_limits<double>::infinity()) <= B / tr.lambda + 1e-9);
    }
  }
}

TEST_CASE("near-product functions: top singular value and residual swap bounds") {
  Rng rng(11);
  int tested = 0;
  for (int t = 0; tested < 40 && t < 400; ++t) {
    double sigma = 0.002 + 0.03 * rng.next_double();
    auto [f, c] = perturbed_product({2, 2, 2}, sigma, rng);
    if (c <= 0.0 || c > 0.05) continue;
    PartitionSVD svd = partition_svd(f, {0});
    REQUIRE_FALSE(svd.triples.empty());
    double l1sq = sqr(svd.triples[0].lambda);
    REQUIRE(l1sq >= 1.0 - 3.0 * c - 1e-9);
    // Weak monotone form of the inductive step: the top residual keeps at
    // least the swap value of f.
    FunctionTable h1 = svd.triples[0].h;
    double swap_h1 = swap_inner(h1).value.real();
    REQUIRE(swap_h1 >= (1.0 - c) - 1e-9);
    ++tested;
  }
  REQUIRE(tested == 40);
}

TEST_CASE("greedy product extraction") {
  Rng rng(13);
  SECTION("recovers an exact product with correlation 1") {
    auto f = random_unimodular_product_table({2, 2, 3}, rng);
    ExtractResult ex = extract_product_99(f);
    REQUIRE(ex.corr == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("perturbed products keep corr >= 1 - 10 c") {
    int tested = 0;
    for (int t = 0; tested < 30 && t < 300; ++t) {
      double sigma = 0.002 + 0.03 * rng.next_double();
      auto [f, c] = perturbed_product({2, 2, 2}, sigma, rng);
      if (c <= 0.0 || c > 0.05) continue;
      ExtractResult ex = extract_product_99(f);
      REQUIRE(ex.corr >= 1.0 - 10.0 * c - 1e-9);
      ++tested;
    }
    REQUIRE(tested == 30);
  }
  SECTION("n = 2 extraction is exactly the top singular value") {
    for (int t = 0; t < 20; ++t) {
      auto f = random_table({2, 2}, rng);
      double l2 = l2_norm(f);
      for (auto& v : f.values) v /= (l2 * 1.0000001);
      ExtractResult ex = extract_product_99(f);
      PartitionSVD svd = partition_svd(f, {0});
      // The best product correlation over unit-norm factors is lambda_1.
      REQUIRE(ex.corr == Catch::Approx(svd.triples[0].lambda).margin(1e-9));
    }
  }
  SECTION("the zero function pads with constant factors") {
    ExtractResult ex = extract_product_99(FunctionTable::zeros({2, 2}));
    REQUIRE(ex.P.factors.size() == 2);
    REQUIRE(ex.corr == 0.0);
  }
}

TEST_CASE("iterative peeling: products, monotone residuals, restriction oracle") {
  SECTION("a product function terminates immediately with a tiny residual") {
    Rng rng(17);
    auto f = random_unimodular_product_table({2, 2, 2, 2}, rng);
    // The random halving can exhaust one side of the partition on unlucky
    // seeds; on surviving seeds the residual vanishes after one subtraction.
    int observed = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      PeelTrace tr = peel_iterate(f, 0.5, 0.1, 8, Rng(seed));
      if (tr.termination == "domain_exhausted") continue;
      REQUIRE(tr.steps.size() <= 2);
      REQUIRE(tr.termination == "delta_small");
      REQUIRE(tr.steps.back().swap_delta < 1e-9);
      ++observed;
    }
    REQUIRE(observed >= 3);
  }
  SECTION("partitions refine and the subtracted residual cannot grow") {
    Rng rng(19);
    for (int seed = 0; seed < 5; ++seed) {
      auto f = random_table({2, 2, 2, 2, 2, 2}, rng);
      PeelTrace tr = peel_iterate(f, 0.5, 0.35, 6, Rng((std::uint64_t)seed));
      for (std::size_t s = 0; s + 1 < tr.steps.size(); ++s) {
        const PeelStep& a = tr.steps[s];
        const PeelStep& b = tr.steps[s + 1];
        // Refinement: R_{t+1} subset of R_t, S_{t+1} subset of S_t.
        for (int c : b.R) REQUIRE(std::count(a.R.begin(), a.R.end(), c) == 1);
        for (int c : b.S) REQUIRE(std::count(a.S.begin(), a.S.end(), c) == 1);
        for (int c : b.T) REQUIRE(std::count(a.T.begin(), a.T.end(), c) == 1);
        // SVD optimality: the next residual is no larger than the restricted
        // current residual.
        std::vector<int> Jpos = detail::positions_in(a.R, a.S);
        PartitionSVD svd = partition_svd(a.f_t, Jpos);
        FunctionTable delta = sub(a.f_t, svd.reconstruct(a.t));
        Restriction rest;
        rest.fixed_set = detail::positions_in(a.R, a.restricted_coords);
        rest.assignment = a.restriction_values;
        FunctionTable delta_rest = restrict_table(delta, rest);
        REQUIRE(sqr(b.delta_l2) <= sqr(l2_norm(delta_rest)) + 1e-9);
      }
    }
  }
  SECTION("recorded restrictions obey the swap-root averaging bound exactly") {
    Rng rng(23);
    for (int seed = 0; seed < 20; ++seed) {
      auto f = random_table({2, 2, 2, 2, 2, 2}, rng);
      PeelTrace tr = peel_iterate(f, 0.5, 0.3, 4, Rng((std::uint64_t)(100 + seed)));
      for (const auto& st : tr.steps) {
        if (st.restricted_coords.empty()) continue;
        Restriction rest;
        rest.fixed_set = detail::positions_in(st.R, st.restricted_coords);
        // Exhaustive average over every assignment on the dropped block.
        std::vector<int> sub_alpha;
        for (int pos : rest.fixed_set) sub_alpha.push_back(st.f_t.alphabets[(std::size_t)pos]);
        std::size_t M = domain_size(sub_alpha);
        double avg = 0.0;
        std::vector<int> z;
        for (std::size_t idx = 0; idx < M; ++idx) {
          index_tuple(sub_alpha, idx, z);
          rest.assignment = z;
          FunctionTable g = restrict_table(st.f_t, rest);
          avg += std::sqrt(std::max(0.0, swap_inner(g).value.real()));
        }
        avg /= (double)M;
        REQUIRE(avg >= std::sqrt(std::max(0.0, st.swap_f)) - 1e-9);
      }
    }
  }
  SECTION("terminal diagnostic reports a case with unit-norm pair") {
    Rng rng(29);
    auto f = random_table({2, 2, 2, 2}, rng);
    PeelTrace tr = peel_iterate(f, 0.5, 0.2, 4, Rng(5));
    REQUIRE(tr.terminal_case >= 1);
    REQUIRE(tr.terminal_case <= 3);
    REQUIRE(tr.terminal_g.has_value());
    if (tr.terminal_case != 2) {
      REQUIRE(l2_norm(*tr.terminal_g) == Catch::Approx(1.0).margin(1e-8));
      REQUIRE(l2_norm(*tr.terminal_h) == Catch::Approx(1.0).margin(1e-8));
    }
    REQUIRE(std::abs(tr.terminal_eta) > 0.0);
    // Trace serializes to one JSON record per step.
    for (const auto& st : tr.steps) REQUIRE_FALSE(st.to_json().dump().empty());
  }
}

TEST_CASE("best-product search over restrictions") {
  SECTION("an exact product is found at the empty restriction") {
    Rng rng(31);
    auto f = random_unimodular_product_table({2, 2, 2}, rng);
    BestProduct bp = best_product_correlation(f, SearchBudget{}, Rng(1));
    REQUIRE(bp.corr >= 1.0 - 1e-6);
    REQUIRE(bp.restriction.fixed_set.empty());
  }
  SECTION("random signed quadratics improve strictly under restriction") {
    int improved = 0;
    const int seeds = 10;
    for (int seed = 0; seed < seeds; ++seed) {
      Rng rng((std::uint64_t)(500 + seed));
      const int n = 10;
      // f(x) = sign(sum_{i<j} alpha_ij s_i s_j), s in {-1, 1}.
      std::vector<double> alpha;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) alpha.push_back(rng.next_gaussian());
      FunctionTable f = FunctionTable::zeros(std::vector<int>((std::size_t)n, 2));
      std::vector<int> x;
      for (std::size_t idx = 0; idx < f.size(); ++idx) {
        index_tuple(f.alphabets, idx, x);
        double q = 0.0;
        std::size_t a = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            double si = x[(std::size_t)i] ? 1.0 : -1.0;
            double sj = x[(std::size_t)j] ? 1.0 : -1.0;
            q += alpha[a++] * si * sj;
          }
        f.values[idx] = q >= 0.0 ? cplx{1, 0} : cplx{-1, 0};
      }
      SearchBudget empty_budget;
      empty_budget.empty_only = true;
      double base = best_product_correlation(f, empty_budget, Rng(1)).corr;
      REQUIRE(base < 0.7);  // no global product structure
      SearchBudget full;
      full.keep_rates = {0.5, 0.3};
      full.restarts_per_rate = 4;
      BestProduct bp = best_product_correlation(f, full, Rng(2));
      if (bp.corr > base + 0.02) ++improved;
    }
    REQUIRE(improved >= 8);
  }
  SECTION("planted half-support products are recovered to half their correlation") {
    Rng rng(37);
    for (int t = 0; t < 5; ++t) {
      const int n = 6;
      ProductFunction planted;
      auto pt = random_unimodular_product_table(std::vector<int>((std::size_t)n, 2), rng, &planted);
      FunctionTable f = pt;
      // Noise on the second half of the coordinates.
      for (auto& v : f.values) v = 0.8 * v + 0.2 * rng.next_unit_complex();
      double l2 = l2_norm(f);
      for (auto& v : f.values) v /= l2;
      double planted_corr = product_correlation(f, planted);
      BestProduct bp = best_product_correlation(f, SearchBudget{}, Rng(3));
      REQUIRE(bp.corr >= 0.5 * planted_corr);
    }
  }
}

TEST_CASE("phase-invariant product embedding") {
  SECTION("the all-ones product embeds as (1,0) blocks") {
    ProductFunction P;
    P.factors = {{cplx{1, 0}, cplx{1, 0}}, {cplx{1, 0}, cplx{1, 0}}};
    auto v = embed_pi(P, 0);
    REQUIRE(v.size() == 8);
    for (std::size_t i = 0; i < v.size(); i += 2) {
      REQUIRE(v[i] == Catch::Approx(1.0).margin(1e-15));
      REQUIRE(v[i + 1] == Catch::Approx(0.0).margin(1e-15));
    }
  }
  SECTION("global unit rotations leave the embedding unchanged") {
    Rng rng(41);
    ProductFunction P;
    random_unimodular_product_table({3, 3}, rng, &P);
    ProductFunction Q = P;
    cplx rot = rng.next_unit_complex();
    for (auto& v : Q.factors[0]) v *= rot;
    auto a = embed_pi(P, 1), b = embed_pi(Q, 1);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == Catch::Approx(b[i]).margin(1e-12));
  }
  SECTION("distance matches the direct formula") {
    Rng rng(43);
    ProductFunction P, Q;
    random_unimodular_product_table({2, 2}, rng, &P);
    random_unimodular_product_table({2, 2}, rng, &Q);
    auto a = embed_pi(P, 0), b = embed_pi(Q, 0);
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += sqr(a[i] - b[i]);
    // Direct formula: sum over coordinates of the counting-norm distance of
    // the reference-phase-normalized factors.
    double oracle = 0.0;
    for (std::size_t i = 0; i < P.factors.size(); ++i) {
      cplx cp = std::conj(P.factors[i][0]) / std::abs(P.factors[i][0]);
      cplx cq = std::conj(Q.factors[i][0]) / std::abs(Q.factors[i][0]);
      for (std::size_t s = 0; s < P.factors[i].size(); ++s)
        oracle += std::norm(cp * P.factors[i][s] - cq * Q.factors[i][s]);
    }
    REQUIRE(d2 == Catch::Approx(oracle).margin(1e-12));
  }
  SECTION("a zero factor at the reference symbol is rejected") {
    ProductFunction P;
    P.factors = {{cplx{0, 0}, cplx{1, 0}}};
    REQUIRE_THROWS_AS(embed_pi(P, 0), std::invalid_argument);
  }
}

TEST_CASE("phase alignment bound and correlation monotonicity") {
  SECTION("a global rotation aligns exactly") {
    Rng rng(47);
    ProductFunction P;
    random_unimodular_product_table({2, 3}, rng, &P);
    ProductFunction Q = P;
    cplx rot = rng.next_unit_complex();
    for (auto& v : Q.factors[0]) v *= rot;
    PhaseAlign pa = phase_align(P, Q);
    REQUIRE(pa.lhs == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(pa.bound_ok);
  }
  SECTION("the alignment bound holds on 500 random unimodular pairs") {
    Rng rng(53);
    for (int t = 0; t < 500; ++t) {
      ProductFunction P, Q;
      random_unimodular_product_table({2, 2, 3}, rng, &P);
      random_unimodular_product_table({2, 2, 3}, rng, &Q);
      PhaseAlign pa = phase_align(P, Q);
      REQUIRE(pa.bound_ok);
    }
  }
  SECTION("correlation decays as the embedding distance grows along a family") {
    Rng rng(59);
    ProductFunction P, R;
    random_unimodular_product_table({2, 2, 2, 2}, rng, &P);
    random_unimodular_product_table({2, 2, 2, 2}, rng, &R);
    ProductFunction Q = P;
    double prev_corr = 1.0, prev_dist = -1.0;
    for (std::size_t k = 0; k < P.factors.size(); ++k) {
      Q.factors[k] = R.factors[k];
      double corr = product_inner_abs(P, Q);
      auto a = embed_pi(P, 0), b = embed_pi(Q, 0);
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) d2 += sqr(a[i] - b[i]);
      REQUIRE(corr <= prev_corr + 1e-12);
      REQUIRE(d2 >= prev_dist - 1e-12);
      prev_corr = corr;
      prev_dist = d2;
    }
  }
}

TEST_CASE("short lists of correlated products") {
  SECTION("a single product yields a one-element list") {
    Rng rng(61);
    auto f = random_unimodular_product_table({2, 2}, rng);
    auto list = short_list(f, 0.8, 0.3, SearchBudget{}, Rng(1));
    REQUIRE(list.size() == 1);
    REQUIRE(product_correlation(f, list[0]) >= 0.99);
  }
  SECTION("two orthogonal planted components are both represented") {
    // First factors orthogonal on the two-letter alphabet.
    ProductFunction P0, P1;
    P0.factors = {{cplx{1, 0}, cplx{1, 0}}, {cplx{1, 0}, cplx{0, 1}}};
    P1.factors = {{cplx{1, 0}, cplx{-1, 0}}, {cplx{1, 0}, cplx{0, -1}}};
    // Unequal weights break the singular-value tie so the greedy rounds peel
    // the components in order.
    FunctionTable f = add(scale(product_to_table(P0), cplx{1.2, 0}),
                          scale(product_to_table(P1), cplx{0.8, 0}));
    double l2 = l2_norm(f);
    for (auto& v : f.values) v /= l2;
    auto list = short_list(f, 0.4, 0.3, SearchBudget{}, Rng(2));
    bool near0 = false, near1 = false;
    for (const auto& P : list) {
      if (product_inner_abs(P, P0) >= 0.5) near0 = true;
      if (product_inner_abs(P, P1) >= 0.5) near1 = true;
    }
    REQUIRE(near0);
    REQUIRE(near1);
    // Post-hoc length bound when the pruning hypotheses hold.
    REQUIRE((double)list.size() <= 1.0 / (0.4 * 0.4 - 0.3 * 0.3) + 1e-9);
  }
  SECTION("the heuristic list covers the discretized brute-force list") {
    ProductFunction P0, P1;
    P0.factors = {{cplx{1, 0}, cplx{1, 0}}, {cplx{1, 0}, cplx{0, 1}}};
    P1.factors = {{cplx{1, 0}, cplx{-1, 0}}, {cplx{1, 0}, cplx{0, -1}}};
    FunctionTable f = add(scale(product_to_table(P0), cplx{1.2, 0}),
                          scale(product_to_table(P1), cplx{0.8, 0}));
    double l2 = l2_norm(f);
    for (auto& v : f.values) v /= l2;
    auto list = short_list(f, 0.5, 0.3, SearchBudget{}, Rng(3));
    REQUIRE_FALSE(list.empty());
    // All products with 8th-root-of-unity factor values and |<f,P>| >= 0.5.
    auto root = [](int k) {
      return cplx{std::cos(2.0 * kPi * k / 8.0), std::sin(2.0 * kPi * k / 8.0)};
    };
    int members = 0, covered = 0;
    for (int a0 = 0; a0 < 8; ++a0)
      for (int a1 = 0; a1 < 8; ++a1)
        for (int b0 = 0; b0 < 8; ++b0)
          for (int b1 = 0; b1 < 8; ++b1) {
            ProductFunction cand;
            cand.factors = {{root(a0), root(a1)}, {root(b0), root(b1)}};
            if (product_correlation(f, cand) < 0.5) continue;
            ++members;
            for (const auto& P : list)
              if (product_inner_abs(cand, P) >= 0.3) { ++covered; break; }
          }
    REQUIRE(members > 0);
    REQUIRE(covered == members);
  }
}

TEST_CASE("conversion to exactly unimodular products") {
  SECTION("an already-unimodular product is returned unchanged at theta = 0") {
    Rng rng(67);
    ProductFunction P;
    auto f = random_unimodular_product_table({2, 2, 2}, rng, &P);
    for (auto& v : f.values) v *= 0.9;  // keep ||f||_4 <= 1
    BoundedProductResult res = to_bounded_product(f, P, 0.5);
    REQUIRE(res.theta == 0.0);
    REQUIRE(res.corr == Catch::Approx(product_correlation(f, P)).margin(1e-12));
  }
  SECTION("planted magnitudes: output unimodular and within 0.9 of the dense scan") {
    Rng rng(71);
    for (int t = 0; t < 5; ++t) {
      const int n = 4;
      ProductFunction U;
      auto f = random_unimodular_product_table(std::vector<int>((std::size_t)n, 2), rng, &U);
      for (auto& v : f.values) v = 0.85 * v + 0.1 * rng.next_unit_complex();
      double l4 = lp_norm(f, 4.0);
      if (l4 > 1.0)
        for (auto& v : f.values) v /= l4 * 1.0000001;
      // P = U with per-symbol magnitude jitter, renormalized to ||P_i||_2 <= 1.
      ProductFunction P = U;
      for (auto& fac : P.factors) {
        double n2 = 0.0;
        for (auto& v : fac) {
          v *= std::exp(0.5 * (rng.next_double() - 0.5));
          n2 += std::norm(v);
        }
        double scale = std::sqrt(n2 / (double)fac.size());
        for (auto& v : fac) v /= scale * 1.0000001;
      }
      double base = product_correlation(f, P);
      REQUIRE(base >= 0.3);
      const double theta_cap = 8.0;
      BoundedProductResult res = to_bounded_product(f, P, 0.3, theta_cap);
      for (const auto& fac : res.P_prime.factors)
        for (const auto& v : fac) REQUIRE(std::abs(std::abs(v) - 1.0) < 1e-12);
      // Dense scan oracle over the same range.
      ProductFunction Q = P;
      std::vector<std::vector<double>> lnR((std::size_t)n);
      for (int i = 0; i < n; ++i)
        for (std::size_t a = 0; a < P.factors[(std::size_t)i].size(); ++a) {
          double m = std::abs(P.factors[(std::size_t)i][a]);
          Q.factors[(std::size_t)i][a] = P.factors[(std::size_t)i][a] / m;
          lnR[(std::size_t)i].push_back(std::log(m));
        }
      double dense_best = 0.0;
      for (double th = -theta_cap; th <= theta_cap; th += 0.0005) {
        ProductFunction PP = Q;
        for (int i = 0; i < n; ++i)
          for (std::size_t a = 0; a < PP.factors[(std::size_t)i].size(); ++a) {
            double ph = 2.0 * kPi * th * lnR[(std::size_t)i][a];
            PP.factors[(std::size_t)i][a] *= cplx{std::cos(ph), std::sin(ph)};
          }
        dense_best = std::max(dense_best, product_correlation(f, PP));
      }
      REQUIRE(res.corr >= 0.9 * dense_best);
    }
  }
  SECTION("the delta = 0.5 correlation floor is met") {
    Rng rng(73);
    ProductFunction P;
    auto f = random_unimodular_product_table({2, 2}, rng, &P);
    for (auto& v : f.values) v *= 0.9;
    // Mildly non-unimodular P with |<f,P>| >= 0.5.
    for (auto& fac : P.factors)
      for (auto& v : fac) v *= 0.95;
    double delta = 0.5;
    REQUIRE(product_correlation(f, P) >= delta);
    BoundedProductResult res = to_bounded_product(f, P, delta);
    double D = std::log(16.0 / sqr(delta));
    REQUIRE(res.corr >= std::pow(delta, 7.0) / (2e6 * (2.0 * D + 1.0)));
  }
  SECTION("zero values and oversized 4-norms are rejected") {
    ProductFunction P;
    P.factors = {{cplx{0, 0}, cplx{1, 0}}};
    auto f = FunctionTable::constant({2}, cplx{0.5, 0});
    REQUIRE_THROWS_AS(to_bounded_product(f, P, 0.5), std::invalid_argument);
    auto big = FunctionTable::constant({2}, cplx{2.0, 0});
    ProductFunction Pok;
    Pok.factors = {{cplx{1, 0}, cplx{1, 0}}};
    REQUIRE_THROWS_AS(to_bounded_product(big, Pok, 0.5), std::invalid_argument);
  }
}
