#include <catch2/catch_amalgamated.hpp>

#include "swapkit/core.hpp"

using namespace swapkit;

namespace {

// Independent brute-force oracles, written against the definitions only.
cplx oracle_inner(const FunctionTable& f, const FunctionTable& g, const ProductMeasure& m) {
  cplx acc{0, 0};
  std::vector<int> x;
  for (std::size_t i = 0; i < f.size(); ++i) {
    index_tuple(f.alphabets, i, x);
    double w = 1.0;
    for (std::size_t c = 0; c < x.size(); ++c) w *= m.coords[c][(std::size_t)x[c]];
    acc += f.values[i] * std::conj(g.values[i]) * w;
  }
  return acc;
}

}  // namespace

TEST_CASE("tuple indexing is a lexicographic bijection") {
  std::vector<int> alpha{2, 3, 2};
  std::vector<int> x;
  std::size_t expect = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 2; ++c) {
        REQUIRE(tuple_index(alpha, {a, b, c}) == expect);
        index_tuple(alpha, expect, x);
        REQUIRE(x == std::vector<int>{a, b, c});
        ++expect;
      }
}

TEST_CASE("inner_product identity and orthogonality") {
  auto one = FunctionTable::constant({2, 2}, {1.0, 0.0});
  auto m = ProductMeasure::uniform({2, 2});
  REQUIRE(std::abs(inner_product(one, one, m) - cplx{1.0, 0.0}) < 1e-14);

  // Orthogonal pair on a single binary coordinate.
  FunctionTable f({2}, {{1, 0}, {1, 0}});
  FunctionTable g({2}, {{1, 0}, {-1, 0}});
  REQUIRE(std::abs(inner_product(f, g)) < 1e-14);
}

TEST_CASE("inner_product matches direct summation oracle") {
  Rng rng(7);
  auto f = random_table({3, 3}, rng);
  auto g = random_table({3, 3}, rng);
  auto m = ProductMeasure::uniform({3, 3});
  REQUIRE(std::abs(inner_product(f, g, m) - oracle_inner(f, g, m)) < 1e-12);
  // Conjugate symmetry.
  REQUIRE(std::abs(inner_product(f, g, m) - std::conj(inner_product(g, f, m))) < 1e-12);
}

TEST_CASE("lp_norm closed forms and oracle") {
  auto one = FunctionTable::constant({2, 3}, {1.0, 0.0});
  for (double p : {1.0, 2.0, 4.0}) REQUIRE(lp_norm(one, p) == Catch::Approx(1.0));
  REQUIRE(lp_norm(one, std::numeric_limits<double>::infinity()) == Catch::Approx(1.0));

  // Single spike of value c on a uniform domain of size N: |c| * N^{-1/p}.
  FunctionTable spike = FunctionTable::zeros({2, 2});
  spike.values[3] = cplx{3.0, 4.0};  // |c| = 5, N = 4
  for (double p : {1.0, 2.0, 4.0})
    REQUIRE(lp_norm(spike, p) == Catch::Approx(5.0 * std::pow(4.0, -1.0 / p)));

  Rng rng(11);
  auto f = random_table({3, 2, 2}, rng);
  double direct = 0.0;
  for (const auto& v : f.values) direct += std::norm(v);
  direct = std::sqrt(direct / (double)f.size());
  REQUIRE(lp_norm(f, 2.0) == Catch::Approx(direct).margin(1e-12));
  REQUIRE(l2_norm(f) * l2_norm(f) ==
          Catch::Approx(inner_product(f, f).real()).margin(1e-12));

  REQUIRE_THROWS_AS(lp_norm(f, 3.0), std::invalid_argument);
}

TEST_CASE("restrict_table basic contracts") {
  Rng rng(3);
  auto f = random_table({2, 3, 2}, rng);

  SECTION("empty fixed_set is the identity") {
    Restriction r;
    auto g = restrict_table(f, r);
    REQUIRE(g.values == f.values);
  }
  SECTION("fixing all coordinates yields a single point") {
    Restriction r{{0, 1, 2}, {1, 2, 0}};
    auto g = restrict_table(f, r);
    REQUIRE(g.size() == 1);
    REQUIRE(g.values[0] == f.at({1, 2, 0}));
  }
  SECTION("fix one coordinate, compare against re-indexing oracle") {
    Restriction r{{2}, {1}};
    auto g = restrict_table(f, r);
    REQUIRE(g.alphabets == std::vector<int>{2, 3});
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 3; ++b) REQUIRE(g.at({a, b}) == f.at({a, b, 1}));
  }
}

TEST_CASE("restrict composes over disjoint fixed sets (exhaustive n<=4)") {
  Rng rng(5);
  auto f = random_table({2, 2, 2, 2}, rng);
  for (std::uint64_t m1 = 0; m1 < 16; ++m1)
    for (std::uint64_t m2 = 0; m2 < 16; ++m2) {
      if (m1 & m2) continue;
      Restriction r1, r2, ru;
      for (int c = 0; c < 4; ++c) {
        if (m1 & (1u << c)) { r1.fixed_set.push_back(c); r1.assignment.push_back(c % 2); }
        if (m2 & (1u << c)) { r2.fixed_set.push_back(c); r2.assignment.push_back((c + 1) % 2); }
        if ((m1 | m2) & (1u << c)) {
          ru.fixed_set.push_back(c);
          ru.assignment.push_back((m1 & (1u << c)) ? c % 2 : (c + 1) % 2);
        }
      }
      auto step1 = restrict_table(f, r1);
      // Re-express r2's coordinates in the shrunken domain of step1.
      Restriction r2s;
      for (std::size_t j = 0; j < r2.fixed_set.size(); ++j) {
        int orig = r2.fixed_set[j];
        int shifted = orig;
        for (int c : r1.fixed_set)
          if (c < orig) --shifted;
        r2s.fixed_set.push_back(shifted);
        r2s.assignment.push_back(r2.assignment[j]);
      }
      auto lhs = restrict_table(step1, r2s);
      auto rhs = restrict_table(f, ru);
      REQUIRE(lhs.values == rhs.values);
    }
}

TEST_CASE("law of total expectation over restrictions") {
  Rng rng(9);
  auto f = random_table({3, 2, 3}, rng);
  auto mean_of = [](const FunctionTable& t) {
    cplx s{0, 0};
    for (const auto& v : t.values) s += v;
    return s / (double)t.size();
  };
  cplx ef = mean_of(f);
  for (std::uint64_t mask = 0; mask < 8; ++mask) {
    std::vector<int> I;
    for (int c = 0; c < 3; ++c)
      if (mask & (1u << c)) I.push_back(c);
    std::vector<int> sub;
    for (int c : I) sub.push_back(f.alphabets[(std::size_t)c]);
    cplx acc{0, 0};
    std::size_t count = domain_size(sub);
    std::vector<int> z;
    for (std::size_t i = 0; i < count; ++i) {
      index_tuple(sub, i, z);
      acc += mean_of(restrict_table(f, Restriction{I, z}));
    }
    REQUIRE(std::abs(acc / (double)count - ef) < 1e-12);
  }
}

TEST_CASE("random_restriction honors keep_rate extremes and binomial statistics") {
  Rng rng(42);
  auto f = random_table({2, 2, 2}, rng);
  {
    Rng r(1);
    auto [res, g] = random_restriction(f, 1.0, r);
    REQUIRE(res.fixed_set.empty());
    REQUIRE(g.values == f.values);
  }
  {
    Rng r(2);
    auto [res, g] = random_restriction(f, 0.0, r);
    REQUIRE(res.fixed_set.size() == 3);
    REQUIRE(g.size() == 1);
  }
  {
    // n = 20, keep_rate = 0.5: mean fixed-set size 10 within 3 sigma of binomial.
    auto big = FunctionTable::zeros(std::vector<int>(20, 2));
    double total = 0.0;
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
      Rng r((std::uint64_t)s + 100);
      auto [res, g] = random_restriction(big, 0.5, r);
      total += (double)res.fixed_set.size();
    }
    double mean = total / trials;
    double sigma = std::sqrt(20 * 0.25 / trials);
    REQUIRE(std::abs(mean - 10.0) < 3 * sigma + 1e-9);
  }
  {
    // Determinism given seed.
    Rng a(77), b(77);
    auto ra = random_restriction(f, 0.5, a);
    auto rb = random_restriction(f, 0.5, b);
    REQUIRE(ra.first.fixed_set == rb.first.fixed_set);
    REQUIRE(ra.first.assignment == rb.first.assignment);
  }
}

TEST_CASE("product_to_table evaluates coordinate-wise products") {
  auto ones = ProductFunction::ones({2, 3});
  auto t = product_to_table(ones);
  for (const auto& v : t.values) REQUIRE(v == cplx{1.0, 0.0});

  Rng rng(13);
  ProductFunction p;
  for (int i = 0; i < 3; ++i) {
    std::vector<cplx> fac(2);
    for (auto& v : fac) v = rng.next_box_complex();
    p.factors.push_back(fac);
  }
  auto table = product_to_table(p);
  std::vector<int> x;
  for (std::size_t i = 0; i < table.size(); ++i) {
    index_tuple(table.alphabets, i, x);
    cplx direct = p.factors[0][(std::size_t)x[0]] * p.factors[1][(std::size_t)x[1]] *
                  p.factors[2][(std::size_t)x[2]];
    REQUIRE(std::abs(table.values[i] - direct) < 1e-14);
  }

  // Unimodular factors give a 1-bounded table.
  ProductFunction u;
  Rng rng2(14);
  for (int i = 0; i < 3; ++i) {
    std::vector<cplx> fac(3);
    for (auto& v : fac) v = rng2.next_unit_complex();
    u.factors.push_back(fac);
  }
  REQUIRE(lp_norm(product_to_table(u), std::numeric_limits<double>::infinity()) ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("FunctionTable JSON round-trip is bit-exact") {
  Rng rng(21);
  auto f = random_table({3, 2}, rng);
  json j = function_table_to_json(f);
  std::string text = j.dump();
  auto g = function_table_from_json(json::parse(text));
  REQUIRE(g.alphabets == f.alphabets);
  for (std::size_t i = 0; i < f.size(); ++i) {
    REQUIRE(g.values[i].real() == f.values[i].real());
    REQUIRE(g.values[i].imag() == f.values[i].imag());
  }
  // Malformed input names the missing field.
  REQUIRE_THROWS_WITH(function_table_from_json(json::parse("{\"alphabets\":[2]}")),
                      Catch::Matchers::ContainsSubstring("values"));
}
