#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "msface/error.hpp"
#include "msface/fusion.hpp"
#include "support.hpp"

using namespace msface;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an msface::Error");
  return ErrorCode::InvalidArgument;
}

// persons x templates_per_person gallery; probe r belongs to person r % persons + 1.
DistanceTable random_table(int persons, int probes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 10.0);
  DistanceTable t;
  for (int p = 1; p <= persons; ++p) t.templates.push_back({p, 0});
  t.values = Matrix(t.templates.size(), static_cast<std::size_t>(probes));
  for (int r = 0; r < probes; ++r) {
    t.probes.push_back("q" + std::to_string(r));
    for (std::size_t c = 0; c < t.templates.size(); ++c) t.values(c, static_cast<std::size_t>(r)) = d(rng);
  }
  return t;
}

std::vector<int> truth_for(int persons, int probes) {
  std::vector<int> t;
  for (int r = 0; r < probes; ++r) t.push_back(r % persons + 1);
  return t;
}

// Sensor that is right (margin 1) on probes where good(r) holds and
// wrong by a smaller margin elsewhere.
DistanceTable complementary(int persons, int probes, bool (*good)(int)) {
  DistanceTable t;
  for (int p = 1; p <= persons; ++p) t.templates.push_back({p, 0});
  t.values = Matrix(static_cast<std::size_t>(persons), static_cast<std::size_t>(probes), 10.0);
  for (int r = 0; r < probes; ++r) {
    t.probes.push_back("q" + std::to_string(r));
    const int truth = r % persons;
    const int wrong = (truth + 1) % persons;
    if (good(r)) {
      t.values(static_cast<std::size_t>(truth), static_cast<std::size_t>(r)) = 1.0;
      t.values(static_cast<std::size_t>(wrong), static_cast<std::size_t>(r)) = 2.0;
    } else {
      t.values(static_cast<std::size_t>(truth), static_cast<std::size_t>(r)) = 6.0;
      t.values(static_cast<std::size_t>(wrong), static_cast<std::size_t>(r)) = 5.5;
    }
  }
  return t;
}

// Exhaustive oracle: fuse with explicit weights then identify.
double oracle_rate(const std::vector<DistanceTable>& tables, const std::vector<double>& w,
                   const std::vector<int>& truth) {
  return identification_rate(identify(fuse_weighted(tables, w)), truth);
}

}  // namespace

TEST_CASE("fixed fusion is the entrywise mean") {
  std::mt19937_64 rng(1);
  const DistanceTable a = random_table(4, 6, rng);
  const DistanceTable b = random_table(4, 6, rng);
  const DistanceTable c = random_table(4, 6, rng);
  const std::vector<DistanceTable> three{a, b, c};
  const DistanceTable f = fuse_fixed(three);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t k = 0; k < 4; ++k)
      CHECK(f.at(r, k) == doctest::Approx((a.at(r, k) + b.at(r, k) + c.at(r, k)) / 3.0).epsilon(1e-14));
  const std::vector<DistanceTable> one{a};
  CHECK(code_of([&] { fuse_fixed(one); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("fusion requires aligned tables and matching weights") {
  std::mt19937_64 rng(2);
  const DistanceTable a = random_table(3, 4, rng);
  DistanceTable b = random_table(3, 4, rng);
  const std::vector<DistanceTable> pair{a, b};
  const std::vector<double> w1{1.0};
  CHECK(code_of([&] { fuse_weighted(pair, w1); }) == ErrorCode::WeightCountMismatch);
  b.probes[2] = "other";
  const std::vector<DistanceTable> misaligned{a, b};
  CHECK(code_of([&] { fuse_fixed(misaligned); }) == ErrorCode::LabelMismatch);
  const std::vector<DistanceTable> shapes{a, random_table(4, 4, rng)};
  CHECK(code_of([&] { fuse_fixed(shapes); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("weight grid is inclusive with exact endpoints") {
  const auto g = weight_grid(0.01);
  REQUIRE(g.size() == 101);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[50] == 0.5);
  CHECK(weight_grid(0.25) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(code_of([] { weight_grid(0.3); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { weight_grid(0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("two-way grid matches the exhaustive oracle and its corners") {
  std::mt19937_64 rng(3);
  const DistanceTable a = random_table(5, 40, rng);
  const DistanceTable b = random_table(5, 40, rng);
  const auto truth = truth_for(5, 40);
  const GridResult g = grid_search_2(a, b, truth, 0.05);
  REQUIRE(g.alphas.size() == 21);
  for (std::size_t i = 0; i < g.alphas.size(); ++i) {
    CHECK(g.rate(i) == oracle_rate({a, b}, {g.alphas[i], 1.0 - g.alphas[i]}, truth));
  }
  CHECK(g.rate(20) == identification_rate(identify(a), truth));
  CHECK(g.rate(0) == identification_rate(identify(b), truth));
  CHECK(g.best_rate == *std::max_element(g.rates.begin(), g.rates.end()));
  const auto first_best = std::find(g.rates.begin(), g.rates.end(), g.best_rate) - g.rates.begin();
  CHECK(g.best_alpha == g.alphas[static_cast<std::size_t>(first_best)]);
}

TEST_CASE("complementary classifiers gain from an interior weight") {
  const auto truth = truth_for(4, 40);
  const DistanceTable a = complementary(4, 40, [](int r) { return r % 2 == 0; });
  const DistanceTable b = complementary(4, 40, [](int r) { return r % 2 == 1; });
  CHECK(identification_rate(identify(a), truth) == 50.0);
  CHECK(identification_rate(identify(b), truth) == 50.0);
  const GridResult g = grid_search_2(a, b, truth);
  CHECK(g.best_rate == 100.0);
  CHECK(g.best_alpha > 0.0);
  CHECK(g.best_alpha < 1.0);
}

TEST_CASE("three-way surface matches the oracle including outside the simplex") {
  std::mt19937_64 rng(4);
  const DistanceTable a = random_table(4, 24, rng);
  const DistanceTable b = random_table(4, 24, rng);
  const DistanceTable c = random_table(4, 24, rng);
  const auto truth = truth_for(4, 24);
  const GridResult g = grid_search_3(a, b, c, truth, 0.25);
  REQUIRE(g.three_way());
  REQUIRE(g.rates.size() == 25);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      const double al = g.alphas[i], be = g.betas[j];
      CHECK(g.rate(i, j) == oracle_rate({a, b, c}, {al, be, 1.0 - al - be}, truth));
    }
  }
  CHECK(g.rate(4, 0) == identification_rate(identify(a), truth));
  CHECK(g.rate(0, 4) == identification_rate(identify(b), truth));
  CHECK(g.rate(0, 0) == identification_rate(identify(c), truth));
  CHECK(g.best_in_simplex == (g.best_alpha + g.best_beta <= 1.0));
}

TEST_CASE("three complementary sensors beat every corner inside the simplex") {
  const auto truth = truth_for(3, 30);
  const DistanceTable a = complementary(3, 30, [](int r) { return r % 3 != 0; });
  const DistanceTable b = complementary(3, 30, [](int r) { return r % 3 != 1; });
  const DistanceTable c = complementary(3, 30, [](int r) { return r % 3 != 2; });
  const GridResult g = grid_search_3(a, b, c, truth, 0.05);
  const double corner = std::max({g.rate(20, 0), g.rate(0, 20), g.rate(0, 0)});
  CHECK(g.best_rate > corner);
  CHECK(g.best_in_simplex);
}

TEST_CASE("grid search validates truth") {
  std::mt19937_64 rng(5);
  const DistanceTable a = random_table(3, 6, rng);
  const DistanceTable b = random_table(3, 6, rng);
  CHECK(code_of([&] { grid_search_2(a, b, std::vector<int>{1, 2}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("min-max score normalization") {
  DistanceTable t;
  t.templates = {{1, 0}, {2, 0}};
  t.probes = {"a"};
  t.values = Matrix(2, 1, std::vector<double>{2.0, 6.0});
  const DistanceTable n = normalize_scores(t);
  CHECK(n.at(0, 0) == 0.0);
  CHECK(n.at(0, 1) == 1.0);
  t.values = Matrix(2, 1, 3.0);
  CHECK(normalize_scores(t).at(0, 1) == 0.0);
}

TEST_CASE("contours export and import") {
  msface::testing::TempDir dir("contour");
  std::mt19937_64 rng(6);
  const DistanceTable a = random_table(3, 9, rng);
  const DistanceTable b = random_table(3, 9, rng);
  const DistanceTable c = random_table(3, 9, rng);
  const auto truth = truth_for(3, 9);
  for (const GridResult& g : {grid_search_2(a, b, truth, 0.1), grid_search_3(a, b, c, truth, 0.1)}) {
    export_contour(g, dir / "g.csv");
    const GridResult back = import_contour(dir / "g.csv");
    CHECK(back.alphas.size() == g.alphas.size());
    CHECK(back.betas.size() == g.betas.size());
    REQUIRE(back.rates.size() == g.rates.size());
    for (std::size_t i = 0; i < g.rates.size(); ++i) CHECK(back.rates[i] == doctest::Approx(g.rates[i]));
    CHECK(back.best_alpha == doctest::Approx(g.best_alpha));
    CHECK(back.best_beta == doctest::Approx(g.best_beta));
    CHECK(back.best_rate == doctest::Approx(g.best_rate));
    CHECK(back.best_in_simplex == g.best_in_simplex);
  }
}
