#include <doctest.h>

#include <cmath>
#include <random>

#include "wmlab/dist.hpp"
#include "wmlab/simplex.hpp"

using namespace wmlab;

namespace {

// Independent check: minimize sum_x (p_x - alpha)+ over the TV ball as an LP
// with explicit excess variables. Exercises none of the projection code.
double lp_oracle_min_excess(const Categorical& q, double alpha, double eps) {
  const std::size_t m = q.size();
  const std::size_t P = 0, E = m, D = 2 * m;  // variable block offsets
  LpProblem lp;
  lp.num_vars = 3 * m;
  lp.objective.assign(lp.num_vars, 0.0);
  for (std::size_t x = 0; x < m; ++x) lp.objective[E + x] = 1.0;

  auto row = [&](LpSense s, double rhs) -> LpRow& {
    lp.rows.push_back({std::vector<double>(lp.num_vars, 0.0), s, rhs});
    return lp.rows.back();
  };

  LpRow& norm = row(LpSense::eq, 1.0);
  for (std::size_t x = 0; x < m; ++x) norm.a[P + x] = 1.0;
  for (std::size_t x = 0; x < m; ++x) {
    LpRow& cap = row(LpSense::le, alpha);
    cap.a[P + x] = 1.0;
    cap.a[E + x] = -1.0;
    LpRow& hi = row(LpSense::le, q[x]);
    hi.a[P + x] = 1.0;
    hi.a[D + x] = -1.0;
    LpRow& lo = row(LpSense::ge, q[x]);
    lo.a[P + x] = 1.0;
    lo.a[D + x] = 1.0;
  }
  LpRow& ball = row(LpSense::le, 2.0 * eps);
  for (std::size_t x = 0; x < m; ++x) ball.a[D + x] = 1.0;

  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::optimal);
  return sol.objective;
}

Categorical random_simplex(std::mt19937_64& rng, std::size_t m) {
  std::vector<double> w(m);
  std::exponential_distribution<double> ex(1.0);
  for (auto& v : w) v = ex(rng);
  return Categorical::from_weights(w);
}

}  // namespace

TEST_CASE("categorical construction validates") {
  CHECK_NOTHROW(Categorical({0.5, 0.5}));
  CHECK_THROWS(Categorical({0.5, 0.4}));          // sums to 0.9
  CHECK_THROWS(Categorical({1.5, -0.5}));         // negative entry
  CHECK_THROWS(Categorical(std::vector<double>{}));
  Categorical u = Categorical::uniform(4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25));
  Categorical pm = Categorical::point_mass(3, 1);
  CHECK(pm[1] == 1.0);
  CHECK(pm[0] == 0.0);
  Categorical w = Categorical::from_weights(std::vector<double>{2.0, 6.0});
  CHECK(w[0] == doctest::Approx(0.25));
}

TEST_CASE("plus_part_excess pinned values") {
  CHECK(plus_part_excess(Categorical({0.5, 0.3, 0.2}), 0.25) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(plus_part_excess(Categorical({0.5, 0.5}), 1.0) == 0.0);
  CHECK(plus_part_excess(Categorical({1.0, 0.0}), 0.0) == 1.0);
}

TEST_CASE("excess equals one minus capped mass") {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t m = 2 + rng() % 7;
    Categorical p = random_simplex(rng, m);
    double t = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double capped = 0.0;
    for (std::size_t i = 0; i < m; ++i) capped += std::min(p[i], t);
    CHECK(plus_part_excess(p, t) == doctest::Approx(1.0 - capped).epsilon(1e-12));
  }
}

TEST_CASE("tv_distance pinned values") {
  CHECK(tv_distance(Categorical({0.5, 0.5}), Categorical({0.5, 0.5})) == 0.0);
  CHECK(tv_distance(Categorical({1.0, 0.0}), Categorical({0.0, 1.0})) == 1.0);
  CHECK(tv_distance(Categorical({0.7, 0.3}), Categorical({0.4, 0.6})) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS(tv_distance(Categorical({1.0}), Categorical({0.5, 0.5})));
}

TEST_CASE("projection pinned values") {
  Categorical q({0.5, 0.3, 0.2});

  ProjectionResult r0 = project_min_excess(q, 0.25, 0.0);
  CHECK(r0.objective == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(r0.mass_moved == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r0.projected[i] == q[i]);

  ProjectionResult r1 = project_min_excess(q, 0.25, 0.04);
  CHECK(r1.objective == doctest::Approx(0.26).epsilon(1e-12));
  CHECK(r1.projected[0] == doctest::Approx(0.46).epsilon(1e-12));
  CHECK(r1.projected[1] == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(r1.projected[2] == doctest::Approx(0.24).epsilon(1e-12));

  ProjectionResult r2 = project_min_excess(q, 0.25, 0.05);
  CHECK(r2.objective == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("projection is a no-op when nothing exceeds the threshold") {
  Categorical q({0.2, 0.3, 0.25, 0.25});
  ProjectionResult r = project_min_excess(q, 0.35, 0.2);
  CHECK(r.objective == 0.0);
  CHECK(r.mass_moved == 0.0);
}

TEST_CASE("projection objective matches the LP oracle") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t m = 2 + rng() % 4;  // up to 5 outcomes
    Categorical q = random_simplex(rng, m);
    for (double alpha : {0.08, 0.2, 1.0 / static_cast<double>(m), 0.45}) {
      for (double eps : {0.0, 0.03, 0.12, 0.4}) {
        double got = project_min_excess(q, alpha, eps).objective;
        double oracle = lp_oracle_min_excess(q, alpha, eps);
        CAPTURE(m);
        CAPTURE(alpha);
        CAPTURE(eps);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("projection objective is monotone in alpha and eps") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    Categorical q = random_simplex(rng, 2 + rng() % 5);
    double prev = 2.0;
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.4}) {
      double obj = project_min_excess(q, 0.2, eps).objective;
      CHECK(obj <= prev + 1e-12);
      prev = obj;
    }
    prev = 2.0;
    for (double alpha : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      double obj = project_min_excess(q, alpha, 0.1).objective;
      CHECK(obj <= prev + 1e-12);
      prev = obj;
    }
  }
}

TEST_CASE("projection stays inside the TV ball") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    Categorical q = random_simplex(rng, 2 + rng() % 6);
    double alpha = 0.05 + 0.4 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    double eps = 0.3 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    ProjectionResult r = project_min_excess(q, alpha, eps);
    CHECK(tv_distance(r.projected, q) <= eps + 1e-12);
    CHECK(r.mass_moved == doctest::Approx(tv_distance(r.projected, q)).epsilon(1e-12));
    CHECK(r.objective == doctest::Approx(plus_part_excess(r.projected, alpha)).epsilon(1e-12));
  }
}

TEST_CASE("aggregate_masses sums class members") {
  Categorical q({0.5, 0.3, 0.2});
  std::vector<std::uint32_t> assign{0, 1, 0};
  Categorical cls = aggregate_masses(q, assign, 2);
  REQUIRE(cls.size() == 2);
  CHECK(cls[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(cls[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("sample_categorical follows the law") {
  std::mt19937_64 rng(5);
  Categorical p({0.5, 0.3, 0.2});
  std::vector<std::size_t> counts(3, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(p, rng)];
  for (std::size_t i = 0; i < 3; ++i) {
    double freq = static_cast<double>(counts[i]) / n;
    CHECK(std::abs(freq - p[i]) < 0.01);
  }
}
