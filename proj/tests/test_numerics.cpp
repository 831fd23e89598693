#include <cmath>
#include <vector>

#include <doctest.h>

#include "weightflow/errors.hpp"
#include "weightflow/numerics.hpp"
#include "weightflow/rng.hpp"

using namespace wf;

TEST_CASE("pairwise sum matches plain accumulation") {
  Rng rng(11, 0);
  std::vector<double> x(1000);
  double plain = 0.0;
  for (double& v : x) {
    v = rng.uniform(-1.0, 1.0);
    plain += v;
  }
  CHECK(pairwise_sum(x) == doctest::Approx(plain).epsilon(1e-13));
  CHECK(pairwise_sum(nullptr, 0) == 0.0);
  CHECK(pairwise_sum(x.data(), 1) == x[0]);
}

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly") {
  const Quadrature& q = gauss_legendre(5);
  REQUIRE(q.nodes.size() == 5);
  double x8 = 0.0, x9 = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    mass += q.weights[i];
    x8 += q.weights[i] * std::pow(q.nodes[i], 8);
    x9 += q.weights[i] * std::pow(q.nodes[i], 9);
  }
  CHECK(mass == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(x8 == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
  CHECK(std::abs(x9) < 1e-14);
}

TEST_CASE("Gauss-Hermite reproduces Gaussian moments") {
  const Quadrature& q = gauss_hermite(32);
  double mass = 0.0, second = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    mass += q.weights[i];
    second += q.weights[i] * q.nodes[i] * q.nodes[i];
  }
  const double root_pi = std::sqrt(M_PI);
  CHECK(mass == doctest::Approx(root_pi).epsilon(1e-12));
  CHECK(second == doctest::Approx(0.5 * root_pi).epsilon(1e-12));
}

TEST_CASE("adaptive integration hits analytic values") {
  const double cubic =
      integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0, 1e-12);
  CHECK(cubic == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const double expo =
      integrate_adaptive([](double x) { return std::exp(x); }, -1.0, 1.0, 1e-12);
  CHECK(expo == doctest::Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-12));

  // A kink forces subdivision.
  const double kink = integrate_adaptive(
      [](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-10);
  CHECK(kink == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-9));
}

TEST_CASE("normal cdf values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.0) - normal_cdf(-1.0) ==
        doctest::Approx(0.6826895).epsilon(1e-7));
  CHECK(normal_cdf(10.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cubic table interpolation is exact on cubics") {
  UniformCubicTable table;
  table.x0 = -2.0;
  table.dx = 0.25;
  auto f = [](double x) { return ((0.5 * x - 1.0) * x + 2.0) * x - 0.75; };
  for (int i = 0; i <= 16; ++i) table.values.push_back(f(-2.0 + 0.25 * i));
  for (double x : {-1.87, -0.33, 0.0, 0.61, 1.93})
    CHECK(table.eval(x) == doctest::Approx(f(x)).epsilon(1e-12));
  // Queries outside the table clamp to the boundary polynomial.
  CHECK(std::isfinite(table.eval(5.0)));
}

TEST_CASE("Toeplitz convolver matches the dense double loop") {
  Rng rng(3, 0);
  const std::size_t n = 37;
  std::vector<double> diag(n), c(n);
  for (double& v : diag) v = rng.uniform(-1.0, 1.0);
  for (double& v : c) v = rng.uniform(-1.0, 1.0);

  ToeplitzConvolver conv(diag, n);
  const std::vector<double> fast = conv.apply(c);

  for (std::size_t i = 0; i < n; ++i) {
    double direct = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      direct += diag[i > j ? i - j : j - i] * c[j];
    CHECK(fast[i] == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("parallel_for covers every index once for any worker count") {
  for (int workers : {1, 4}) {
    std::vector<int> hits(257, 0);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
}

TEST_CASE("rng streams are deterministic and decorrelated") {
  Rng a(42, 0), b(42, 0), c(42, 1);
  for (int i = 0; i < 16; ++i) {
    const double va = a.uniform();
    CHECK(va == b.uniform());
    CHECK(va != c.uniform());
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  Rng d(7, 0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(d.below(10) < 10u);
    const double u = d.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u <= 3.0);
  }
}
