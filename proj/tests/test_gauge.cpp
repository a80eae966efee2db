#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "certfp/gauge.hpp"
#include "certfp/random.hpp"

using namespace certfp;

TEST_CASE("gauge evaluation") {
  CHECK(eval_gauge(Gauge::geometric(0.5), 1.0) == 0.5);
  CHECK(eval_gauge(Gauge::geometric(0.5), 0.0) == 0.0);
  CHECK(eval_gauge(Gauge::linear_defect(0.3), 2.0) == Catch::Approx(1.4).epsilon(1e-15));
  CHECK(eval_gauge(Gauge::linear_defect(0.3), 0.0) == 0.0);
  CHECK_THROWS_AS(eval_gauge(Gauge::geometric(0.5), -1.0), std::domain_error);
  CHECK_THROWS_AS(Gauge::geometric(1.0), std::domain_error);
  CHECK_THROWS_AS(Gauge::linear_defect(0.0), std::domain_error);
}

TEST_CASE("custom gauge invariant violations surface at evaluation") {
  // w(r) = r - 0.5 r^2 turns negative past r = 2.
  const Gauge g = Gauge::custom(
      "power_defect", [](double r) { return r - 0.5 * r * r; },
      Gauge::RatioMonotonicity::Undeclared);
  CHECK(g.eval(1.0) == 0.5);
  CHECK_THROWS_AS(g.eval(3.0), std::domain_error);
}

TEST_CASE("certify_modulus: built-in families are analytic") {
  const auto geo = certify_modulus(Gauge::geometric(0.5), 2.0);
  REQUIRE(certified(geo));
  CHECK(modulus_of(geo).kappa == 0.5);
  CHECK(modulus_of(geo).method == CertifiedModulus::Method::Analytic);

  const auto defect = certify_modulus(Gauge::linear_defect(0.3), 5.0);
  REQUIRE(certified(defect));
  CHECK(modulus_of(defect).kappa == Catch::Approx(0.7).epsilon(1e-15));

  // kappa = q for any radius.
  for (double radius : {0.1, 1.0, 7.5, 100.0}) {
    const auto cert = certify_modulus(Gauge::geometric(0.25), radius);
    REQUIRE(certified(cert));
    CHECK(modulus_of(cert).kappa == 0.25);
  }
}

TEST_CASE("certify_modulus: power-defect gauge is refused") {
  const double c = 0.5;
  const Gauge g = Gauge::custom(
      "power_defect", [c](double r) { return r - c * r * r; },
      Gauge::RatioMonotonicity::Nondecreasing);

  // Oracle: the ratio w(r)/r = 1 - c r climbs toward 1 as r -> 0.
  double sup = 0.0;
  for (int k = 1; k <= 12; ++k) {
    const double r = std::pow(10.0, -k);
    sup = std::max(sup, g.eval(r) / r);
  }
  CHECK(sup > 1.0 - 1e-11);

  const auto cert = certify_modulus(g, 1.0);
  REQUIRE_FALSE(certified(cert));
  CHECK(refusal_reason(cert) == "sup ratio reaches 1");
}

TEST_CASE("certify_modulus: undeclared ratio monotonicity is refused") {
  const Gauge g = Gauge::custom(
      "opaque", [](double r) { return 0.5 * r; }, Gauge::RatioMonotonicity::Undeclared);
  const auto cert = certify_modulus(g, 1.0);
  REQUIRE_FALSE(certified(cert));
  CHECK(refusal_reason(cert) == "ratio monotonicity undeclared");
}

TEST_CASE("certify_modulus: declared custom gauge certifies from the grid sup") {
  // w(r) = r^2/(1+r): ratio r/(1+r) is nondecreasing, sup at R.
  const Gauge g = Gauge::custom(
      "rational", [](double r) { return r * r / (1.0 + r); },
      Gauge::RatioMonotonicity::Nondecreasing);
  const auto cert = certify_modulus(g, 1.0);
  REQUIRE(certified(cert));
  CHECK(modulus_of(cert).kappa == Catch::Approx(0.5).epsilon(1e-11));
  CHECK(modulus_of(cert).kappa >= 0.5);  // safety margin keeps it an upper bound
  CHECK(modulus_of(cert).method == CertifiedModulus::Method::GridSupWithMonotoneRatio);
}

TEST_CASE("gauge_orbit") {
  const auto orbit = gauge_orbit(Gauge::geometric(0.5), 1.0, 3);
  REQUIRE(orbit.size() == 4);
  CHECK(orbit[0] == 1.0);
  CHECK(orbit[1] == 0.5);
  CHECK(orbit[2] == 0.25);
  CHECK(orbit[3] == 0.125);

  for (double v : gauge_orbit(Gauge::linear_defect(0.4), 0.0, 5)) CHECK(v == 0.0);

  const auto defect = gauge_orbit(Gauge::linear_defect(0.3), 2.0, 2);
  CHECK(defect[1] == Catch::Approx(1.4).epsilon(1e-15));
  CHECK(defect[2] == Catch::Approx(0.98).epsilon(1e-15));
}

TEST_CASE("gauge_orbit decays monotonically to zero") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Gauge g = (trial % 2 == 0) ? Gauge::geometric(rng.uniform(0.01, 0.99))
                                     : Gauge::linear_defect(rng.uniform(0.05, 1.0));
    const double r0 = rng.uniform(0.0, 10.0);
    const auto orbit = gauge_orbit(g, r0, 2000);
    for (std::size_t j = 1; j < orbit.size(); ++j) CHECK(orbit[j] <= orbit[j - 1]);
    CHECK(orbit.back() <= 1e-6 * (r0 + 1.0));
  }
}

TEST_CASE("phi_geo") {
  CHECK(phi_geo(0, 0.5, 1.0) == 2.0);
  CHECK(phi_geo(3, 0.5, 1.0) == 0.25);
  CHECK(phi_geo(7, 0.9, 0.0) == 0.0);
  CHECK_THROWS_AS(phi_geo(1, 1.0, 1.0), std::domain_error);
}

TEST_CASE("phi_gauge matches closed-form tails") {
  const Gauge geo = Gauge::geometric(0.5);
  const auto geo_cert = modulus_of(certify_modulus(geo, 2.0));
  CHECK(phi_gauge(geo, 2, 1.0, geo_cert) == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(phi_gauge(geo, 0, 0.0, geo_cert) == 0.0);

  // Linear defect with rate c: the tail series sums to delta0/c exactly.
  const Gauge defect = Gauge::linear_defect(0.3);
  const auto defect_cert = modulus_of(certify_modulus(defect, 2.0));
  double oracle = 0.0, term = 1.0;
  for (int j = 0; j < 200; ++j) {
    oracle += term;
    term *= 0.7;
  }
  CHECK(phi_gauge(defect, 0, 1.0, defect_cert) == Catch::Approx(1.0 / 0.3).epsilon(1e-12));
  CHECK(phi_gauge(defect, 0, 1.0, defect_cert) == Catch::Approx(oracle).epsilon(1e-12));

  CHECK_THROWS_AS(phi_gauge(defect, 0, 3.0, defect_cert), std::domain_error);
}

TEST_CASE("phi_gauge never exceeds phi_geo") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    Gauge g = Gauge::geometric(0.5);
    switch (trial % 3) {
      case 0: g = Gauge::geometric(rng.uniform(0.01, 0.99)); break;
      case 1: g = Gauge::linear_defect(rng.uniform(0.05, 1.0)); break;
      case 2: {
        const double q = rng.uniform(0.1, 0.9);
        g = Gauge::custom(
            "rational", [q](double r) { return q * r * r / (1.0 + r); },
            Gauge::RatioMonotonicity::Nondecreasing);
        break;
      }
    }
    const double radius = rng.uniform(0.5, 4.0);
    const auto cert_result = certify_modulus(g, radius);
    REQUIRE(certified(cert_result));
    const CertifiedModulus cert = modulus_of(cert_result);
    const double delta0 = rng.uniform(0.0, radius);
    const std::size_t n = static_cast<std::size_t>(rng.below(50));
    const double slack = 1e-12 * phi_geo(0, cert.kappa, delta0);
    CHECK(phi_gauge(g, n, delta0, cert) <= phi_geo(n, cert.kappa, delta0) + slack);
  }
}

TEST_CASE("n_geo") {
  CHECK(n_geo(1e-6, 0.5, 1.0) == 21);
  CHECK(n_geo(1.0, 0.5, 0.0) == 0);
  CHECK(n_geo(10.0, 0.5, 1.0) == 0);
  CHECK_THROWS_AS(n_geo(1e-3, 1.0, 1.0), std::domain_error);

  // Oracle: linear scan for the smallest index.
  auto scan = [](double eps, double kappa, double delta0) {
    std::size_t n = 0;
    while (phi_geo(n, kappa, delta0) > eps) ++n;
    return n;
  };
  CHECK(scan(1e-6, 0.5, 1.0) == 21);

  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double kappa = rng.uniform(0.01, 0.95);
    const double delta0 = rng.uniform(0.0, 5.0);
    const double eps = std::pow(10.0, -rng.uniform(0.0, 8.0));
    const std::size_t got = n_geo(eps, kappa, delta0);
    CHECK(got == scan(eps, kappa, delta0));
  }
}

TEST_CASE("stopping soundness: phi_geo at n_geo meets the target") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const double kappa = rng.uniform(0.0, 0.99);
    const double delta0 = rng.uniform(0.0, 10.0);
    const double eps = std::pow(10.0, -rng.uniform(0.0, 9.0));
    CHECK(phi_geo(n_geo(eps, kappa, delta0), kappa, delta0) <= eps);
  }
}

TEST_CASE("n_gauge") {
  const Gauge geo = Gauge::geometric(0.5);
  const auto geo_cert = modulus_of(certify_modulus(geo, 2.0));
  CHECK(n_gauge(geo, 0.3, 1.0, geo_cert) == 3);
  CHECK(n_gauge(geo, 0.3, 0.0, geo_cert) == 0);

  const Gauge defect = Gauge::linear_defect(0.3);
  const auto defect_cert = modulus_of(certify_modulus(defect, 2.0));
  CHECK(n_gauge(defect, 4.0, 1.0, defect_cert) == 0);

  // Direct scan oracle against the same bound function.
  auto scan = [&](const Gauge& g, double eps, double delta0, const CertifiedModulus& cert) {
    std::size_t n = 0;
    while (phi_gauge(g, n, delta0, cert) > eps) ++n;
    return n;
  };
  SplitMix64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const double eps = std::pow(10.0, -rng.uniform(0.0, 6.0));
    const double delta0 = rng.uniform(0.0, 2.0);
    CHECK(n_gauge(geo, eps, delta0, geo_cert) == scan(geo, eps, delta0, geo_cert));
  }

  // Never later than the geometric index.
  for (int trial = 0; trial < 50; ++trial) {
    const double eps = std::pow(10.0, -rng.uniform(0.0, 6.0));
    const double delta0 = rng.uniform(0.0, 2.0);
    CHECK(n_gauge(geo, eps, delta0, geo_cert) <= n_geo(eps, geo_cert.kappa, delta0));
  }
}
