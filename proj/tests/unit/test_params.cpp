#include <doctest.h>

#include <cmath>
#include <random>

#include "p4d/params.hpp"

using namespace p4d;

namespace {
double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
}  // namespace

TEST_CASE("open-circuit potentials match high-precision oracle") {
  CHECK(rel(ocp(OcpCurve::AnodeGraphite, 0.8), 0.17519318402833509712) < 1e-13);
  CHECK(rel(ocp(OcpCurve::CathodeLco, 30700.0 / 51200.0), 4.0274559566638558854) < 1e-13);
  CHECK(rel(ocp_derivative(OcpCurve::AnodeGraphite, 0.5), -0.46073205157632799995) < 1e-12);
  CHECK(rel(ocp_derivative(OcpCurve::CathodeLco, 30700.0 / 51200.0), -1.1308747462933830092) <
        1e-12);
  CHECK(rel(ocp_derivative(OcpCurve::CathodeLco, 0.59961), -1.1308777549187856939) < 1e-12);
  const double ocv = ocp(OcpCurve::CathodeLco, 0.599609375) - ocp(OcpCurve::AnodeGraphite, 0.8);
  CHECK(rel(ocv, 3.8522627726355207883) < 1e-13);
}

TEST_CASE("anode exponential term at theta = 0.1") {
  // the lone exponential contributes 1.5 exp(-12); its slope is -180 exp(-12)
  const double term = 1.5 * std::exp(-12.0);
  CHECK(rel(term, 9.216318529992314638e-6) < 1e-14);
  const double h = 1e-7;
  const double fd = (ocp(OcpCurve::AnodeGraphite, 0.1 + h) - ocp(OcpCurve::AnodeGraphite, 0.1 - h)) / (2 * h);
  CHECK(rel(ocp_derivative(OcpCurve::AnodeGraphite, 0.1), fd) < 1e-6);
}

TEST_CASE("ocp outside (0,1) throws, clamped variant does not") {
  CHECK_THROWS_AS(ocp(OcpCurve::AnodeGraphite, 0.0), DomainError);
  CHECK_THROWS_AS(ocp(OcpCurve::CathodeLco, 1.0), DomainError);
  CHECK_THROWS_AS(ocp_derivative(OcpCurve::CathodeLco, -0.1), DomainError);
  CHECK(std::isfinite(ocp_clamped(OcpCurve::AnodeGraphite, -0.5, 1e-6)));
  CHECK(ocp_clamped(OcpCurve::CathodeLco, 1.5, 1e-6) == ocp(OcpCurve::CathodeLco, 1.0 - 1e-6));
}

TEST_CASE("electrolyte transport") {
  const auto d = electrolyte_diffusivity(1000.0, 298.15);
  CHECK(rel(d.value, 2.7877244479038256958e-10) < 1e-13);
  CHECK(rel(d.slope, -0.65e-3 * d.value) < 1e-13);
  CHECK(rel(electrolyte_diffusivity(0.0, 298.15).value, 5.34e-10) < 1e-15);

  const auto k = electrolyte_conductivity(1000.0, 298.15);
  CHECK(rel(k.value, 0.0911 + 1.9101 - 1.052 + 0.1554) < 1e-13);
  CHECK(rel(electrolyte_conductivity(0.0, 298.15).value, 0.0911) < 1e-15);
  const double h = 1e-3;
  const double fd = (electrolyte_conductivity(1000 + h, 298.15).value -
                     electrolyte_conductivity(1000 - h, 298.15).value) / (2 * h);
  CHECK(rel(k.slope, fd) < 1e-8);
}

TEST_CASE("Bruggeman effective transport") {
  CHECK(effective_transport(2.5, 1.0, 1.5) == 2.5);
  CHECK(rel(effective_transport(1.0, 0.3, 1.5), 0.16431676725154983404) < 1e-14);
  CHECK(effective_transport(10.0, 0.0, 1.5, 1e-22) == 1e-22);
  double prev = 0.0;
  for (double f = 0.05; f <= 1.0; f += 0.05) {
    const double v = effective_transport(3.0, f, 1.5);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("exchange current and Butler-Volmer") {
  const auto ex = exchange_current(6e-7, 1000.0, 2.56e4, 5.12e4, 0.5, 0.5);
  CHECK(rel(ex.i0, 0.4857258486018630654) < 1e-13);
  CHECK(exchange_current(6e-7, 1000.0, 0.0, 5.12e4, 0.5, 0.5).i0 == 0.0);
  CHECK(exchange_current(6e-7, 1000.0, 5.12e4, 5.12e4, 0.5, 0.5).i0 == 0.0);

  const Constants c;
  CHECK(rel(c.f_over_rt(), 38.92175589582178221) < 1e-14);
  CHECK(butler_volmer(0.7, 0.0, c, 0.5, 0.5).i_n == 0.0);
  const auto bv = butler_volmer(ex.i0, 0.05, c, 0.5, 0.5);
  CHECK(rel(bv.i_n, 1.1016531445800431066) < 1e-12);
  CHECK(butler_volmer(ex.i0, -0.05, c, 0.5, 0.5).i_n == doctest::Approx(-bv.i_n).epsilon(1e-15));
  // exponent cap: linear continuation keeps values finite
  const auto big = butler_volmer(1.0, 100.0, c, 0.5, 0.5);
  CHECK(std::isfinite(big.i_n));
  CHECK(big.d_eta > 0.0);
}

TEST_CASE("analytic partials match central differences on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.02, 0.98), uce(200.0, 2000.0), ueta(-0.2, 0.2);
  const Constants c;
  for (int trial = 0; trial < 100; ++trial) {
    const double cmax = 5.12e4, cs = u(rng) * cmax, ce = uce(rng), eta = ueta(rng);
    const auto ex = exchange_current(6e-7, ce, cs, cmax, 0.5, 0.5);
    const double hc = 1e-6 * ce, hs = 1e-6 * cs;
    const double fce = (exchange_current(6e-7, ce + hc, cs, cmax, 0.5, 0.5).i0 -
                        exchange_current(6e-7, ce - hc, cs, cmax, 0.5, 0.5).i0) / (2 * hc);
    const double fcs = (exchange_current(6e-7, ce, cs + hs, cmax, 0.5, 0.5).i0 -
                        exchange_current(6e-7, ce, cs - hs, cmax, 0.5, 0.5).i0) / (2 * hs);
    CHECK(rel(ex.d_ce, fce) < 1e-6);
    CHECK(std::abs(ex.d_cs - fcs) <= 1e-6 * std::abs(ex.i0 / cs) + 1e-6 * std::abs(fcs));
    const double he = 1e-6;
    const double feta = (butler_volmer(ex.i0, eta + he, c, 0.5, 0.5).i_n -
                         butler_volmer(ex.i0, eta - he, c, 0.5, 0.5).i_n) / (2 * he);
    CHECK(rel(butler_volmer(ex.i0, eta, c, 0.5, 0.5).d_eta, feta) < 1e-6);
    const double th = u(rng);
    for (auto curve : {OcpCurve::AnodeGraphite, OcpCurve::CathodeLco}) {
      const double h = 1e-6 * std::min(th, 1 - th);
      const double fd = (ocp(curve, th + h) - ocp(curve, th - h)) / (2 * h);
      CHECK(std::abs(ocp_derivative(curve, th) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("cell capacity for the Case I cube") {
  const CellModel m = default_cell_model();
  const double v = 100e-6 * 225e-6 * 225e-6;
  const auto cap = cell_capacity_and_current(m, v, v);
  CHECK(rel(cap.Q_n, 2.0352374296875e-6) < 1e-12);
  CHECK(rel(cap.Q_p, 3.47347188e-6) < 1e-12);
  CHECK(cap.Q == cap.Q_n);
  CHECK(rel(cap.I_app, cap.Q) < 1e-15);
  CellModel z = m;
  z.c_rate = 0.0;
  CHECK(cell_capacity_and_current(z, v, v).I_app == 0.0);
}

TEST_CASE("model validation") {
  CellModel m = default_cell_model();
  CHECK_NOTHROW(m.validate());
  m.anode.alpha_a = 0.6;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
