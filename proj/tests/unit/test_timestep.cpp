#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "p4d/cases.hpp"
#include "p4d/timestep.hpp"

using namespace p4d;

namespace {

NewtonCallbacks scalar_callbacks(std::vector<double>& jac) {
  NewtonCallbacks cb;
  cb.assemble = [&jac](const std::vector<double>& u, std::vector<double>& R, bool want) {
    R.assign(1, u[0] * u[0] - 4.0);
    if (want) jac.assign(1, 2.0 * u[0]);
  };
  cb.solve = [&jac](const std::vector<double>& rhs, std::vector<double>& x) {
    x.assign(1, rhs[0] / jac[0]);
    GmresResult g;
    g.converged = true;
    g.iterations = 1;
    return g;
  };
  cb.norm = [](const std::vector<double>& R) { return std::abs(R[0]); };
  return cb;
}

}  // namespace

TEST_CASE("newton solves an affine system in one iteration") {
  NewtonCallbacks cb;
  cb.assemble = [](const std::vector<double>& u, std::vector<double>& R, bool) {
    R = {2.0 * u[0] + u[1] - 3.0, u[0] + 3.0 * u[1] - 5.0};
  };
  cb.solve = [](const std::vector<double>& r, std::vector<double>& x) {
    const double det = 5.0;
    x = {(3.0 * r[0] - r[1]) / det, (-r[0] + 2.0 * r[1]) / det};
    GmresResult g;
    g.converged = true;
    g.iterations = 2;
    return g;
  };
  cb.norm = [](const std::vector<double>& R) { return std::hypot(R[0], R[1]); };
  std::vector<double> u{0.0, 0.0};
  const auto rep = damped_newton(u, cb, NewtonConfig{});
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(u[0] == doctest::Approx(0.8));
  CHECK(u[1] == doctest::Approx(1.4));
  CHECK(rep.gmres_total() == 2);
}

TEST_CASE("newton converges quadratically on u^2 = 4") {
  std::vector<double> jac;
  auto cb = scalar_callbacks(jac);
  std::vector<double> u{3.0};
  NewtonConfig cfg;
  cfg.atol = 1e-14;
  cfg.rtol = 1e-14;
  const auto rep = damped_newton(u, cb, cfg);
  REQUIRE(rep.converged);
  CHECK(u[0] == doctest::Approx(2.0).epsilon(1e-14));
  const auto& r = rep.residual_norms;
  REQUIRE(r.size() >= 4);
  // e_{k+1} ~ e_k^2 / 4 for this problem
  for (std::size_t k = 1; k + 1 < r.size() && r[k + 1] > 1e-12; ++k)
    CHECK(r[k + 1] <= 1.0 * r[k] * r[k]);
  CHECK(rep.gmres_total() == static_cast<int>(rep.gmres_iters.size()));
}

TEST_CASE("newton reports failure when the iteration budget runs out") {
  std::vector<double> jac;
  auto cb = scalar_callbacks(jac);
  std::vector<double> u{300.0};
  NewtonConfig cfg;
  cfg.max_iters = 2;
  const auto rep = damped_newton(u, cb, cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.failure == FailureKind::Newton);
}

TEST_CASE("newton config validation") {
  NewtonConfig cfg;
  cfg.rtol = -1.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("equilibrium with zero current is a fixed point") {
  CaseOptions opt;
  opt.resolution = {4, 4, 4};
  opt.n_c = 5;
  opt.c_rate = 0.0;
  const auto setup = make_case(opt);
  const auto u0 = equilibrium_state(setup);
  const auto res = run_transient(setup, u0, 3, SolverConfig{});
  REQUIRE(res.ok);
  for (const auto& s : res.steps) {
    CHECK(s.newton_iters == 0);
    CHECK(std::abs(s.voltage - res.initial.voltage) <= 1e-12);
  }
}

TEST_CASE("transient gmres totals add up over newton iterations") {
  CaseOptions opt;
  opt.resolution = {4, 4, 4};
  opt.n_c = 5;
  const auto setup = make_case(opt);
  const auto res = run_transient(setup, equilibrium_state(setup), 2, SolverConfig{});
  REQUIRE(res.ok);
  REQUIRE(res.steps.size() == 2);
  for (const auto& s : res.steps) {
    CHECK(s.newton_iters >= 1);
    CHECK(static_cast<int>(s.gmres_iters.size()) == s.newton_iters);
    CHECK(s.gmres_total() == std::accumulate(s.gmres_iters.begin(), s.gmres_iters.end(), 0));
    CHECK(s.voltage < res.initial.voltage);
  }
}
