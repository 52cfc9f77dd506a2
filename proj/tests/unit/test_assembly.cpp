#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "p4d/assembly.hpp"
#include "p4d/cases.hpp"
#include "p4d/sparse.hpp"

using namespace p4d;

namespace {

ProblemSetup case_one(std::size_t n, int dim = 3, std::size_t n_c = 10) {
  CaseOptions o;
  o.id = CaseId::I;
  o.dim = dim;
  o.resolution = {n, n, n};
  o.n_c = n_c;
  return make_case(o);
}

State perturbed(const ProblemSetup& s, std::uint64_t seed, double amp) {
  State u = equilibrium_state(s);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (double& v : u.field(Field::PhiS)) v += amp * 0.01 * U(rng);
  for (double& v : u.field(Field::PhiE)) v += amp * 0.01 * U(rng);
  for (double& v : u.field(Field::Ce)) v *= 1.0 + amp * 0.1 * U(rng);
  for (double& v : u.field(Field::Cs)) v *= 1.0 + amp * 0.05 * U(rng);
  return u;
}

double fd_error(const ProblemSetup& s, const State& u, const State& u_old, std::uint64_t seed) {
  Assembler as(s);
  BlockMatrix J = as.allocate_jacobian();
  as.jacobian(u, J);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  State v(s.layout);
  const double scale[4] = {1e-2, 1e-2, 10.0, 100.0};
  for (int f = 0; f < 4; ++f)
    for (double& x : v.field(static_cast<Field>(f))) x = scale[f] * U(rng);
  std::vector<double> Jv(v.data.size());
  J.multiply(v.data, Jv);
  const double eps = 1e-7;
  State up = u, um = u;
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    up.data[i] += eps * v.data[i];
    um.data[i] -= eps * v.data[i];
  }
  BlockVector Rp(s.layout), Rm(s.layout);
  as.residual(up, u_old, Rp);
  as.residual(um, u_old, Rm);
  // compare field by field so small-magnitude rows are not drowned out
  double worst = 0.0;
  for (int f = 0; f < 4; ++f) {
    const auto off = s.layout.offset(static_cast<Field>(f));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.layout.size(static_cast<Field>(f)); ++i) {
      const double fd = (Rp.data[off + i] - Rm.data[off + i]) / (2.0 * eps);
      num += (fd - Jv[off + i]) * (fd - Jv[off + i]);
      den += Jv[off + i] * Jv[off + i];
    }
    if (den > 0.0) worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

}  // namespace

TEST_CASE("equilibrium state has vanishing residual without current") {
  ProblemSetup s = case_one(6);
  for (double& d : s.i_app) d = 0.0;
  const State u = equilibrium_state(s);
  const BlockVector R = assemble_residual(s, u, u);
  for (int f = 0; f < 4; ++f) {
    double m = 0.0;
    for (double v : R.field(static_cast<Field>(f))) m = std::max(m, std::abs(v));
    CHECK(m < 1e-9);
  }
  const double ocv = s.model.cathode.ocp == OcpCurve::CathodeLco ? cell_voltage(s, u) : 0.0;
  CHECK(ocv == doctest::Approx(u.field(Field::PhiS)[u.field(Field::PhiS).size() - 1]).epsilon(1e-14));
  CHECK(reaction_current(s, u, Subdomain::Cathode) == doctest::Approx(0.0));
}

TEST_CASE("applied current integrates to the signed C-rate current") {
  const ProblemSetup s = case_one(6);
  CaseOptions o;
  CHECK(s.applied_current() == doctest::Approx(case_current(o)).epsilon(1e-12));
  CHECK(s.applied_current() < 0.0);
}

TEST_CASE("analytic Jacobian matches central differences") {
  const ProblemSetup s = case_one(6);
  const State u0 = equilibrium_state(s);
  for (std::uint64_t k = 0; k < 3; ++k) {
    const State u = perturbed(s, 11 + k, 1.0);
    CHECK(fd_error(s, u, u0, 100 + k) <= 1e-5);
  }
}

TEST_CASE("particle block is tridiagonal and couples only through the surface") {
  const ProblemSetup s = case_one(3, 2, 3);
  REQUIRE(s.mesh.num_cells() == 9);
  const BlockMatrix J = assemble_jacobian(s, equilibrium_state(s));
  const CsrMatrix& css = J(Field::Cs, Field::Cs);
  CHECK(css.nnz() == 63);
  for (std::size_t i = 0; i < css.rows; ++i)
    for (std::size_t k = css.row_ptr[i]; k < css.row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(css.col[k]);
      CHECK(i / 3 == j / 3);
      CHECK((i > j ? i - j : j - i) <= 1);
    }
  for (Field f : {Field::PhiS, Field::PhiE, Field::Ce}) {
    const CsrMatrix& a = J(Field::Cs, f);
    for (std::size_t i = 0; i < a.rows; ++i)
      if (a.row_ptr[i + 1] > a.row_ptr[i]) CHECK(i % 3 == 2);
    const CsrMatrix& b = J(f, Field::Cs);
    for (const Index c : b.col) CHECK(c % 3 == 2);
  }
  // no phi_s - c_e coupling in separator-only rows
  const CsrMatrix& sc = J(Field::PhiS, Field::Ce);
  CHECK(sc.nnz() < J(Field::PhiS, Field::PhiS).nnz());
}

TEST_CASE("inventory of the initial state") {
  const ProblemSetup s = case_one(6);
  const State u = equilibrium_state(s);
  const Inventory inv = lithium_inventory(s, u);
  double expect = 0.0;
  for (std::size_t c = 0; c < s.mesh.num_cells(); ++c) expect += s.cells[c].eps * s.mesh.cell_volume(c);
  CHECK(inv.electrolyte_mol == doctest::Approx(expect * s.model.electrolyte.ce_0).epsilon(1e-12));
  const double solid = s.model.anode.eps_s * s.mesh.volume_of(Subdomain::Anode) * s.model.anode.cs_0 +
                       s.model.cathode.eps_s * s.mesh.volume_of(Subdomain::Cathode) * s.model.cathode.cs_0;
  CHECK(inv.solid_mol == doctest::Approx(solid).epsilon(1e-12));
  const auto th = mean_stoichiometry(s, u);
  CHECK(th[0] == doctest::Approx(s.model.anode.theta_0()));
  CHECK(th[1] == doctest::Approx(s.model.cathode.theta_0()));
}
