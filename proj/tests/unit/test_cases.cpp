#include <doctest.h>

#include <cmath>
#include <vector>

#include "p4d/cases.hpp"
#include "p4d/mesh.hpp"

using namespace p4d;

namespace {

std::pair<double, double> stats(const StructuredMesh& m, const std::vector<double>& v, Subdomain s) {
  double vol = 0, mean = 0, var = 0;
  for (std::size_t c = 0; c < m.num_cells(); ++c)
    if (m.label(c) == s) vol += m.cell_volume(c), mean += m.cell_volume(c) * v[c];
  mean /= vol;
  for (std::size_t c = 0; c < m.num_cells(); ++c)
    if (m.label(c) == s) var += m.cell_volume(c) * (v[c] - mean) * (v[c] - mean);
  return {mean, var / vol};
}

}  // namespace

TEST_CASE("case ids parse") {
  CHECK(parse_case_id("III") == CaseId::III);
  CHECK_THROWS(parse_case_id("V"));
}

TEST_CASE("gaussian current is normalized and peaked") {
  const ProblemSetup s = make_case(CaseOptions{});
  const auto& gp = s.mesh.patch(s.gamma_p);
  double sum = 0.0, lo = 1e300, hi = -1e300;
  for (std::size_t f = 0; f < gp.facets.size(); ++f) {
    sum += s.i_app[f] * gp.facets[f].area;
    lo = std::min(lo, std::abs(s.i_app[f]));
    hi = std::max(hi, std::abs(s.i_app[f]));
  }
  CHECK(sum == doctest::Approx(case_current(CaseOptions{})).epsilon(1e-12));
  CHECK(hi / lo > 1e3);
  const auto u = gaussian_applied_current(s.mesh, gp, 2.0, 0.1, true);
  for (double d : u) CHECK(d == doctest::Approx(2.0 / gp.area));
}

TEST_CASE("case I counting at 24^3") {
  CaseOptions o;
  o.resolution = {24, 24, 24};
  const ProblemSetup s = make_case(o);
  CHECK(s.mesh.num_cells() == 13824);
  CHECK(s.layout.total() == 13824 * 10 + 3 * 15625);
}

TEST_CASE("filter preserves constants and reduces variance") {
  const StructuredMesh m = build_tensor_mesh({uniform_axis(0, 1, 12), uniform_axis(0, 1, 12), uniform_axis(0, 1, 12)});
  const std::vector<double> c(m.num_nodes(), 3.5);
  for (double v : helmholtz_filter(m, c, 0.2)) CHECK(v == doctest::Approx(3.5).epsilon(1e-8));
  std::vector<double> raw;
  const auto g = filtered_gaussian_field(m, 1.0 / 8.0, 7, &raw);
  auto var = [](const std::vector<double>& x) {
    double mu = 0, s = 0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(x.size());
    for (double v : x) s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size());
  };
  CHECK(var(g) < var(raw));
}

TEST_CASE("case II moments are exact and reruns are identical") {
  CaseOptions o;
  o.id = CaseId::II;
  o.resolution = {16, 16, 16};
  const ProblemSetup a = make_case(o), b = make_case(o);
  CHECK(a.eps_s == b.eps_s);
  CHECK(a.eps_b == b.eps_b);
  const auto [mc, vc] = stats(a.mesh, a.eps_s, Subdomain::Cathode);
  CHECK(mc == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(vc == doctest::Approx(0.004).epsilon(1e-10));
  const auto [ma, va] = stats(a.mesh, a.eps_s, Subdomain::Anode);
  CHECK(ma == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(va == doctest::Approx(0.004).epsilon(1e-10));
  for (std::size_t c = 0; c < a.mesh.num_cells(); ++c) {
    if (!is_electrode(a.mesh.label(c))) continue;
    const double eps = 1.0 - a.eps_s[c] - a.eps_b[c];
    CHECK((eps > 0.05 && eps < 0.95));
  }
  o.seed = 2;
  CHECK(make_case(o).eps_s != a.eps_s);
}

TEST_CASE("case III stack and tabs") {
  CaseOptions o;
  o.id = CaseId::III;
  o.resolution = {14, 4, 10};
  const ProblemSetup s = make_case(o);
  CHECK(s.mesh.length(0) == doctest::Approx(140e-6));
  CHECK(s.mesh.patch(s.gamma_p).area == doctest::Approx(5e-3 * 10e-3));
  CHECK(s.applied_current() == doctest::Approx(case_current(o)).epsilon(1e-12));
  o.resolution = {14, 3, 10};
  CHECK_THROWS(make_case(o));
}

TEST_CASE("case IV gyroid labels") {
  CaseOptions o;
  o.id = CaseId::IV;
  o.resolution = {32, 32, 16};
  const ProblemSetup s = make_case(o);
  CHECK(s.mesh.volume_of(Subdomain::Anode) > 0.0);
  CHECK(s.mesh.volume_of(Subdomain::Cathode) > 0.0);
  CHECK(s.applied_current() < 0.0);
  CHECK(!s.mesh.patch(s.gamma_n).facets.empty());
}
