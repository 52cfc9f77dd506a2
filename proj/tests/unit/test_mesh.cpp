#include <doctest.h>

#include <cmath>
#include <vector>

#include "p4d/mesh.hpp"

using namespace p4d;

TEST_CASE("tensor mesh counting") {
  const auto m1 = build_tensor_mesh({{0.0, 0.5, 1.0}});
  CHECK(m1.num_cells() == 2);
  CHECK(m1.num_nodes() == 3);
  const auto m2 = build_tensor_mesh({uniform_axis(0, 1, 3), uniform_axis(0, 1, 3)});
  CHECK(m2.num_cells() == 9);
  CHECK(m2.num_nodes() == 16);
  const double L = 225e-6;
  const auto m3 = build_tensor_mesh({uniform_axis(0, L, 24), uniform_axis(0, L, 24), uniform_axis(0, L, 24)});
  CHECK(m3.num_cells() == 13824);
  CHECK(m3.num_nodes() == 15625);
  CHECK(std::abs(m3.total_volume() - L * L * L) <= 1e-12 * L * L * L);
}

TEST_CASE("cell and node numbering is x-fastest") {
  const auto m = build_tensor_mesh({uniform_axis(0, 1, 2), uniform_axis(0, 1, 3), uniform_axis(0, 1, 4)});
  CHECK(m.cell_index(1, 0, 0) == 1);
  CHECK(m.cell_index(0, 1, 0) == 2);
  CHECK(m.node_index(0, 0, 1) == 12);
  const auto nodes = m.cell_nodes(m.cell_index(1, 2, 3));
  CHECK(nodes[0] == m.node_index(1, 2, 3));
  CHECK(nodes[1] == m.node_index(2, 2, 3));
  CHECK(nodes[2] == m.node_index(1, 3, 3));
  CHECK(nodes[7] == m.node_index(2, 3, 4));
  const auto ijk = m.cell_ijk(m.cell_index(1, 2, 3));
  CHECK(ijk == std::array<std::size_t, 3>{1, 2, 3});
}

TEST_CASE("layer tagging for the Case I and Case III stacks") {
  const std::vector<double> t{100e-6, 25e-6, 100e-6};
  const auto counts = split_cells(t, 9);
  CHECK(counts == std::vector<std::size_t>{4, 1, 4});
  auto m = build_tensor_mesh({layered_axis(t, counts), uniform_axis(0, 1, 2)});
  const std::vector<double> bp{100e-6, 125e-6};
  const std::vector<Subdomain> lab{Subdomain::Anode, Subdomain::Separator, Subdomain::Cathode};
  tag_layers(m, 0, bp, lab);
  std::size_t n[5] = {};
  for (auto s : m.labels()) ++n[static_cast<int>(s)];
  CHECK(n[0] == 8);
  CHECK(n[1] == 2);
  CHECK(n[2] == 8);
  CHECK(n[0] + n[1] + n[2] == m.num_cells());

  const std::vector<double> t3{10e-6, 50e-6, 20e-6, 50e-6, 10e-6};
  const auto c3 = split_cells(t3, 14);
  CHECK(c3 == std::vector<std::size_t>{1, 5, 2, 5, 1});
  auto m3 = build_tensor_mesh({layered_axis(t3, c3)});
  const std::vector<double> bp3{10e-6, 60e-6, 80e-6, 130e-6};
  const std::vector<Subdomain> lab3{Subdomain::CollectorPos, Subdomain::Cathode, Subdomain::Separator,
                                    Subdomain::Anode, Subdomain::CollectorNeg};
  tag_layers(m3, 0, bp3, lab3);
  CHECK(m3.label(0) == Subdomain::CollectorPos);
  CHECK(m3.label(13) == Subdomain::CollectorNeg);
  CHECK(m3.label(6) == Subdomain::Separator);

  auto single = build_tensor_mesh({uniform_axis(0, 1, 5)});
  const std::vector<Subdomain> one{Subdomain::Cathode};
  tag_layers(single, 0, std::vector<double>{}, one);
  for (auto s : single.labels()) CHECK(s == Subdomain::Cathode);
}

TEST_CASE("misaligned breakpoints are rejected") {
  auto m = build_tensor_mesh({uniform_axis(0, 1, 4)});
  const std::vector<double> bp{0.3};
  const std::vector<Subdomain> lab{Subdomain::Anode, Subdomain::Cathode};
  CHECK_THROWS_AS(tag_layers(m, 0, bp, lab), MeshError);
}

TEST_CASE("gyroid level sets") {
  LevelSetSpec spec;
  const std::array<double, 3> x{0.5 * spec.box[0], 0.0, 0.0};
  CHECK(spec.s_n(x) == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(spec.s_p(x) == doctest::Approx(-2.3).epsilon(1e-12));

  auto m = build_tensor_mesh({uniform_axis(0, 1e-3, 32), uniform_axis(0, 1e-3, 32), uniform_axis(0, 0.5e-3, 16)});
  tag_gyroid(m, spec);
  std::size_t na = 0, nc = 0;
  for (auto s : m.labels()) {
    na += s == Subdomain::Anode;
    nc += s == Subdomain::Cathode;
  }
  CHECK(na > 0);
  CHECK(nc > 0);

  LevelSetSpec thin = spec;
  thin.thickness = 0.0;
  tag_gyroid(m, thin);
  for (auto s : m.labels()) CHECK(s == Subdomain::Separator);
}

TEST_CASE("boundary patches") {
  const double L = 225e-6;
  const auto m = build_tensor_mesh({uniform_axis(0, L, 6), uniform_axis(0, L, 6), uniform_axis(0, L, 6)});
  const auto whole = mark_boundary_patch(m, parse_face("x+"));
  CHECK(whole.facets.size() == 36);
  CHECK(std::abs(whole.area - L * L) <= 1e-12 * L * L);
  const std::vector<double> lo{0.0, 0.0}, hi{L, L};
  CHECK(mark_boundary_patch(m, parse_face("x+"), lo, hi).facets.size() == 36);
  const std::vector<double> lo2{0.0, 0.0}, hi2{L / 2, L / 3};
  const auto part = mark_boundary_patch(m, parse_face("x-"), lo2, hi2);
  CHECK(part.facets.size() == 6);
  CHECK(part.area == doctest::Approx(L * L / 6).epsilon(1e-12));
  const std::vector<double> bad{L / 7, L / 2};
  CHECK_THROWS_AS(mark_boundary_patch(m, parse_face("x-"), lo2, bad), MeshError);
  CHECK_THROWS_AS(parse_face("w+"), MeshError);
}

TEST_CASE("Case III tab on the collector face aligns with mesh planes") {
  const double Ly = 1e-2, Lz = 1e-1;
  const auto m = build_tensor_mesh({uniform_axis(0, 140e-6, 7), uniform_axis(0, Ly, 4), uniform_axis(0, Lz, 10)});
  const std::vector<double> lo{0.0, 0.0}, hi{5e-3, 10e-3};
  const auto tab = mark_boundary_patch(m, parse_face("x-"), lo, hi);
  CHECK(tab.area == doctest::Approx(5e-3 * 10e-3).epsilon(1e-12));
  CHECK(tab.facets.size() == 2);
}
