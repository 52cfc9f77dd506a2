#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "p4d/cases.hpp"
#include "p4d/io.hpp"
#include "p4d/mesh.hpp"

using namespace p4d;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("p4d_io_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CaseOptions pattern_like() {
  CaseOptions opt;
  opt.dim = 2;
  opt.resolution = {3, 3, 1};
  opt.n_c = 3;
  return opt;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (const double v : {0.1, 1.0 / 3.0, -2.5e-300, 3.7212345678901234, 6.02214076e23}) {
    const auto s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("zero-step timeseries holds only the header") {
  const auto dir = scratch("ts");
  write_timeseries(dir / "timeseries.csv", {});
  CHECK(slurp(dir / "timeseries.csv") == std::string(kTimeseriesHeader) + "\n");
}

TEST_CASE("timeseries rows follow the header") {
  const auto dir = scratch("ts2");
  StepReport r;
  r.step = 1;
  r.time = 60.0;
  r.voltage = 3.7;
  r.gmres_iters = {3, 4};
  r.newton_iters = 2;
  write_timeseries(dir / "t.csv", {r});
  std::ifstream in(dir / "t.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == kTimeseriesHeader);
  CHECK(row.rfind("1,60,3.7", 0) == 0);
  CHECK(row.find(",2,7,") != std::string::npos);
  CHECK(stats_line(r).find("\"step\":1") != std::string::npos);
}

TEST_CASE("vtk cell counts for line and quad meshes") {
  const auto dir = scratch("vtk");
  const auto line = build_tensor_mesh({{0.0, 0.5, 1.0}});
  write_vtk(dir / "line.vtk", line);
  const auto ltext = slurp(dir / "line.vtk");
  CHECK(ltext.find("CELLS 2 ") != std::string::npos);
  CHECK(ltext.find("POINTS 3 double") != std::string::npos);

  const auto setup = make_case(pattern_like());
  REQUIRE(setup.mesh.num_cells() == 9);
  const auto u = equilibrium_state(setup);
  write_vtk(dir / "quad.vtk", setup.mesh, &u, setup.n_c);
  const auto text = slurp(dir / "quad.vtk");
  CHECK(text.find("CELLS 9 ") != std::string::npos);
  CHECK(text.find("POINTS 16 double") != std::string::npos);
  CHECK(text.find("SCALARS phi_s double") != std::string::npos);
  CHECK(text.find("SCALARS c_s_surface double") != std::string::npos);
}

TEST_CASE("writing below a regular file fails with IoError") {
  const auto dir = scratch("bad");
  write_text(dir / "file", "x");
  CHECK_THROWS_AS(write_text(dir / "file" / "y.txt", "x"), IoError);
}
