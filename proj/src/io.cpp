#include "p4d/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace p4d {

namespace fs = std::filesystem;

const char* const kTimeseriesHeader =
    "step,time_s,voltage_V,I_app_A,newton_iters,gmres_total,residual_final,li_total_mol";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  return f;
}

void finish(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  finish(f, path);
}

void write_timeseries(const fs::path& path, const std::vector<StepReport>& steps) {
  auto f = open_out(path);
  f << kTimeseriesHeader << '\n';
  for (const auto& r : steps) {
    f << r.step << ',' << format_double(r.time) << ',' << format_double(r.voltage) << ','
      << format_double(r.i_app) << ',' << r.newton_iters << ',' << r.gmres_total() << ','
      << format_double(r.residual_final) << ',' << format_double(r.inventory.total_mol) << '\n';
  }
  finish(f, path);
}

std::string stats_line(const StepReport& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["time_s"] = r.time;
  j["newton_iters"] = r.newton_iters;
  j["gmres_iters"] = r.gmres_iters;
  j["gmres_total"] = r.gmres_total();
  j["residual_norms"] = r.residual_norms;
  j["gmres_residual_histories"] = r.gmres_histories;
  j["voltage_V"] = r.voltage;
  j["I_app_A"] = r.i_app;
  j["cathode_current_A"] = r.cathode_current;
  j["anode_current_A"] = r.anode_current;
  j["li_electrolyte_mol"] = r.inventory.electrolyte_mol;
  j["li_solid_mol"] = r.inventory.solid_mol;
  j["li_total_mol"] = r.inventory.total_mol;
  j["mean_stoichiometry"] = r.stoichiometry;
  j["surface_stoichiometry_range"] = {r.min_surface_theta, r.max_surface_theta};
  j["wall_time_s"] = r.wall_time;
  return j.dump();
}

void write_stats(const fs::path& path, const std::vector<StepReport>& steps) {
  auto f = open_out(path);
  for (const auto& r : steps) f << stats_line(r) << '\n';
  finish(f, path);
}

void write_vtk(const fs::path& path, const StructuredMesh& mesh, const State* u, std::size_t n_c) {
  static constexpr int kLine[2] = {0, 1};
  static constexpr int kQuad[4] = {0, 1, 3, 2};
  static constexpr int kHex[8] = {0, 1, 3, 2, 4, 5, 7, 6};
  const int dim = mesh.dim();
  const int nn = mesh.nodes_per_cell();
  const int* order = dim == 1 ? kLine : dim == 2 ? kQuad : kHex;
  const int type = dim == 1 ? 3 : dim == 2 ? 9 : 12;

  auto f = open_out(path);
  f << "# vtk DataFile Version 3.0\np4d\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << mesh.num_nodes() << " double\n";
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    const auto x = mesh.node_coords(n);
    f << format_double(x[0]) << ' ' << format_double(dim > 1 ? x[1] : 0.0) << ' '
      << format_double(dim > 2 ? x[2] : 0.0) << '\n';
  }
  const std::size_t nc = mesh.num_cells();
  f << "CELLS " << nc << ' ' << nc * static_cast<std::size_t>(nn + 1) << '\n';
  for (std::size_t c = 0; c < nc; ++c) {
    const auto nodes = mesh.cell_nodes(c);
    f << nn;
    for (int a = 0; a < nn; ++a) f << ' ' << nodes[static_cast<std::size_t>(order[a])];
    f << '\n';
  }
  f << "CELL_TYPES " << nc << '\n';
  for (std::size_t c = 0; c < nc; ++c) f << type << '\n';

  f << "CELL_DATA " << nc << "\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < nc; ++c) f << static_cast<int>(mesh.label(c)) << '\n';
  if (u) {
    const auto cs = u->field(Field::Cs);
    f << "SCALARS c_s_surface double 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < nc; ++c) f << format_double(cs[c * n_c + n_c - 1]) << '\n';
    f << "POINT_DATA " << mesh.num_nodes() << '\n';
    for (Field fld : {Field::PhiS, Field::PhiE, Field::Ce}) {
      f << "SCALARS " << to_string(fld) << " double 1\nLOOKUP_TABLE default\n";
      for (double v : u->field(fld)) f << format_double(v) << '\n';
    }
  }
  finish(f, path);
}

void write_block_patterns(const fs::path& dir, const BlockMatrix& J) {
  ensure_directory(dir);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const CsrMatrix& B = J.blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (B.nnz() == 0) continue;
      const fs::path p = dir / (std::string("A_") + to_string(static_cast<Field>(i)) + "_" +
                                to_string(static_cast<Field>(j)) + ".txt");
      auto f = open_out(p);
      f << B.rows << ' ' << B.cols << ' ' << B.nnz() << '\n';
      for (std::size_t r = 0; r < B.rows; ++r)
        for (std::size_t k = B.row_ptr[r]; k < B.row_ptr[r + 1]; ++k)
          f << r << ' ' << B.col[k] << ' ' << format_double(B.values[k]) << '\n';
      finish(f, p);
    }
}

}  // namespace p4d
