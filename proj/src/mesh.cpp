#include "p4d/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace p4d {

namespace {

constexpr const char* kAxisNames = "xyz";

// Relative tolerance used to decide that a coordinate lies on a mesh plane.
constexpr double kPlaneTol = 1e-9;

bool on_plane(const std::vector<double>& axis, double value, double length) {
  const auto it = std::lower_bound(axis.begin(), axis.end(), value - kPlaneTol * length);
  return it != axis.end() && std::abs(*it - value) <= kPlaneTol * length;
}

}  // namespace

const char* to_string(Subdomain s) {
  switch (s) {
    case Subdomain::Anode: return "anode";
    case Subdomain::Separator: return "separator";
    case Subdomain::Cathode: return "cathode";
    case Subdomain::CollectorNeg: return "collector_neg";
    case Subdomain::CollectorPos: return "collector_pos";
  }
  return "?";
}

bool is_electrode(Subdomain s) { return s == Subdomain::Anode || s == Subdomain::Cathode; }

Face parse_face(const std::string& id) {
  if (id.size() != 2 || (id[1] != '-' && id[1] != '+')) throw MeshError("bad face id '" + id + "'");
  const char* p = std::char_traits<char>::find(kAxisNames, 3, id[0]);
  if (p == nullptr) throw MeshError("bad face id '" + id + "'");
  return Face{static_cast<int>(p - kAxisNames), id[1] == '+'};
}

std::string to_string(Face f) {
  return std::string(1, kAxisNames[f.axis]) + (f.upper ? "+" : "-");
}

StructuredMesh build_tensor_mesh(std::vector<std::vector<double>> axis_coords) {
  if (axis_coords.empty() || axis_coords.size() > 3)
    throw MeshError("mesh dimension must be 1, 2 or 3");
  StructuredMesh m;
  m.dim_ = static_cast<int>(axis_coords.size());
  m.num_cells_ = 1;
  m.num_nodes_ = 1;
  for (int a = 0; a < m.dim_; ++a) {
    auto& c = axis_coords[a];
    if (c.size() < 2) throw MeshError(std::string("axis ") + kAxisNames[a] + " needs >= 2 coordinates");
    for (std::size_t i = 1; i < c.size(); ++i)
      if (!(c[i] > c[i - 1]))
        throw MeshError(std::string("axis ") + kAxisNames[a] + " coordinates not strictly increasing");
    m.num_cells_ *= c.size() - 1;
    m.num_nodes_ *= c.size();
    m.coords_[a] = std::move(c);
  }
  for (int a = m.dim_; a < 3; ++a) m.coords_[a] = {0.0, 1.0};
  m.labels_.assign(m.num_cells_, Subdomain::Separator);
  return m;
}

std::array<std::size_t, 3> StructuredMesh::cell_ijk(std::size_t cell) const {
  const std::size_t nx = cells_along(0), ny = cells_along(1);
  return {cell % nx, (cell / nx) % ny, cell / (nx * ny)};
}

std::array<std::size_t, 3> StructuredMesh::node_ijk(std::size_t node) const {
  const std::size_t nx = nodes_along(0), ny = nodes_along(1);
  return {node % nx, (node / nx) % ny, node / (nx * ny)};
}

std::size_t StructuredMesh::cell_index(std::size_t i, std::size_t j, std::size_t k) const {
  return i + cells_along(0) * (j + cells_along(1) * k);
}

std::size_t StructuredMesh::node_index(std::size_t i, std::size_t j, std::size_t k) const {
  return i + nodes_along(0) * (j + nodes_along(1) * k);
}

std::array<std::size_t, 8> StructuredMesh::cell_nodes(std::size_t cell) const {
  const auto [i, j, k] = cell_ijk(cell);
  std::array<std::size_t, 8> out{};
  const int nv = nodes_per_cell();
  for (int a = 0; a < nv; ++a)
    out[a] = node_index(i + (a & 1), j + ((a >> 1) & 1), k + ((a >> 2) & 1));
  return out;
}

std::array<double, 3> StructuredMesh::cell_widths(std::size_t cell) const {
  const auto ijk = cell_ijk(cell);
  std::array<double, 3> w{1.0, 1.0, 1.0};
  for (int a = 0; a < dim_; ++a) w[a] = coords_[a][ijk[a] + 1] - coords_[a][ijk[a]];
  return w;
}

std::array<double, 3> StructuredMesh::cell_centroid(std::size_t cell) const {
  const auto ijk = cell_ijk(cell);
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) c[a] = 0.5 * (coords_[a][ijk[a] + 1] + coords_[a][ijk[a]]);
  return c;
}

std::array<double, 3> StructuredMesh::node_coords(std::size_t node) const {
  const auto ijk = node_ijk(node);
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) c[a] = coords_[a][ijk[a]];
  return c;
}

double StructuredMesh::cell_volume(std::size_t cell) const {
  const auto w = cell_widths(cell);
  return w[0] * w[1] * w[2];
}

double StructuredMesh::total_volume() const {
  double v = 0.0;
  for (std::size_t c = 0; c < num_cells_; ++c) v += cell_volume(c);
  return v;
}

double StructuredMesh::volume_of(Subdomain s) const {
  double v = 0.0;
  for (std::size_t c = 0; c < num_cells_; ++c)
    if (labels_[c] == s) v += cell_volume(c);
  return v;
}

void StructuredMesh::set_labels(std::vector<Subdomain> labels) {
  if (labels.size() != num_cells_) throw MeshError("label array size does not match cell count");
  labels_ = std::move(labels);
}

const FacetPatch& StructuredMesh::patch(const std::string& name) const {
  const auto it = patches_.find(name);
  if (it == patches_.end()) throw MeshError("no boundary patch named '" + name + "'");
  return it->second;
}

std::vector<int> StructuredMesh::tangential_axes(Face face) const {
  std::vector<int> t;
  for (int a = 0; a < dim_; ++a)
    if (a != face.axis) t.push_back(a);
  return t;
}

std::vector<std::size_t> StructuredMesh::facet_nodes(Face face, std::size_t cell) const {
  const auto nodes = cell_nodes(cell);
  std::vector<std::size_t> out;
  const int nv = nodes_per_cell();
  const int side = face.upper ? 1 : 0;
  for (int a = 0; a < nv; ++a)
    if (((a >> face.axis) & 1) == side) out.push_back(nodes[a]);
  return out;
}

std::vector<std::size_t> StructuredMesh::boundary_cells(Face face) const {
  std::vector<std::size_t> out;
  const std::size_t layer = face.upper ? cells_along(face.axis) - 1 : 0;
  for (std::size_t c = 0; c < num_cells_; ++c)
    if (cell_ijk(c)[face.axis] == layer) out.push_back(c);
  return out;
}

std::vector<double> uniform_axis(double start, double length, std::size_t cells) {
  if (cells == 0) throw MeshError("uniform axis needs at least one cell");
  std::vector<double> c(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    c[i] = start + length * static_cast<double>(i) / static_cast<double>(cells);
  c.back() = start + length;
  return c;
}

std::vector<double> layered_axis(std::span<const double> thicknesses,
                                 std::span<const std::size_t> counts, double start) {
  if (thicknesses.size() != counts.size() || thicknesses.empty())
    throw MeshError("layered axis: thickness/count size mismatch");
  std::vector<double> c{start};
  double base = start;
  for (std::size_t l = 0; l < thicknesses.size(); ++l) {
    if (counts[l] == 0) throw MeshError("layered axis: every layer needs at least one cell");
    for (std::size_t i = 1; i <= counts[l]; ++i)
      c.push_back(base + thicknesses[l] * static_cast<double>(i) / static_cast<double>(counts[l]));
    base += thicknesses[l];
    c.back() = base;
  }
  return c;
}

std::vector<std::size_t> split_cells(std::span<const double> thicknesses, std::size_t total) {
  const std::size_t n = thicknesses.size();
  if (total < n) throw MeshError("not enough cells to give every layer one cell");
  const double sum = std::accumulate(thicknesses.begin(), thicknesses.end(), 0.0);
  std::vector<std::size_t> counts(n);
  std::vector<double> remainder(n);
  std::size_t used = 0;
  for (std::size_t l = 0; l < n; ++l) {
    const double exact = static_cast<double>(total) * thicknesses[l] / sum;
    counts[l] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact)));
    remainder[l] = exact - static_cast<double>(counts[l]);
    used += counts[l];
  }
  // Largest remainder; ties go to the earlier layer.
  while (used < total) {
    const auto it = std::max_element(remainder.begin(), remainder.end());
    const auto l = static_cast<std::size_t>(it - remainder.begin());
    ++counts[l];
    remainder[l] -= 1.0;
    ++used;
  }
  while (used > total) {
    std::size_t best = n;
    for (std::size_t l = 0; l < n; ++l)
      if (counts[l] > 1 && (best == n || remainder[l] < remainder[best])) best = l;
    if (best == n) throw MeshError("cannot split cells across layers");
    --counts[best];
    remainder[best] += 1.0;
    --used;
  }
  return counts;
}

void tag_layers(StructuredMesh& mesh, int axis, std::span<const double> breakpoints,
                std::span<const Subdomain> labels) {
  if (axis < 0 || axis >= mesh.dim()) throw MeshError("tag_layers: axis out of range");
  if (labels.size() != breakpoints.size() + 1)
    throw MeshError("tag_layers: need one more label than breakpoints");
  const auto& ax = mesh.coords(axis);
  const double len = mesh.length(axis);
  for (std::size_t b = 0; b < breakpoints.size(); ++b) {
    if (!on_plane(ax, breakpoints[b], len))
      throw MeshError("tag_layers: breakpoint " + std::to_string(breakpoints[b]) +
                      " does not coincide with a mesh plane");
    if (b > 0 && !(breakpoints[b] > breakpoints[b - 1]))
      throw MeshError("tag_layers: breakpoints must increase");
  }
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double x = mesh.cell_centroid(c)[axis];
    const auto layer = static_cast<std::size_t>(
        std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin());
    mesh.set_label(c, labels[layer]);
  }
}

double LevelSetSpec::s_n(const std::array<double, 3>& x) const {
  using std::numbers::pi;
  const double u = pi * x[0] / box[0], v = pi * x[1] / box[1], w = pi * x[2] / box[2];
  return std::sin(u) * std::cos(v) + std::sin(v) * std::cos(w) + std::sin(w) * std::cos(u) - 1.3;
}

double LevelSetSpec::s_p(const std::array<double, 3>& x) const {
  using std::numbers::pi;
  const double u = pi * x[0] / box[0], v = pi * x[1] / box[1], w = pi * x[2] / box[2];
  return std::sin(u) * std::cos(v + pi) + std::sin(v + pi) * std::cos(-w) +
         std::sin(-w) * std::cos(u) - 1.3;
}

void tag_gyroid(StructuredMesh& mesh, const LevelSetSpec& spec) {
  if (mesh.dim() != 3) throw MeshError("gyroid tagging needs a 3D mesh");
  const double half = 0.5 * spec.thickness;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    auto x = mesh.cell_centroid(c);
    for (int a = 0; a < 3; ++a) x[a] -= mesh.coords(a).front();
    const bool in_n = std::abs(spec.s_n(x)) <= half;
    const bool in_p = std::abs(spec.s_p(x)) <= half;
    if (in_n && in_p) throw MeshError("gyroid level sets overlap at cell " + std::to_string(c));
    mesh.set_label(c, in_n ? Subdomain::Anode : in_p ? Subdomain::Cathode : Subdomain::Separator);
  }
}

namespace {

double facet_area(const StructuredMesh& mesh, Face face, std::size_t cell) {
  const auto w = mesh.cell_widths(cell);
  double area = 1.0;
  for (int a = 0; a < mesh.dim(); ++a)
    if (a != face.axis) area *= w[a];
  return area;
}

void check_face(const StructuredMesh& mesh, Face face) {
  if (face.axis < 0 || face.axis >= mesh.dim())
    throw MeshError("face " + to_string(face) + " does not exist in a " +
                    std::to_string(mesh.dim()) + "D mesh");
}

}  // namespace

FacetPatch mark_boundary_patch(const StructuredMesh& mesh, Face face, std::span<const double> lo,
                               std::span<const double> hi) {
  check_face(mesh, face);
  const auto tang = mesh.tangential_axes(face);
  if (lo.size() != tang.size() || hi.size() != tang.size())
    throw MeshError("patch rectangle must have one extent per tangential axis");
  for (std::size_t t = 0; t < tang.size(); ++t) {
    const int a = tang[t];
    const auto& ax = mesh.coords(a);
    if (!(hi[t] > lo[t])) throw MeshError("patch rectangle is empty");
    if (lo[t] < ax.front() - kPlaneTol * mesh.length(a) || hi[t] > ax.back() + kPlaneTol * mesh.length(a))
      throw MeshError("patch rectangle leaves the face");
    if (!on_plane(ax, lo[t], mesh.length(a)) || !on_plane(ax, hi[t], mesh.length(a)))
      throw MeshError("patch rectangle edges must lie on mesh planes");
  }
  FacetPatch p{face, {}, 0.0};
  for (const std::size_t c : mesh.boundary_cells(face)) {
    const auto x = mesh.cell_centroid(c);
    bool inside = true;
    for (std::size_t t = 0; t < tang.size(); ++t)
      inside = inside && x[tang[t]] > lo[t] && x[tang[t]] < hi[t];
    if (!inside) continue;
    const double area = facet_area(mesh, face, c);
    p.facets.push_back({c, area});
    p.area += area;
  }
  if (p.facets.empty()) throw MeshError("boundary patch on " + to_string(face) + " is empty");
  return p;
}

FacetPatch mark_boundary_patch(const StructuredMesh& mesh, Face face, Subdomain only) {
  check_face(mesh, face);
  FacetPatch p{face, {}, 0.0};
  for (const std::size_t c : mesh.boundary_cells(face)) {
    if (mesh.label(c) != only) continue;
    const double area = facet_area(mesh, face, c);
    p.facets.push_back({c, area});
    p.area += area;
  }
  if (p.facets.empty())
    throw MeshError("no " + std::string(to_string(only)) + " facets on face " + to_string(face));
  return p;
}

FacetPatch mark_boundary_patch(const StructuredMesh& mesh, Face face) {
  check_face(mesh, face);
  FacetPatch p{face, {}, 0.0};
  for (const std::size_t c : mesh.boundary_cells(face)) {
    const double area = facet_area(mesh, face, c);
    p.facets.push_back({c, area});
    p.area += area;
  }
  return p;
}

}  // namespace p4d
