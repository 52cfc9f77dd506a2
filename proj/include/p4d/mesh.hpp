#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace p4d {

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Subdomain : unsigned char { Anode, Separator, Cathode, CollectorNeg, CollectorPos };

const char* to_string(Subdomain s);
bool is_electrode(Subdomain s);

/// Boundary face of the bounding box: `axis` in [0, dim), `upper` selects the max side.
struct Face {
  int axis = 0;
  bool upper = false;
};

/// Parses "x-", "x+", "y-", ... into a Face.
Face parse_face(const std::string& id);
std::string to_string(Face f);

struct Facet {
  std::size_t cell;
  double area;  // m^2 (m in 2D, 1 in 1D)
};

struct FacetPatch {
  Face face;
  std::vector<Facet> facets;
  double area = 0.0;
};

/// Axis-aligned tensor-product mesh in 1, 2 or 3 dimensions.
///
/// Nodes and cells are numbered lexicographically with the x index running
/// fastest: node(i, j, k) = i + (nx + 1) * (j + (ny + 1) * k). Local cell
/// vertices follow the same convention, local(a) = ax + 2 ay + 4 az.
class StructuredMesh {
public:
  StructuredMesh() = default;

  int dim() const { return dim_; }
  const std::vector<double>& coords(int axis) const { return coords_[axis]; }
  std::size_t cells_along(int axis) const { return axis < dim_ ? coords_[axis].size() - 1 : 1; }
  std::size_t nodes_along(int axis) const { return axis < dim_ ? coords_[axis].size() : 1; }
  std::size_t num_cells() const { return num_cells_; }
  std::size_t num_nodes() const { return num_nodes_; }
  int nodes_per_cell() const { return 1 << dim_; }
  double length(int axis) const { return coords_[axis].back() - coords_[axis].front(); }

  std::array<std::size_t, 3> cell_ijk(std::size_t cell) const;
  std::array<std::size_t, 3> node_ijk(std::size_t node) const;
  std::size_t cell_index(std::size_t i, std::size_t j, std::size_t k) const;
  std::size_t node_index(std::size_t i, std::size_t j, std::size_t k) const;

  /// Vertex node indices of `cell` in local tensor order; first nodes_per_cell() entries valid.
  std::array<std::size_t, 8> cell_nodes(std::size_t cell) const;
  std::array<double, 3> cell_widths(std::size_t cell) const;
  std::array<double, 3> cell_centroid(std::size_t cell) const;
  std::array<double, 3> node_coords(std::size_t node) const;
  double cell_volume(std::size_t cell) const;
  double total_volume() const;

  const std::vector<Subdomain>& labels() const { return labels_; }
  Subdomain label(std::size_t cell) const { return labels_[cell]; }
  void set_labels(std::vector<Subdomain> labels);
  void set_label(std::size_t cell, Subdomain s) { labels_[cell] = s; }

  const std::map<std::string, FacetPatch>& patches() const { return patches_; }
  const FacetPatch& patch(const std::string& name) const;
  bool has_patch(const std::string& name) const { return patches_.count(name) != 0; }
  void add_patch(const std::string& name, FacetPatch p) { patches_[name] = std::move(p); }

  /// Nodes of a boundary facet in local tensor order over the two tangential axes.
  std::vector<std::size_t> facet_nodes(Face face, std::size_t cell) const;
  /// Tangential axes of a face, ascending.
  std::vector<int> tangential_axes(Face face) const;
  /// Cells adjacent to `face`.
  std::vector<std::size_t> boundary_cells(Face face) const;

  double volume_of(Subdomain s) const;

private:
  friend StructuredMesh build_tensor_mesh(std::vector<std::vector<double>> axis_coords);

  int dim_ = 0;
  std::array<std::vector<double>, 3> coords_{};
  std::size_t num_cells_ = 0;
  std::size_t num_nodes_ = 0;
  std::vector<Subdomain> labels_;
  std::map<std::string, FacetPatch> patches_;
};

/// Builds a mesh from 1-3 strictly increasing coordinate arrays. All cells start as Separator.
StructuredMesh build_tensor_mesh(std::vector<std::vector<double>> axis_coords);

/// Uniform axis [start, start + length] with `cells` cells.
std::vector<double> uniform_axis(double start, double length, std::size_t cells);

/// Layered axis: uniform spacing inside each layer, layer boundaries on mesh planes.
std::vector<double> layered_axis(std::span<const double> thicknesses,
                                 std::span<const std::size_t> counts, double start = 0.0);

/// Splits `total` cells across layers proportionally to thickness (at least one each).
std::vector<std::size_t> split_cells(std::span<const double> thicknesses, std::size_t total);

/// Labels cells by the layer containing their centroid along `axis`.
/// `breakpoints` are the interior layer planes (size = labels.size() - 1); each
/// must coincide with a mesh plane.
void tag_layers(StructuredMesh& mesh, int axis, std::span<const double> breakpoints,
                std::span<const Subdomain> labels);

struct LevelSetSpec {
  double thickness = 1.104;
  std::array<double, 3> box{1e-3, 1e-3, 0.5e-3};

  double s_n(const std::array<double, 3>& x) const;
  double s_p(const std::array<double, 3>& x) const;
};

/// Anode where |s_n| <= t/2, Cathode where |s_p| <= t/2, Separator otherwise.
/// Throws MeshError if both hold at a centroid.
void tag_gyroid(StructuredMesh& mesh, const LevelSetSpec& spec);

/// Patch of facets on `face` whose centroids lie in the rectangle [lo, hi]
/// (given over the tangential axes). Rectangle edges must lie on mesh planes.
FacetPatch mark_boundary_patch(const StructuredMesh& mesh, Face face, std::span<const double> lo,
                               std::span<const double> hi);

/// Whole face restricted to facets of cells with the given label.
FacetPatch mark_boundary_patch(const StructuredMesh& mesh, Face face, Subdomain only);

/// Whole face.
FacetPatch mark_boundary_patch(const StructuredMesh& mesh, Face face);

}  // namespace p4d
