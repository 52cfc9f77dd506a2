#include "p4d/cases.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "p4d/amg.hpp"
#include "p4d/gmres.hpp"
#include "p4d/sparse.hpp"

namespace p4d {

namespace {

constexpr double kCubeSide = 225e-6;
constexpr std::array<double, 3> kCubeLayers{100e-6, 25e-6, 100e-6};
constexpr std::array<double, 5> kStackLayers{10e-6, 50e-6, 20e-6, 50e-6, 10e-6};

// Q1 mass and stiffness matrices, 2-point Gauss per axis.
void mass_and_stiffness(const StructuredMesh& mesh, CsrMatrix& M, CsrMatrix& K) {
  const int dim = mesh.dim();
  const int nn = mesh.nodes_per_cell();
  const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  std::vector<Triplet> tm, tk;
  tm.reserve(mesh.num_cells() * static_cast<std::size_t>(nn * nn));
  tk.reserve(tm.capacity());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto nodes = mesh.cell_nodes(c);
    const auto w = mesh.cell_widths(c);
    const double wq = mesh.cell_volume(c) / nn;
    double m[8][8] = {}, k[8][8] = {};
    for (int q = 0; q < nn; ++q) {
      double N[8];
      double G[8][3] = {};
      for (int a = 0; a < nn; ++a) {
        N[a] = 1.0;
        for (int d = 0; d < dim; ++d) G[a][d] = 1.0;
        for (int ax = 0; ax < dim; ++ax) {
          const double xi = g[(q >> ax) & 1];
          const bool hi = (a >> ax) & 1;
          N[a] *= hi ? xi : 1.0 - xi;
          for (int d = 0; d < dim; ++d) G[a][d] *= d == ax ? (hi ? 1.0 : -1.0) / w[ax] : (hi ? xi : 1.0 - xi);
        }
      }
      for (int a = 0; a < nn; ++a)
        for (int b = 0; b < nn; ++b) {
          m[a][b] += wq * N[a] * N[b];
          double gg = 0.0;
          for (int d = 0; d < dim; ++d) gg += G[a][d] * G[b][d];
          k[a][b] += wq * gg;
        }
    }
    for (int a = 0; a < nn; ++a)
      for (int b = 0; b < nn; ++b) {
        const auto ra = static_cast<Index>(nodes[static_cast<std::size_t>(a)]);
        const auto cb = static_cast<Index>(nodes[static_cast<std::size_t>(b)]);
        tm.push_back({ra, cb, m[a][b]});
        tk.push_back({ra, cb, k[a][b]});
      }
  }
  M = CsrMatrix::from_triplets(mesh.num_nodes(), mesh.num_nodes(), std::move(tm));
  K = CsrMatrix::from_triplets(mesh.num_nodes(), mesh.num_nodes(), std::move(tk));
}

double default_h_c(const StructuredMesh& mesh) {
  double big = 0.0;
  for (int a = 0; a < mesh.dim(); ++a) big = std::max(big, mesh.length(a));
  return big / 8.0;
}

// volume-weighted mean and variance over cells with the given label
std::pair<double, double> moments(const StructuredMesh& mesh, const std::vector<double>& v, Subdomain s) {
  double vol = 0.0, mean = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    if (mesh.label(c) == s) {
      vol += mesh.cell_volume(c);
      mean += mesh.cell_volume(c) * v[c];
    }
  mean /= vol;
  double var = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    if (mesh.label(c) == s) var += mesh.cell_volume(c) * (v[c] - mean) * (v[c] - mean);
  return {mean, var / vol};
}

void check_shared_nodes(const StructuredMesh& mesh) {
  std::vector<unsigned char> touch(mesh.num_nodes(), 0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const Subdomain s = mesh.label(c);
    if (s != Subdomain::Anode && s != Subdomain::Cathode) continue;
    const unsigned char bit = s == Subdomain::Anode ? 1 : 2;
    const auto nodes = mesh.cell_nodes(c);
    for (int a = 0; a < mesh.nodes_per_cell(); ++a) touch[nodes[static_cast<std::size_t>(a)]] |= bit;
  }
  for (std::size_t n = 0; n < touch.size(); ++n)
    if (touch[n] == 3)
      throw MeshError("gyroid electrodes touch at node " + std::to_string(n) +
                      "; refine the mesh so a separator layer remains");
}

}  // namespace

const char* to_string(CaseId c) {
  switch (c) {
    case CaseId::I: return "I";
    case CaseId::II: return "II";
    case CaseId::III: return "III";
    case CaseId::IV: return "IV";
  }
  return "?";
}

CaseId parse_case_id(const std::string& s) {
  for (auto c : {CaseId::I, CaseId::II, CaseId::III, CaseId::IV})
    if (s == to_string(c)) return c;
  throw std::invalid_argument("unknown case '" + s + "' (expected I, II, III or IV)");
}

double NormalSampler::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = 1.0 - static_cast<double>(engine_() >> 11) * scale;  // (0, 1]
  const double u2 = static_cast<double>(engine_() >> 11) * scale;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::vector<double> gaussian_applied_current(const StructuredMesh& mesh, const FacetPatch& patch,
                                             double I_app, double spread_fraction, bool uniform) {
  std::vector<double> dens(patch.facets.size(), 1.0);
  if (!uniform) {
    const auto tang = mesh.tangential_axes(patch.face);
    for (std::size_t f = 0; f < patch.facets.size(); ++f) {
      const auto x = mesh.cell_centroid(patch.facets[f].cell);
      double e = 0.0;
      for (const int a : tang) {
        const double L = mesh.length(a);
        const double x0 = mesh.coords(a).front() + 0.5 * L;
        const double s = spread_fraction * L;
        e += (x[a] - x0) * (x[a] - x0) / (2.0 * s * s);
      }
      dens[f] = std::exp(-e);
    }
  }
  double integral = 0.0;
  for (std::size_t f = 0; f < patch.facets.size(); ++f) integral += dens[f] * patch.facets[f].area;
  for (double& d : dens) d *= I_app / integral;
  return dens;
}

std::vector<double> helmholtz_filter(const StructuredMesh& mesh, const std::vector<double>& g, double h_c) {
  CsrMatrix M, K;
  mass_and_stiffness(mesh, M, K);
  CsrMatrix A = M;
  for (std::size_t k = 0; k < A.values.size(); ++k) A.values[k] += h_c * h_c * K.values[k];
  std::vector<double> rhs(g.size()), x = g;
  M.multiply(g, rhs);
  const auto amg = amg_setup(A);
  GmresOptions o;
  o.rtol = 1e-10;
  const auto res = gmres([&](auto in, auto out) { A.multiply(in, out); },
                         [&](auto in, auto out) { amg.vcycle(in, out); }, rhs, x, o);
  if (!res.converged) throw std::runtime_error("random-field filter solve did not converge");
  return x;
}

std::vector<double> filtered_gaussian_field(const StructuredMesh& mesh, double h_c, std::uint64_t seed,
                                            std::vector<double>* raw) {
  const int dim = mesh.dim();
  if (!(h_c > 0.0)) h_c = default_h_c(mesh);
  std::array<std::size_t, 3> nc{1, 1, 1};
  std::array<double, 3> hc{1.0, 1.0, 1.0};
  for (int a = 0; a < dim; ++a) {
    nc[static_cast<std::size_t>(a)] = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(mesh.length(a) / h_c)));
    hc[static_cast<std::size_t>(a)] = mesh.length(a) / static_cast<double>(nc[static_cast<std::size_t>(a)]);
  }
  const std::size_t sx = nc[0] + 1, sy = dim > 1 ? nc[1] + 1 : 1, sz = dim > 2 ? nc[2] + 1 : 1;
  NormalSampler rng(seed);
  std::vector<double> coarse(sx * sy * sz);
  for (double& v : coarse) v = rng.next();

  std::vector<double> g(mesh.num_nodes());
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    const auto x = mesh.node_coords(n);
    std::array<std::size_t, 3> i0{0, 0, 0};
    std::array<double, 3> t{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const double s = (x[ua] - mesh.coords(a).front()) / hc[ua];
      i0[ua] = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, std::floor(s))), nc[ua] - 1);
      t[ua] = std::clamp(s - static_cast<double>(i0[ua]), 0.0, 1.0);
    }
    double v = 0.0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
      double wgt = 1.0;
      std::array<std::size_t, 3> j{0, 0, 0};
      for (int a = 0; a < dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const bool hi = (corner >> a) & 1;
        j[ua] = i0[ua] + (hi ? 1 : 0);
        wgt *= hi ? t[ua] : 1.0 - t[ua];
      }
      v += wgt * coarse[j[0] + sx * (j[1] + sy * j[2])];
    }
    g[n] = v;
  }
  if (raw) *raw = g;
  return helmholtz_filter(mesh, g, h_c);
}

VolumeFractions random_volume_fractions(const StructuredMesh& mesh, const RandomFieldSpec& spec) {
  double hmax = 0.0;
  for (int a = 0; a < mesh.dim(); ++a)
    for (std::size_t i = 0; i + 1 < mesh.coords(a).size(); ++i)
      hmax = std::max(hmax, mesh.coords(a)[i + 1] - mesh.coords(a)[i]);
  // coarse meshes would violate the filter precondition with L/8
  const double h_c = spec.h_c > 0.0 ? spec.h_c : std::max(default_h_c(mesh), 2.0 * hmax);
  if (h_c < 2.0 * hmax * (1.0 - 1e-12))
    throw std::invalid_argument("random field: h_c must be at least twice the mesh spacing");

  // independent fields for eps_s and eps_b
  const std::uint64_t seeds[2] = {spec.seed, spec.seed ^ 0x9e3779b97f4a7c15ULL};
  std::array<std::vector<double>, 2> cellwise;
  for (int k = 0; k < 2; ++k) {
    const auto nodal = filtered_gaussian_field(mesh, h_c, seeds[k]);
    auto& cw = cellwise[static_cast<std::size_t>(k)];
    cw.assign(mesh.num_cells(), 0.0);
    const int nn = mesh.nodes_per_cell();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const auto nodes = mesh.cell_nodes(c);
      double s = 0.0;
      for (int a = 0; a < nn; ++a) s += nodal[nodes[static_cast<std::size_t>(a)]];
      cw[c] = s / nn;
    }
  }

  VolumeFractions out;
  out.eps_s.assign(mesh.num_cells(), 0.0);
  out.eps_b.assign(mesh.num_cells(), 0.0);
  out.eps.assign(mesh.num_cells(), 1.0);
  struct Target {
    Subdomain region;
    std::array<double, 2> s, b;
  };
  const Target targets[2] = {{Subdomain::Anode, spec.anode_eps_s, spec.anode_eps_b},
                             {Subdomain::Cathode, spec.cathode_eps_s, spec.cathode_eps_b}};
  for (const auto& t : targets) {
    bool any = false;
    for (auto l : mesh.labels()) any = any || l == t.region;
    if (!any) continue;
    const auto [ms, vs] = moments(mesh, cellwise[0], t.region);
    const auto [mb, vb] = moments(mesh, cellwise[1], t.region);
    if (!(vs > 0.0) || !(vb > 0.0)) throw std::runtime_error("random field: degenerate variance");
    const double fs = std::sqrt(t.s[1] / vs), fb = std::sqrt(t.b[1] / vb);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      if (mesh.label(c) != t.region) continue;
      out.eps_s[c] = t.s[0] + fs * (cellwise[0][c] - ms);
      out.eps_b[c] = t.b[0] + fb * (cellwise[1][c] - mb);
      out.eps[c] = 1.0 - out.eps_s[c] - out.eps_b[c];
      if (!(out.eps[c] > 0.05 && out.eps[c] < 0.95) || !(out.eps_s[c] > 0.0) || !(out.eps_b[c] >= 0.0))
        throw std::runtime_error("random field: porosity " + std::to_string(out.eps[c]) + " in cell " +
                                 std::to_string(c) + " outside (0.05, 0.95)");
    }
  }
  return out;
}

double case_current(const CaseOptions& opt) {
  CellModel m = default_cell_model();
  m.c_rate = opt.c_rate;
  double vn = 0.0, vp = 0.0;
  switch (opt.id) {
    case CaseId::I:
    case CaseId::II:
      vn = kCubeLayers[0] * kCubeSide * kCubeSide;
      vp = kCubeLayers[2] * kCubeSide * kCubeSide;
      break;
    case CaseId::III:
      vn = kStackLayers[3] * opt.extent_yz[0] * opt.extent_yz[1];
      vp = kStackLayers[1] * opt.extent_yz[0] * opt.extent_yz[1];
      break;
    case CaseId::IV:
      throw std::invalid_argument("case_current: Case IV capacity depends on the mesh; use make_case");
  }
  return -cell_capacity_and_current(m, vn, vp).I_app;
}

ProblemSetup make_case(const CaseOptions& opt) {
  if (opt.dim < 1 || opt.dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  for (int a = 0; a < opt.dim; ++a)
    if (opt.resolution[static_cast<std::size_t>(a)] == 0) throw std::invalid_argument("resolution must be positive");
  if ((opt.id == CaseId::III || opt.id == CaseId::IV) && opt.dim != 3)
    throw std::invalid_argument(std::string("Case ") + to_string(opt.id) + " needs dim = 3");

  ProblemSetup s;
  s.model = default_cell_model();
  s.model.c_rate = opt.c_rate;
  s.n_c = opt.n_c;
  s.theta_bar = opt.theta_bar;
  s.dt = opt.dt;
  const auto& res = opt.resolution;

  switch (opt.id) {
    case CaseId::I:
    case CaseId::II: {
      const auto counts = split_cells(kCubeLayers, res[0]);
      std::vector<std::vector<double>> axes{layered_axis(kCubeLayers, counts)};
      for (int a = 1; a < opt.dim; ++a) axes.push_back(uniform_axis(0.0, kCubeSide, res[static_cast<std::size_t>(a)]));
      s.mesh = build_tensor_mesh(std::move(axes));
      const std::vector<double> bp{kCubeLayers[0], kCubeLayers[0] + kCubeLayers[1]};
      const std::vector<Subdomain> lab{Subdomain::Anode, Subdomain::Separator, Subdomain::Cathode};
      tag_layers(s.mesh, 0, bp, lab);
      s.mesh.add_patch(s.gamma_n, mark_boundary_patch(s.mesh, Face{0, false}));
      s.mesh.add_patch(s.gamma_p, mark_boundary_patch(s.mesh, Face{0, true}));
      const FacetPatch& gp = s.mesh.patch(s.gamma_p);
      // physical density I/A; lower-dimensional runs see the same density
      const double total = case_current(opt) * gp.area / (kCubeSide * kCubeSide);
      const bool uniform = opt.id == CaseId::II || opt.profile == CurrentProfile::Uniform || opt.dim == 1;
      s.i_app = gaussian_applied_current(s.mesh, gp, total, 0.1, uniform);
      if (opt.id == CaseId::II) {
        RandomFieldSpec rf;
        rf.h_c = opt.h_c;
        rf.seed = opt.seed;
        const auto vf = random_volume_fractions(s.mesh, rf);
        s.eps_s = vf.eps_s;
        s.eps_b = vf.eps_b;
      }
      break;
    }
    case CaseId::III: {
      const auto counts = split_cells(kStackLayers, res[0]);
      s.mesh = build_tensor_mesh({layered_axis(kStackLayers, counts),
                                  uniform_axis(0.0, opt.extent_yz[0], res[1]),
                                  uniform_axis(0.0, opt.extent_yz[1], res[2])});
      std::vector<double> bp;
      double acc = 0.0;
      for (std::size_t l = 0; l + 1 < kStackLayers.size(); ++l) bp.push_back(acc += kStackLayers[l]);
      const std::vector<Subdomain> lab{Subdomain::CollectorPos, Subdomain::Cathode, Subdomain::Separator,
                                       Subdomain::Anode, Subdomain::CollectorNeg};
      tag_layers(s.mesh, 0, bp, lab);
      if (opt.full_face_tabs) {
        s.mesh.add_patch(s.gamma_p, mark_boundary_patch(s.mesh, Face{0, false}));
        s.mesh.add_patch(s.gamma_n, mark_boundary_patch(s.mesh, Face{0, true}));
      } else {
        const double Ly = opt.extent_yz[0], Lz = opt.extent_yz[1];
        const std::vector<double> plo{0.0, 0.0}, phi{opt.tab[0], opt.tab[1]};
        const std::vector<double> nlo{Ly - opt.tab[0], Lz - opt.tab[1]}, nhi{Ly, Lz};
        s.mesh.add_patch(s.gamma_p, mark_boundary_patch(s.mesh, Face{0, false}, plo, phi));
        s.mesh.add_patch(s.gamma_n, mark_boundary_patch(s.mesh, Face{0, true}, nlo, nhi));
      }
      s.i_app = gaussian_applied_current(s.mesh, s.mesh.patch(s.gamma_p), case_current(opt), 0.1, true);
      break;
    }
    case CaseId::IV: {
      s.mesh = build_tensor_mesh({uniform_axis(0.0, opt.box[0], res[0]), uniform_axis(0.0, opt.box[1], res[1]),
                                  uniform_axis(0.0, opt.box[2], res[2])});
      LevelSetSpec ls;
      ls.thickness = opt.gyroid_thickness;
      ls.box = opt.box;
      tag_gyroid(s.mesh, ls);
      check_shared_nodes(s.mesh);
      s.mesh.add_patch(s.gamma_p, mark_boundary_patch(s.mesh, Face{2, true}, Subdomain::Cathode));
      s.mesh.add_patch(s.gamma_n, mark_boundary_patch(s.mesh, Face{2, false}, Subdomain::Anode));
      CellModel m = s.model;
      const double I = -cell_capacity_and_current(m, s.mesh.volume_of(Subdomain::Anode),
                                                  s.mesh.volume_of(Subdomain::Cathode)).I_app;
      s.i_app = gaussian_applied_current(s.mesh, s.mesh.patch(s.gamma_p), I, 0.1, true);
      break;
    }
  }
  s.prepare();
  return s;
}

}  // namespace p4d
