#include "p4d/assembly.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace p4d {

namespace {

std::atomic<std::size_t> g_clamps{0};

struct Kinetics {
  double i_n = 0.0;
  double d_phis = 0.0;
  double d_phie = 0.0;
  double d_ce = 0.0;
  double d_cs = 0.0;
};

// ce is already guarded; dce is d(ce_guarded)/d(ce).
Kinetics kinetics(const ElectrodeParams& p, const CellModel& m, double phis, double phie, double ce,
                  double dce, double cs_surf, bool count) {
  const double delta = m.regularization.cs_clamp_delta;
  const double lo = delta * p.cs_max, hi = (1.0 - delta) * p.cs_max;
  const double cs = std::clamp(cs_surf, lo, hi);
  const double dcs = (cs_surf >= lo && cs_surf <= hi) ? 1.0 : 0.0;
  if (count && dcs == 0.0) ++g_clamps;

  const double theta = cs / p.cs_max;
  const double U = ocp(p.ocp, theta);
  const double dU = ocp_derivative(p.ocp, theta) / p.cs_max;
  const auto ex = exchange_current(p.k, ce, cs, p.cs_max, p.alpha_a, p.alpha_c);
  const double eta = phis - phie - U;
  const auto g = butler_volmer(1.0, eta, m.constants, p.alpha_a, p.alpha_c,
                               m.regularization.bv_exponent_cap);
  Kinetics k;
  k.i_n = ex.i0 * g.i_n;
  k.d_phis = ex.i0 * g.d_eta;
  k.d_phie = -k.d_phis;
  k.d_ce = ex.d_ce * g.i_n * dce;
  k.d_cs = (ex.d_cs * g.i_n - ex.i0 * g.d_eta * dU) * dcs;
  return k;
}

std::size_t surface_index(const BlockLayout& L, std::size_t cell) {
  return cell * L.n_c + L.n_c - 1;
}

CsrMatrix pattern_from(std::size_t rows, std::size_t cols, std::vector<Triplet> t) {
  for (auto& x : t) x.value = 0.0;
  return CsrMatrix::from_triplets(rows, cols, std::move(t));
}

}  // namespace

std::size_t clamp_warning_count() { return g_clamps.load(); }

// ---- setup -------------------------------------------------------------------------

void ProblemSetup::prepare() {
  model.validate();
  const std::size_t nc = mesh.num_cells();
  if (nc == 0) throw std::invalid_argument("problem setup: empty mesh");
  if (n_c < 3) throw std::invalid_argument("problem setup: need at least 3 radial nodes");
  if (!(dt > 0.0)) throw std::invalid_argument("problem setup: dt must be positive");
  if (!mesh.has_patch(gamma_p)) throw std::invalid_argument("problem setup: missing patch " + gamma_p);
  if (!mesh.has_patch(gamma_n)) throw std::invalid_argument("problem setup: missing patch " + gamma_n);
  if (i_app.size() != mesh.patch(gamma_p).facets.size())
    throw std::invalid_argument("problem setup: i_app needs one value per gamma_p facet");
  if (!eps_s.empty() && eps_s.size() != nc) throw std::invalid_argument("problem setup: eps_s size");
  if (!eps_b.empty() && eps_b.size() != nc) throw std::invalid_argument("problem setup: eps_b size");

  const double b = model.electrolyte.b;
  const auto& reg = model.regularization;
  cells.assign(nc, {});
  for (std::size_t c = 0; c < nc; ++c) {
    CellCoeffs& k = cells[c];
    k.label = mesh.label(c);
    switch (k.label) {
      case Subdomain::Anode:
      case Subdomain::Cathode: {
        k.electrode = k.label == Subdomain::Anode ? 0 : 1;
        const ElectrodeParams& p = electrode(k.electrode);
        k.eps_s = eps_s.empty() ? p.eps_s : eps_s[c];
        const double eb = eps_b.empty() ? p.eps_b : eps_b[c];
        k.eps = eps_s.empty() && eps_b.empty() ? p.eps : 1.0 - k.eps_s - eb;
        if (!(k.eps > 0.0 && k.eps < 1.0) || !(k.eps_s > 0.0))
          throw std::invalid_argument("problem setup: invalid volume fractions in cell " + std::to_string(c));
        k.brug = std::pow(k.eps, b);
        k.sigma_eff = effective_transport(p.sigma, k.eps_s, b, reg.sigma_eff_floor);
        k.a = p.a * k.eps_s / p.eps_s;  // keeps a = 3 eps_s / R_s under heterogeneity
        break;
      }
      case Subdomain::Separator:
        k.eps = model.electrolyte.separator_porosity;
        k.brug = std::pow(k.eps, b);
        k.sigma_eff = reg.sigma_eff_floor;
        break;
      case Subdomain::CollectorNeg:
      case Subdomain::CollectorPos:
        k.collector = true;
        k.eps = reg.collector_porosity;
        k.brug = 0.0;
        k.sigma_eff = k.label == Subdomain::CollectorPos ? model.collectors.sigma_al
                                                         : model.collectors.sigma_cu;
        break;
    }
  }

  for (int e = 0; e < 2; ++e) {
    const ElectrodeParams& p = electrode(e);
    ParticleModel& pm = particles[static_cast<std::size_t>(e)];
    pm.grid = radial_grid(n_c, p.R_s, theta_bar);
    pm.op = particle_operator(pm.grid, p.D_s, model.constants.F);
    pm.weights = conservative_weights(pm.op, p.R_s);
  }

  std::vector<char> ground(mesh.num_nodes(), 0);
  const FacetPatch& gn = mesh.patch(gamma_n);
  for (const Facet& f : gn.facets)
    for (const std::size_t n : mesh.facet_nodes(gn.face, f.cell)) ground[n] = 1;
  ground_nodes.clear();
  for (std::size_t n = 0; n < ground.size(); ++n)
    if (ground[n]) ground_nodes.push_back(n);
  if (ground_nodes.empty()) throw std::invalid_argument("problem setup: empty ground patch");

  layout = {mesh.num_nodes(), nc, n_c};
}

double ProblemSetup::applied_current() const {
  const FacetPatch& p = mesh.patch(gamma_p);
  double s = 0.0;
  for (std::size_t f = 0; f < p.facets.size(); ++f) s += i_app[f] * p.facets[f].area;
  return s;
}

// ---- assembler ----------------------------------------------------------------------

Assembler::Assembler(const ProblemSetup& setup) : setup_(&setup) {
  if (setup.cells.size() != setup.mesh.num_cells())
    throw std::invalid_argument("assembler: call ProblemSetup::prepare() first");
  const StructuredMesh& mesh = setup.mesh;
  const int dim = mesh.dim();
  nn_ = mesh.nodes_per_cell();
  const int nq = nn_;

  const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  N_.assign(static_cast<std::size_t>(nq), std::vector<double>(static_cast<std::size_t>(nn_)));
  dN_.assign(static_cast<std::size_t>(nq), std::vector<std::array<double, 3>>(static_cast<std::size_t>(nn_)));
  qw_.assign(static_cast<std::size_t>(nq), 1.0 / nq);
  for (int q = 0; q < nq; ++q)
    for (int a = 0; a < nn_; ++a) {
      double val = 1.0;
      std::array<double, 3> grad{1.0, 1.0, 1.0};
      for (int ax = 0; ax < dim; ++ax) {
        const double xi = g[(q >> ax) & 1];
        const bool hi = (a >> ax) & 1;
        const double phi = hi ? xi : 1.0 - xi;
        const double dphi = hi ? 1.0 : -1.0;
        val *= phi;
        for (int d = 0; d < dim; ++d) grad[d] *= (d == ax) ? dphi : phi;
      }
      for (int d = dim; d < 3; ++d) grad[d] = 0.0;
      N_[q][a] = val;
      dN_[q][a] = grad;
    }

  // sparsity
  const BlockLayout& L = setup.layout;
  const std::size_t ncell = mesh.num_cells();
  const auto nnz = static_cast<std::size_t>(nn_);
  std::vector<Triplet> full, react, xcs, csx, cscs;
  for (std::size_t c = 0; c < ncell; ++c) {
    const auto nodes = mesh.cell_nodes(c);
    const bool r = setup.cells[c].reactive();
    const auto s = static_cast<Index>(surface_index(L, c));
    for (std::size_t a = 0; a < nnz; ++a) {
      for (std::size_t b = 0; b < nnz; ++b) {
        full.push_back({static_cast<Index>(nodes[a]), static_cast<Index>(nodes[b]), 0.0});
        if (r) react.push_back({static_cast<Index>(nodes[a]), static_cast<Index>(nodes[b]), 0.0});
      }
      if (r) {
        xcs.push_back({static_cast<Index>(nodes[a]), s, 0.0});
        csx.push_back({s, static_cast<Index>(nodes[a]), 0.0});
      }
    }
    for (std::size_t i = 0; i < L.n_c; ++i) {
      const auto row = static_cast<Index>(c * L.n_c + i);
      if (i > 0) cscs.push_back({row, row - 1, 0.0});
      cscs.push_back({row, row, 0.0});
      if (i + 1 < L.n_c) cscs.push_back({row, row + 1, 0.0});
    }
  }
  const std::size_t nn = L.num_nodes, ncs = L.size(Field::Cs);
  const CsrMatrix Pfull = pattern_from(nn, nn, full);
  const CsrMatrix Preact = pattern_from(nn, nn, react);
  pattern_.layout = L;
  using F = Field;
  pattern_(F::PhiS, F::PhiS) = Pfull;
  pattern_(F::PhiE, F::PhiE) = Pfull;
  pattern_(F::Ce, F::Ce) = Pfull;
  pattern_(F::PhiE, F::Ce) = Pfull;
  pattern_(F::PhiS, F::PhiE) = Preact;
  pattern_(F::PhiS, F::Ce) = Preact;
  pattern_(F::PhiE, F::PhiS) = Preact;
  pattern_(F::Ce, F::PhiS) = Preact;
  pattern_(F::Ce, F::PhiE) = Preact;
  pattern_(F::PhiS, F::Cs) = pattern_from(nn, ncs, xcs);
  pattern_(F::PhiE, F::Cs) = pattern_from(nn, ncs, xcs);
  pattern_(F::Ce, F::Cs) = pattern_from(nn, ncs, xcs);
  pattern_(F::Cs, F::PhiS) = pattern_from(ncs, nn, csx);
  pattern_(F::Cs, F::PhiE) = pattern_from(ncs, nn, csx);
  pattern_(F::Cs, F::Ce) = pattern_from(ncs, nn, csx);
  pattern_(F::Cs, F::Cs) = pattern_from(ncs, ncs, cscs);

  const CsrMatrix& Pxcs = pattern_(F::PhiS, F::Cs);
  const CsrMatrix& Pcsx = pattern_(F::Cs, F::PhiS);
  const CsrMatrix& Pcs = pattern_(F::Cs, F::Cs);
  pos_full_.assign(ncell * nnz * nnz, 0);
  pos_react_.assign(ncell * nnz * nnz, 0);
  pos_x_cs_.assign(ncell * nnz, 0);
  pos_cs_x_.assign(ncell * nnz, 0);
  pos_cs_cs_.assign(ncell * 3 * L.n_c, 0);
  for (std::size_t c = 0; c < ncell; ++c) {
    const auto nodes = mesh.cell_nodes(c);
    const bool r = setup.cells[c].reactive();
    const std::size_t s = surface_index(L, c);
    for (std::size_t a = 0; a < nnz; ++a) {
      for (std::size_t b = 0; b < nnz; ++b) {
        pos_full_[(c * nnz + a) * nnz + b] = static_cast<std::size_t>(Pfull.find(nodes[a], nodes[b]));
        if (r) pos_react_[(c * nnz + a) * nnz + b] = static_cast<std::size_t>(Preact.find(nodes[a], nodes[b]));
      }
      if (r) {
        pos_x_cs_[c * nnz + a] = static_cast<std::size_t>(Pxcs.find(nodes[a], s));
        pos_cs_x_[c * nnz + a] = static_cast<std::size_t>(Pcsx.find(s, nodes[a]));
      }
    }
    for (std::size_t i = 0; i < L.n_c; ++i) {
      const std::size_t row = c * L.n_c + i;
      std::size_t* p = &pos_cs_cs_[(c * L.n_c + i) * 3];
      p[0] = i > 0 ? static_cast<std::size_t>(Pcs.find(row, row - 1)) : 0;
      p[1] = static_cast<std::size_t>(Pcs.find(row, row));
      p[2] = i + 1 < L.n_c ? static_cast<std::size_t>(Pcs.find(row, row + 1)) : 0;
    }
  }
}

BlockMatrix Assembler::allocate_jacobian() const { return pattern_; }

void Assembler::residual(const State& u, const State& u_old, BlockVector& R) const {
  assemble(u, &u_old, &R, nullptr);
}

void Assembler::jacobian(const State& u, BlockMatrix& J) const { assemble(u, nullptr, nullptr, &J); }

void Assembler::residual_and_jacobian(const State& u, const State& u_old, BlockVector& R,
                                      BlockMatrix& J) const {
  assemble(u, &u_old, &R, &J);
}

void Assembler::assemble(const State& u, const State* u_old, BlockVector* R, BlockMatrix* J) const {
  const ProblemSetup& S = *setup_;
  const StructuredMesh& mesh = S.mesh;
  const CellModel& M = S.model;
  const BlockLayout& L = S.layout;
  if (u.data.size() != L.total()) throw std::invalid_argument("assemble: state size mismatch");
  const int dim = mesh.dim();
  const auto nn = static_cast<std::size_t>(nn_);
  const std::size_t nq = nn;
  const double dt = S.dt;
  const double F = M.constants.F;
  const double T = M.constants.T;
  const double tp = M.electrolyte.t_plus;
  const double diff_coef = 2.0 * M.constants.R * T * (1.0 - tp) / F;
  const double ce_floor = M.regularization.ce_clamp_rel * M.electrolyte.ce_0;
  const double transport_floor = M.regularization.collector_transport;
  using Fd = Field;

  const auto phis = u.field(Fd::PhiS), phie = u.field(Fd::PhiE), ce = u.field(Fd::Ce), cs = u.field(Fd::Cs);

  if (R) {
    if (!u_old) throw std::logic_error("residual needs the previous state");
    *R = BlockVector(L);
  }
  if (J) {
    if (J->layout.total() != L.total()) *J = pattern_;
    for (auto& row : J->blocks)
      for (auto& B : row) B.set_zero();
  }

  // per-cell scratch
  std::array<double, 8> xs{}, xe{}, xc{}, xc_old{};
  std::array<std::array<double, 3>, 8> gN{};
  double Kss[8][8], Kee[8][8], Kec[8][8], Kcc[8][8];
  double Kse[8][8], Ksc[8][8], Kes[8][8], Kcs_[8][8], Kce[8][8];
  double Xs[8], Xe[8], Xc[8];        // nodal rows, surface column
  double Ys[8], Ye[8], Yc[8];        // surface row, nodal columns
  std::vector<double> part_res(L.n_c), cs_new(L.n_c), cs_prev(L.n_c);

  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const CellCoeffs& K = S.cells[c];
    const auto nodes = mesh.cell_nodes(c);
    const auto w = mesh.cell_widths(c);
    const double vol = mesh.cell_volume(c);
    for (std::size_t a = 0; a < nn; ++a) {
      xs[a] = phis[nodes[a]];
      xe[a] = phie[nodes[a]];
      xc[a] = ce[nodes[a]];
      if (R) xc_old[a] = u_old->field(Fd::Ce)[nodes[a]];
    }
    const bool react = K.reactive();
    const ElectrodeParams* ep = K.electrode >= 0 ? &S.electrode(K.electrode) : nullptr;
    const std::size_t surf = surface_index(L, c);
    const double cs_surf = cs[surf];

    if (J) {
      for (std::size_t a = 0; a < nn; ++a) {
        Xs[a] = Xe[a] = Xc[a] = Ys[a] = Ye[a] = Yc[a] = 0.0;
        for (std::size_t b = 0; b < nn; ++b)
          Kss[a][b] = Kee[a][b] = Kec[a][b] = Kcc[a][b] = Kse[a][b] = Ksc[a][b] = Kes[a][b] =
              Kcs_[a][b] = Kce[a][b] = 0.0;
      }
    }
    double src = 0.0, dsrc_cs = 0.0;  // integral of i_n over the cell and its cs_surf slope

    for (std::size_t q = 0; q < nq; ++q) {
      const double wq = qw_[q] * vol;
      const auto& Nq = N_[q];
      double vs = 0, ve = 0, vc = 0, vc_old = 0;
      std::array<double, 3> gs{}, ge{}, gc{};
      for (std::size_t a = 0; a < nn; ++a) {
        for (int d = 0; d < dim; ++d) gN[a][d] = dN_[q][a][d] / w[d];
        vs += Nq[a] * xs[a];
        ve += Nq[a] * xe[a];
        vc += Nq[a] * xc[a];
        if (R) vc_old += Nq[a] * xc_old[a];
        for (int d = 0; d < dim; ++d) {
          // differences against node 0 keep round-off proportional to the jump, not the level
          gs[d] += gN[a][d] * (xs[a] - xs[0]);
          ge[d] += gN[a][d] * (xe[a] - xe[0]);
          gc[d] += gN[a][d] * (xc[a] - xc[0]);
        }
      }
      const bool ce_ok = vc >= ce_floor;
      if (R && !ce_ok) ++g_clamps;
      const double ceg = ce_ok ? vc : ce_floor;
      const double dceg = ce_ok ? 1.0 : 0.0;

      double De = transport_floor, dDe = 0.0, kap = transport_floor, dkap = 0.0;
      if (!K.collector) {
        const auto d = electrolyte_diffusivity(ceg, T);
        const auto k = electrolyte_conductivity(ceg, T);
        De = K.brug * d.value;
        dDe = K.brug * d.slope * dceg;
        kap = K.brug * k.value;
        dkap = K.brug * k.slope * dceg;
      }
      const double kD = kap * diff_coef / ceg;
      const double dkD = (dkap * diff_coef / ceg) - kap * diff_coef / (ceg * ceg) * dceg;

      Kinetics kin;
      if (react) kin = kinetics(*ep, M, vs, ve, ceg, dceg, cs_surf, R != nullptr);
      const double ai = K.a * kin.i_n;
      src += wq * kin.i_n;
      dsrc_cs += wq * kin.d_cs;

      double gs_dot[8], ge_dot[8], gc_dot[8];
      for (std::size_t a = 0; a < nn; ++a) {
        gs_dot[a] = ge_dot[a] = gc_dot[a] = 0.0;
        for (int d = 0; d < dim; ++d) {
          gs_dot[a] += gs[d] * gN[a][d];
          ge_dot[a] += ge[d] * gN[a][d];
          gc_dot[a] += gc[d] * gN[a][d];
        }
      }

      if (R) {
        auto rs = R->field(Fd::PhiS), re = R->field(Fd::PhiE), rc = R->field(Fd::Ce);
        for (std::size_t a = 0; a < nn; ++a) {
          const std::size_t n = nodes[a];
          rc[n] += wq * (K.eps * (vc - vc_old) / dt * Nq[a] + De * gc_dot[a] - (1.0 - tp) / F * ai * Nq[a]);
          re[n] += wq * (kap * ge_dot[a] + kD * gc_dot[a] - ai * Nq[a]);
          rs[n] += wq * (K.sigma_eff * gs_dot[a] + ai * Nq[a]);
        }
      }

      if (J) {
        const double a_ = K.a;
        for (std::size_t a = 0; a < nn; ++a) {
          for (std::size_t b = 0; b < nn; ++b) {
            double gg = 0.0;
            for (int d = 0; d < dim; ++d) gg += gN[a][d] * gN[b][d];
            const double NN = Nq[a] * Nq[b];
            Kcc[a][b] += wq * (K.eps / dt * NN + De * gg + dDe * Nq[b] * gc_dot[a] -
                               (1.0 - tp) / F * a_ * kin.d_ce * NN);
            Kee[a][b] += wq * (kap * gg - a_ * kin.d_phie * NN);
            Kec[a][b] += wq * (dkap * Nq[b] * ge_dot[a] + kD * gg + dkD * Nq[b] * gc_dot[a] -
                               a_ * kin.d_ce * NN);
            Kss[a][b] += wq * (K.sigma_eff * gg + a_ * kin.d_phis * NN);
            if (react) {
              Kse[a][b] += wq * a_ * kin.d_phie * NN;
              Ksc[a][b] += wq * a_ * kin.d_ce * NN;
              Kes[a][b] += wq * (-a_ * kin.d_phis * NN);
              Kcs_[a][b] += wq * (-(1.0 - tp) / F * a_ * kin.d_phis * NN);
              Kce[a][b] += wq * (-(1.0 - tp) / F * a_ * kin.d_phie * NN);
            }
          }
          if (react) {
            Xs[a] += wq * a_ * kin.d_cs * Nq[a];
            Xe[a] += wq * (-a_ * kin.d_cs * Nq[a]);
            Xc[a] += wq * (-(1.0 - tp) / F * a_ * kin.d_cs * Nq[a]);
            Ys[a] += wq * kin.d_phis * Nq[a];
            Ye[a] += wq * kin.d_phie * Nq[a];
            Yc[a] += wq * kin.d_ce * Nq[a];
          }
        }
      }
    }

    // particle rows
    const bool frozen = K.electrode < 0;
    const ParticleModel* pm = frozen ? nullptr : &S.particles[static_cast<std::size_t>(K.electrode)];
    if (R) {
      auto rcs = R->field(Fd::Cs);
      const auto cs_old = u_old->field(Fd::Cs);
      for (std::size_t i = 0; i < L.n_c; ++i) {
        cs_new[i] = cs[c * L.n_c + i];
        cs_prev[i] = cs_old[c * L.n_c + i];
      }
      if (frozen) {
        for (std::size_t i = 0; i < L.n_c; ++i) rcs[c * L.n_c + i] = vol * (cs_new[i] - cs_prev[i]) / dt;
      } else {
        particle_step_residual(pm->op, cs_new, cs_prev, dt, src / vol, false, part_res);
        for (std::size_t i = 0; i < L.n_c; ++i) rcs[c * L.n_c + i] = vol * part_res[i];
      }
    }

    if (J) {
      using Fd2 = Field;
      auto scatter = [&](Fd2 r, Fd2 col, double (*Kl)[8], const std::vector<std::size_t>& pos) {
        auto& vals = (*J)(r, col).values;
        for (std::size_t a = 0; a < nn; ++a)
          for (std::size_t b = 0; b < nn; ++b) vals[pos[(c * nn + a) * nn + b]] += Kl[a][b];
      };
      scatter(Fd::PhiS, Fd::PhiS, Kss, pos_full_);
      scatter(Fd::PhiE, Fd::PhiE, Kee, pos_full_);
      scatter(Fd::Ce, Fd::Ce, Kcc, pos_full_);
      scatter(Fd::PhiE, Fd::Ce, Kec, pos_full_);
      if (react) {
        scatter(Fd::PhiS, Fd::PhiE, Kse, pos_react_);
        scatter(Fd::PhiS, Fd::Ce, Ksc, pos_react_);
        scatter(Fd::PhiE, Fd::PhiS, Kes, pos_react_);
        scatter(Fd::Ce, Fd::PhiS, Kcs_, pos_react_);
        scatter(Fd::Ce, Fd::PhiE, Kce, pos_react_);
        // Kee/Kcc/Kec reactive parts went into the full pattern above
        const double beta = pm->op.beta;
        auto& vs_ = (*J)(Fd::PhiS, Fd::Cs).values;
        auto& ve_ = (*J)(Fd::PhiE, Fd::Cs).values;
        auto& vc_ = (*J)(Fd::Ce, Fd::Cs).values;
        auto& ws_ = (*J)(Fd::Cs, Fd::PhiS).values;
        auto& we_ = (*J)(Fd::Cs, Fd::PhiE).values;
        auto& wc_ = (*J)(Fd::Cs, Fd::Ce).values;
        for (std::size_t a = 0; a < nn; ++a) {
          const std::size_t px = pos_x_cs_[c * nn + a], py = pos_cs_x_[c * nn + a];
          vs_[px] += Xs[a];
          ve_[px] += Xe[a];
          vc_[px] += Xc[a];
          ws_[py] += beta * Ys[a];
          we_[py] += beta * Ye[a];
          wc_[py] += beta * Yc[a];
        }
      }
      auto& vcs = (*J)(Fd::Cs, Fd::Cs).values;
      const Tridiagonal T3 = frozen ? tridiag_jacobian(S.particles[0].op, dt, 0.0, true)
                                    : tridiag_jacobian(pm->op, dt, 0.0, false);
      for (std::size_t i = 0; i < L.n_c; ++i) {
        const std::size_t* p = &pos_cs_cs_[(c * L.n_c + i) * 3];
        if (i > 0) vcs[p[0]] += vol * T3.sub[i];
        vcs[p[1]] += vol * T3.diag[i];
        if (i + 1 < L.n_c) vcs[p[2]] += vol * T3.super[i];
      }
      if (!frozen) vcs[pos_cs_cs_[(c * L.n_c + L.n_c - 1) * 3 + 1]] += pm->op.beta * dsrc_cs;
    }
  }

  // applied current on gamma_p
  if (R) {
    const FacetPatch& gp = mesh.patch(S.gamma_p);
    auto rs = R->field(Fd::PhiS);
    const double share = 1.0 / static_cast<double>(1 << (dim - 1));
    for (std::size_t f = 0; f < gp.facets.size(); ++f) {
      const double amount = S.i_app[f] * gp.facets[f].area * share;
      for (const std::size_t n : mesh.facet_nodes(gp.face, gp.facets[f].cell)) rs[n] -= amount;
    }
  }

  // ground: replace phi_s rows by phi_s = 0
  if (R) {
    auto rs = R->field(Fd::PhiS);
    for (const std::size_t n : S.ground_nodes) rs[n] = phis[n];
  }
  if (J) {
    for (const std::size_t n : S.ground_nodes) {
      for (int f = 0; f < kNumFields; ++f) {
        CsrMatrix& B = (*J)(Fd::PhiS, static_cast<Field>(f));
        for (std::size_t k = B.row_ptr[n]; k < B.row_ptr[n + 1]; ++k)
          B.values[k] = (f == 0 && static_cast<std::size_t>(B.col[k]) == n) ? 1.0 : 0.0;
      }
    }
  }
}

BlockVector assemble_residual(const ProblemSetup& setup, const State& u, const State& u_old) {
  BlockVector R;
  Assembler(setup).residual(u, u_old, R);
  return R;
}

BlockMatrix assemble_jacobian(const ProblemSetup& setup, const State& u) {
  Assembler A(setup);
  BlockMatrix J = A.allocate_jacobian();
  A.jacobian(u, J);
  return J;
}

// ---- initial state and observables ---------------------------------------------------

State equilibrium_state(const ProblemSetup& setup) {
  const StructuredMesh& mesh = setup.mesh;
  State u(setup.layout);
  const ElectrodeParams& an = setup.model.anode;
  const ElectrodeParams& ca = setup.model.cathode;
  const double Un = ocp(an.ocp, an.theta_0());
  const double Up = ocp(ca.ocp, ca.theta_0());
  std::vector<char> positive(mesh.num_nodes(), 0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const Subdomain s = mesh.label(c);
    if (s != Subdomain::Cathode && s != Subdomain::CollectorPos) continue;
    const auto nodes = mesh.cell_nodes(c);
    for (int a = 0; a < mesh.nodes_per_cell(); ++a) positive[nodes[static_cast<std::size_t>(a)]] = 1;
  }
  auto phis = u.field(Field::PhiS), phie = u.field(Field::PhiE), ce = u.field(Field::Ce);
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    phis[n] = positive[n] ? Up - Un : 0.0;
    phie[n] = -Un;
    ce[n] = setup.model.electrolyte.ce_0;
  }
  auto cs = u.field(Field::Cs);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const int e = setup.cells[c].electrode;
    const double v = e < 0 ? 0.0 : setup.electrode(e).cs_0;
    for (std::size_t i = 0; i < setup.n_c; ++i) cs[c * setup.n_c + i] = v;
  }
  return u;
}

double cell_voltage(const ProblemSetup& setup, const State& u) {
  const FacetPatch& gp = setup.mesh.patch(setup.gamma_p);
  if (gp.facets.empty()) throw std::invalid_argument("cell_voltage: empty gamma_p");
  const auto phis = u.field(Field::PhiS);
  double s = 0.0;
  for (const Facet& f : gp.facets) {
    const auto nodes = setup.mesh.facet_nodes(gp.face, f.cell);
    double mean = 0.0;
    for (const std::size_t n : nodes) mean += phis[n];
    s += f.area * mean / static_cast<double>(nodes.size());
  }
  return s / gp.area;
}

double reaction_current(const ProblemSetup& setup, const State& u, Subdomain region) {
  const StructuredMesh& mesh = setup.mesh;
  const int dim = mesh.dim();
  const int nn = mesh.nodes_per_cell();
  const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  const double floor = setup.model.regularization.ce_clamp_rel * setup.model.electrolyte.ce_0;
  const auto phis = u.field(Field::PhiS), phie = u.field(Field::PhiE), ce = u.field(Field::Ce),
             cs = u.field(Field::Cs);
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const CellCoeffs& K = setup.cells[c];
    if (K.label != region || !K.reactive()) continue;
    const auto nodes = mesh.cell_nodes(c);
    const double vol = mesh.cell_volume(c);
    const double cs_surf = cs[surface_index(setup.layout, c)];
    for (int q = 0; q < nn; ++q) {
      double vs = 0, ve = 0, vc = 0;
      for (int a = 0; a < nn; ++a) {
        double Na = 1.0;
        for (int ax = 0; ax < dim; ++ax) {
          const double xi = g[(q >> ax) & 1];
          Na *= ((a >> ax) & 1) ? xi : 1.0 - xi;
        }
        const std::size_t n = nodes[static_cast<std::size_t>(a)];
        vs += Na * phis[n];
        ve += Na * phie[n];
        vc += Na * ce[n];
      }
      const bool ok = vc >= floor;
      const auto kin = kinetics(setup.electrode(K.electrode), setup.model, vs, ve, ok ? vc : floor,
                                ok ? 1.0 : 0.0, cs_surf, false);
      total += vol / nn * K.a * kin.i_n;
    }
  }
  return total;
}

Inventory lithium_inventory(const ProblemSetup& setup, const State& u) {
  const StructuredMesh& mesh = setup.mesh;
  const auto ce = u.field(Field::Ce), cs = u.field(Field::Cs);
  const int nn = mesh.nodes_per_cell();
  Inventory inv;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const CellCoeffs& K = setup.cells[c];
    const double vol = mesh.cell_volume(c);
    const auto nodes = mesh.cell_nodes(c);
    double mean = 0.0;
    for (int a = 0; a < nn; ++a) mean += ce[nodes[static_cast<std::size_t>(a)]];
    inv.electrolyte_mol += K.eps * vol * mean / nn;
    if (K.electrode < 0) continue;
    const ParticleModel& pm = setup.particles[static_cast<std::size_t>(K.electrode)];
    const double R = setup.electrode(K.electrode).R_s;
    double m = 0.0;
    for (std::size_t i = 0; i < setup.n_c; ++i) m += pm.weights[i] * cs[c * setup.n_c + i];
    inv.solid_mol += K.eps_s * vol * 3.0 / (R * R * R) * m;
  }
  inv.total_mol = inv.electrolyte_mol + inv.solid_mol;
  return inv;
}

std::array<double, 2> mean_stoichiometry(const ProblemSetup& setup, const State& u) {
  std::array<double, 2> num{}, den{};
  const auto cs = u.field(Field::Cs);
  for (std::size_t c = 0; c < setup.mesh.num_cells(); ++c) {
    const int e = setup.cells[c].electrode;
    if (e < 0) continue;
    const ParticleModel& pm = setup.particles[static_cast<std::size_t>(e)];
    const double R = setup.electrode(e).R_s;
    double m = 0.0;
    for (std::size_t i = 0; i < setup.n_c; ++i) m += pm.weights[i] * cs[c * setup.n_c + i];
    const double vol = setup.mesh.cell_volume(c) * setup.cells[c].eps_s;
    num[static_cast<std::size_t>(e)] += vol * 3.0 / (R * R * R) * m / setup.electrode(e).cs_max;
    den[static_cast<std::size_t>(e)] += vol;
  }
  return {den[0] > 0 ? num[0] / den[0] : 0.0, den[1] > 0 ? num[1] / den[1] : 0.0};
}

}  // namespace p4d
