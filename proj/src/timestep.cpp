#include "p4d/timestep.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numeric>

#include "p4d/sparse.hpp"

namespace p4d {

void NewtonConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0) || floor_factor < 0.0) throw std::invalid_argument("newton tolerances must be positive");
  if (max_iters < 1) throw std::invalid_argument("newton max_iters must be at least 1");
  if (max_halvings < 0) throw std::invalid_argument("newton max_halvings must be non-negative");
}

int NewtonReport::gmres_total() const { return std::accumulate(gmres_iters.begin(), gmres_iters.end(), 0); }
int StepReport::gmres_total() const { return std::accumulate(gmres_iters.begin(), gmres_iters.end(), 0); }

NewtonReport damped_newton(std::vector<double>& u, const NewtonCallbacks& cb, const NewtonConfig& cfg) {
  cfg.validate();
  NewtonReport rep;
  std::vector<double> R(u.size()), dx(u.size()), trial(u.size()), Rt(u.size()), rhs(u.size());
  auto floor_now = [&] { return cb.floor ? cfg.floor_factor * cb.floor() : 0.0; };
  cb.assemble(u, R, true);
  double norm = cb.norm(R);
  rep.residual_norms.push_back(norm);
  rep.unscaled_norms.push_back(norm2(R));
  if (!std::isfinite(norm)) {
    rep.failure = FailureKind::Newton;
    rep.message = "non-finite initial residual";
    return rep;
  }
  const double target = std::max(cfg.rtol * norm, cfg.atol);
  double floor = floor_now();
  while (norm > target) {
    if (rep.iterations >= cfg.max_iters) {
      rep.failure = FailureKind::Newton;
      rep.message = "Newton did not converge in " + std::to_string(cfg.max_iters) + " iterations";
      return rep;
    }
    for (std::size_t i = 0; i < R.size(); ++i) rhs[i] = -R[i];
    std::fill(dx.begin(), dx.end(), 0.0);
    GmresResult g;
    try {
      g = cb.solve(rhs, dx);
    } catch (const std::exception& e) {
      rep.failure = FailureKind::Linear;
      rep.message = std::string("linear solver: ") + e.what();
      return rep;
    }
    rep.gmres_iters.push_back(g.iterations);
    rep.gmres_histories.push_back(std::move(g.residual_history));
    ++rep.iterations;
    const bool linear_ok = g.converged && std::isfinite(g.final_norm);

    double alpha = 1.0, trial_norm = 0.0;
    int halvings = 0;
    for (;;) {
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + alpha * dx[i];
      cb.assemble(trial, Rt, false);
      trial_norm = cb.norm(Rt);
      if (std::isfinite(trial_norm) && (trial_norm <= norm || !cfg.backtracking)) break;
      if (halvings == 0 && linear_ok && norm <= floor) {
        // full step cannot improve a residual that is already at rounding level
        rep.at_rounding_floor = true;
        rep.converged = true;
        return rep;
      }
      if (halvings == cfg.max_halvings) {
        rep.failure = linear_ok ? FailureKind::Newton : FailureKind::Linear;
        rep.message = linear_ok ? "line search exhausted " + std::to_string(cfg.max_halvings) + " halvings"
                                : "GMRES did not converge and the step could not be damped";
        return rep;
      }
      alpha *= 0.5;
      ++halvings;
    }
    u.swap(trial);
    cb.assemble(u, R, true);
    norm = cb.norm(R);
    floor = floor_now();
    rep.residual_norms.push_back(norm);
    rep.unscaled_norms.push_back(norm2(R));
  }
  rep.converged = true;
  return rep;
}

double reference_current(const ProblemSetup& s) {
  CellModel m = s.model;
  m.c_rate = 1.0;
  const double vn = s.mesh.volume_of(Subdomain::Anode), vp = s.mesh.volume_of(Subdomain::Cathode);
  if (!(vn > 0.0) || !(vp > 0.0)) return std::max(std::abs(s.applied_current()), 1.0);
  return cell_capacity_and_current(m, vn, vp).I_app;
}

NewtonResult newton_solve(const ProblemSetup& setup, const State& guess, const State& prev,
                          const SolverConfig& cfg) {
  Assembler as(setup);
  BlockMatrix J = as.allocate_jacobian();
  const BlockLayout& L = setup.layout;
  // potential rows are in A, concentration rows in mol/s; both measured against the 1C current
  const double iref = reference_current(setup);
  const double F = setup.model.constants.F;
  const std::array<double, 4> fscale{iref, iref, iref / F, iref / F};

  State cur(L), old = prev;
  BlockVector Rb(L);

  NewtonCallbacks cb;
  cb.assemble = [&](const std::vector<double>& u, std::vector<double>& R, bool want_j) {
    cur.data = u;
    if (want_j) {
      as.residual_and_jacobian(cur, old, Rb, J);
    } else {
      as.residual(cur, old, Rb);
    }
    R = Rb.data;
  };
  cb.norm = [&](const std::vector<double>& R) {
    double s = 0.0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t off = L.offset(static_cast<Field>(f)), n = L.size(static_cast<Field>(f));
      const double inv = 1.0 / fscale[static_cast<std::size_t>(f)];
      for (std::size_t i = 0; i < n; ++i) s += (R[off + i] * inv) * (R[off + i] * inv);
    }
    return std::sqrt(s);
  };
  // rounding floor: eps |J| |u| per row, in the same scaled norm
  cb.floor = [&] {
    std::vector<double> acc(L.total(), 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const CsrMatrix& B = J(static_cast<Field>(i), static_cast<Field>(j));
        const std::size_t ro = L.offset(static_cast<Field>(i)), co = L.offset(static_cast<Field>(j));
        for (std::size_t r = 0; r < B.rows; ++r)
          for (std::size_t k = B.row_ptr[r]; k < B.row_ptr[r + 1]; ++k)
            acc[ro + r] += std::abs(B.values[k] * cur.data[co + static_cast<std::size_t>(B.col[k])]);
      }
    return std::numeric_limits<double>::epsilon() * cb.norm(acc);
  };
  cb.solve = [&](const std::vector<double>& rhs, std::vector<double>& x) {
    const BlockPreconditioner P(J, cfg.precond);
    return gmres([&](auto in, auto out) { J.multiply(in, out); }, [&](auto in, auto out) { P.apply(in, out); },
                 rhs, x, cfg.gmres);
  };

  NewtonResult res;
  std::vector<double> u = guess.data;
  res.report = damped_newton(u, cb, cfg.newton);
  res.report.field_scales = fscale;
  res.state = State(L);
  res.state.data = std::move(u);
  return res;
}

StepReport observe(const ProblemSetup& setup, const State& u) {
  StepReport r;
  r.voltage = cell_voltage(setup, u);
  r.i_app = setup.applied_current();
  r.cathode_current = reaction_current(setup, u, Subdomain::Cathode);
  r.anode_current = reaction_current(setup, u, Subdomain::Anode);
  r.inventory = lithium_inventory(setup, u);
  r.stoichiometry = mean_stoichiometry(setup, u);
  const auto cs = u.field(Field::Cs);
  double lo = 1.0, hi = 0.0;
  for (std::size_t c = 0; c < setup.cells.size(); ++c) {
    const int e = setup.cells[c].electrode;
    if (e < 0) continue;
    const double th = cs[c * setup.n_c + setup.n_c - 1] / setup.electrode(e).cs_max;
    lo = std::min(lo, th);
    hi = std::max(hi, th);
  }
  r.min_surface_theta = lo;
  r.max_surface_theta = hi;
  return r;
}

TransientResult run_transient(const ProblemSetup& setup, const State& initial, std::size_t n_steps,
                              const SolverConfig& cfg,
                              const std::function<void(const StepReport&, const State&)>& on_step) {
  cfg.newton.validate();
  TransientResult out;
  out.state = initial;
  out.initial = observe(setup, initial);
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    NewtonResult nr = newton_solve(setup, out.state, out.state, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    if (!nr.report.converged) {
      out.ok = false;
      out.failure = nr.report.failure;
      out.message = "step " + std::to_string(k) + ": " + nr.report.message;
      return out;
    }
    out.state = std::move(nr.state);
    StepReport r = observe(setup, out.state);
    r.step = k;
    r.time = setup.dt * static_cast<double>(k);
    r.newton_iters = nr.report.iterations;
    r.gmres_iters = nr.report.gmres_iters;
    r.residual_norms = nr.report.residual_norms;
    r.residual_final = nr.report.residual_norms.back();
    r.gmres_histories = std::move(nr.report.gmres_histories);
    r.wall_time = std::chrono::duration<double>(t1 - t0).count();
    if (on_step) on_step(r, out.state);
    out.steps.push_back(std::move(r));
  }
  return out;
}

}  // namespace p4d
