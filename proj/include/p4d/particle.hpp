#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace p4d {

/// Radial nodes r_0 = 0 < r_1 < ... < r_{N-1} = R_s.
struct RadialGrid {
  std::vector<double> r;
  double theta_bar = 1.0;  // per-step ratio is theta_bar^(1/(N-2)); 1 = uniform

  std::size_t size() const { return r.size(); }
  double radius() const { return r.back(); }
  double spacing(std::size_t i) const { return r[i + 1] - r[i]; }
};

/// Geometric grid: dr_i = theta_bar^(1/(N-2)) dr_{i-1}, cells shrinking toward
/// the surface for theta_bar < 1. Throws std::invalid_argument if N < 3 or
/// theta_bar is outside (0, 1].
RadialGrid radial_grid(std::size_t n, double radius, double theta_bar);

/// Grid from explicit nodes (must start at 0 and increase strictly).
RadialGrid radial_grid_from_nodes(std::vector<double> nodes);

struct Tridiagonal {
  std::vector<double> sub;    // sub[i] multiplies x[i-1]; sub[0] unused
  std::vector<double> diag;
  std::vector<double> super;  // super[i] multiplies x[i+1]; super[N-1] unused

  std::size_t size() const { return diag.size(); }
};

/// Discrete spherical Laplacian D (c'' + 2c'/r) with the symmetry condition at
/// r = 0 and the reaction flux -D c'(R) = i_n / F at the surface. The operator
/// rows hold the zero-flux part; the flux enters the surface row as -beta * i_n.
struct ParticleOperator {
  Tridiagonal rows;
  double beta = 0.0;  // (2 / (F dr_last)) (1 + dr_last / R_s)
  double D_s = 0.0;

  std::size_t size() const { return rows.size(); }
  /// (L_h c)_i including the flux term.
  std::vector<double> apply(std::span<const double> c, double i_n) const;
};

ParticleOperator particle_operator(const RadialGrid& grid, double D_s, double faraday);

/// Backward-Euler residual (c_new - c_old)/dt - L_h(c_new). Frozen particles
/// (outside the electrodes) have residual (c_new - c_old)/dt.
void particle_step_residual(const ParticleOperator& op, std::span<const double> cs_new,
                            std::span<const double> cs_old, double dt, double i_n, bool frozen,
                            std::span<double> out);
std::vector<double> particle_step_residual(const ParticleOperator& op,
                                           std::span<const double> cs_new,
                                           std::span<const double> cs_old, double dt, double i_n,
                                           bool frozen = false);

/// Jacobian of particle_step_residual with respect to cs_new; the surface
/// diagonal carries +beta * d(i_n)/d(cs_surf).
Tridiagonal tridiag_jacobian(const ParticleOperator& op, double dt, double d_in_d_cs_surf,
                             bool frozen = false);

/// Trapezoidal weights w with sum_i w_i c_i ~ int_0^R c r^2 dr.
std::vector<double> trapezoid_weights(const RadialGrid& grid);

/// Left null vector of the zero-flux operator scaled to sum R^3/3. With these
/// weights the particle mass changes by exactly -w_last * beta * i_n per unit time.
std::vector<double> conservative_weights(const ParticleOperator& op, double radius);

/// One row of a convergence study.
struct ConvergenceLevel {
  std::size_t n;
  double h;                  // R / (N - 1)
  double solution_error;     // max-norm, shifted steady manufactured problem
  double truncation_error;   // max-norm over nodes 0..N-2
};

struct ConvergenceStudy {
  std::vector<ConvergenceLevel> levels;
  double solution_order = 0.0;    // least-squares slope of log error vs log h
  double truncation_order = 0.0;
};

/// Manufactured-solution study for a grid family (N -> grid). Solves
/// (I/tau - L_h) c = g with tau = R^2/D and exact c(r) = cos(1.3 pi r / R) + 0.3 (r/R)^2.
ConvergenceStudy particle_convergence_study(const std::function<RadialGrid(std::size_t)>& family,
                                            std::span<const std::size_t> sizes, double radius,
                                            double D_s, double faraday);

/// Grid whose cell sizes alternate between h and 2h (violates local regularity at every node).
RadialGrid alternating_radial_grid(std::size_t n, double radius);

/// Thomas algorithm; throws std::runtime_error on a zero pivot.
void thomas_solve(const Tridiagonal& t, std::span<const double> rhs, std::span<double> x);

}  // namespace p4d
