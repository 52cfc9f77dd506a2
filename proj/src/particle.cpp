#include "p4d/particle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace p4d {

RadialGrid radial_grid(std::size_t n, double radius, double theta_bar) {
  if (n < 3) throw std::invalid_argument("radial grid needs at least 3 nodes");
  if (!(theta_bar > 0.0 && theta_bar <= 1.0))
    throw std::invalid_argument("theta_bar must lie in (0, 1]");
  if (!(radius > 0.0)) throw std::invalid_argument("particle radius must be positive");
  const double q = std::pow(theta_bar, 1.0 / static_cast<double>(n - 2));
  std::vector<double> h(n - 1);
  double w = 1.0, sum = 0.0;
  for (auto& hi : h) {
    hi = w;
    sum += w;
    w *= q;
  }
  RadialGrid g;
  g.theta_bar = theta_bar;
  g.r.resize(n);
  g.r[0] = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    acc += h[i];
    g.r[i + 1] = radius * acc / sum;
  }
  g.r.back() = radius;
  return g;
}

RadialGrid radial_grid_from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 3) throw std::invalid_argument("radial grid needs at least 3 nodes");
  if (nodes.front() != 0.0) throw std::invalid_argument("radial grid must start at r = 0");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw std::invalid_argument("radial nodes must increase");
  RadialGrid g;
  g.r = std::move(nodes);
  g.theta_bar = 0.0;
  return g;
}

RadialGrid alternating_radial_grid(std::size_t n, double radius) {
  std::vector<double> h(n - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) sum += (h[i] = (i % 2 == 0) ? 1.0 : 2.0);
  std::vector<double> r(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    acc += h[i];
    r[i + 1] = radius * acc / sum;
  }
  r.back() = radius;
  return radial_grid_from_nodes(std::move(r));
}

ParticleOperator particle_operator(const RadialGrid& grid, double D_s, double faraday) {
  const std::size_t n = grid.size();
  ParticleOperator op;
  op.D_s = D_s;
  op.rows.sub.assign(n, 0.0);
  op.rows.diag.assign(n, 0.0);
  op.rows.super.assign(n, 0.0);

  const double h0 = grid.spacing(0);
  op.rows.diag[0] = -6.0 * D_s / (h0 * h0);
  op.rows.super[0] = 6.0 * D_s / (h0 * h0);

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = grid.spacing(i - 1);
    const double hp = grid.spacing(i);
    const double th = hp / hm;
    // first-derivative part 2D/r c', second-derivative part D c''
    const double c1 = 2.0 * D_s / (grid.r[i] * hp * (1.0 + th));
    const double c2 = 2.0 * D_s / (hp * hm * (1.0 + th));
    op.rows.super[i] = c1 + c2;
    op.rows.sub[i] = -c1 * th * th + c2 * th;
    op.rows.diag[i] = -c1 * (1.0 - th * th) - c2 * (1.0 + th);
  }

  const double hl = grid.spacing(n - 2);
  op.rows.sub[n - 1] = 2.0 * D_s / (hl * hl);
  op.rows.diag[n - 1] = -2.0 * D_s / (hl * hl);
  op.beta = 2.0 / (faraday * hl) * (1.0 + hl / grid.radius());
  return op;
}

std::vector<double> ParticleOperator::apply(std::span<const double> c, double i_n) const {
  const std::size_t n = size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = rows.diag[i] * c[i];
    if (i > 0) v += rows.sub[i] * c[i - 1];
    if (i + 1 < n) v += rows.super[i] * c[i + 1];
    out[i] = v;
  }
  out[n - 1] -= beta * i_n;
  return out;
}

void particle_step_residual(const ParticleOperator& op, std::span<const double> cs_new,
                            std::span<const double> cs_old, double dt, double i_n, bool frozen,
                            std::span<double> out) {
  const std::size_t n = op.size();
  const double inv_dt = 1.0 / dt;
  for (std::size_t i = 0; i < n; ++i) out[i] = (cs_new[i] - cs_old[i]) * inv_dt;
  if (frozen) return;
  const auto& t = op.rows;
  for (std::size_t i = 0; i < n; ++i) {
    double l = t.diag[i] * cs_new[i];
    if (i > 0) l += t.sub[i] * cs_new[i - 1];
    if (i + 1 < n) l += t.super[i] * cs_new[i + 1];
    out[i] -= l;
  }
  out[n - 1] += op.beta * i_n;
}

std::vector<double> particle_step_residual(const ParticleOperator& op,
                                           std::span<const double> cs_new,
                                           std::span<const double> cs_old, double dt, double i_n,
                                           bool frozen) {
  std::vector<double> out(op.size());
  particle_step_residual(op, cs_new, cs_old, dt, i_n, frozen, out);
  return out;
}

Tridiagonal tridiag_jacobian(const ParticleOperator& op, double dt, double d_in_d_cs_surf,
                             bool frozen) {
  const std::size_t n = op.size();
  Tridiagonal j;
  j.sub.assign(n, 0.0);
  j.super.assign(n, 0.0);
  j.diag.assign(n, 1.0 / dt);
  if (frozen) return j;
  for (std::size_t i = 0; i < n; ++i) {
    j.diag[i] -= op.rows.diag[i];
    if (i > 0) j.sub[i] = -op.rows.sub[i];
    if (i + 1 < n) j.super[i] = -op.rows.super[i];
  }
  j.diag[n - 1] += op.beta * d_in_d_cs_surf;
  return j;
}

std::vector<double> trapezoid_weights(const RadialGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = grid.spacing(i);
    w[i] += 0.5 * h * grid.r[i] * grid.r[i];
    w[i + 1] += 0.5 * h * grid.r[i + 1] * grid.r[i + 1];
  }
  return w;
}

std::vector<double> conservative_weights(const ParticleOperator& op, double radius) {
  // Solve w^T L = 0 column by column: column j couples w_{j-1}, w_j, w_{j+1}.
  const std::size_t n = op.size();
  const auto& t = op.rows;
  std::vector<double> w(n, 0.0);
  w[0] = 1.0;
  w[1] = -w[0] * t.diag[0] / t.sub[1];
  for (std::size_t j = 1; j + 1 < n; ++j)
    w[j + 1] = -(w[j - 1] * t.super[j - 1] + w[j] * t.diag[j]) / t.sub[j + 1];
  double sum = 0.0;
  for (double v : w) sum += v;
  const double scale = radius * radius * radius / 3.0 / sum;
  for (double& v : w) v *= scale;
  return w;
}

void thomas_solve(const Tridiagonal& t, std::span<const double> rhs, std::span<double> x) {
  const std::size_t n = t.size();
  std::vector<double> c(n);
  double pivot = t.diag[0];
  if (pivot == 0.0) throw std::runtime_error("zero pivot at row 0");
  c[0] = n > 1 ? t.super[0] / pivot : 0.0;
  x[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = t.diag[i] - t.sub[i] * c[i - 1];
    if (pivot == 0.0) throw std::runtime_error("zero pivot at row " + std::to_string(i));
    c[i] = i + 1 < n ? t.super[i] / pivot : 0.0;
    x[i] = (rhs[i] - t.sub[i] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
}

namespace {

struct Manufactured {
  double radius;
  double k;

  double value(double r) const {
    return std::cos(k * r) + 0.3 * (r / radius) * (r / radius);
  }
  double slope(double r) const { return -k * std::sin(k * r) + 0.6 * r / (radius * radius); }
  // c'' + 2 c' / r, with the r -> 0 limit 3 c''(0)
  double laplacian(double r) const {
    const double second = -k * k * std::cos(k * r) + 0.6 / (radius * radius);
    if (r == 0.0) return 3.0 * (-k * k + 0.6 / (radius * radius));
    return second + 2.0 * slope(r) / r;
  }
};

double fit_order(const std::vector<ConvergenceLevel>& levels, double ConvergenceLevel::*field) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(levels.size());
  for (const auto& l : levels) {
    const double x = std::log(l.h), y = std::log(l.*field);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

ConvergenceStudy particle_convergence_study(const std::function<RadialGrid(std::size_t)>& family,
                                            std::span<const std::size_t> sizes, double radius,
                                            double D_s, double faraday) {
  const Manufactured exact{radius, 1.3 * std::numbers::pi / radius};
  const double tau = radius * radius / D_s;
  const double i_n = -faraday * D_s * exact.slope(radius);

  ConvergenceStudy study;
  for (const std::size_t n : sizes) {
    const RadialGrid grid = family(n);
    const ParticleOperator op = particle_operator(grid, D_s, faraday);

    std::vector<double> c_exact(n), source(n);
    for (std::size_t i = 0; i < n; ++i) {
      c_exact[i] = exact.value(grid.r[i]);
      source[i] = D_s * exact.laplacian(grid.r[i]);
    }

    // Truncation error of L_h on the exact profile, surface flux node excluded.
    const auto lc = op.apply(c_exact, i_n);
    double trunc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) trunc = std::max(trunc, std::abs(lc[i] - source[i]));

    // (I/tau - L_h) c = c_exact/tau - D lap(c_exact): one backward-Euler step
    // with cs_old = tau * rhs, solved through the residual/Jacobian pair.
    std::vector<double> old(n), zero(n, 0.0), res(n), x(n);
    for (std::size_t i = 0; i < n; ++i) old[i] = c_exact[i] - tau * source[i];
    particle_step_residual(op, zero, old, tau, i_n, false, res);
    for (double& v : res) v = -v;
    thomas_solve(tridiag_jacobian(op, tau, 0.0), res, x);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(x[i] - c_exact[i]));

    study.levels.push_back({n, radius / static_cast<double>(n - 1), err, trunc});
  }
  if (study.levels.size() >= 2) {
    study.solution_order = fit_order(study.levels, &ConvergenceLevel::solution_error);
    study.truncation_order = fit_order(study.levels, &ConvergenceLevel::truncation_error);
  }
  return study;
}

}  // namespace p4d
