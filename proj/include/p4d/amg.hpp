#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "p4d/sparse.hpp"

namespace p4d {

struct AmgParams {
  double strength_threshold = 0.7;
  int presmooth = 1;
  int postsmooth = 1;
  int max_levels = 25;
  std::size_t coarse_size = 64;      // stop coarsening at or below this size
  std::size_t dense_limit = 4000;    // largest coarsest level factorized densely
  bool second_pass = true;           // Ruge-Stueben second pass over F-F connections
};

struct AmgLevel {
  CsrMatrix A;
  CsrMatrix P;  // interpolation to this level from the next coarser one
  CsrMatrix R;  // P^T
  std::vector<std::size_t> diag_pos;
};

class DenseLu;

/// Classical Ruge-Stueben hierarchy: strength of connection with a relative
/// threshold, first-pass C/F splitting by influence measure, optional second
/// pass, direct interpolation and Galerkin coarse operators. One application
/// is a V(pre, post) cycle with forward/backward Gauss-Seidel and a dense LU
/// on the coarsest level.
class AmgHierarchy {
public:
  AmgHierarchy() = default;
  AmgHierarchy(const AmgHierarchy&) = delete;
  AmgHierarchy& operator=(const AmgHierarchy&) = delete;
  AmgHierarchy(AmgHierarchy&&) noexcept;
  AmgHierarchy& operator=(AmgHierarchy&&) noexcept;
  ~AmgHierarchy();

  std::size_t num_levels() const { return levels_.size(); }
  const AmgLevel& level(std::size_t l) const { return levels_[l]; }
  /// Sum of nnz over all levels divided by nnz of the finest.
  double operator_complexity() const;
  /// True when the finest level could not be coarsened and exceeds the dense
  /// limit; the cycle then reduces to a Jacobi sweep.
  bool jacobi_fallback() const { return jacobi_fallback_; }

  /// z = V-cycle applied to r from a zero initial guess.
  void vcycle(std::span<const double> r, std::span<double> z) const;

private:
  friend AmgHierarchy amg_setup(const CsrMatrix& A, const AmgParams& params);

  void cycle(std::size_t l, std::span<const double> b, std::span<double> x) const;

  AmgParams params_;
  std::vector<AmgLevel> levels_;
  std::unique_ptr<DenseLu> coarse_;
  std::vector<double> inv_diag_;
  bool jacobi_fallback_ = false;
  mutable std::vector<std::vector<double>> work_r_, work_b_, work_x_;
};

AmgHierarchy amg_setup(const CsrMatrix& A, const AmgParams& params = {});

/// Number of Jacobi fallbacks taken by amg_setup since program start.
std::size_t amg_fallback_count();

// ---- building blocks, exposed for tests ----------------------------------

/// Strength graph: row i lists the j that i strongly depends on.
CsrMatrix strength_graph(const CsrMatrix& A, double threshold);

/// C/F splitting: true = coarse point.
std::vector<bool> ruge_stueben_split(const CsrMatrix& S, bool second_pass);

CsrMatrix direct_interpolation(const CsrMatrix& A, const CsrMatrix& S,
                               const std::vector<bool>& is_coarse);

/// Dense LU with row equilibration and partial pivoting.
class DenseLu {
public:
  explicit DenseLu(const CsrMatrix& A);
  ~DenseLu();
  void solve(std::span<const double> b, std::span<double> x) const;
  std::size_t size() const { return n_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t n_ = 0;
};

}  // namespace p4d
