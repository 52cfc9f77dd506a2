#pragma once

#include <functional>
#include <span>
#include <vector>

namespace p4d {

/// y = Op(x); x and y never alias.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct GmresOptions {
  int restart = 30;
  double rtol = 1e-5;
  double atol = 1e-50;
  int maxit = 10000;
};

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double initial_norm = 0.0;  // ||P^-1 (b - A x0)||
  double final_norm = 0.0;
  double rhs_norm = 0.0;      // ||P^-1 b||
  std::vector<double> residual_history;  // preconditioned residual estimate, one per iteration plus the start
};

/// Left-preconditioned restarted GMRES. Converged when
/// ||P^-1 (b - A x)|| <= max(rtol ||P^-1 b||, atol). x holds the initial guess
/// on entry and the best iterate on exit.
GmresResult gmres(const LinearOperator& A, const LinearOperator& P, std::span<const double> b,
                  std::span<double> x, const GmresOptions& opt = {});

}  // namespace p4d
