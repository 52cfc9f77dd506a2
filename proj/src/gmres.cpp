#include "p4d/gmres.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "p4d/sparse.hpp"

namespace p4d {

GmresResult gmres(const LinearOperator& A, const LinearOperator& P, std::span<const double> b,
                  std::span<double> x, const GmresOptions& opt) {
  if (x.size() != b.size()) throw std::invalid_argument("gmres: x and b differ in size");
  if (opt.restart < 1) throw std::invalid_argument("gmres: restart must be positive");
  const std::size_t n = b.size();
  const auto m = static_cast<std::size_t>(opt.restart);

  GmresResult res;
  std::vector<double> tmp(n), w(n);
  P(b, w);
  res.rhs_norm = norm2(w);
  const double target = std::max(opt.rtol * res.rhs_norm, opt.atol);

  std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
  std::vector<double> H((m + 1) * m), cs(m), sn(m), g(m + 1), y(m);
  auto h = [&](std::size_t i, std::size_t j) -> double& { return H[i * m + j]; };

  bool first = true;
  while (true) {
    A(x, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = b[i] - tmp[i];
    P(tmp, V[0]);
    const double beta = norm2(V[0]);
    if (first) {
      res.initial_norm = beta;
      res.residual_history.push_back(beta);
      first = false;
    }
    res.final_norm = beta;
    if (beta <= target) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.maxit || !std::isfinite(beta)) break;

    for (double& v : V[0]) v /= beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    std::size_t k = 0;
    bool stop = false;
    while (k < m && !stop) {
      A(V[k], tmp);
      P(tmp, w);
      // modified Gram-Schmidt, then one reorthogonalization sweep
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i <= k; ++i) {
          const double c = dot(w, V[i]);
          if (pass == 0) h(i, k) = c;
          else h(i, k) += c;
          axpy(-c, V[i], w);
        }
      }
      const double hn = norm2(w);
      h(k + 1, k) = hn;
      if (hn > 0.0)
        for (std::size_t i = 0; i < n; ++i) V[k + 1][i] = w[i] / hn;

      for (std::size_t i = 0; i < k; ++i) {
        const double a = h(i, k), c = h(i + 1, k);
        h(i, k) = cs[i] * a + sn[i] * c;
        h(i + 1, k) = -sn[i] * a + cs[i] * c;
      }
      const double a = h(k, k), c = h(k + 1, k);
      const double r = std::hypot(a, c);
      cs[k] = r > 0.0 ? a / r : 1.0;
      sn[k] = r > 0.0 ? c / r : 0.0;
      h(k, k) = r;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];

      ++res.iterations;
      ++k;
      const double est = std::abs(g[k]);
      res.residual_history.push_back(est);
      stop = est <= target || res.iterations >= opt.maxit || hn == 0.0;
    }

    for (std::size_t i = k; i-- > 0;) {
      double s = g[i];
      for (std::size_t j = i + 1; j < k; ++j) s -= h(i, j) * y[j];
      y[i] = h(i, i) != 0.0 ? s / h(i, i) : 0.0;
    }
    for (std::size_t i = 0; i < k; ++i) axpy(y[i], V[i], x);
  }
  return res;
}

}  // namespace p4d
