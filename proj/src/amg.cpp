#include "p4d/amg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

namespace p4d {

namespace {

std::atomic<std::size_t> g_fallbacks{0};

std::vector<std::size_t> diagonal_positions(const CsrMatrix& A) {
  std::vector<std::size_t> pos(A.rows);
  for (std::size_t i = 0; i < A.rows; ++i) {
    const auto k = A.find(i, i);
    if (k < 0) throw std::runtime_error("AMG: missing diagonal entry in row " + std::to_string(i));
    pos[i] = static_cast<std::size_t>(k);
  }
  return pos;
}

void gauss_seidel_forward(const CsrMatrix& A, const std::vector<std::size_t>& dpos,
                          std::span<const double> b, std::span<double> x) {
  for (std::size_t i = 0; i < A.rows; ++i) {
    double s = b[i];
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (k != dpos[i]) s -= A.values[k] * x[static_cast<std::size_t>(A.col[k])];
    const double d = A.values[dpos[i]];
    if (d != 0.0) x[i] = s / d;
  }
}

void gauss_seidel_backward(const CsrMatrix& A, const std::vector<std::size_t>& dpos,
                           std::span<const double> b, std::span<double> x) {
  for (std::size_t i = A.rows; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (k != dpos[i]) s -= A.values[k] * x[static_cast<std::size_t>(A.col[k])];
    const double d = A.values[dpos[i]];
    if (d != 0.0) x[i] = s / d;
  }
}

}  // namespace

// ---- dense LU ---------------------------------------------------------------

struct DenseLu::Impl {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::VectorXd row_scale;
};

DenseLu::DenseLu(const CsrMatrix& A) : impl_(std::make_unique<Impl>()), n_(A.rows) {
  if (A.rows != A.cols) throw std::invalid_argument("dense LU needs a square matrix");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  impl_->row_scale.resize(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    double big = 0.0;
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) big = std::max(big, std::abs(A.values[k]));
    const double s = big > 0.0 ? 1.0 / big : 1.0;
    impl_->row_scale[static_cast<Eigen::Index>(i)] = s;
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      M(static_cast<Eigen::Index>(i), A.col[k]) = s * A.values[k];
  }
  impl_->lu.compute(M);
}

DenseLu::~DenseLu() = default;

void DenseLu::solve(std::span<const double> b, std::span<double> x) const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) rhs[i] = impl_->row_scale[i] * b[static_cast<std::size_t>(i)];
  const Eigen::VectorXd sol = impl_->lu.solve(rhs);
  for (Eigen::Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = sol[i];
}

// ---- coarsening ---------------------------------------------------------------

CsrMatrix strength_graph(const CsrMatrix& A, double threshold) {
  CsrMatrix S;
  S.rows = S.cols = A.rows;
  S.row_ptr.assign(A.rows + 1, 0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double diag = 0.0;
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (static_cast<std::size_t>(A.col[k]) == i) diag = A.values[k];
    const double sign = diag < 0.0 ? -1.0 : 1.0;
    double big = 0.0;
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (static_cast<std::size_t>(A.col[k]) != i) big = std::max(big, -sign * A.values[k]);
    if (big > 0.0) {
      for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
        const auto j = static_cast<std::size_t>(A.col[k]);
        if (j != i && -sign * A.values[k] >= threshold * big) {
          S.col.push_back(A.col[k]);
          S.values.push_back(1.0);
        }
      }
    }
    S.row_ptr[i + 1] = S.col.size();
  }
  return S;
}

std::vector<bool> ruge_stueben_split(const CsrMatrix& S, bool second_pass) {
  enum : unsigned char { kU, kC, kF };
  const std::size_t n = S.rows;
  const CsrMatrix ST = S.transpose();
  std::vector<unsigned char> state(n, kU);
  std::vector<long> lambda(n, 0);
  std::set<std::pair<long, std::size_t>> queue;

  for (std::size_t i = 0; i < n; ++i) {
    lambda[i] = static_cast<long>(ST.row_ptr[i + 1] - ST.row_ptr[i]);
    const bool depends = S.row_ptr[i + 1] > S.row_ptr[i];
    if (!depends && lambda[i] == 0) {
      state[i] = kF;  // isolated
      continue;
    }
    queue.insert({lambda[i], i});
  }

  auto bump = [&](std::size_t k, long delta) {
    queue.erase({lambda[k], k});
    lambda[k] += delta;
    queue.insert({lambda[k], k});
  };

  while (!queue.empty()) {
    const auto top = std::prev(queue.end());
    const std::size_t i = top->second;
    if (top->first <= 0) break;
    queue.erase(top);
    state[i] = kC;
    for (std::size_t k = ST.row_ptr[i]; k < ST.row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(ST.col[k]);
      if (state[j] != kU) continue;
      state[j] = kF;
      queue.erase({lambda[j], j});
      for (std::size_t m = S.row_ptr[j]; m < S.row_ptr[j + 1]; ++m) {
        const auto q = static_cast<std::size_t>(S.col[m]);
        if (state[q] == kU) bump(q, 1);
      }
    }
    for (std::size_t k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(S.col[k]);
      if (state[j] == kU) bump(j, -1);
    }
  }

  // Leftovers nobody depends on: F if they can interpolate from a C point, else C.
  for (const auto& [lam, i] : queue) {
    bool has_c = false;
    for (std::size_t k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k)
      has_c = has_c || state[static_cast<std::size_t>(S.col[k])] == kC;
    state[i] = has_c ? kF : kC;
  }

  if (second_pass) {
    std::vector<std::size_t> mark(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] != kF) continue;
      for (std::size_t k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k) {
        const auto j = static_cast<std::size_t>(S.col[k]);
        if (state[j] == kC) mark[j] = i;
      }
      for (std::size_t k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k) {
        const auto j = static_cast<std::size_t>(S.col[k]);
        if (state[j] != kF) continue;
        bool shared = false;
        for (std::size_t m = S.row_ptr[j]; m < S.row_ptr[j + 1] && !shared; ++m)
          shared = mark[static_cast<std::size_t>(S.col[m])] == i;
        if (!shared) {
          state[j] = kC;
          mark[j] = i;
        }
      }
    }
  }

  std::vector<bool> coarse(n);
  for (std::size_t i = 0; i < n; ++i) coarse[i] = state[i] == kC;
  return coarse;
}

CsrMatrix direct_interpolation(const CsrMatrix& A, const CsrMatrix& S,
                               const std::vector<bool>& is_coarse) {
  const std::size_t n = A.rows;
  std::vector<Index> cidx(n, -1);
  Index nc = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (is_coarse[i]) cidx[i] = nc++;

  CsrMatrix P;
  P.rows = n;
  P.cols = static_cast<std::size_t>(nc);
  P.row_ptr.assign(n + 1, 0);
  std::vector<std::size_t> strong_mark(n, n);

  for (std::size_t i = 0; i < n; ++i) {
    if (is_coarse[i]) {
      P.col.push_back(cidx[i]);
      P.values.push_back(1.0);
      P.row_ptr[i + 1] = P.col.size();
      continue;
    }
    for (std::size_t k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k) strong_mark[static_cast<std::size_t>(S.col[k])] = i;

    double neg_all = 0.0, pos_all = 0.0, neg_c = 0.0, pos_c = 0.0;
    const double diag = A.at(i, i);
    const double sign = diag < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(A.col[k]);
      if (j == i) continue;
      const double a = sign * A.values[k];
      const bool c_strong = is_coarse[j] && strong_mark[j] == i;
      if (a < 0.0) {
        neg_all += a;
        if (c_strong) neg_c += a;
      } else {
        pos_all += a;
        if (c_strong) pos_c += a;
      }
    }
    double d = sign * diag;
    const double alpha = neg_c != 0.0 ? neg_all / neg_c : 0.0;
    double beta = 0.0;
    if (pos_c != 0.0) beta = pos_all / pos_c;
    else d += pos_all;

    if (d != 0.0) {
      for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
        const auto j = static_cast<std::size_t>(A.col[k]);
        if (j == i || !is_coarse[j] || strong_mark[j] != i) continue;
        const double a = sign * A.values[k];
        const double w = a < 0.0 ? -alpha * a / d : -beta * a / d;
        if (w != 0.0) {
          P.col.push_back(cidx[j]);
          P.values.push_back(w);
        }
      }
    }
    // Columns come out in A's column order, which is ascending; cidx preserves order.
    P.row_ptr[i + 1] = P.col.size();
  }
  return P;
}

// ---- hierarchy ------------------------------------------------------------------

AmgHierarchy::AmgHierarchy(AmgHierarchy&&) noexcept = default;
AmgHierarchy& AmgHierarchy::operator=(AmgHierarchy&&) noexcept = default;
AmgHierarchy::~AmgHierarchy() = default;

std::size_t amg_fallback_count() { return g_fallbacks.load(); }

AmgHierarchy amg_setup(const CsrMatrix& A, const AmgParams& params) {
  if (A.rows != A.cols) throw std::invalid_argument("AMG needs a square matrix");
  AmgHierarchy h;
  h.params_ = params;
  h.levels_.push_back({A, {}, {}, diagonal_positions(A)});

  while (h.levels_.size() < static_cast<std::size_t>(params.max_levels)) {
    const CsrMatrix& Af = h.levels_.back().A;
    if (Af.rows <= params.coarse_size) break;
    const CsrMatrix S = strength_graph(Af, params.strength_threshold);
    const auto coarse = ruge_stueben_split(S, params.second_pass);
    const auto nc = static_cast<std::size_t>(std::count(coarse.begin(), coarse.end(), true));
    if (nc == 0 || nc >= Af.rows) break;
    CsrMatrix P = direct_interpolation(Af, S, coarse);
    CsrMatrix Ac = galerkin_product(Af, P);
    h.levels_.back().R = P.transpose();
    h.levels_.back().P = std::move(P);
    auto dpos = diagonal_positions(Ac);
    h.levels_.push_back({std::move(Ac), {}, {}, std::move(dpos)});
  }

  const CsrMatrix& Ac = h.levels_.back().A;
  if (Ac.rows <= params.dense_limit) {
    h.coarse_ = std::make_unique<DenseLu>(Ac);
  } else if (h.levels_.size() == 1) {
    h.jacobi_fallback_ = true;
    ++g_fallbacks;
    h.inv_diag_.resize(A.rows);
    const auto d = A.diagonal();
    for (std::size_t i = 0; i < A.rows; ++i) h.inv_diag_[i] = d[i] != 0.0 ? 1.0 / d[i] : 0.0;
  }

  h.work_r_.resize(h.levels_.size());
  h.work_b_.resize(h.levels_.size());
  h.work_x_.resize(h.levels_.size());
  for (std::size_t l = 0; l < h.levels_.size(); ++l) {
    const std::size_t n = h.levels_[l].A.rows;
    h.work_r_[l].resize(n);
    h.work_b_[l].resize(n);
    h.work_x_[l].resize(n);
  }
  return h;
}

double AmgHierarchy::operator_complexity() const {
  double total = 0.0;
  for (const auto& l : levels_) total += static_cast<double>(l.A.nnz());
  return total / static_cast<double>(levels_.front().A.nnz());
}

void AmgHierarchy::vcycle(std::span<const double> r, std::span<double> z) const {
  if (jacobi_fallback_) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
    return;
  }
  std::fill(z.begin(), z.end(), 0.0);
  cycle(0, r, z);
}

void AmgHierarchy::cycle(std::size_t l, std::span<const double> b, std::span<double> x) const {
  const AmgLevel& lev = levels_[l];
  if (l + 1 == levels_.size()) {
    if (coarse_) {
      coarse_->solve(b, x);
    } else {
      for (int s = 0; s < 2; ++s) {
        gauss_seidel_forward(lev.A, lev.diag_pos, b, x);
        gauss_seidel_backward(lev.A, lev.diag_pos, b, x);
      }
    }
    return;
  }
  for (int s = 0; s < params_.presmooth; ++s) gauss_seidel_forward(lev.A, lev.diag_pos, b, x);

  auto& r = work_r_[l];
  lev.A.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];

  auto& bc = work_b_[l + 1];
  auto& xc = work_x_[l + 1];
  lev.R.multiply(r, bc);
  std::fill(xc.begin(), xc.end(), 0.0);
  cycle(l + 1, bc, xc);
  lev.P.multiply_add(1.0, xc, x);

  for (int s = 0; s < params_.postsmooth; ++s) gauss_seidel_backward(lev.A, lev.diag_pos, b, x);
}

}  // namespace p4d
