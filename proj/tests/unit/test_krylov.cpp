#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "p4d/amg.hpp"
#include "p4d/block.hpp"
#include "p4d/gmres.hpp"
#include "p4d/sparse.hpp"

using namespace p4d;

namespace {

CsrMatrix poisson(std::size_t n, int dim) {
  const std::size_t ny = dim > 1 ? n : 1, nz = dim > 2 ? n : 1;
  const std::size_t N = n * ny * nz;
  std::vector<Triplet> t;
  auto id = [&](std::size_t i, std::size_t j, std::size_t k) { return static_cast<Index>(i + n * (j + ny * k)); };
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const Index r = id(i, j, k);
        t.push_back({r, r, 2.0 * dim});
        if (i > 0) t.push_back({r, id(i - 1, j, k), -1});
        if (i + 1 < n) t.push_back({r, id(i + 1, j, k), -1});
        if (dim > 1 && j > 0) t.push_back({r, id(i, j - 1, k), -1});
        if (dim > 1 && j + 1 < ny) t.push_back({r, id(i, j + 1, k), -1});
        if (dim > 2 && k > 0) t.push_back({r, id(i, j, k - 1), -1});
        if (dim > 2 && k + 1 < nz) t.push_back({r, id(i, j, k + 1), -1});
      }
  return CsrMatrix::from_triplets(N, N, std::move(t));
}

Eigen::MatrixXd dense(const CsrMatrix& A) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.rows), static_cast<Eigen::Index>(A.cols));
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      M(static_cast<Eigen::Index>(i), A.col[k]) += A.values[k];
  return M;
}

LinearOperator op_of(const CsrMatrix& A) {
  return [&A](std::span<const double> x, std::span<double> y) { A.multiply(x, y); };
}

LinearOperator identity_op() {
  return [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
}

std::vector<double> random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("sparse kernels") {
  const auto A = CsrMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 0, 2}, {1, 0, 4}, {0, 1, 5}});
  CHECK(A.nnz() == 3);
  CHECK(A.at(0, 0) == 3.0);
  CHECK(A.at(1, 1) == 0.0);
  const auto T = A.transpose();
  CHECK(T.at(0, 1) == 4.0);
  const auto P = multiply(A, A);
  CHECK(P.at(0, 0) == 3.0 * 3.0 + 5.0 * 4.0);
}

TEST_CASE("GMRES on trivial systems") {
  const auto I = CsrMatrix::identity(7);
  const auto b = random_vector(7, 1);
  std::vector<double> x(7, 0.0);
  auto r = gmres(op_of(I), identity_op(), b, x);
  CHECK(r.converged);
  CHECK(r.iterations == 1);

  const auto A = CsrMatrix::from_triplets(2, 2, {{0, 0, 2}, {0, 1, 1}, {1, 1, 3}});
  const std::vector<double> b2{3.0, 3.0};
  std::vector<double> x2(2, 0.0);
  GmresOptions o;
  o.rtol = 1e-14;
  r = gmres(op_of(A), identity_op(), b2, x2, o);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(x2[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x2[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("GMRES residual history is monotone within a restart cycle") {
  const auto A = poisson(20, 2);
  const auto b = random_vector(A.rows, 2);
  std::vector<double> x(A.rows, 0.0);
  GmresOptions o;
  o.restart = 10;
  o.rtol = 1e-8;
  const auto r = gmres(op_of(A), identity_op(), b, x, o);
  CHECK(r.converged);
  for (std::size_t i = 1; i < r.residual_history.size(); ++i) {
    if ((i - 1) % 10 == 0) continue;  // first entry of a new cycle
    CHECK(r.residual_history[i] <= r.residual_history[i - 1] * (1 + 1e-12));
  }
}

TEST_CASE("GMRES reports non-convergence at maxit") {
  const auto A = poisson(30, 2);
  const auto b = random_vector(A.rows, 3);
  std::vector<double> x(A.rows, 0.0);
  GmresOptions o;
  o.maxit = 5;
  o.rtol = 1e-12;
  const auto r = gmres(op_of(A), identity_op(), b, x, o);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 5);
}

TEST_CASE("AMG V-cycle reduces the 1D Poisson residual") {
  const auto A = poisson(127, 1);
  const auto h = amg_setup(A);
  CHECK(h.num_levels() > 1);
  const auto b = random_vector(127, 4);
  std::vector<double> z(127), r(127);
  h.vcycle(b, z);
  A.multiply(z, r);
  for (std::size_t i = 0; i < 127; ++i) r[i] = b[i] - r[i];
  CHECK(norm2(r) * 5.0 <= norm2(b));
}

TEST_CASE("AMG on the identity degenerates to an exact solve") {
  const auto I = CsrMatrix::identity(100);
  const auto h = amg_setup(I);
  const auto b = random_vector(100, 5);
  std::vector<double> z(100);
  h.vcycle(b, z);
  for (std::size_t i = 0; i < 100; ++i) CHECK(std::abs(z[i] - b[i]) <= 1e-14);

  AmgParams tiny;
  tiny.dense_limit = 10;
  const auto big = amg_setup(CsrMatrix::identity(50), tiny);
  CHECK(big.jacobi_fallback());
  std::vector<double> z2(50);
  big.vcycle(std::span<const double>(b.data(), 50), z2);
  for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(z2[i] - b[i]) <= 1e-14);
}

TEST_CASE("AMG V-cycle is linear") {
  const auto A = poisson(12, 3);
  const auto h = amg_setup(A);
  const auto r1 = random_vector(A.rows, 6), r2 = random_vector(A.rows, 7);
  std::vector<double> z1(A.rows), z2(A.rows), z3(A.rows), comb(A.rows);
  for (std::size_t i = 0; i < A.rows; ++i) comb[i] = 2.5 * r1[i] - 0.75 * r2[i];
  h.vcycle(r1, z1);
  h.vcycle(r2, z2);
  h.vcycle(comb, z3);
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < A.rows; ++i) {
    err = std::max(err, std::abs(z3[i] - (2.5 * z1[i] - 0.75 * z2[i])));
    scale = std::max(scale, std::abs(z3[i]));
  }
  CHECK(err <= 1e-12 * scale);
}

TEST_CASE("AMG-preconditioned GMRES on 3D Poisson") {
  int its16 = 0;
  {
    const auto A = poisson(16, 3);
    const auto h = amg_setup(A);
    const auto b = random_vector(A.rows, 8);
    std::vector<double> x(A.rows, 0.0);
    GmresOptions o;
    o.rtol = 1e-8;
    const auto r = gmres(op_of(A), [&](auto in, auto out) { h.vcycle(in, out); }, b, x, o);
    CHECK(r.converged);
    its16 = r.iterations;
    // reference: dense-free check through a tight unpreconditioned-residual bound
    Eigen::VectorXd xe = dense(A).partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
    double diff = 0.0, nrm = 0.0;
    for (std::size_t i = 0; i < A.rows; ++i) {
      diff += (x[i] - xe[static_cast<Eigen::Index>(i)]) * (x[i] - xe[static_cast<Eigen::Index>(i)]);
      nrm += xe[static_cast<Eigen::Index>(i)] * xe[static_cast<Eigen::Index>(i)];
    }
    CHECK(std::sqrt(diff / nrm) <= 1e-6);
  }
  {
    const auto A = poisson(32, 3);
    const auto h = amg_setup(A);
    const auto b = random_vector(A.rows, 9);
    std::vector<double> x(A.rows, 0.0);
    GmresOptions o;
    o.rtol = 1e-8;
    const auto r = gmres(op_of(A), [&](auto in, auto out) { h.vcycle(in, out); }, b, x, o);
    CHECK(r.converged);
    CHECK(r.iterations <= 30);
    CHECK(r.iterations <= 1.5 * its16);
    MESSAGE("GMRES+AMG iterations 16^3: " << its16 << ", 32^3: " << r.iterations
            << ", levels " << h.num_levels() << ", complexity " << h.operator_complexity());
  }
}

TEST_CASE("batched tridiagonal solve") {
  // identity blocks
  const auto I = CsrMatrix::identity(12);
  const auto tb = TridiagBatch::from_csr(I, 4);
  const auto r = random_vector(12, 10);
  std::vector<double> z(12);
  tb.solve(r, z);
  CHECK(z == r);

  // random diagonally dominant 10x10 against a dense solve
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Triplet> t;
  for (Index i = 0; i < 10; ++i) {
    t.push_back({i, i, 4.0 + u(rng)});
    if (i > 0) t.push_back({i, i - 1, u(rng)});
    if (i < 9) t.push_back({i, i + 1, u(rng)});
  }
  const auto A = CsrMatrix::from_triplets(10, 10, t);
  const auto b = random_vector(10, 12);
  std::vector<double> x(10);
  TridiagBatch::from_csr(A, 10).solve(b, x);
  const Eigen::VectorXd xe = dense(A).partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), 10));
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(std::abs(x[static_cast<std::size_t>(i)] - xe[i]) <= 1e-12 * xe.cwiseAbs().maxCoeff());

  // two cells, the second singular
  const auto S = CsrMatrix::from_triplets(4, 4, {{0, 0, 1}, {1, 1, 1}, {2, 2, 0.0}, {3, 3, 1}});
  std::vector<double> y(4);
  const std::vector<double> ones(4, 1.0);
  CHECK_THROWS_WITH_AS(TridiagBatch::from_csr(S, 2).solve(ones, y), "zero pivot in particle block of cell 1", std::runtime_error);
}

namespace {

// Small random 4-field system with diagonally dominant diagonal blocks.
BlockMatrix random_block_system(unsigned seed, bool lower_only, const Ordering& order) {
  BlockMatrix M;
  M.layout = {6, 3, 2};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::array<int, 4> pos{};
  for (int k = 0; k < 4; ++k) pos[static_cast<int>(order[static_cast<std::size_t>(k)])] = k;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const auto fi = static_cast<Field>(i), fj = static_cast<Field>(j);
      const std::size_t ni = M.layout.size(fi), nj = M.layout.size(fj);
      std::vector<Triplet> t;
      if (i == j) {
        for (std::size_t r = 0; r < ni; ++r) {
          t.push_back({static_cast<Index>(r), static_cast<Index>(r), 5.0 + u(rng)});
          // keep the c_s block cell-tridiagonal
          if (r % (fi == Field::Cs ? 2 : ni) != 0) t.push_back({static_cast<Index>(r), static_cast<Index>(r - 1), u(rng)});
        }
      } else if (!lower_only || pos[i] > pos[j]) {
        for (std::size_t r = 0; r < ni; ++r)
          for (std::size_t c = 0; c < nj; ++c)
            if (u(rng) > 0.3) t.push_back({static_cast<Index>(r), static_cast<Index>(c), u(rng)});
      }
      M.blocks[i][j] = CsrMatrix::from_triplets(ni, nj, t);
    }
  return M;
}

PreconditionerSpec dense_spec(PrecondKind kind, const Ordering& o) {
  PreconditionerSpec s;
  s.kind = kind;
  s.ordering = o;
  s.inner = {InnerSolver::DirectDense, InnerSolver::DirectDense, InnerSolver::DirectDense, InnerSolver::TridiagDirect};
  return s;
}

}  // namespace

TEST_CASE("block Jacobi matches the block-diagonal inverse and ignores ordering") {
  const auto M = random_block_system(13, false, default_ordering());
  const auto r = random_vector(M.layout.total(), 14);
  std::vector<double> z1(r.size()), z2(r.size());
  BlockPreconditioner(M, dense_spec(PrecondKind::BJ, default_ordering())).apply(r, z1);
  BlockPreconditioner(M, dense_spec(PrecondKind::BJ, parse_ordering("c_s,c_e,phi_e,phi_s"))).apply(r, z2);
  CHECK(z1 == z2);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.size()));
  for (int f = 0; f < 4; ++f) {
    const auto o = static_cast<Eigen::Index>(M.layout.offset(static_cast<Field>(f)));
    const auto B = dense(M.blocks[f][f]);
    D.block(o, o, B.rows(), B.cols()) = B;
  }
  const Eigen::VectorXd ze = D.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(z1[i] - ze[static_cast<Eigen::Index>(i)]) <= 1e-12);
}

TEST_CASE("block Gauss-Seidel is forward substitution in the given ordering") {
  for (const auto& order : {default_ordering(), parse_ordering("phi_s,phi_e,c_e,c_s"), parse_ordering("c_e,c_s,phi_e,phi_s")}) {
    const auto M = random_block_system(15, false, order);
    const auto r = random_vector(M.layout.total(), 16);
    std::vector<double> z(r.size());
    BlockPreconditioner(M, dense_spec(PrecondKind::BGS, order)).apply(r, z);
    // dense oracle: block lower triangle in this ordering
    const auto A = dense(M.to_csr());
    Eigen::MatrixXd Lo = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        const Field fi = order[a], fj = order[b];
        const auto ro = static_cast<Eigen::Index>(M.layout.offset(fi)), co = static_cast<Eigen::Index>(M.layout.offset(fj));
        const auto ni = static_cast<Eigen::Index>(M.layout.size(fi)), nj = static_cast<Eigen::Index>(M.layout.size(fj));
        Lo.block(ro, co, ni, nj) = A.block(ro, co, ni, nj);
      }
    const Eigen::VectorXd ze = Lo.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(z[i] - ze[static_cast<Eigen::Index>(i)]) <= 1e-11);
  }
}

TEST_CASE("exact block preconditioners give one-iteration GMRES") {
  const Ordering order = parse_ordering("phi_e,c_s,phi_s,c_e");
  {
    const auto M = random_block_system(17, true, order);
    BlockPreconditioner P(M, dense_spec(PrecondKind::BGS, order));
    const auto b = random_vector(M.layout.total(), 18);
    std::vector<double> x(b.size(), 0.0);
    const auto r = gmres([&](auto in, auto out) { M.multiply(in, out); }, [&](auto in, auto out) { P.apply(in, out); }, b, x);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
  }
  {
    auto M = random_block_system(19, true, order);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) M.blocks[i][j] = CsrMatrix::empty(M.layout.size(static_cast<Field>(i)), M.layout.size(static_cast<Field>(j)));
    BlockPreconditioner P(M, dense_spec(PrecondKind::BJ, order));
    const auto b = random_vector(M.layout.total(), 20);
    std::vector<double> x(b.size(), 0.0);
    const auto r = gmres([&](auto in, auto out) { M.multiply(in, out); }, [&](auto in, auto out) { P.apply(in, out); }, b, x);
    CHECK(r.iterations == 1);
  }
}

TEST_CASE("orderings") {
  CHECK(all_orderings().size() == 24);
  CHECK(to_string(default_ordering()) == "phi_e,c_s,phi_s,c_e");
  CHECK_THROWS_AS(parse_ordering("phi_e,phi_e,phi_s,c_e"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ordering("phi_e,c_s,phi_s"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ordering("phi_e,c_s,phi_s,c_x"), std::invalid_argument);
}
