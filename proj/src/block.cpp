#include "p4d/block.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace p4d {

const char* to_string(Field f) {
  switch (f) {
    case Field::PhiS: return "phi_s";
    case Field::PhiE: return "phi_e";
    case Field::Ce: return "c_e";
    case Field::Cs: return "c_s";
  }
  return "?";
}

Field parse_field(const std::string& name) {
  for (int i = 0; i < kNumFields; ++i)
    if (name == to_string(static_cast<Field>(i))) return static_cast<Field>(i);
  throw std::invalid_argument("unknown field '" + name + "'");
}

Ordering default_ordering() { return {Field::PhiE, Field::Cs, Field::PhiS, Field::Ce}; }

Ordering parse_ordering(const std::string& text) {
  Ordering o{};
  std::array<bool, 4> seen{};
  std::stringstream ss(text);
  std::string tok;
  int k = 0;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (k >= 4) throw std::invalid_argument("ordering has more than four fields: " + text);
    const Field f = parse_field(tok);
    if (seen[static_cast<int>(f)]) throw std::invalid_argument("ordering repeats a field: " + text);
    seen[static_cast<int>(f)] = true;
    o[static_cast<std::size_t>(k++)] = f;
  }
  if (k != 4) throw std::invalid_argument("ordering must list all four fields: " + text);
  return o;
}

std::string to_string(const Ordering& o) {
  std::string s;
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (i) s += ",";
    s += to_string(o[i]);
  }
  return s;
}

std::vector<Ordering> all_orderings() {
  std::array<int, 4> p{0, 1, 2, 3};
  std::vector<Ordering> out;
  do {
    out.push_back({static_cast<Field>(p[0]), static_cast<Field>(p[1]), static_cast<Field>(p[2]),
                   static_cast<Field>(p[3])});
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

const char* to_string(PrecondKind k) { return k == PrecondKind::BJ ? "BJ" : "BGS"; }

PrecondKind parse_precond_kind(const std::string& s) {
  if (s == "BJ") return PrecondKind::BJ;
  if (s == "BGS") return PrecondKind::BGS;
  throw std::invalid_argument("preconditioner kind must be BJ or BGS, got '" + s + "'");
}

const char* to_string(InnerSolver s) {
  switch (s) {
    case InnerSolver::AmgVcycle: return "AMG_VCYCLE";
    case InnerSolver::TridiagDirect: return "TRIDIAG_DIRECT";
    case InnerSolver::Jacobi: return "JACOBI";
    case InnerSolver::DirectDense: return "DIRECT_DENSE";
  }
  return "?";
}

InnerSolver parse_inner_solver(const std::string& s) {
  for (auto v : {InnerSolver::AmgVcycle, InnerSolver::TridiagDirect, InnerSolver::Jacobi,
                 InnerSolver::DirectDense})
    if (s == to_string(v)) return v;
  throw std::invalid_argument("unknown inner solver '" + s + "'");
}

// ---- BlockMatrix ----------------------------------------------------------------

void BlockMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < kNumFields; ++i) {
    const auto fi = static_cast<Field>(i);
    std::span<double> yi = y.subspan(layout.offset(fi), layout.size(fi));
    std::fill(yi.begin(), yi.end(), 0.0);
    for (int j = 0; j < kNumFields; ++j) {
      const auto fj = static_cast<Field>(j);
      const CsrMatrix& B = blocks[i][j];
      if (B.nnz() == 0) continue;
      B.multiply_add(1.0, x.subspan(layout.offset(fj), layout.size(fj)), yi);
    }
  }
}

CsrMatrix BlockMatrix::to_csr() const {
  std::vector<Triplet> t;
  for (int i = 0; i < kNumFields; ++i)
    for (int j = 0; j < kNumFields; ++j) {
      const CsrMatrix& B = blocks[i][j];
      const auto ro = static_cast<Index>(layout.offset(static_cast<Field>(i)));
      const auto co = static_cast<Index>(layout.offset(static_cast<Field>(j)));
      for (std::size_t r = 0; r < B.rows; ++r)
        for (std::size_t k = B.row_ptr[r]; k < B.row_ptr[r + 1]; ++k)
          t.push_back({ro + static_cast<Index>(r), co + B.col[k], B.values[k]});
    }
  return CsrMatrix::from_triplets(layout.total(), layout.total(), std::move(t));
}

// ---- tridiagonal batch -------------------------------------------------------------

TridiagBatch TridiagBatch::from_csr(const CsrMatrix& A, std::size_t n_c) {
  if (n_c == 0 || A.rows % n_c != 0) throw std::invalid_argument("tridiagonal batch: bad block size");
  TridiagBatch t;
  t.n_c = n_c;
  t.num_cells = A.rows / n_c;
  t.sub.assign(A.rows, 0.0);
  t.diag.assign(A.rows, 0.0);
  t.super.assign(A.rows, 0.0);
  for (std::size_t r = 0; r < A.rows; ++r) {
    const std::size_t local = r % n_c;
    for (std::size_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
      const auto c = static_cast<std::size_t>(A.col[k]);
      if (c == r) t.diag[r] = A.values[k];
      else if (c + 1 == r && local > 0) t.sub[r] = A.values[k];
      else if (c == r + 1 && local + 1 < n_c) t.super[r] = A.values[k];
      else if (A.values[k] != 0.0)
        throw std::invalid_argument("tridiagonal batch: entry outside the cell tridiagonal");
    }
  }
  return t;
}

void TridiagBatch::solve(std::span<const double> r, std::span<double> z) const {
  const auto cells = static_cast<std::ptrdiff_t>(num_cells);
  std::ptrdiff_t bad = -1;
#pragma omp parallel
  {
    std::vector<double> c(n_c);
#pragma omp for schedule(static)
    for (std::ptrdiff_t cell = 0; cell < cells; ++cell) {
      const std::size_t o = static_cast<std::size_t>(cell) * n_c;
      double pivot = diag[o];
      if (pivot == 0.0) {
#pragma omp critical
        bad = bad < 0 ? cell : std::min(bad, cell);
        continue;
      }
      c[0] = super[o] / pivot;
      z[o] = r[o] / pivot;
      bool ok = true;
      for (std::size_t i = 1; i < n_c; ++i) {
        pivot = diag[o + i] - sub[o + i] * c[i - 1];
        if (pivot == 0.0) {
          ok = false;
          break;
        }
        c[i] = super[o + i] / pivot;
        z[o + i] = (r[o + i] - sub[o + i] * z[o + i - 1]) / pivot;
      }
      if (!ok) {
#pragma omp critical
        bad = bad < 0 ? cell : std::min(bad, cell);
        continue;
      }
      for (std::size_t i = n_c - 1; i-- > 0;) z[o + i] -= c[i] * z[o + i + 1];
    }
  }
  if (bad >= 0) throw std::runtime_error("zero pivot in particle block of cell " + std::to_string(bad));
}

// ---- preconditioner -------------------------------------------------------------------

struct BlockPreconditioner::Inner {
  InnerSolver kind;
  AmgHierarchy amg;
  TridiagBatch tri;
  std::vector<double> inv_diag;
  std::unique_ptr<DenseLu> dense;

  void apply(std::span<const double> r, std::span<double> z) const {
    switch (kind) {
      case InnerSolver::AmgVcycle: amg.vcycle(r, z); break;
      case InnerSolver::TridiagDirect: tri.solve(r, z); break;
      case InnerSolver::Jacobi:
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag[i] * r[i];
        break;
      case InnerSolver::DirectDense: dense->solve(r, z); break;
    }
  }
};

BlockPreconditioner::BlockPreconditioner(const BlockMatrix& A, const PreconditionerSpec& spec)
    : A_(&A), spec_(spec) {
  for (int f = 0; f < kNumFields; ++f) {
    const CsrMatrix& B = A.blocks[f][f];
    auto in = std::make_unique<Inner>();
    in->kind = spec.inner[static_cast<std::size_t>(f)];
    switch (in->kind) {
      case InnerSolver::AmgVcycle: in->amg = amg_setup(B, spec.amg); break;
      case InnerSolver::TridiagDirect: in->tri = TridiagBatch::from_csr(B, A.layout.n_c); break;
      case InnerSolver::Jacobi: {
        const auto d = B.diagonal();
        in->inv_diag.resize(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) in->inv_diag[i] = d[i] != 0.0 ? 1.0 / d[i] : 0.0;
        break;
      }
      case InnerSolver::DirectDense:
        if (B.rows > spec.dense_limit)
          throw std::invalid_argument(std::string("DIRECT_DENSE inner solve refused for block ") +
                                      to_string(static_cast<Field>(f)) + " of size " +
                                      std::to_string(B.rows));
        in->dense = std::make_unique<DenseLu>(B);
        break;
    }
    inner_[static_cast<std::size_t>(f)] = std::move(in);
  }
  std::size_t biggest = 0;
  for (int f = 0; f < kNumFields; ++f) biggest = std::max(biggest, A.layout.size(static_cast<Field>(f)));
  work_.resize(biggest);
}

BlockPreconditioner::~BlockPreconditioner() = default;
BlockPreconditioner::BlockPreconditioner(BlockPreconditioner&&) noexcept = default;

bool BlockPreconditioner::amg_fallback(Field f) const {
  const auto& in = inner_[static_cast<std::size_t>(f)];
  return in->kind == InnerSolver::AmgVcycle && in->amg.jacobi_fallback();
}

void BlockPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  const BlockLayout& L = A_->layout;
  if (spec_.kind == PrecondKind::BJ) {
    for (int f = 0; f < kNumFields; ++f) {
      const auto fi = static_cast<Field>(f);
      inner_[static_cast<std::size_t>(f)]->apply(r.subspan(L.offset(fi), L.size(fi)),
                                                 z.subspan(L.offset(fi), L.size(fi)));
    }
    return;
  }
  for (std::size_t k = 0; k < spec_.ordering.size(); ++k) {
    const Field fk = spec_.ordering[k];
    const std::size_t n = L.size(fk);
    std::span<double> rhs(work_.data(), n);
    const auto rk = r.subspan(L.offset(fk), n);
    std::copy(rk.begin(), rk.end(), rhs.begin());
    for (std::size_t j = 0; j < k; ++j) {
      const Field fj = spec_.ordering[j];
      const CsrMatrix& B = (*A_)(fk, fj);
      if (B.nnz() == 0) continue;
      B.multiply_add(-1.0, z.subspan(L.offset(fj), L.size(fj)), rhs);
    }
    inner_[static_cast<std::size_t>(fk)]->apply(rhs, z.subspan(L.offset(fk), n));
  }
}

}  // namespace p4d
