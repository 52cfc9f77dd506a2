#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "p4d/amg.hpp"
#include "p4d/particle.hpp"
#include "p4d/sparse.hpp"

namespace p4d {

/// Field index inside block vectors and matrices.
enum class Field : int { PhiS = 0, PhiE = 1, Ce = 2, Cs = 3 };
inline constexpr int kNumFields = 4;

const char* to_string(Field f);
/// Accepts "phi_s", "phi_e", "c_e", "c_s".
Field parse_field(const std::string& name);

using Ordering = std::array<Field, 4>;

/// Default block Gauss-Seidel ordering: phi_e, c_s, phi_s, c_e.
Ordering default_ordering();
/// Parses a comma separated permutation, e.g. "phi_e,c_s,phi_s,c_e".
Ordering parse_ordering(const std::string& text);
std::string to_string(const Ordering& o);
/// All 24 permutations in lexicographic order of field index.
std::vector<Ordering> all_orderings();

/// Sizes of the four field segments: three nodal fields and cells * n_c radial values.
struct BlockLayout {
  std::size_t num_nodes = 0;
  std::size_t num_cells = 0;
  std::size_t n_c = 0;

  std::size_t size(Field f) const { return f == Field::Cs ? num_cells * n_c : num_nodes; }
  std::size_t offset(Field f) const { return static_cast<std::size_t>(f) * num_nodes; }
  std::size_t total() const { return 3 * num_nodes + num_cells * n_c; }
};

/// Flat vector with per-field views.
struct BlockVector {
  BlockLayout layout;
  std::vector<double> data;

  BlockVector() = default;
  explicit BlockVector(const BlockLayout& l) : layout(l), data(l.total(), 0.0) {}

  std::span<double> field(Field f) { return {data.data() + layout.offset(f), layout.size(f)}; }
  std::span<const double> field(Field f) const {
    return {data.data() + layout.offset(f), layout.size(f)};
  }
};

/// 4 x 4 array of compressed-row blocks.
struct BlockMatrix {
  BlockLayout layout;
  std::array<std::array<CsrMatrix, 4>, 4> blocks;

  CsrMatrix& operator()(Field i, Field j) {
    return blocks[static_cast<int>(i)][static_cast<int>(j)];
  }
  const CsrMatrix& operator()(Field i, Field j) const {
    return blocks[static_cast<int>(i)][static_cast<int>(j)];
  }

  /// y = A x over flat vectors.
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// Assembled global matrix (used by tests and the dense diagnostic).
  CsrMatrix to_csr() const;
};

/// Per-cell tridiagonal systems stored contiguously.
struct TridiagBatch {
  std::size_t num_cells = 0;
  std::size_t n_c = 0;
  std::vector<double> sub, diag, super;

  /// Extracts cell blocks from a block-diagonal CSR matrix with tridiagonal cell blocks.
  static TridiagBatch from_csr(const CsrMatrix& A, std::size_t n_c);
  /// Thomas solve per cell; throws std::runtime_error naming the cell on a zero pivot.
  void solve(std::span<const double> r, std::span<double> z) const;
};

enum class PrecondKind { BJ, BGS };
enum class InnerSolver { AmgVcycle, TridiagDirect, Jacobi, DirectDense };

const char* to_string(PrecondKind k);
PrecondKind parse_precond_kind(const std::string& s);
const char* to_string(InnerSolver s);
InnerSolver parse_inner_solver(const std::string& s);

struct PreconditionerSpec {
  PrecondKind kind = PrecondKind::BGS;
  Ordering ordering = default_ordering();
  /// Inner solver indexed by Field.
  std::array<InnerSolver, 4> inner{InnerSolver::AmgVcycle, InnerSolver::AmgVcycle,
                                   InnerSolver::AmgVcycle, InnerSolver::TridiagDirect};
  AmgParams amg;
  /// DirectDense refuses blocks larger than this.
  std::size_t dense_limit = 20000;
};

/// Block Jacobi or block Gauss-Seidel (forward substitution in the given
/// ordering) with one inner solve per diagonal block.
class BlockPreconditioner {
public:
  BlockPreconditioner(const BlockMatrix& A, const PreconditionerSpec& spec);
  ~BlockPreconditioner();
  BlockPreconditioner(BlockPreconditioner&&) noexcept;

  void apply(std::span<const double> r, std::span<double> z) const;
  const PreconditionerSpec& spec() const { return spec_; }
  /// Whether AMG for a field fell back to Jacobi.
  bool amg_fallback(Field f) const;

private:
  struct Inner;
  const BlockMatrix* A_;
  PreconditionerSpec spec_;
  std::array<std::unique_ptr<Inner>, 4> inner_;
  mutable std::vector<double> work_;
};

}  // namespace p4d
