#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace p4d {

using Index = std::int32_t;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed-row matrix with sorted, unique column indices per row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<Index> col;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y += alpha A x
  void multiply_add(double alpha, std::span<const double> x, std::span<double> y) const;

  /// Position of (i, j) in `values`, or -1 if structurally absent.
  std::ptrdiff_t find(std::size_t i, std::size_t j) const;
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;

  CsrMatrix transpose() const;
  void set_zero();

  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> t);
  static CsrMatrix identity(std::size_t n);
  static CsrMatrix empty(std::size_t rows, std::size_t cols);
};

/// C = A B
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);

/// R A P with R = P^T (Galerkin product).
CsrMatrix galerkin_product(const CsrMatrix& a, const CsrMatrix& p);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace p4d
