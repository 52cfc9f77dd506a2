#include "p4d/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace p4d {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += values[k] * x[col[k]];
    y[i] = s;
  }
}

void CsrMatrix::multiply_add(double alpha, std::span<const double> x, std::span<double> y) const {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += values[k] * x[col[k]];
    y[i] += alpha * s;
  }
}

std::ptrdiff_t CsrMatrix::find(std::size_t i, std::size_t j) const {
  const auto first = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto last = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<Index>(j));
  if (it == last || *it != static_cast<Index>(j)) return -1;
  return it - col.begin();
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto k = find(i, j);
  return k < 0 ? 0.0 : values[static_cast<std::size_t>(k)];
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(std::min(rows, cols), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (const Index c : col) ++t.row_ptr[static_cast<std::size_t>(c) + 1];
  for (std::size_t i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const std::size_t pos = next[static_cast<std::size_t>(col[k])]++;
      t.col[pos] = static_cast<Index>(i);
      t.values[pos] = values[k];
    }
  return t;
}

void CsrMatrix::set_zero() { std::fill(values.begin(), values.end(), 0.0); }

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> t) {
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k].row < 0 || static_cast<std::size_t>(t[k].row) >= rows || t[k].col < 0 ||
        static_cast<std::size_t>(t[k].col) >= cols)
      throw std::out_of_range("triplet index outside matrix");
    if (!m.col.empty() && k > 0 && t[k].row == t[k - 1].row && t[k].col == t[k - 1].col) {
      m.values.back() += t[k].value;
      continue;
    }
    m.col.push_back(t[k].col);
    m.values.push_back(t[k].value);
    ++m.row_ptr[static_cast<std::size_t>(t[k].row) + 1];
  }
  for (std::size_t i = 0; i < rows; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  return m;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.resize(n + 1);
  m.col.resize(n);
  m.values.assign(n, 1.0);
  for (std::size_t i = 0; i <= n; ++i) m.row_ptr[i] = i;
  for (std::size_t i = 0; i < n; ++i) m.col[i] = static_cast<Index>(i);
  return m;
}

CsrMatrix CsrMatrix::empty(std::size_t rows, std::size_t cols) {
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  return m;
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("sparse product dimension mismatch");
  CsrMatrix c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.row_ptr.assign(a.rows + 1, 0);
  std::vector<std::ptrdiff_t> marker(b.cols, -1);
  std::vector<double> acc(b.cols, 0.0);
  std::vector<Index> touched;
  for (std::size_t i = 0; i < a.rows; ++i) {
    touched.clear();
    for (std::size_t ka = a.row_ptr[i]; ka < a.row_ptr[i + 1]; ++ka) {
      const auto j = static_cast<std::size_t>(a.col[ka]);
      const double av = a.values[ka];
      for (std::size_t kb = b.row_ptr[j]; kb < b.row_ptr[j + 1]; ++kb) {
        const auto k = static_cast<std::size_t>(b.col[kb]);
        if (marker[k] != static_cast<std::ptrdiff_t>(i)) {
          marker[k] = static_cast<std::ptrdiff_t>(i);
          acc[k] = 0.0;
          touched.push_back(static_cast<Index>(k));
        }
        acc[k] += av * b.values[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (const Index k : touched) {
      c.col.push_back(k);
      c.values.push_back(acc[static_cast<std::size_t>(k)]);
    }
    c.row_ptr[i + 1] = c.col.size();
  }
  return c;
}

CsrMatrix galerkin_product(const CsrMatrix& a, const CsrMatrix& p) {
  return multiply(p.transpose(), multiply(a, p));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace p4d
