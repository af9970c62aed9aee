#include "qmask/classical/gf_matrix.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace qmask::classical {

SparseMatrixGF SparseMatrixGF::from_entries(std::size_t rows, std::size_t cols, u64 p,
                                            std::vector<Entry> entries) {
  if (!is_prime(p)) fail(ErrorCode::not_prime, "matrix modulus must be prime");
  if (rows == 0 || cols == 0) fail(ErrorCode::invalid_input, "empty matrix shape");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Entry& e : entries) {
    if (e.row >= rows || e.col >= cols) {
      fail(ErrorCode::invalid_input, "entry index out of range");
    }
    if (e.value == 0 || e.value >= p) {
      fail(ErrorCode::invalid_input, "entry values must lie in 1..p-1");
    }
    if (!seen.insert({e.row, e.col}).second) {
      fail(ErrorCode::invalid_input, "duplicate (row, col) entry");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });
  return SparseMatrixGF{rows, cols, p, std::move(entries)};
}

SparseMatrixGF SparseMatrixGF::identity(std::size_t n, u64 p) {
  std::vector<Entry> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1});
  return from_entries(n, n, p, std::move(entries));
}

std::size_t SparseMatrixGF::max_row_weight() const {
  std::vector<std::size_t> weight(rows, 0);
  for (const Entry& e : entries) ++weight[e.row];
  return weight.empty() ? 0 : *std::max_element(weight.begin(), weight.end());
}

std::vector<u64> SparseMatrixGF::apply(std::span<const u64> v) const {
  if (v.size() != cols) fail(ErrorCode::invalid_input, "vector length mismatch");
  std::vector<u64> out(rows, 0);
  for (const Entry& e : entries) {
    out[e.row] = (out[e.row] + mul_mod(e.value, v[e.col], modulus)) % modulus;
  }
  return out;
}

std::vector<std::vector<u64>> SparseMatrixGF::dense() const {
  std::vector<std::vector<u64>> m(rows, std::vector<u64>(cols, 0));
  for (const Entry& e : entries) m[e.row][e.col] = e.value;
  return m;
}

namespace {

// Elimination over an augmented dense copy; returns rank. When solve is set
// and the matrix is square invertible, fills x with the solution.
std::size_t eliminate(const SparseMatrixGF& a, std::span<const u64> t, bool solve,
                      std::vector<u64>* x) {
  const u64 p = a.modulus;
  auto m = a.dense();
  std::vector<u64> rhs(t.begin(), t.end());
  if (solve && rhs.size() != a.rows) {
    fail(ErrorCode::invalid_input, "right-hand side length mismatch");
  }
  if (!solve) rhs.assign(a.rows, 0);

  std::size_t rank = 0;
  std::vector<std::size_t> pivot_col;
  for (std::size_t col = 0; col < a.cols && rank < a.rows; ++col) {
    std::size_t pivot = rank;
    while (pivot < a.rows && m[pivot][col] == 0) ++pivot;
    if (pivot == a.rows) continue;
    std::swap(m[pivot], m[rank]);
    std::swap(rhs[pivot], rhs[rank]);
    const u64 inv = mod_inverse(m[rank][col], p);
    for (std::size_t j = col; j < a.cols; ++j) m[rank][j] = mul_mod(m[rank][j], inv, p);
    rhs[rank] = mul_mod(rhs[rank], inv, p);
    for (std::size_t i = 0; i < a.rows; ++i) {
      if (i == rank || m[i][col] == 0) continue;
      const u64 f = m[i][col];
      for (std::size_t j = col; j < a.cols; ++j) {
        m[i][j] = (m[i][j] + p - mul_mod(f, m[rank][j], p)) % p;
      }
      rhs[i] = (rhs[i] + p - mul_mod(f, rhs[rank], p)) % p;
    }
    pivot_col.push_back(col);
    ++rank;
  }

  if (solve) {
    if (a.rows != a.cols || rank != a.rows) {
      fail(ErrorCode::singular_matrix,
           "matrix is singular mod " + std::to_string(p) + " (rank " +
               std::to_string(rank) + " of " + std::to_string(a.rows) + ")");
    }
    x->assign(a.cols, 0);
    for (std::size_t i = 0; i < rank; ++i) (*x)[pivot_col[i]] = rhs[i];
  }
  return rank;
}

}  // namespace

std::size_t rank_gf(const SparseMatrixGF& a) { return eliminate(a, {}, false, nullptr); }

std::vector<u64> solve_sparse_gf(const SparseMatrixGF& a, std::span<const u64> t) {
  std::vector<u64> x;
  eliminate(a, t, true, &x);
  return x;
}

SparseMatrixGF random_sparse_invertible(std::size_t n, u64 p, std::size_t row_weight,
                                        std::mt19937_64& rng) {
  if (row_weight == 0) fail(ErrorCode::invalid_input, "row weight must be >= 1");
  for (;;) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = rng() % i;
      std::swap(perm[i - 1], perm[j]);
    }
    std::set<std::pair<std::size_t, std::size_t>> used;
    std::vector<SparseMatrixGF::Entry> entries;
    for (std::size_t i = 0; i < n; ++i) {
      entries.push_back({i, perm[i], 1 + rng() % (p - 1)});
      used.insert({i, perm[i]});
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t extra = row_weight > 1 ? rng() % row_weight : 0;
      for (std::size_t e = 0; e + 1 < extra + 1 && e < row_weight - 1; ++e) {
        std::size_t col = rng() % n;
        if (used.count({i, col})) continue;
        used.insert({i, col});
        entries.push_back({i, col, 1 + rng() % (p - 1)});
      }
    }
    SparseMatrixGF a = SparseMatrixGF::from_entries(n, n, p, std::move(entries));
    if (rank_gf(a) == n) return a;
  }
}

}  // namespace qmask::classical
