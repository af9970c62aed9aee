#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "qmask/classical/modular.hpp"

namespace qmask::classical {

/// Sparse matrix over GF(p), stored as coordinate triples. Explicit zeros are
/// forbidden and (row, col) pairs must be unique.
struct SparseMatrixGF {
  std::size_t rows = 0;
  std::size_t cols = 0;
  u64 modulus = 0;

  struct Entry {
    std::size_t row;
    std::size_t col;
    u64 value;
  };
  std::vector<Entry> entries;

  static SparseMatrixGF from_entries(std::size_t rows, std::size_t cols, u64 p,
                                     std::vector<Entry> entries);
  static SparseMatrixGF identity(std::size_t n, u64 p);

  std::size_t max_row_weight() const;

  /// A * v mod p.
  std::vector<u64> apply(std::span<const u64> v) const;

  /// Row-major dense copy.
  std::vector<std::vector<u64>> dense() const;
};

std::size_t rank_gf(const SparseMatrixGF& a);

/// x with A x = t (mod p) via dense Gaussian elimination. Singular matrices
/// throw singular-matrix with the rank in the message.
std::vector<u64> solve_sparse_gf(const SparseMatrixGF& a, std::span<const u64> t);

/// Random invertible n x n matrix with row weight <= row_weight: a random
/// permutation diagonal plus extra off-diagonal entries, resampled until
/// nonsingular. Deterministic for a given rng state.
SparseMatrixGF random_sparse_invertible(std::size_t n, u64 p, std::size_t row_weight,
                                        std::mt19937_64& rng);

}  // namespace qmask::classical
