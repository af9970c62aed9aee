#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qmask/classical/gf_matrix.hpp"
#include "qmask/classical/modular.hpp"

using namespace qmask;
using namespace qmask::classical;

TEST(ModInverse, KnownValues) {
  EXPECT_EQ(mod_inverse(3, 7), 5u);
  EXPECT_EQ(mod_inverse(1, 97), 1u);
  // frozen from brute force over 1..40: 5*33 = 165 = 1 mod 41
  EXPECT_EQ(mod_inverse(5, 41), 33u);
}

TEST(ModInverse, NonUnitThrows) {
  try {
    mod_inverse(6, 15);
    FAIL() << "expected not-a-unit";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_a_unit);
    EXPECT_NE(std::string(e.what()).find("gcd = 3"), std::string::npos);
  }
}

TEST(ModInverse, MatchesBruteForceAllSmallPrimes) {
  for (u64 p = 2; p < 300; ++p) {
    if (!is_prime(p)) continue;
    for (u64 a = 1; a < p; ++a) {
      EXPECT_EQ(mod_inverse(a, p), *oracles::brute_inverse(a, p));
    }
  }
}

TEST(ModInverse, MatchesBruteForceComposite) {
  for (u64 n : {4u, 15u, 16u, 21u, 45u, 100u}) {
    for (u64 a = 1; a < n; ++a) {
      auto expect = oracles::brute_inverse(a, n);
      if (expect) {
        EXPECT_EQ(mod_inverse(a, n), *expect);
      } else {
        EXPECT_THROW(mod_inverse(a, n), Error);
      }
    }
  }
}

TEST(SqrtModP, KnownValues) {
  EXPECT_EQ(sqrt_mod_p(4, 13), (std::pair<u64, u64>{2, 11}));
  // frozen from brute force over residues mod 41: 13^2 = 169 = 5
  EXPECT_EQ(sqrt_mod_p(5, 41), (std::pair<u64, u64>{13, 28}));
  EXPECT_EQ(sqrt_mod_p(0, 13), (std::pair<u64, u64>{0, 0}));
}

TEST(SqrtModP, NonResidueThrows) {
  // squares mod 7 are {1, 2, 4}
  try {
    sqrt_mod_p(3, 7);
    FAIL() << "expected non-residue";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_residue);
  }
}

TEST(SqrtModP, CanonicalOrderAndBothRoots) {
  for (u64 p : {3u, 5u, 13u, 17u, 41u, 97u, 101u}) {
    for (u64 a = 1; a < p; ++a) {
      auto roots = oracles::brute_sqrt_roots(a, p);
      if (roots.empty()) {
        EXPECT_THROW(sqrt_mod_p(a, p), Error);
        continue;
      }
      auto [lo, hi] = sqrt_mod_p(a, p);
      ASSERT_EQ(roots.size(), 2u);
      EXPECT_EQ(lo, roots[0]);
      EXPECT_EQ(hi, roots[1]);
      EXPECT_LE(lo, (p - 1) / 2);
      EXPECT_EQ(lo + hi, p);
    }
  }
}

TEST(KthRoot, KnownValues) {
  // d = 3^-1 mod 10 = 7; 8^7 mod 11 = 2; 2^3 = 8
  EXPECT_EQ(kth_root_mod_p(8, 3, 11), 2u);
  EXPECT_EQ(kth_root_mod_p(1, 5, 13), 1u);
}

TEST(KthRoot, NonInvertibleExponentThrows) {
  try {
    kth_root_mod_p(2, 3, 7);  // gcd(3, 6) = 3
    FAIL() << "expected exponent-not-invertible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::exponent_not_invertible);
  }
}

TEST(KthRoot, MatchesBruteForce) {
  for (u64 p : {11u, 13u, 101u}) {
    for (u64 k : {1u, 3u, 5u, 7u}) {
      if (oracles::brute_gcd(k, p - 1) != 1) continue;
      for (u64 a = 1; a < p; ++a) {
        u64 r = kth_root_mod_p(a, k, p);
        EXPECT_EQ(pow_mod(r, k, p), a);
        EXPECT_EQ(r, *oracles::brute_kth_root(a, k, p));
      }
    }
  }
}

TEST(DivmodClassical, KnownValuesAndRandom) {
  EXPECT_EQ(divmod_classical(23, 5), (std::pair<u64, u64>{4, 3}));
  EXPECT_EQ(divmod_classical(0, 7), (std::pair<u64, u64>{0, 0}));
  EXPECT_EQ(divmod_classical((1u << 10) - 1, 5), (std::pair<u64, u64>{204, 3}));
  EXPECT_THROW(divmod_classical(3, 0), Error);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 100000; ++i) {
    u64 c = rng() >> 12;
    u64 b = 1 + rng() % /*keep divisors small-ish*/ 100000;
    auto [q, r] = divmod_classical(c, b);
    EXPECT_EQ(q * b + r, c);
    EXPECT_LT(r, b);
  }
}

TEST(UnitsOf, KnownSets) {
  EXPECT_EQ(units_of(7), (std::vector<u64>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(units_of(15), (std::vector<u64>{1, 2, 4, 7, 8, 11, 13, 14}));
  EXPECT_EQ(units_of(2), (std::vector<u64>{1}));
  EXPECT_THROW(units_of(5, 4), Error);
}

TEST(EulerIsResidue, MatchesSquareTable) {
  EXPECT_TRUE(euler_is_residue(4, 13));
  EXPECT_FALSE(euler_is_residue(3, 7));
  EXPECT_TRUE(euler_is_residue(1, 97));
  for (u64 p : {5u, 7u, 13u, 41u}) {
    for (u64 a = 1; a < p; ++a) {
      EXPECT_EQ(euler_is_residue(a, p), !oracles::brute_sqrt_roots(a, p).empty());
    }
  }
}

TEST(SparseMatrixGF, ValidationRejectsBadEntries) {
  using E = SparseMatrixGF::Entry;
  EXPECT_THROW(SparseMatrixGF::from_entries(2, 2, 4, {}), Error);  // composite modulus
  EXPECT_THROW(SparseMatrixGF::from_entries(2, 2, 5, {E{0, 0, 0}}), Error);
  EXPECT_THROW(SparseMatrixGF::from_entries(2, 2, 5, {E{0, 0, 1}, E{0, 0, 2}}), Error);
  EXPECT_THROW(SparseMatrixGF::from_entries(2, 2, 5, {E{2, 0, 1}}), Error);
}

TEST(SolveSparseGF, KnownSystems) {
  using E = SparseMatrixGF::Entry;
  auto a = SparseMatrixGF::from_entries(2, 2, 5, {E{0, 0, 1}, E{0, 1, 1}, E{1, 1, 1}});
  std::vector<u64> t{2, 3};
  auto x = solve_sparse_gf(a, t);
  EXPECT_EQ(x, (std::vector<u64>{4, 3}));  // A*(4,3) = (7,3) = (2,3) mod 5

  auto id = SparseMatrixGF::identity(3, 7);
  std::vector<u64> t2{1, 5, 6};
  EXPECT_EQ(solve_sparse_gf(id, t2), t2);
}

TEST(SolveSparseGF, SingularReportsRank) {
  using E = SparseMatrixGF::Entry;
  auto a = SparseMatrixGF::from_entries(2, 2, 5,
                                        {E{0, 0, 1}, E{0, 1, 1}, E{1, 0, 2}, E{1, 1, 2}});
  try {
    std::vector<u64> t{1, 2};
    solve_sparse_gf(a, t);
    FAIL() << "expected singular-matrix";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::singular_matrix);
    EXPECT_NE(std::string(e.what()).find("rank 1"), std::string::npos);
  }
}

TEST(SolveSparseGF, RandomSystemsRoundTrip) {
  std::mt19937_64 rng(11);
  for (u64 p : {5u, 11u, 101u}) {
    for (std::size_t n = 2; n <= 8; ++n) {
      for (int rep = 0; rep < 1000; ++rep) {
        auto a = random_sparse_invertible(n, p, 3, rng);
        std::vector<u64> t(n);
        for (auto& v : t) v = rng() % p;
        auto x = solve_sparse_gf(a, t);
        EXPECT_EQ(a.apply(x), t);
      }
    }
  }
}

TEST(RandomSparseInvertible, RespectsRowWeightAndRank) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    auto a = random_sparse_invertible(5, 11, 3, rng);
    EXPECT_LE(a.max_row_weight(), 3u);
    EXPECT_EQ(rank_gf(a), 5u);
  }
}
