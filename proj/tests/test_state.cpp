#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qmask/classical/modular.hpp"
#include "qmask/qsim/state.hpp"

using namespace qmask;
using namespace qmask::qsim;

namespace {

std::vector<Value> iota_values(Value lo, Value hi) {  // [lo, hi)
  std::vector<Value> v;
  for (Value x = lo; x < hi; ++x) v.push_back(x);
  return v;
}

double amp_at(const SparseState& st, std::initializer_list<Value> tuple) {
  std::vector<Value> t(tuple);
  return st.amplitude(t).real();
}

}  // namespace

TEST(SparseState, NewStateIsVacuousUnit) {
  SparseState st;
  EXPECT_EQ(st.num_registers(), 0u);
  EXPECT_EQ(st.size(), 1u);
  EXPECT_NEAR(st.norm_squared(), 1.0, 1e-15);
  auto snap = st.snapshot();
  ASSERT_EQ(snap.size(), 1u);
  EXPECT_TRUE(snap[0].first.empty());
  EXPECT_EQ(snap[0].second, Amplitude(1.0, 0.0));
}

TEST(SparseState, AllocStartsAtZero) {
  SparseState st;
  auto r = st.alloc_register(7, "a");
  EXPECT_EQ(r.modulus, 7u);
  EXPECT_NEAR(amp_at(st, {0}), 1.0, 1e-15);
  EXPECT_NEAR(st.norm_squared(), 1.0, 1e-15);

  auto r5 = SparseState();
  auto reg = r5.alloc_register(5, "x");
  EXPECT_NEAR(r5.amplitude(std::vector<Value>{0}).real(), 1.0, 1e-15);
  (void)reg;
}

TEST(SparseState, AllocTensorsZeroOntoSuperposition) {
  SparseState st;
  auto a = st.alloc_register(8, "a");
  st.prepare_uniform(a, std::vector<Value>{3, 5});
  auto anc = st.alloc_register(2, "anc");
  (void)anc;
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(amp_at(st, {3, 0}), s, 1e-15);
  EXPECT_NEAR(amp_at(st, {5, 0}), s, 1e-15);
  EXPECT_EQ(st.size(), 2u);
}

TEST(SparseState, AllocRejectsModulusBelowTwo) {
  SparseState st;
  try {
    st.alloc_register(1, "bad");
    FAIL() << "expected invalid-modulus";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_modulus);
  }
}

TEST(PrepareUniform, UnitSupportMod7) {
  SparseState st;
  auto r = st.alloc_register(7, "r");
  st.prepare_uniform(r, iota_values(1, 7));
  EXPECT_EQ(st.size(), 6u);
  const double a = 1.0 / std::sqrt(6.0);
  for (Value v = 1; v < 7; ++v) EXPECT_NEAR(amp_at(st, {v}), a, 1e-15);
  EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
}

TEST(PrepareUniform, SingletonIsDeterministic) {
  SparseState st;
  auto r = st.alloc_register(9, "r");
  st.prepare_uniform(r, std::vector<Value>{3});
  EXPECT_NEAR(amp_at(st, {3}), 1.0, 1e-15);
}

TEST(PrepareUniform, DivisionMaskLayout) {
  // r1 in [0, 2^3), r2 in [0, 5): joint weight 1/40 per pair.
  SparseState st;
  auto r1 = st.alloc_register(8, "r1");
  auto r2 = st.alloc_register(5, "r2");
  st.prepare_uniform(r1, iota_values(0, 8));
  st.prepare_uniform(r2, iota_values(0, 5));
  EXPECT_EQ(st.size(), 40u);
  EXPECT_NEAR(amp_at(st, {7, 4}), 1.0 / std::sqrt(40.0), 1e-14);
  EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
}

TEST(PrepareUniform, ErrorsOnStaleOrEmptySupport) {
  SparseState st;
  auto r = st.alloc_register(7, "r");
  st.prepare_uniform(r, std::vector<Value>{1, 2});
  try {
    st.prepare_uniform(r, std::vector<Value>{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::register_not_fresh);
  }
  SparseState st2;
  auto q = st2.alloc_register(7, "q");
  try {
    st2.prepare_uniform(q, std::vector<Value>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_support);
  }
  try {
    st2.prepare_uniform(q, std::vector<Value>{9});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_support);
  }
}

TEST(ApplyBijection, NegationMod7) {
  SparseState st;
  auto r = st.alloc_register(7, "r");
  st.prepare_uniform(r, std::vector<Value>{3});
  st.apply_bijection({r}, [](std::span<Value> v) { v[0] = v[0] == 0 ? 0 : 7 - v[0]; });
  EXPECT_NEAR(amp_at(st, {4}), 1.0, 1e-15);
}

TEST(ApplyBijection, MultiplyByConstant) {
  SparseState st;
  auto r = st.alloc_register(7, "r");
  st.prepare_uniform(r, std::vector<Value>{5});
  st.apply_bijection({r}, [](std::span<Value> v) { v[0] = (v[0] * 3) % 7; });
  EXPECT_NEAR(amp_at(st, {1}), 1.0, 1e-15);  // 15 mod 7
}

TEST(ApplyBijection, NonInjectiveMapRejected) {
  SparseState st;
  auto r = st.alloc_register(7, "r");
  st.prepare_uniform(r, std::vector<Value>{2, 3});
  try {
    st.apply_bijection({r}, [](std::span<Value> v) {
      if (v[0] == 2 || v[0] == 3) v[0] = 0;
    });
    FAIL() << "expected non-reversible-map";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_reversible_map);
  }
}

TEST(ApplyOutOfPlace, ProductIntoFreshRegister) {
  SparseState st;
  auto a = st.alloc_register(7, "a");
  auto r = st.alloc_register(7, "r");
  auto t = st.alloc_register(7, "t");
  st.prepare_uniform(a, std::vector<Value>{3});
  st.prepare_uniform(r, std::vector<Value>{4});
  st.apply_out_of_place({a, r}, t, [](std::span<const Value> v) { return (v[0] * v[1]) % 7; },
                        Accumulate::add);
  EXPECT_NEAR(amp_at(st, {3, 4, 5}), 1.0, 1e-15);  // 12 mod 7
}

TEST(ApplyOutOfPlace, ComputeThenUncomputeRoundTrip) {
  SparseState st;
  auto r = st.alloc_register(13, "r");
  auto d = st.alloc_register(13, "d");
  st.prepare_uniform(r, std::vector<Value>{5});
  auto square = [](std::span<const Value> v) { return (v[0] * v[0]) % 13; };
  st.apply_out_of_place({r}, d, square, Accumulate::add);
  EXPECT_NEAR(amp_at(st, {5, 12}), 1.0, 1e-15);  // 25 mod 13
  st.apply_out_of_place({r}, d, square, Accumulate::subtract);
  EXPECT_NEAR(amp_at(st, {5, 0}), 1.0, 1e-15);
}

TEST(ApplyOutOfPlace, MaskedSquareChain) {
  // a*r^2 for a=4, r=6 mod 13: 4*36 = 144 = 1 mod 13.
  SparseState st;
  auto a = st.alloc_register(13, "a");
  auto r = st.alloc_register(13, "r");
  auto s = st.alloc_register(13, "s");
  auto t = st.alloc_register(13, "t");
  st.prepare_uniform(a, std::vector<Value>{4});
  st.prepare_uniform(r, std::vector<Value>{6});
  st.apply_out_of_place({r}, s, [](std::span<const Value> v) { return (v[0] * v[0]) % 13; },
                        Accumulate::add);
  st.apply_out_of_place({a, s}, t, [](std::span<const Value> v) { return (v[0] * v[1]) % 13; },
                        Accumulate::add);
  EXPECT_NEAR(amp_at(st, {4, 6, 10, 1}), 1.0, 1e-15);
}

TEST(ApplyOutOfPlace, MultiplicativeNonUnitRejected) {
  SparseState st;
  auto a = st.alloc_register(6, "a");
  auto d = st.alloc_register(6, "d");
  st.prepare_uniform(a, std::vector<Value>{2});
  st.prepare_uniform(d, std::vector<Value>{1});
  try {
    st.apply_out_of_place({a}, d, [](std::span<const Value> v) { return v[0]; },
                          Accumulate::multiply);
    FAIL() << "expected non-reversible-map";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_reversible_map);
  }
}

TEST(ApplyControlled, NegatesOnlyWhenControlMatches) {
  SparseState st;
  auto c = st.alloc_register(2, "c");
  auto x = st.alloc_register(7, "x");
  st.prepare_uniform(c, std::vector<Value>{1});
  st.prepare_uniform(x, std::vector<Value>{2});
  auto negate = BijectionSpec::in_place({x}, [](std::span<Value> v) {
    v[0] = v[0] == 0 ? 0 : 7 - v[0];
  });
  st.apply_controlled(c, 1, negate);
  EXPECT_NEAR(amp_at(st, {1, 5}), 1.0, 1e-15);

  SparseState st2;
  auto c2 = st2.alloc_register(2, "c");
  auto x2 = st2.alloc_register(7, "x");
  st2.prepare_uniform(x2, std::vector<Value>{2});
  auto negate2 = BijectionSpec::in_place({x2}, [](std::span<Value> v) {
    v[0] = v[0] == 0 ? 0 : 7 - v[0];
  });
  st2.apply_controlled(c2, 1, negate2);  // control is |0>
  EXPECT_NEAR(amp_at(st2, {0, 2}), 1.0, 1e-15);
}

TEST(ApplyControlled, InnerTouchingControlRejected) {
  SparseState st;
  auto c = st.alloc_register(2, "c");
  try {
    st.apply_controlled(c, 1, BijectionSpec::in_place({c}, [](std::span<Value> v) {
                          v[0] ^= 1;
                        }));
    FAIL() << "expected overlapping-register";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::overlapping_register);
  }
}

TEST(Marginal, PlusStateIsHalfHalf) {
  SparseState st;
  auto q = st.alloc_register(2, "q");
  st.prepare_uniform(q, std::vector<Value>{0, 1});
  auto m = st.marginal(q);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NEAR(m[0].second, 0.5, 1e-15);
  EXPECT_NEAR(m[1].second, 0.5, 1e-15);
}

TEST(Marginal, MaskProductIsUniform) {
  // t = a*r with a=3 fixed, r uniform over units mod 7.
  SparseState st;
  auto a = st.alloc_register(7, "a");
  auto r = st.alloc_register(7, "r");
  auto t = st.alloc_register(7, "t");
  st.prepare_uniform(a, std::vector<Value>{3});
  st.prepare_uniform(r, iota_values(1, 7));
  st.apply_out_of_place({a, r}, t, [](std::span<const Value> v) { return (v[0] * v[1]) % 7; },
                        Accumulate::add);
  auto m = st.marginal(t);
  ASSERT_EQ(m.size(), 6u);
  for (const auto& [v, p] : m) {
    EXPECT_GE(v, 1u);
    EXPECT_NEAR(p, 1.0 / 6.0, 1e-14);
  }
}

TEST(Marginal, DivisionMaskDamageProbability) {
  // a = (|3> + |12>)/sqrt(2), n=4 bits, b=5, m=6: mask r = 5*r1 + r2 added
  // into a 2^(m+3)-value register. The state-damaging event is a measured sum
  // that truncates some branch: c < 12 (low tail) or c - 3 >= 320 (high tail).
  const Value b = 5, m_width = 64, width = 512;
  SparseState st;
  auto a = st.alloc_register(width, "a");
  auto r1 = st.alloc_register(m_width, "r1");
  auto r2 = st.alloc_register(b, "r2");
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<std::pair<Value, Amplitude>> in{{3, {s, 0}}, {12, {s, 0}}};
  st.prepare_superposition(a, in);
  st.prepare_uniform(r1, iota_values(0, m_width));
  st.prepare_uniform(r2, iota_values(0, b));
  st.apply_out_of_place({r1, r2}, a,
                        [&](std::span<const Value> v) { return (v[0] * b + v[1]) % width; },
                        Accumulate::add);

  auto marg = st.marginal(a);
  double below12 = 0.0, damage = 0.0;
  for (const auto& [c, p] : marg) {
    if (c < 12) below12 += p;
    if (c < 12 || c >= 320 + 3) damage += p;
  }

  // Independent oracle: count masks per branch.
  double expect_below = 0.0, expect_damage = 0.0;
  for (Value input : {3u, 12u}) {
    for (Value r = 0; r < m_width * b; ++r) {
      const Value c = (input + r) % width;
      const bool damaging = c < 12 || c >= 323;
      if (c < 12) expect_below += 0.5 / double(m_width * b);
      if (damaging) expect_damage += 0.5 / double(m_width * b);
    }
  }
  EXPECT_NEAR(below12, expect_below, 1e-12);
  EXPECT_NEAR(below12, 9.0 / 640.0, 1e-12);
  EXPECT_NEAR(damage, expect_damage, 1e-12);
  // Two-sided tail stays within the failure law with factor-2 slack:
  EXPECT_LE(damage, 2.0 * std::pow(2.0, 4.0 - 6.0 - 2.0));
}

TEST(Measure, DeterministicRegisterLeavesStateAlone) {
  SparseState st;
  auto r = st.alloc_register(9, "r");
  st.prepare_uniform(r, std::vector<Value>{4});
  SeededRng rng(1);
  auto rec = st.measure(r, rng);
  EXPECT_EQ(rec.outcome, 4u);
  ASSERT_EQ(rec.marginal.size(), 1u);
  EXPECT_NEAR(rec.marginal[0].second, 1.0, 1e-15);
  EXPECT_NEAR(amp_at(st, {4}), 1.0, 1e-15);
}

TEST(Measure, MaskProductProjection) {
  // Measuring t = a*r (a=|3>, r uniform over units mod 7) leaves |3>|5t mod 7>.
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    SparseState st;
    auto a = st.alloc_register(7, "a");
    auto r = st.alloc_register(7, "r");
    auto t = st.alloc_register(7, "t");
    st.prepare_uniform(a, std::vector<Value>{3});
    st.prepare_uniform(r, iota_values(1, 7));
    st.apply_out_of_place({a, r}, t, [](std::span<const Value> v) { return (v[0] * v[1]) % 7; },
                          Accumulate::add);
    SeededRng rng(seed);
    auto rec = st.measure(t, rng);
    const Value tv = rec.outcome;
    EXPECT_EQ(st.size(), 1u);
    EXPECT_NEAR(amp_at(st, {3, (5 * tv) % 7, tv}), 1.0, 1e-12);  // 3^-1 = 5 mod 7
  }
}

TEST(Measure, SuperposedInputProjection) {
  // Input (|3>+|5>)/sqrt(2): outcome t leaves (|3>|5t> + |5>|3t>)/sqrt(2).
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    SparseState st;
    auto a = st.alloc_register(7, "a");
    auto r = st.alloc_register(7, "r");
    auto t = st.alloc_register(7, "t");
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<std::pair<Value, Amplitude>> in{{3, {s, 0}}, {5, {s, 0}}};
    st.prepare_superposition(a, in);
    st.prepare_uniform(r, iota_values(1, 7));
    st.apply_out_of_place({a, r}, t, [](std::span<const Value> v) { return (v[0] * v[1]) % 7; },
                          Accumulate::add);
    SeededRng rng(seed);
    auto rec = st.measure(t, rng);
    const Value tv = rec.outcome;
    EXPECT_EQ(st.size(), 2u);
    EXPECT_NEAR(amp_at(st, {3, (5 * tv) % 7, tv}), s, 1e-12);
    EXPECT_NEAR(amp_at(st, {5, (3 * tv) % 7, tv}), s, 1e-12);
    EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
  }
}

TEST(Measure, StoredMarginalMatchesIndependentRecomputation) {
  SparseState st;
  auto a = st.alloc_register(11, "a");
  auto t = st.alloc_register(11, "t");
  std::vector<std::pair<Value, Amplitude>> in{
      {1, {0.6, 0.0}}, {4, {0.0, 0.8}}};
  st.prepare_superposition(a, in);
  st.apply_out_of_place({a}, t, [](std::span<const Value> v) { return (v[0] * 3) % 11; },
                        Accumulate::add);
  auto pre = st.snapshot();
  SeededRng rng(5);
  auto rec = st.measure(t, rng);
  for (const auto& [v, p] : rec.marginal) {
    double q = 0.0;
    for (const auto& [tuple, amp] : pre) {
      if (tuple[1] == v) q += std::norm(amp);
    }
    EXPECT_NEAR(p, q, 1e-14);
  }
}

TEST(Measure, SamplingFrequenciesWithinBinomialBounds) {
  // 0.36 / 0.64 split measured 100000 times must stay within 5 sigma.
  const int trials = 100000;
  int hits = 0;
  for (int i = 0; i < trials; ++i) {
    SparseState st;
    auto q = st.alloc_register(2, "q");
    std::vector<std::pair<Value, Amplitude>> in{{0, {0.6, 0.0}}, {1, {0.8, 0.0}}};
    st.prepare_superposition(q, in);
    SeededRng rng(static_cast<std::uint64_t>(i));
    hits += st.measure(q, rng).outcome == 1 ? 1 : 0;
  }
  const double expect = 0.64 * trials;
  const double sigma = std::sqrt(trials * 0.64 * 0.36);
  EXPECT_NEAR(static_cast<double>(hits), expect, 5.0 * sigma);
}

TEST(Discard, PlusAncillaRemovedCleanly) {
  SparseState st;
  auto a = st.alloc_register(5, "a");
  auto anc = st.alloc_register(2, "anc");
  st.prepare_uniform(a, std::vector<Value>{1, 3});
  st.prepare_uniform(anc, std::vector<Value>{0, 1});
  EXPECT_LT(st.disentangle_residual(anc), 1e-12);
  st.discard(anc);
  EXPECT_EQ(st.num_registers(), 1u);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(amp_at(st, {1}), s, 1e-12);
  EXPECT_NEAR(amp_at(st, {3}), s, 1e-12);
}

TEST(Discard, DeterministicZeroRegisterRemoved) {
  SparseState st;
  auto a = st.alloc_register(5, "a");
  auto z = st.alloc_register(4, "z");
  st.prepare_uniform(a, std::vector<Value>{2, 4});
  st.discard(z);
  EXPECT_EQ(st.num_registers(), 1u);
  EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
}

TEST(Discard, EntangledPairRejectedWithResidual) {
  SparseState st;
  auto a = st.alloc_register(2, "a");
  auto b = st.alloc_register(2, "b");
  st.prepare_uniform(a, std::vector<Value>{0, 1});
  st.apply_controlled(a, 1, BijectionSpec::in_place({b}, [](std::span<Value> v) {
                        v[0] ^= 1;
                      }));
  EXPECT_GT(st.disentangle_residual(a), 0.5);
  try {
    st.discard(a);
    FAIL() << "expected discard-of-entangled-register";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::entangled_discard);
    EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos);
  }
}

TEST(Fidelity, BasicValuesAndLayoutCheck) {
  SparseState x, y;
  auto rx = x.alloc_register(5, "r");
  auto ry = y.alloc_register(5, "r");
  x.prepare_uniform(rx, std::vector<Value>{0, 1});
  y.prepare_uniform(ry, std::vector<Value>{0, 1});
  EXPECT_NEAR(fidelity(x, y), 1.0, 1e-12);

  SparseState z;
  auto rz = z.alloc_register(5, "r");
  z.prepare_uniform(rz, std::vector<Value>{0});
  EXPECT_NEAR(fidelity(x, z), 0.5, 1e-12);

  SparseState w;
  auto rw = w.alloc_register(5, "r");
  w.prepare_uniform(rw, std::vector<Value>{3});
  EXPECT_NEAR(fidelity(z, w), 0.0, 1e-15);

  SparseState other;
  other.alloc_register(7, "r");
  EXPECT_THROW(fidelity(x, other), Error);
}

TEST(Properties, ReversibilityOfRandomPermutations) {
  std::mt19937_64 rng(12345);
  for (int rep = 0; rep < 50; ++rep) {
    const Value mod = 2 + rng() % 40;
    SparseState st;
    auto a = st.alloc_register(mod, "a");
    auto b = st.alloc_register(5, "b");
    std::vector<Value> support;
    for (Value v = 0; v < mod; ++v) {
      if (rng() % 2) support.push_back(v);
    }
    if (support.empty()) support.push_back(rng() % mod);
    st.prepare_uniform(a, support);
    st.prepare_uniform(b, std::vector<Value>{1, 2});

    std::vector<Value> perm(mod);
    for (Value v = 0; v < mod; ++v) perm[v] = v;
    for (Value v = mod; v > 1; --v) std::swap(perm[v - 1], perm[rng() % v]);
    std::vector<Value> inv(mod);
    for (Value v = 0; v < mod; ++v) inv[perm[v]] = v;

    auto before = st.snapshot();
    st.apply_bijection({a}, [&](std::span<Value> v) { v[0] = perm[v[0]]; });
    st.apply_bijection({a}, [&](std::span<Value> v) { v[0] = inv[v[0]]; });
    auto after = st.snapshot();
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      EXPECT_EQ(before[i].first, after[i].first);
      EXPECT_LT(std::abs(before[i].second - after[i].second), 1e-15);
    }
  }
}

TEST(Properties, NormPreservedAcrossOperationChains) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    SparseState st;
    auto a = st.alloc_register(13, "a");
    auto b = st.alloc_register(11, "b");
    auto c = st.alloc_register(13, "c");
    st.prepare_uniform(a, iota_values(1, 13));
    st.prepare_uniform(b, iota_values(0, 11));
    EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
    st.apply_out_of_place({a}, c, [](std::span<const Value> v) { return (v[0] * v[0]) % 13; },
                          Accumulate::add);
    EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
    st.apply_bijection({b}, [](std::span<Value> v) { v[0] = (v[0] + 4) % 11; });
    EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
    SeededRng mrng(rng());
    st.measure(c, mrng);
    EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
  }
}

TEST(Properties, DiscardSucceedsIffResidualSmall) {
  std::mt19937_64 rng(31337);
  for (int rep = 0; rep < 40; ++rep) {
    SparseState st;
    auto a = st.alloc_register(6, "a");
    auto b = st.alloc_register(4, "b");
    std::vector<std::pair<Value, Amplitude>> amps_a, amps_b;
    double na = 0, nb = 0;
    for (Value v = 0; v < 6; ++v) {
      double re = (rng() % 1000) / 1000.0 + 0.001, im = (rng() % 1000) / 1000.0;
      amps_a.push_back({v, {re, im}});
      na += re * re + im * im;
    }
    for (Value v = 0; v < 4; ++v) {
      double re = (rng() % 1000) / 1000.0 + 0.001;
      amps_b.push_back({v, {re, 0.0}});
      nb += re * re;
    }
    for (auto& va : amps_a) va.second /= std::sqrt(na);
    for (auto& vb : amps_b) vb.second /= std::sqrt(nb);
    st.prepare_superposition(a, amps_a);
    st.prepare_superposition(b, amps_b);

    const bool entangle = rep % 2 == 1;
    if (entangle) {
      st.apply_controlled(a, 1, BijectionSpec::in_place({b}, [](std::span<Value> v) {
                            v[0] = (v[0] + 1) % 4;
                          }));
    }
    const double residual = st.disentangle_residual(b);
    if (residual < 1e-9) {
      st.discard(b);
      EXPECT_EQ(st.num_registers(), 1u);
    } else {
      EXPECT_THROW(st.discard(b), Error);
    }
    // Product states must factor; the entangling step may happen to preserve
    // it only if register a had no weight on 1, which the generator forbids.
    EXPECT_EQ(residual < 1e-9, !entangle);
  }
}
