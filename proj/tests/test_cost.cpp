#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "qmask/cost/cost_model.hpp"

using namespace qmask;
using namespace qmask::cost;

TEST(CostMaskedInverse, TermValuesAtN256) {
  auto c = cost_masked_inverse(256, CostParams::defaults());
  ASSERT_EQ(c.masked.terms.size(), 3u);
  EXPECT_EQ(c.masked.terms[0].name, "qq_mult");
  EXPECT_DOUBLE_EQ(c.masked.terms[0].value, 65536.0);
  EXPECT_EQ(c.masked.terms[1].name, "cq_mults_windowed");
  EXPECT_DOUBLE_EQ(c.masked.terms[1].value, 2.0 * 8192.0);  // n^2 / lg n = 8192
}

TEST(CostMaskedInverse, DefaultRatioInCitedInterval) {
  auto c = cost_masked_inverse(256, CostParams::defaults());
  EXPECT_GE(c.ratio(), 7.0);
  EXPECT_LE(c.ratio(), 42.0);
}

TEST(CostMaskedInverse, AsymptoticRatioApproachesCoefficientQuotient) {
  CostParams p;
  const double limit = p.euclid_inverse / p.qq_mult;
  double prev_gap = 1e300;
  for (u64 n = 1u << 8; n <= (u64{1} << 16); n *= 2) {
    const double gap = std::abs(cost_masked_inverse(n, p).ratio() - limit);
    EXPECT_LT(gap, prev_gap);  // converges monotonically from below
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, limit * 0.2);
  // log-log slope of the masked total approaches 2
  const double c1 = cost_masked_inverse(1u << 15, p).masked.total();
  const double c2 = cost_masked_inverse(1u << 16, p).masked.total();
  const double slope = std::log2(c2 / c1);
  EXPECT_GT(slope, 1.9);
  EXPECT_LT(slope, 2.05);
}

TEST(CostMaskedDivmod, FormulaValues) {
  auto d = cost_masked_divmod(32, 64, 5, CostParams::defaults());
  // N = 64 + floor(lg 5) = 66
  EXPECT_DOUBLE_EQ(d.comparison.masked.total(), 64.0 * 66.0 / std::log2(66.0));
  EXPECT_EQ(d.additions_baseline, 2u * (32 - 2));
  EXPECT_GT(d.crossover_n, 0u);
}

TEST(CostMaskedDivmod, PowerOfTwoDivisorDegenerateBaseline) {
  auto d = cost_masked_divmod(16, 32, 1u << 16, CostParams::defaults());
  EXPECT_EQ(d.additions_baseline, 0u);
  EXPECT_DOUBLE_EQ(d.comparison.baseline.total(), 0.0);
}

TEST(CostMaskedDivmod, RatioMonotoneDecreasingForDoubleWidthMasks) {
  CostParams p;
  double prev = 1e300;
  for (u64 n = 1u << 4; n <= (u64{1} << 12); n *= 2) {
    auto d = cost_masked_divmod(n, 2 * n, 5, p);
    const double masked_over_baseline =
        d.comparison.masked.total() / d.comparison.baseline.total();
    EXPECT_LT(masked_over_baseline, prev);
    prev = masked_over_baseline;
  }
}

TEST(CostMaskedSqrt, ItemizedPerTheCostParagraph) {
  auto c = cost_masked_sqrt(256, CostParams::defaults());
  // 2 squares (mask chain + clearing), 2 windowed mults, 1 inversion, 1 comparison.
  double squares = 0.0;
  bool saw_inversion = false, saw_comparison = false, saw_cq = false;
  for (const auto& t : c.masked.terms) {
    if (t.name == "mask_root_chain" || t.name == "clear_input_chain") squares += t.value;
    if (t.name == "inversion_euclid") saw_inversion = true;
    if (t.name == "comparison") saw_comparison = true;
    if (t.name == "cq_mults_windowed") saw_cq = true;
  }
  EXPECT_DOUBLE_EQ(squares, 2.0 * 65536.0);
  EXPECT_TRUE(saw_inversion);
  EXPECT_TRUE(saw_comparison);
  EXPECT_TRUE(saw_cq);
  EXPECT_DOUBLE_EQ(c.baseline.total(), 65536.0 * 256.0);  // n^3
}

TEST(CostMaskedSqrt, NoClearVariantDropsSquareAndSwapsInversion) {
  auto with_clear = cost_masked_sqrt(256, CostParams::defaults(), {true, 2});
  auto no_clear = cost_masked_sqrt(256, CostParams::defaults(), {false, 2});
  EXPECT_LT(no_clear.masked.total(), with_clear.masked.total());
  bool masked_inversion = false;
  for (const auto& t : no_clear.masked.terms) {
    if (t.name == "inversion_masked") masked_inversion = true;
    EXPECT_NE(t.name, "clear_input_chain");
  }
  EXPECT_TRUE(masked_inversion);
}

TEST(CostMaskedSqrt, RootChainCounts) {
  EXPECT_EQ(root_chain_multiplies(1), 0u);
  EXPECT_EQ(root_chain_multiplies(2), 1u);
  EXPECT_EQ(root_chain_multiplies(3), 2u);
  EXPECT_EQ(root_chain_multiplies(5), 3u);
  EXPECT_EQ(root_chain_multiplies(8), 3u);
  auto k1 = cost_masked_sqrt(64, CostParams::defaults(), {true, 1});
  for (const auto& t : k1.masked.terms) {
    if (t.name == "mask_root_chain") {
      EXPECT_DOUBLE_EQ(t.value, 0.0);
    }
  }
}

TEST(CostMaskedSparse, SavingsExactUnderUnitConstants) {
  auto c = cost_masked_sparse(100, 100, 3, CostParams::defaults());
  EXPECT_DOUBLE_EQ(c.masked.total(), 300.0);
  EXPECT_DOUBLE_EQ(c.baseline.total(), 10000.0);
  EXPECT_DOUBLE_EQ(c.baseline.total() - c.masked.total(), 100.0 * (100.0 - 3.0));

  auto dense = cost_masked_sparse(50, 50, 50, CostParams::defaults());
  EXPECT_DOUBLE_EQ(dense.baseline.total() - dense.masked.total(), 0.0);
}

TEST(CostModel, MonotoneInEverySizeParameter) {
  CostParams p;
  double prev = 0.0;
  for (u64 n = 8; n <= 4096; n *= 2) {
    const double t = cost_masked_inverse(n, p).masked.total();
    EXPECT_GT(t, prev);
    prev = t;
  }
  prev = 0.0;
  for (u64 n = 8; n <= 4096; n *= 2) {
    const double t = cost_masked_sqrt(n, p).masked.total();
    EXPECT_GT(t, prev);
    prev = t;
  }
  prev = 0.0;
  for (u64 m = 16; m <= 1024; m *= 2) {
    const double t = cost_masked_divmod(16, m, 7, p).comparison.masked.total();
    EXPECT_GT(t, prev);
    prev = t;
  }
  prev = 0.0;
  for (u64 k = 1; k <= 64; k *= 2) {
    const double t = cost_masked_sparse(100, 100, k, p).masked.total();
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(CostModel, ConfigRoundTrip) {
  const std::string path = "/tmp/qmask_cost_test.json";
  {
    std::ofstream out(path);
    out << default_config_json();
  }
  auto p = load_params(path);
  EXPECT_DOUBLE_EQ(p.euclid_inverse, CostParams::defaults().euclid_inverse);
  EXPECT_DOUBLE_EQ(p.qq_mult, CostParams::defaults().qq_mult);
}
