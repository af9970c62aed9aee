#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmask/errors.hpp"

namespace qmask::cost {

using u64 = std::uint64_t;

/// Tunable coefficients, in Toffoli-equivalent gate units. The asymptotic
/// shapes follow the published circuit constructions; coefficients are
/// configured presets (tune them per target architecture), never measured
/// results.
struct CostParams {
  double qq_mult = 1.0;            // quantum-quantum modular multiply, ~n^2
  double cq_mult_windowed = 1.0;   // windowed classical-quantum multiply, ~n^2/lg n
  double euclid_inverse = 16.0;    // reversible extended-Euclid inversion, ~n^2
  double prep_window_equivalents = 1.0;  // mask preparation, in windowed-mult units
  double square = 1.0;             // modular squaring, ~n^2
  double comparison = 1.0;         // n-bit comparison, ~n
  double add = 1.0;                // plain n-bit addition unit (division baseline)
  double windowed_add = 1.0;       // windowed addition unit, ~N/lg N each
  double tonelli_shanks = 1.0;     // naive reversible Tonelli-Shanks, ~n^3
  double sparse_mult = 1.0;        // per-entry quantum multiply (matrix protocols)
  double pebble_depth_factor = 1.0;  // space/time knob for the k-th-root chain

  static CostParams defaults() { return CostParams{}; }
};

/// Loads coefficients from a JSON config (missing keys keep defaults).
CostParams load_params(const std::string& path);
/// The shipped default config text (constants plus provenance notes).
std::string default_config_json();

struct CostTerm {
  std::string name;
  double value = 0.0;
  std::string provenance;
};

struct CostBreakdown {
  std::string name;
  std::vector<CostTerm> terms;
  double total() const;
};

struct CostComparison {
  CostBreakdown masked;
  CostBreakdown baseline;
  /// baseline / masked: how much the masking route saves.
  double ratio() const;
};

/// Reversible extended-Euclid inversion baseline, ~n^2.
CostBreakdown euclid_inverse_cost(u64 n, const CostParams& params);

/// Masked modular inversion: one quantum-quantum multiply, two windowed
/// classical-quantum multiplies, one mask preparation. Baseline: Euclid.
CostComparison cost_masked_inverse(u64 n, const CostParams& params);

struct DivmodCost {
  CostComparison comparison;
  u64 additions_baseline = 0;  // 2(n - floor(lg b))
  /// Smallest n where the masked route beats the baseline, scanning with the
  /// same m/n ratio; 0 if it never wins below 2^20.
  u64 crossover_n = 0;
};

/// Masked in-place division (m windowed additions into an N = m + floor(lg b)
/// bit register) against the addition-schedule baseline. Requires m >= n.
DivmodCost cost_masked_divmod(u64 n, u64 m, u64 b, const CostParams& params);

struct RootCostOptions {
  bool clear_input = true;  // false saves one square and uses masked inversion
  u64 k = 2;                // exponent of the root chain
};

/// Masked root extraction: the square-and-multiply chain for r^k (k=2 is the
/// plain square root), two windowed multiplies, one inversion, one
/// comparison. Baseline: naive reversible Tonelli-Shanks at ~n^3.
CostComparison cost_masked_sqrt(u64 n, const CostParams& params, RootCostOptions opts = {});

/// Masked sparse solve (~rows*k quantum multiplies) against multiplying by a
/// precomputed dense inverse (~rows*cols). The savings term is
/// rows*(cols - k) under unit constants.
CostComparison cost_masked_sparse(u64 rows, u64 cols, u64 row_weight, const CostParams& params);

/// Multiplications in a square-and-multiply chain for exponent k:
/// floor(lg k) + popcount(k) - 1.
u64 root_chain_multiplies(u64 k);

}  // namespace qmask::cost
