#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qmask/classical/gf_matrix.hpp"
#include "qmask/groups/groups.hpp"
#include "qmask/qsim/state.hpp"

namespace qmask::protocols {

using qsim::Amplitude;
using qsim::Value;

/// Normalized superposition over {0..modulus-1}, the quantum input a
/// protocol acts on.
struct InputSpec {
  std::uint64_t modulus = 0;
  std::vector<std::pair<Value, Amplitude>> amplitudes;  // sorted by value

  static InputSpec basis(std::uint64_t modulus, Value v);
  static InputSpec uniform(std::uint64_t modulus, std::vector<Value> support);
  /// Normalizes an arbitrary nonzero amplitude list.
  static InputSpec from_amplitudes(std::uint64_t modulus,
                                   std::vector<std::pair<Value, Amplitude>> amps);

  Value min_value() const { return amplitudes.front().first; }
  Value max_value() const { return amplitudes.back().first; }
  bool has_value(Value v) const;
};

struct ProtocolResult {
  qsim::SparseState final_state;
  /// Reference state built from the classical expectation, not the protocol.
  qsim::SparseState ideal_state;
  std::vector<qsim::MeasurementRecord> transcript;
  std::vector<std::string> steps;
  std::map<std::string, std::uint64_t> byproducts;
  /// Diagnostic reals, e.g. the sign ancilla's factorization residual.
  std::map<std::string, double> metrics;
  bool success = false;
  double fidelity = 0.0;
  /// masked_mod_inverse_composite: which projection the measurement induced
  /// ("coprime" or "non-coprime").
  std::string tag;
  /// masked_divmod: exact probability (from the stored marginal) that a
  /// measured sum would truncate some input branch.
  double damage_probability = 0.0;
};

enum class RootMode { keep_input, replace_input };

/// |a> -> |a>|a^-1> over the units mod a prime, via mask-multiply-measure.
ProtocolResult masked_mod_inverse(const InputSpec& input, std::uint64_t p, qsim::SeededRng& rng);

/// Same, but tolerates |0> in the input: a zero flag copies the mask through
/// the product register and 0 maps to a chosen image.
ProtocolResult masked_mod_inverse_zero_safe(const InputSpec& input, std::uint64_t p,
                                            Value zero_image, qsim::SeededRng& rng);

/// Units-only masking mod a composite n with known factorization. Measuring
/// a coprime product keeps exactly the unit input branches (which then get
/// inverses); a non-coprime product keeps exactly the branches sharing its
/// gcd class. Either projection is reported as success with a tag.
ProtocolResult masked_mod_inverse_composite(const InputSpec& input, std::uint64_t n,
                                            const std::vector<std::uint64_t>& factorization,
                                            qsim::SeededRng& rng);

/// Square roots of quadratic residues. keep_input ends in |a>|a^(-1/2)>,
/// replace_input in |a^(1/2)>, both with the canonical (<= (p-1)/2) root; the
/// two-root superposition is folded onto an ancilla that ends exactly |+>.
ProtocolResult masked_sqrt(const InputSpec& input, std::uint64_t p, RootMode mode,
                           qsim::SeededRng& rng);

/// k-th roots for gcd(k, p-1) = 1; single-valued, no sign ancilla needed.
ProtocolResult masked_kth_root(const InputSpec& input, std::uint64_t p, std::uint64_t k,
                               RootMode mode, qsim::SeededRng& rng);

/// |a> -> |A^-1 a> over GF(p)^n via an additive mask vector; the classical
/// side solves one linear system per run.
ProtocolResult masked_sparse_solve(const InputSpec& input, const classical::SparseMatrixGF& a,
                                   qsim::SeededRng& rng);

/// Generic form: for bijective homomorphic f, |a> -> |a>|(f^-1(a))^-1>.
ProtocolResult masked_hom_inverse(const InputSpec& input, const groups::Homomorphism& hom,
                                  qsim::SeededRng& rng);

/// In-place division by a classical b: |a> -> |floor(a/b)>|a mod b>, with an
/// exactly-reported truncation probability controlled by the mask width m.
ProtocolResult masked_divmod(const InputSpec& input, std::uint64_t n_bits, std::uint64_t b,
                             std::uint64_t m, qsim::SeededRng& rng);

}  // namespace qmask::protocols
