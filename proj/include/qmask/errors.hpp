#pragma once

#include <stdexcept>
#include <string>

namespace qmask {

enum class ErrorCode {
  invalid_modulus,
  register_not_fresh,
  invalid_support,
  non_reversible_map,
  overlapping_register,
  entangled_discard,
  layout_mismatch,
  unknown_register,
  domain_too_large,
  not_a_unit,
  non_residue,
  exponent_not_invertible,
  singular_matrix,
  division_by_zero,
  not_prime,
  bad_factorization,
  unsupported_input,
  hom_inverse_failure,
  invalid_divisor,
  invalid_input,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_modulus: return "invalid-modulus";
    case ErrorCode::register_not_fresh: return "register-not-fresh";
    case ErrorCode::invalid_support: return "invalid-support";
    case ErrorCode::non_reversible_map: return "non-reversible-map";
    case ErrorCode::overlapping_register: return "overlapping-register";
    case ErrorCode::entangled_discard: return "discard-of-entangled-register";
    case ErrorCode::layout_mismatch: return "layout-mismatch";
    case ErrorCode::unknown_register: return "unknown-register";
    case ErrorCode::domain_too_large: return "domain-too-large";
    case ErrorCode::not_a_unit: return "not-a-unit";
    case ErrorCode::non_residue: return "non-residue";
    case ErrorCode::exponent_not_invertible: return "exponent-not-invertible";
    case ErrorCode::singular_matrix: return "singular-matrix";
    case ErrorCode::division_by_zero: return "division-by-zero";
    case ErrorCode::not_prime: return "not-prime";
    case ErrorCode::bad_factorization: return "bad-factorization";
    case ErrorCode::unsupported_input: return "unsupported-input";
    case ErrorCode::hom_inverse_failure: return "homomorphism-inverse";
    case ErrorCode::invalid_divisor: return "invalid-divisor";
    case ErrorCode::invalid_input: return "invalid-input";
  }
  return "unknown";
}

/// All library failures surface as qmask::Error; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace qmask
