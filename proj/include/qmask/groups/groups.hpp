#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qmask/classical/gf_matrix.hpp"
#include "qmask/classical/modular.hpp"

namespace qmask::groups {

using classical::u64;
using Value = std::uint64_t;

/// Finite group whose elements are encoded as integers below a carrier
/// modulus, so simulator registers can hold them directly. The element list
/// doubles as the uniform-support set for mask preparation.
struct FiniteGroup {
  std::string name;
  u64 carrier_modulus = 0;
  std::vector<Value> elements;  // sorted
  Value identity = 0;
  std::function<Value(Value, Value)> op;
  std::function<Value(Value)> inverse;

  std::size_t order() const { return elements.size(); }
  bool contains(Value g) const;
};

using GroupPtr = std::shared_ptr<const FiniteGroup>;

struct GroupLawReport {
  bool closure_exhaustive = false;
  bool associativity_exhaustive = false;
  std::size_t sampled_pairs = 0;
  std::size_t sampled_triples = 0;
};

/// Identity and inverse laws are checked on every element. Closure is
/// exhaustive up to 2^12 elements and associativity up to 2^8; larger groups
/// fall back to seeded random sampling (the cubic sweep is out of reach).
/// Violations throw invalid-input.
GroupLawReport validate_group(const FiniteGroup& g);

/// Multiplicative group of integers mod an odd-or-even prime p <= 2^20.
GroupPtr group_zp_star(u64 p);

/// Unit group mod n; the prime factorization is cross-checked (each factor
/// prime, product == n, Euler phi consistent with the enumerated units).
GroupPtr group_units_mod(u64 n, const std::vector<u64>& factorization);

/// Additive group GF(p)^dim, vectors packed as base-p integers with
/// component 0 least significant. Requires p^dim <= 2^20.
GroupPtr group_vector_gf(u64 p, std::size_t dim);

Value encode_vector(std::span<const u64> v, u64 p);
std::vector<u64> decode_vector(Value e, u64 p, std::size_t dim);

/// Bijective homomorphism f on a group, with a classical inverter.
struct Homomorphism {
  std::string name;
  GroupPtr domain;
  std::function<Value(Value)> forward;
  std::function<Value(Value)> inverse;
};

struct HomLawReport {
  bool law_exhaustive = false;
  std::size_t sampled_pairs = 0;
};

/// f(g.h) = f(g).f(h) on all pairs up to 2^12 elements (seeded samples
/// above); inverse(forward(g)) = g under the same regime.
HomLawReport validate_homomorphism(const Homomorphism& h);

/// x -> x^k on a group built by group_zp_star; classical inverse via
/// kth_root_mod_p. Requires gcd(k, p-1) = 1.
Homomorphism hom_power(GroupPtr zp_star, u64 k);

/// The identity map on any group.
Homomorphism hom_identity(GroupPtr g);

/// v -> A v on a group built by group_vector_gf; classical inverse solves
/// the system. A must be square invertible over the same field.
Homomorphism hom_linear(GroupPtr vec_group, classical::SparseMatrixGF a);

}  // namespace qmask::groups
