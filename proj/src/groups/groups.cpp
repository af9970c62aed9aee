#include "qmask/groups/groups.hpp"

#include <algorithm>
#include <random>

namespace qmask::groups {

namespace {

constexpr std::size_t kClosureExhaustiveMax = std::size_t{1} << 12;
constexpr std::size_t kAssocExhaustiveMax = std::size_t{1} << 8;
constexpr std::size_t kSampleCount = 8192;
constexpr u64 kCarrierBound = u64{1} << 20;
constexpr std::uint64_t kValidationSeed = 0x51ab5eed;

}  // namespace

bool FiniteGroup::contains(Value g) const {
  return std::binary_search(elements.begin(), elements.end(), g);
}

GroupLawReport validate_group(const FiniteGroup& g) {
  GroupLawReport report;
  const std::size_t n = g.order();
  if (n == 0) fail(ErrorCode::invalid_input, "group has no elements");
  if (!g.contains(g.identity)) fail(ErrorCode::invalid_input, "identity not in the element set");

  for (Value x : g.elements) {
    if (x >= g.carrier_modulus) fail(ErrorCode::invalid_input, "element exceeds carrier modulus");
    if (g.op(g.identity, x) != x || g.op(x, g.identity) != x) {
      fail(ErrorCode::invalid_input, "identity law fails at " + std::to_string(x));
    }
    const Value ix = g.inverse(x);
    if (!g.contains(ix) || g.op(x, ix) != g.identity || g.op(ix, x) != g.identity) {
      fail(ErrorCode::invalid_input, "inverse law fails at " + std::to_string(x));
    }
  }

  std::mt19937_64 rng(kValidationSeed);
  auto sample = [&]() { return g.elements[rng() % n]; };

  if (n <= kClosureExhaustiveMax) {
    report.closure_exhaustive = true;
    for (Value x : g.elements) {
      for (Value y : g.elements) {
        if (!g.contains(g.op(x, y))) {
          fail(ErrorCode::invalid_input, "closure fails at (" + std::to_string(x) + ", " +
                                             std::to_string(y) + ")");
        }
      }
    }
  } else {
    report.sampled_pairs = kSampleCount;
    for (std::size_t i = 0; i < kSampleCount; ++i) {
      const Value x = sample(), y = sample();
      if (!g.contains(g.op(x, y))) {
        fail(ErrorCode::invalid_input, "closure fails at (" + std::to_string(x) + ", " +
                                           std::to_string(y) + ")");
      }
    }
  }

  if (n <= kAssocExhaustiveMax) {
    report.associativity_exhaustive = true;
    for (Value x : g.elements) {
      for (Value y : g.elements) {
        for (Value z : g.elements) {
          if (g.op(g.op(x, y), z) != g.op(x, g.op(y, z))) {
            fail(ErrorCode::invalid_input, "associativity fails");
          }
        }
      }
    }
  } else {
    report.sampled_triples = kSampleCount;
    for (std::size_t i = 0; i < kSampleCount; ++i) {
      const Value x = sample(), y = sample(), z = sample();
      if (g.op(g.op(x, y), z) != g.op(x, g.op(y, z))) {
        fail(ErrorCode::invalid_input, "associativity fails");
      }
    }
  }
  return report;
}

GroupPtr group_zp_star(u64 p) {
  if (!classical::is_prime(p)) {
    fail(ErrorCode::not_prime, std::to_string(p) + " is not prime");
  }
  if (p > kCarrierBound) fail(ErrorCode::domain_too_large, "p exceeds the carrier bound");
  auto g = std::make_shared<FiniteGroup>();
  g->name = "zp_star:" + std::to_string(p);
  g->carrier_modulus = p;
  g->identity = 1;
  g->elements.reserve(p - 1);
  for (Value x = 1; x < p; ++x) g->elements.push_back(x);
  g->op = [p](Value a, Value b) { return classical::mul_mod(a, b, p); };
  g->inverse = [p](Value a) { return classical::mod_inverse(a, p); };
  validate_group(*g);
  return g;
}

GroupPtr group_units_mod(u64 n, const std::vector<u64>& factorization) {
  if (n < 2) fail(ErrorCode::invalid_modulus, "modulus must be >= 2");
  if (factorization.empty()) fail(ErrorCode::bad_factorization, "empty factorization");
  u64 product = 1;
  u64 phi = 1;
  std::vector<u64> sorted = factorization;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const u64 q = sorted[i];
    if (!classical::is_prime(q)) {
      fail(ErrorCode::bad_factorization, std::to_string(q) + " is not prime");
    }
    if (product > n / q) fail(ErrorCode::bad_factorization, "factor product exceeds modulus");
    product *= q;
    // phi contribution: q-1 for the first occurrence of q, q afterwards.
    phi *= (i > 0 && sorted[i - 1] == q) ? q : q - 1;
  }
  if (product != n) {
    fail(ErrorCode::bad_factorization,
         "factors multiply to " + std::to_string(product) + ", not " + std::to_string(n));
  }
  auto g = std::make_shared<FiniteGroup>();
  g->name = "units:" + std::to_string(n);
  g->carrier_modulus = n;
  g->identity = 1;
  g->elements = classical::units_of(n);
  if (g->elements.size() != phi) {
    fail(ErrorCode::bad_factorization, "unit count disagrees with Euler phi");
  }
  g->op = [n](Value a, Value b) { return classical::mul_mod(a, b, n); };
  g->inverse = [n](Value a) { return classical::mod_inverse(a, n); };
  validate_group(*g);
  return g;
}

Value encode_vector(std::span<const u64> v, u64 p) {
  Value e = 0;
  for (std::size_t i = v.size(); i-- > 0;) e = e * p + v[i];
  return e;
}

std::vector<u64> decode_vector(Value e, u64 p, std::size_t dim) {
  std::vector<u64> v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    v[i] = e % p;
    e /= p;
  }
  return v;
}

GroupPtr group_vector_gf(u64 p, std::size_t dim) {
  if (!classical::is_prime(p)) {
    fail(ErrorCode::not_prime, std::to_string(p) + " is not prime");
  }
  if (dim == 0) fail(ErrorCode::invalid_input, "dimension must be >= 1");
  u64 carrier = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (carrier > kCarrierBound / p) {
      fail(ErrorCode::domain_too_large, "p^dim exceeds the carrier bound");
    }
    carrier *= p;
  }
  auto g = std::make_shared<FiniteGroup>();
  g->name = "vector_gf:" + std::to_string(p) + "^" + std::to_string(dim);
  g->carrier_modulus = carrier;
  g->identity = 0;
  g->elements.resize(carrier);
  for (Value x = 0; x < carrier; ++x) g->elements[x] = x;
  g->op = [p, dim](Value a, Value b) {
    Value out = 0, mult = 1;
    for (std::size_t i = 0; i < dim; ++i) {
      out += ((a % p + b % p) % p) * mult;
      a /= p;
      b /= p;
      mult *= p;
    }
    return out;
  };
  g->inverse = [p, dim](Value a) {
    Value out = 0, mult = 1;
    for (std::size_t i = 0; i < dim; ++i) {
      const Value d = a % p;
      out += (d == 0 ? 0 : p - d) * mult;
      a /= p;
      mult *= p;
    }
    return out;
  };
  validate_group(*g);
  return g;
}

HomLawReport validate_homomorphism(const Homomorphism& h) {
  HomLawReport report;
  const FiniteGroup& g = *h.domain;
  const std::size_t n = g.order();

  // Cache forward images; also checks f maps into the group.
  std::vector<Value> image(g.elements.size());
  for (std::size_t i = 0; i < n; ++i) {
    image[i] = h.forward(g.elements[i]);
    if (!g.contains(image[i])) {
      fail(ErrorCode::invalid_input, "forward image leaves the group");
    }
    if (h.inverse(image[i]) != g.elements[i]) {
      fail(ErrorCode::hom_inverse_failure,
           "classical inverse fails at " + std::to_string(g.elements[i]));
    }
  }
  auto image_of = [&](Value x) {
    const auto it = std::lower_bound(g.elements.begin(), g.elements.end(), x);
    return image[static_cast<std::size_t>(it - g.elements.begin())];
  };

  std::mt19937_64 rng(kValidationSeed);
  auto check_pair = [&](Value x, Value y) {
    if (image_of(g.op(x, y)) != g.op(image_of(x), image_of(y))) {
      fail(ErrorCode::invalid_input, "homomorphism law fails at (" + std::to_string(x) + ", " +
                                         std::to_string(y) + ")");
    }
  };
  if (n <= kClosureExhaustiveMax) {
    report.law_exhaustive = true;
    for (Value x : g.elements) {
      for (Value y : g.elements) check_pair(x, y);
    }
  } else {
    report.sampled_pairs = kSampleCount;
    for (std::size_t i = 0; i < kSampleCount; ++i) {
      check_pair(g.elements[rng() % n], g.elements[rng() % n]);
    }
  }
  return report;
}

Homomorphism hom_power(GroupPtr zp_star, u64 k) {
  const u64 p = zp_star->carrier_modulus;
  if (!classical::is_prime(p) || zp_star->identity != 1 ||
      zp_star->order() != static_cast<std::size_t>(p - 1)) {
    fail(ErrorCode::invalid_input, "hom_power needs a group built by group_zp_star");
  }
  if (std::gcd(k % (p - 1), p - 1) != 1) {
    fail(ErrorCode::exponent_not_invertible,
         "gcd(" + std::to_string(k) + ", " + std::to_string(p - 1) + ") != 1");
  }
  Homomorphism h;
  h.name = "power:" + std::to_string(k);
  h.domain = std::move(zp_star);
  h.forward = [p, k](Value x) { return classical::pow_mod(x, k, p); };
  h.inverse = [p, k](Value y) { return classical::kth_root_mod_p(y, k, p); };
  validate_homomorphism(h);
  return h;
}

Homomorphism hom_identity(GroupPtr g) {
  Homomorphism h;
  h.name = "identity";
  h.domain = std::move(g);
  h.forward = [](Value x) { return x; };
  h.inverse = [](Value y) { return y; };
  validate_homomorphism(h);
  return h;
}

Homomorphism hom_linear(GroupPtr vec_group, classical::SparseMatrixGF a) {
  if (a.rows != a.cols) fail(ErrorCode::invalid_input, "matrix must be square");
  const u64 p = a.modulus;
  const std::size_t dim = a.rows;
  u64 carrier = 1;
  for (std::size_t i = 0; i < dim; ++i) carrier *= p;
  if (vec_group->carrier_modulus != carrier || vec_group->identity != 0) {
    fail(ErrorCode::invalid_input, "hom_linear needs the matching group_vector_gf group");
  }
  if (classical::rank_gf(a) != dim) {
    fail(ErrorCode::singular_matrix, "matrix is singular; the map is not invertible");
  }
  auto mat = std::make_shared<classical::SparseMatrixGF>(std::move(a));
  Homomorphism h;
  h.name = "linear";
  h.domain = std::move(vec_group);
  h.forward = [mat, p, dim](Value x) {
    return encode_vector(mat->apply(decode_vector(x, p, dim)), p);
  };
  h.inverse = [mat, p, dim](Value y) {
    return encode_vector(classical::solve_sparse_gf(*mat, decode_vector(y, p, dim)), p);
  };
  validate_homomorphism(h);
  return h;
}

}  // namespace qmask::groups
