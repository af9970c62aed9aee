#include "qmask/classical/modular.hpp"

#include <numeric>
#include <string>

namespace qmask::classical {

u64 mul_mod(u64 a, u64 b, u64 m) {
  return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

u64 pow_mod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

u64 mod_inverse(u64 a, u64 n) {
  if (n < 2) fail(ErrorCode::invalid_modulus, "modulus must be >= 2");
  a %= n;
  // Iterative extended Euclid, tracking only the coefficient of a.
  std::int64_t t = 0, new_t = 1;
  u64 r = n, new_r = a;
  while (new_r != 0) {
    u64 q = r / new_r;
    std::int64_t tmp_t = t - static_cast<std::int64_t>(q) * new_t;
    t = new_t;
    new_t = tmp_t;
    u64 tmp_r = r - q * new_r;
    r = new_r;
    new_r = tmp_r;
  }
  if (r != 1) {
    fail(ErrorCode::not_a_unit,
         "no inverse of " + std::to_string(a) + " mod " + std::to_string(n) +
             " (gcd = " + std::to_string(r) + ")");
  }
  std::int64_t inv = t % static_cast<std::int64_t>(n);
  if (inv < 0) inv += static_cast<std::int64_t>(n);
  return static_cast<u64>(inv);
}

bool euler_is_residue(u64 a, u64 p) {
  if (p < 3 || p % 2 == 0) fail(ErrorCode::invalid_input, "p must be an odd prime");
  if (a == 0 || a >= p) fail(ErrorCode::invalid_input, "need 1 <= a < p");
  return pow_mod(a, (p - 1) / 2, p) == 1;
}

std::pair<u64, u64> sqrt_mod_p(u64 a, u64 p) {
  if (p < 3 || p % 2 == 0 || !is_prime(p)) {
    fail(ErrorCode::invalid_input, "p must be an odd prime");
  }
  a %= p;
  if (a == 0) return {0, 0};
  if (!euler_is_residue(a, p)) {
    fail(ErrorCode::non_residue,
         std::to_string(a) + " is not a quadratic residue mod " + std::to_string(p));
  }

  u64 root;
  if (p % 4 == 3) {
    root = pow_mod(a, (p + 1) / 4, p);
  } else {
    // Tonelli-Shanks. p - 1 = q * 2^s with q odd.
    u64 q = p - 1;
    u64 s = 0;
    while (q % 2 == 0) {
      q /= 2;
      ++s;
    }
    u64 z = 2;
    while (euler_is_residue(z, p)) ++z;  // deterministic non-residue search
    u64 m = s;
    u64 c = pow_mod(z, q, p);
    u64 t = pow_mod(a, q, p);
    root = pow_mod(a, (q + 1) / 2, p);
    while (t != 1) {
      u64 i = 0;
      u64 t2 = t;
      while (t2 != 1) {
        t2 = mul_mod(t2, t2, p);
        ++i;
      }
      u64 b = pow_mod(c, u64{1} << (m - i - 1), p);
      root = mul_mod(root, b, p);
      c = mul_mod(b, b, p);
      t = mul_mod(t, c, p);
      m = i;
    }
  }
  u64 other = p - root;
  if (root > other) std::swap(root, other);
  return {root, other};
}

u64 canonical_sqrt(u64 a, u64 p) { return sqrt_mod_p(a, p).first; }

u64 kth_root_mod_p(u64 a, u64 k, u64 p) {
  if (p < 3 || p % 2 == 0 || !is_prime(p)) {
    fail(ErrorCode::invalid_input, "p must be an odd prime");
  }
  if (a == 0 || a >= p) fail(ErrorCode::invalid_input, "need 1 <= a < p");
  u64 order = p - 1;
  if (std::gcd(k % order, order) != 1) {
    fail(ErrorCode::exponent_not_invertible,
         "gcd(" + std::to_string(k) + ", " + std::to_string(order) + ") != 1");
  }
  u64 d = mod_inverse(k % order, order);
  return pow_mod(a, d, p);
}

std::pair<u64, u64> divmod_classical(u64 c, u64 b) {
  if (b == 0) fail(ErrorCode::division_by_zero, "divisor is zero");
  return {c / b, c % b};
}

std::vector<u64> units_of(u64 n, u64 bound) {
  if (n < 2) fail(ErrorCode::invalid_modulus, "modulus must be >= 2");
  if (n > bound) {
    fail(ErrorCode::domain_too_large,
         "unit enumeration for n = " + std::to_string(n) + " exceeds bound " +
             std::to_string(bound));
  }
  std::vector<u64> units;
  for (u64 r = 1; r < n; ++r) {
    if (std::gcd(r, n) == 1) units.push_back(r);
  }
  return units;
}

bool is_prime(u64 n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (u64 d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

}  // namespace qmask::classical
