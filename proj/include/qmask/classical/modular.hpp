#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qmask/errors.hpp"

namespace qmask::classical {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u64 mul_mod(u64 a, u64 b, u64 m);
u64 pow_mod(u64 base, u64 exp, u64 m);

/// Extended-Euclid modular inverse: b with a*b = 1 (mod n), 0 < b < n.
/// Throws not-a-unit (message carries the gcd) when gcd(a mod n, n) != 1.
u64 mod_inverse(u64 a, u64 n);

/// Both square roots of a nonzero quadratic residue mod an odd prime,
/// ordered as (small, large) with small <= (p-1)/2. Tonelli-Shanks with a
/// deterministic non-residue search starting at 2. a = 0 returns (0, 0);
/// non-residues throw (detected by the Euler criterion).
std::pair<u64, u64> sqrt_mod_p(u64 a, u64 p);

/// r with r^k = a (mod p), computed as a^(k^-1 mod p-1). Requires
/// gcd(k, p-1) = 1, otherwise throws exponent-not-invertible.
u64 kth_root_mod_p(u64 a, u64 k, u64 p);

/// (floor(c/b), c mod b); b = 0 throws division-by-zero.
std::pair<u64, u64> divmod_classical(u64 c, u64 b);

/// {r : 1 <= r < n, gcd(r, n) = 1}, enumerated exactly. n above the bound
/// throws domain-too-large.
std::vector<u64> units_of(u64 n, u64 bound = u64{1} << 20);

/// Euler criterion: a^((p-1)/2) = 1 (mod p). Requires 1 <= a < p, p odd prime.
bool euler_is_residue(u64 a, u64 p);

bool is_prime(u64 n);

/// Smallest root of a nonzero residue (convenience over sqrt_mod_p).
u64 canonical_sqrt(u64 a, u64 p);

}  // namespace qmask::classical
