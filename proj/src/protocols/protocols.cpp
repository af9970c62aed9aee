#include "qmask/protocols/protocols.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace qmask::protocols {

using classical::mod_inverse;
using classical::mul_mod;
using classical::pow_mod;
using classical::u64;
using qsim::Accumulate;
using qsim::BijectionSpec;
using qsim::RegisterDescriptor;
using qsim::SeededRng;
using qsim::SparseState;

namespace {

constexpr double kFidelityFloor = 1.0 - 1e-9;

std::vector<Value> range_values(Value lo, Value hi) {  // [lo, hi)
  std::vector<Value> v;
  v.reserve(static_cast<std::size_t>(hi - lo));
  for (Value x = lo; x < hi; ++x) v.push_back(x);
  return v;
}

struct Runner {
  SparseState st;
  ProtocolResult out;

  void step(std::string s) { out.steps.push_back(std::move(s)); }

  RegisterDescriptor load_input(const InputSpec& in, u64 modulus, const std::string& label) {
    auto reg = st.alloc_register(modulus, label);
    st.prepare_superposition(reg, in.amplitudes);
    step("prepare:" + label);
    return reg;
  }

  RegisterDescriptor mask_register(u64 modulus, const std::string& label,
                                   std::span<const Value> support) {
    auto reg = st.alloc_register(modulus, label);
    st.prepare_uniform(reg, support);
    step("prepare:" + label);
    return reg;
  }

  Value measure(const RegisterDescriptor& reg, SeededRng& rng) {
    auto rec = st.measure(reg, rng);
    step("measure:" + reg.label);
    const Value outcome = rec.outcome;
    out.transcript.push_back(std::move(rec));
    return outcome;
  }

  void drop(const RegisterDescriptor& reg) {
    st.discard(reg);
    step("discard:" + reg.label);
  }

  void finish(SparseState ideal) {
    out.fidelity = qsim::fidelity(st, ideal);
    out.success = out.fidelity >= kFidelityFloor;
    out.final_state = std::move(st);
    out.ideal_state = std::move(ideal);
  }
};

SparseState ideal_pair(u64 m1, const std::string& l1, u64 m2, const std::string& l2,
                       const std::vector<std::tuple<Value, Value, Amplitude>>& entries) {
  std::vector<std::pair<std::vector<Value>, Amplitude>> e;
  e.reserve(entries.size());
  for (const auto& [a, b, amp] : entries) e.push_back({{a, b}, amp});
  return SparseState::with_amplitudes({{m1, l1}, {m2, l2}}, e);
}

SparseState ideal_single(u64 m, const std::string& l,
                         const std::vector<std::pair<Value, Amplitude>>& entries) {
  std::vector<std::pair<std::vector<Value>, Amplitude>> e;
  e.reserve(entries.size());
  for (const auto& [a, amp] : entries) e.push_back({{a}, amp});
  return SparseState::with_amplitudes({{m, l}}, e);
}

void require_prime(u64 p) {
  if (!classical::is_prime(p)) fail(ErrorCode::not_prime, std::to_string(p) + " is not prime");
}

void require_odd_prime(u64 p) {
  require_prime(p);
  if (p == 2) fail(ErrorCode::invalid_input, "p must be odd");
}

void require_domain(const InputSpec& in, u64 modulus) {
  if (in.modulus != modulus) {
    fail(ErrorCode::invalid_input, "input domain modulus " + std::to_string(in.modulus) +
                                       " does not match protocol modulus " +
                                       std::to_string(modulus));
  }
}

}  // namespace

InputSpec InputSpec::basis(std::uint64_t modulus, Value v) {
  if (v >= modulus) fail(ErrorCode::invalid_input, "basis value exceeds modulus");
  return InputSpec{modulus, {{v, {1.0, 0.0}}}};
}

InputSpec InputSpec::uniform(std::uint64_t modulus, std::vector<Value> support) {
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (support.empty()) fail(ErrorCode::invalid_input, "empty support");
  std::vector<std::pair<Value, Amplitude>> amps;
  const double a = 1.0 / std::sqrt(static_cast<double>(support.size()));
  for (Value v : support) {
    if (v >= modulus) fail(ErrorCode::invalid_input, "support value exceeds modulus");
    amps.push_back({v, {a, 0.0}});
  }
  return InputSpec{modulus, std::move(amps)};
}

InputSpec InputSpec::from_amplitudes(std::uint64_t modulus,
                                     std::vector<std::pair<Value, Amplitude>> amps) {
  std::sort(amps.begin(), amps.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  double norm = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (amps[i].first >= modulus) fail(ErrorCode::invalid_input, "value exceeds modulus");
    if (i > 0 && amps[i].first == amps[i - 1].first) {
      fail(ErrorCode::invalid_input, "duplicate value in amplitude list");
    }
    norm += std::norm(amps[i].second);
  }
  if (amps.empty() || norm <= 0.0) fail(ErrorCode::invalid_input, "zero-norm input");
  const double scale = 1.0 / std::sqrt(norm);
  for (auto& va : amps) va.second *= scale;
  return InputSpec{modulus, std::move(amps)};
}

bool InputSpec::has_value(Value v) const {
  return std::binary_search(
      amplitudes.begin(), amplitudes.end(), std::pair<Value, Amplitude>{v, {0, 0}},
      [](const auto& x, const auto& y) { return x.first < y.first; });
}

ProtocolResult masked_mod_inverse(const InputSpec& input, std::uint64_t p, SeededRng& rng) {
  require_prime(p);
  require_domain(input, p);
  if (input.has_value(0)) {
    fail(ErrorCode::unsupported_input,
         "input contains 0; use the zero-safe variant");
  }

  Runner run;
  auto a = run.load_input(input, p, "a");
  auto r = run.mask_register(p, "mask", range_values(1, p));
  auto t = run.st.alloc_register(p, "t");
  run.st.apply_out_of_place({a, r}, t,
                            [p](std::span<const Value> v) { return mul_mod(v[0], v[1], p); },
                            Accumulate::add);
  run.step("mul:t+=a*mask");

  const Value tv = run.measure(t, rng);
  const Value t_inv = mod_inverse(tv, p);
  run.step("classical:euclid-inverse");
  run.out.byproducts["t"] = tv;
  run.out.byproducts["t_inv"] = t_inv;

  auto b = run.st.alloc_register(p, "out");
  run.st.apply_out_of_place({r}, b,
                            [p, t_inv](std::span<const Value> v) { return mul_mod(v[0], t_inv, p); },
                            Accumulate::add);
  run.step("mul:out+=mask*t_inv");
  run.st.apply_out_of_place({b}, r,
                            [p, tv](std::span<const Value> v) { return mul_mod(v[0], tv, p); },
                            Accumulate::subtract);
  run.step("mul:mask-=out*t");
  run.drop(r);
  run.drop(t);

  std::vector<std::tuple<Value, Value, Amplitude>> ideal;
  for (const auto& [av, amp] : input.amplitudes) ideal.push_back({av, mod_inverse(av, p), amp});
  run.finish(ideal_pair(p, "a", p, "out", ideal));
  return std::move(run.out);
}

ProtocolResult masked_mod_inverse_zero_safe(const InputSpec& input, std::uint64_t p,
                                            Value zero_image, SeededRng& rng) {
  require_prime(p);
  require_domain(input, p);
  if (zero_image >= p) fail(ErrorCode::invalid_input, "zero image exceeds modulus");

  Runner run;
  auto a = run.load_input(input, p, "a");
  auto r = run.mask_register(p, "mask", range_values(1, p));
  auto f = run.st.alloc_register(2, "zflag");
  run.st.apply_out_of_place({a}, f,
                            [](std::span<const Value> v) { return v[0] == 0 ? 1 : 0; },
                            Accumulate::add);
  run.step("compare:zflag+=[a=0]");

  auto t = run.st.alloc_register(p, "t");
  run.st.apply_controlled(f, 1,
                          BijectionSpec::accumulate({r}, t,
                                                    [](std::span<const Value> v) { return v[0]; },
                                                    Accumulate::add));
  run.step("ctrl-copy:t+=mask if zflag");
  run.st.apply_controlled(
      f, 0,
      BijectionSpec::accumulate({a, r}, t,
                                [p](std::span<const Value> v) { return mul_mod(v[0], v[1], p); },
                                Accumulate::add));
  run.step("ctrl-mul:t+=a*mask if !zflag");

  const Value tv = run.measure(t, rng);
  const Value t_inv = mod_inverse(tv, p);
  run.step("classical:euclid-inverse");
  run.out.byproducts["t"] = tv;
  run.out.byproducts["t_inv"] = t_inv;
  run.out.byproducts["zero_image"] = zero_image;

  auto b = run.st.alloc_register(p, "out");
  run.st.apply_controlled(
      f, 0,
      BijectionSpec::accumulate({r}, b,
                                [p, t_inv](std::span<const Value> v) {
                                  return mul_mod(v[0], t_inv, p);
                                },
                                Accumulate::add));
  run.step("ctrl-mul:out+=mask*t_inv if !zflag");
  run.st.apply_controlled(f, 1, BijectionSpec::in_place({b}, [p, zero_image](std::span<Value> v) {
                            v[0] = (v[0] + zero_image) % p;
                          }));
  run.step("ctrl-add:out+=zero_image if zflag");

  run.st.apply_controlled(
      f, 0,
      BijectionSpec::accumulate({b}, r,
                                [p, tv](std::span<const Value> v) { return mul_mod(v[0], tv, p); },
                                Accumulate::subtract));
  run.step("ctrl-mul:mask-=out*t if !zflag");
  run.st.apply_controlled(f, 1, BijectionSpec::in_place({r}, [p, tv](std::span<Value> v) {
                            v[0] = (v[0] + p - tv) % p;
                          }));
  run.step("ctrl-sub:mask-=t if zflag");

  run.st.apply_out_of_place({a}, f,
                            [](std::span<const Value> v) { return v[0] == 0 ? 1 : 0; },
                            Accumulate::subtract);
  run.step("compare:zflag-=[a=0]");
  run.drop(f);
  run.drop(r);
  run.drop(t);

  std::vector<std::tuple<Value, Value, Amplitude>> ideal;
  for (const auto& [av, amp] : input.amplitudes) {
    ideal.push_back({av, av == 0 ? zero_image : mod_inverse(av, p), amp});
  }
  run.finish(ideal_pair(p, "a", p, "out", ideal));
  return std::move(run.out);
}

ProtocolResult masked_mod_inverse_composite(const InputSpec& input, std::uint64_t n,
                                            const std::vector<std::uint64_t>& factorization,
                                            SeededRng& rng) {
  auto group = groups::group_units_mod(n, factorization);  // validates the factorization
  require_domain(input, n);
  const std::vector<Value>& units = group->elements;

  Runner run;
  auto a = run.load_input(input, n, "a");
  auto r = run.mask_register(n, "mask", units);
  auto t = run.st.alloc_register(n, "t");
  run.st.apply_out_of_place({a, r}, t,
                            [n](std::span<const Value> v) { return mul_mod(v[0], v[1], n); },
                            Accumulate::add);
  run.step("mul:t+=a*mask");

  const Value tv = run.measure(t, rng);
  const u64 g = std::gcd(tv, n);
  run.out.byproducts["t"] = tv;
  run.out.byproducts["gcd"] = g;

  if (g == 1) {
    run.out.tag = "coprime";
    const Value t_inv = mod_inverse(tv, n);
    run.step("classical:euclid-inverse");
    run.out.byproducts["t_inv"] = t_inv;
    auto b = run.st.alloc_register(n, "out");
    run.st.apply_out_of_place({r}, b,
                              [n, t_inv](std::span<const Value> v) {
                                return mul_mod(v[0], t_inv, n);
                              },
                              Accumulate::add);
    run.step("mul:out+=mask*t_inv");
    run.st.apply_out_of_place({b}, r,
                              [n, tv](std::span<const Value> v) { return mul_mod(v[0], tv, n); },
                              Accumulate::subtract);
    run.step("mul:mask-=out*t");
    run.drop(r);
    run.drop(t);

    std::vector<std::tuple<Value, Value, Amplitude>> ideal;
    for (const auto& [av, amp] : input.amplitudes) {
      if (std::gcd(av, n) == 1) ideal.push_back({av, mod_inverse(av, n), amp});
    }
    if (ideal.empty()) {
      fail(ErrorCode::invalid_input, "coprime outcome from an input with no unit support");
    }
    run.finish(ideal_pair(n, "a", n, "out", ideal));
  } else {
    run.out.tag = "non-coprime";
    run.drop(t);
    // Surviving branches: inputs whose unit-multiples can reach t; the mask
    // register stays entangled with them.
    std::vector<std::tuple<Value, Value, Amplitude>> ideal;
    for (const auto& [av, amp] : input.amplitudes) {
      for (Value rv : units) {
        if (mul_mod(av, rv, n) == tv) ideal.push_back({av, rv, amp});
      }
    }
    run.finish(ideal_pair(n, "a", n, "mask", ideal));
  }
  return std::move(run.out);
}

ProtocolResult masked_sqrt(const InputSpec& input, std::uint64_t p, RootMode mode,
                           SeededRng& rng) {
  require_odd_prime(p);
  require_domain(input, p);
  for (const auto& [av, amp] : input.amplitudes) {
    if (av == 0 || !classical::euler_is_residue(av, p)) {
      fail(ErrorCode::unsupported_input,
           std::to_string(av) + " is not a nonzero quadratic residue mod " + std::to_string(p));
    }
  }
  const Value half = (p - 1) / 2;

  Runner run;
  auto a = run.load_input(input, p, "a");
  auto r = run.mask_register(p, "mask", range_values(1, p));
  auto s = run.st.alloc_register(p, "mask_sq");
  run.st.apply_out_of_place({r}, s,
                            [p](std::span<const Value> v) { return mul_mod(v[0], v[0], p); },
                            Accumulate::add);
  run.step("square:mask_sq+=mask^2");
  auto t = run.st.alloc_register(p, "t");
  run.st.apply_out_of_place({a, s}, t,
                            [p](std::span<const Value> v) { return mul_mod(v[0], v[1], p); },
                            Accumulate::add);
  run.step("mul:t+=a*mask_sq");

  const Value tv = run.measure(t, rng);

  run.st.apply_out_of_place({r}, s,
                            [p](std::span<const Value> v) { return mul_mod(v[0], v[0], p); },
                            Accumulate::subtract);
  run.step("square:mask_sq-=mask^2");
  run.drop(s);

  const Value u = classical::canonical_sqrt(tv, p);
  const Value u_inv = mod_inverse(u, p);
  run.step("classical:tonelli-shanks");
  run.out.byproducts["t"] = tv;
  run.out.byproducts["t_root"] = u;

  run.st.apply_bijection({r}, [p, u_inv](std::span<Value> v) { v[0] = mul_mod(v[0], u_inv, p); });
  run.step("mul:mask*=t_root_inv");
  // mask now holds the +/- pair of roots for each branch.

  auto canonicalize = [&](const RegisterDescriptor& reg) {
    auto c = run.st.alloc_register(2, "sign");
    run.st.apply_out_of_place({reg}, c,
                              [half](std::span<const Value> v) { return v[0] > half ? 1 : 0; },
                              Accumulate::add);
    run.step("compare:sign+=[" + reg.label + ">half]");
    run.st.apply_controlled(c, 1, BijectionSpec::in_place({reg}, [p](std::span<Value> v) {
                              v[0] = v[0] == 0 ? 0 : p - v[0];
                            }));
    run.step("ctrl-negate:" + reg.label);
    run.out.metrics["sign_ancilla_residual"] = run.st.disentangle_residual(c);
    run.drop(c);
  };

  if (mode == RootMode::keep_input) {
    canonicalize(r);
    run.drop(t);
    std::vector<std::tuple<Value, Value, Amplitude>> ideal;
    for (const auto& [av, amp] : input.amplitudes) {
      ideal.push_back({av, classical::canonical_sqrt(mod_inverse(av, p), p), amp});
    }
    run.finish(ideal_pair(p, "a", p, "mask", ideal));
  } else {
    run.st.apply_bijection({r}, [p](std::span<Value> v) {
      v[0] = v[0] == 0 ? 0 : mod_inverse(v[0], p);
    });
    run.step("invert:mask (euclid circuit)");
    run.st.apply_out_of_place({r}, a,
                              [p](std::span<const Value> v) { return mul_mod(v[0], v[0], p); },
                              Accumulate::subtract);
    run.step("square:a-=mask^2");
    canonicalize(r);
    run.drop(a);
    run.drop(t);
    std::vector<std::pair<Value, Amplitude>> ideal;
    for (const auto& [av, amp] : input.amplitudes) {
      ideal.push_back({classical::canonical_sqrt(av, p), amp});
    }
    run.finish(ideal_single(p, "mask", ideal));
  }
  return std::move(run.out);
}

ProtocolResult masked_kth_root(const InputSpec& input, std::uint64_t p, std::uint64_t k,
                               RootMode mode, SeededRng& rng) {
  require_odd_prime(p);
  require_domain(input, p);
  if (std::gcd(k % (p - 1), p - 1) != 1) {
    fail(ErrorCode::exponent_not_invertible,
         "gcd(" + std::to_string(k) + ", " + std::to_string(p - 1) + ") != 1");
  }
  if (input.has_value(0)) fail(ErrorCode::unsupported_input, "input contains 0");

  Runner run;
  auto a = run.load_input(input, p, "a");
  auto r = run.mask_register(p, "mask", range_values(1, p));
  auto rk = run.st.alloc_register(p, "mask_pow");
  run.st.apply_out_of_place({r}, rk,
                            [p, k](std::span<const Value> v) { return pow_mod(v[0], k, p); },
                            Accumulate::add);
  run.step("pow:mask_pow+=mask^k");
  auto t = run.st.alloc_register(p, "t");
  run.st.apply_out_of_place({a, rk}, t,
                            [p](std::span<const Value> v) { return mul_mod(v[0], v[1], p); },
                            Accumulate::add);
  run.step("mul:t+=a*mask_pow");
  run.st.apply_out_of_place({r}, rk,
                            [p, k](std::span<const Value> v) { return pow_mod(v[0], k, p); },
                            Accumulate::subtract);
  run.step("pow:mask_pow-=mask^k");
  run.drop(rk);

  const Value tv = run.measure(t, rng);
  const Value u = classical::kth_root_mod_p(tv, k, p);
  const Value u_inv = mod_inverse(u, p);
  run.step("classical:kth-root");
  run.out.byproducts["t"] = tv;
  run.out.byproducts["t_root"] = u;

  run.st.apply_bijection({r}, [p, u_inv](std::span<Value> v) { v[0] = mul_mod(v[0], u_inv, p); });
  run.step("mul:mask*=t_root_inv");

  if (mode == RootMode::keep_input) {
    run.drop(t);
    std::vector<std::tuple<Value, Value, Amplitude>> ideal;
    for (const auto& [av, amp] : input.amplitudes) {
      ideal.push_back({av, classical::kth_root_mod_p(mod_inverse(av, p), k, p), amp});
    }
    run.finish(ideal_pair(p, "a", p, "mask", ideal));
  } else {
    run.st.apply_bijection({r}, [p](std::span<Value> v) {
      v[0] = v[0] == 0 ? 0 : mod_inverse(v[0], p);
    });
    run.step("invert:mask (euclid circuit)");
    run.st.apply_out_of_place({r}, a,
                              [p, k](std::span<const Value> v) { return pow_mod(v[0], k, p); },
                              Accumulate::subtract);
    run.step("pow:a-=mask^k");
    run.drop(a);
    run.drop(t);
    std::vector<std::pair<Value, Amplitude>> ideal;
    for (const auto& [av, amp] : input.amplitudes) {
      ideal.push_back({classical::kth_root_mod_p(av, k, p), amp});
    }
    run.finish(ideal_single(p, "mask", ideal));
  }
  return std::move(run.out);
}

ProtocolResult masked_sparse_solve(const InputSpec& input, const classical::SparseMatrixGF& a,
                                   SeededRng& rng) {
  if (a.rows != a.cols) fail(ErrorCode::invalid_input, "matrix must be square");
  const std::size_t dim = a.rows;
  const u64 p = a.modulus;
  if (classical::rank_gf(a) != dim) {
    fail(ErrorCode::singular_matrix, "matrix is singular mod " + std::to_string(p));
  }
  u64 domain = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (domain > (u64{1} << 40) / p) fail(ErrorCode::domain_too_large, "p^n exceeds capacity");
    domain *= p;
  }
  require_domain(input, domain);

  Runner run;
  auto va = run.load_input(input, domain, "a");
  auto vr = run.mask_register(domain, "mask", range_values(0, domain));
  auto vt = run.st.alloc_register(domain, "t");
  run.st.apply_out_of_place(
      {va, vr}, vt,
      [&a, p, dim](std::span<const Value> v) {
        auto av = groups::decode_vector(v[0], p, dim);
        auto prod = a.apply(groups::decode_vector(v[1], p, dim));
        for (std::size_t i = 0; i < dim; ++i) prod[i] = (prod[i] + av[i]) % p;
        return groups::encode_vector(prod, p);
      },
      Accumulate::add);
  run.step("matmul:t+=A*mask+a");

  const Value tv = run.measure(vt, rng);
  const auto x = classical::solve_sparse_gf(a, groups::decode_vector(tv, p, dim));
  const Value xe = groups::encode_vector(x, p);
  run.step("classical:solve");
  run.out.byproducts["t"] = tv;
  run.out.byproducts["solution"] = xe;

  run.st.apply_bijection({vr}, [&x, p, dim](std::span<Value> v) {
    auto rv = groups::decode_vector(v[0], p, dim);
    for (std::size_t i = 0; i < dim; ++i) rv[i] = (rv[i] + p - x[i]) % p;
    v[0] = groups::encode_vector(rv, p);
  });
  run.step("sub:mask-=solution");
  run.st.apply_bijection({vr}, [p, dim](std::span<Value> v) {
    auto rv = groups::decode_vector(v[0], p, dim);
    for (std::size_t i = 0; i < dim; ++i) rv[i] = rv[i] == 0 ? 0 : p - rv[i];
    v[0] = groups::encode_vector(rv, p);
  });
  run.step("negate:mask");

  run.st.apply_out_of_place(
      {vr}, va,
      [&a, p, dim](std::span<const Value> v) {
        return groups::encode_vector(a.apply(groups::decode_vector(v[0], p, dim)), p);
      },
      Accumulate::subtract);
  run.step("matmul:a-=A*mask");
  run.drop(va);
  run.drop(vt);

  std::vector<std::pair<Value, Amplitude>> ideal;
  for (const auto& [av, amp] : input.amplitudes) {
    const auto sol = classical::solve_sparse_gf(a, groups::decode_vector(av, p, dim));
    ideal.push_back({groups::encode_vector(sol, p), amp});
  }
  run.finish(ideal_single(domain, "mask", ideal));
  return std::move(run.out);
}

ProtocolResult masked_hom_inverse(const InputSpec& input, const groups::Homomorphism& hom,
                                  SeededRng& rng) {
  const groups::FiniteGroup& g = *hom.domain;
  const u64 m = g.carrier_modulus;
  require_domain(input, m);
  for (const auto& [av, amp] : input.amplitudes) {
    if (!g.contains(av)) {
      fail(ErrorCode::unsupported_input,
           std::to_string(av) + " is not an element of " + g.name);
    }
  }

  Runner run;
  auto a = run.load_input(input, m, "a");
  auto r = run.mask_register(m, "mask", g.elements);
  auto fr = run.st.alloc_register(m, "f_mask");
  run.st.apply_out_of_place({r}, fr, [&hom](std::span<const Value> v) { return hom.forward(v[0]); },
                            Accumulate::add);
  run.step("hom:f_mask+=f(mask)");
  auto t = run.st.alloc_register(m, "t");
  run.st.apply_out_of_place({a, fr}, t,
                            [&g](std::span<const Value> v) { return g.op(v[0], v[1]); },
                            Accumulate::add);
  run.step("op:t+=a.f(mask)");
  run.st.apply_out_of_place({r}, fr, [&hom](std::span<const Value> v) { return hom.forward(v[0]); },
                            Accumulate::subtract);
  run.step("hom:f_mask-=f(mask)");
  run.drop(fr);

  const Value tv = run.measure(t, rng);
  Value s = 0;
  try {
    s = hom.inverse(tv);
  } catch (const Error& e) {
    fail(ErrorCode::hom_inverse_failure, std::string("classical inverse failed: ") + e.what());
  }
  if (!g.contains(s)) {
    fail(ErrorCode::hom_inverse_failure, "classical inverse left the group");
  }
  const Value s_inv = g.inverse(s);
  run.step("classical:f-inverse");
  run.out.byproducts["t"] = tv;
  run.out.byproducts["f_inv_t"] = s;

  auto b = run.st.alloc_register(m, "out");
  run.st.apply_out_of_place({r}, b,
                            [&g, s_inv](std::span<const Value> v) { return g.op(v[0], s_inv); },
                            Accumulate::add);
  run.step("op:out+=mask.s_inv");
  run.st.apply_out_of_place({b}, r,
                            [&g, s](std::span<const Value> v) { return g.op(v[0], s); },
                            Accumulate::subtract);
  run.step("op:mask-=out.s");
  run.drop(r);
  run.drop(t);

  std::vector<std::tuple<Value, Value, Amplitude>> ideal;
  for (const auto& [av, amp] : input.amplitudes) {
    ideal.push_back({av, g.inverse(hom.inverse(av)), amp});
  }
  run.finish(ideal_pair(m, "a", m, "out", ideal));
  return std::move(run.out);
}

ProtocolResult masked_divmod(const InputSpec& input, std::uint64_t n_bits, std::uint64_t b,
                             std::uint64_t m, SeededRng& rng) {
  if (b < 2) fail(ErrorCode::invalid_divisor, "divisor must be >= 2");
  if (n_bits == 0 || m == 0) fail(ErrorCode::invalid_input, "widths must be >= 1");
  // The working register must hold every mask r1*b + r2 < 2^m * b, so its
  // width is m plus the ceiling of lg b (the floor only fits powers of two).
  const u64 lg_ceil = static_cast<u64>(std::bit_width(b - 1));
  if (m + lg_ceil > 40) fail(ErrorCode::domain_too_large, "working register too wide");
  const u64 width = u64{1} << (m + lg_ceil);
  const u64 quot_mod = u64{1} << m;
  const u64 mask_span = quot_mod * b;
  require_domain(input, u64{1} << n_bits);

  Runner run;
  auto a = run.st.alloc_register(width, "c");
  run.st.prepare_superposition(a, input.amplitudes);
  run.step("prepare:c");
  auto r1 = run.mask_register(quot_mod, "r1", range_values(0, quot_mod));
  auto r2 = run.mask_register(b, "r2", range_values(0, b));
  run.st.apply_out_of_place(
      {r1, r2}, a,
      [b, width](std::span<const Value> v) { return (v[0] * b + v[1]) % width; },
      Accumulate::add);
  run.step("add:c+=r1*b+r2");

  const Value cv = run.measure(a, rng);
  const auto [c1, c2] = classical::divmod_classical(cv, b);
  run.step("classical:divmod");
  run.out.byproducts["c"] = cv;
  run.out.byproducts["c1"] = c1;
  run.out.byproducts["c2"] = c2;

  // A branch a survives undamaged iff 0 <= c - a < 2^m * b; the success
  // region for the whole input is [max_a, mask_span - 1 + min_a].
  const Value a_min = input.min_value(), a_max = input.max_value();
  const auto& marg = run.out.transcript.back().marginal;
  double damage = 0.0;
  for (const auto& [c, prob] : marg) {
    if (c < a_max || c - a_min >= mask_span) damage += prob;
  }
  run.out.damage_probability = damage;
  const bool in_success_region = cv >= a_max && cv - a_min < mask_span;

  auto f = run.st.alloc_register(2, "borrow");
  run.st.apply_out_of_place({r2}, f,
                            [c2](std::span<const Value> v) { return v[0] > c2 ? 1 : 0; },
                            Accumulate::add);
  run.step("compare:borrow+=[r2>c2]");
  run.st.apply_bijection({r2}, [c2, b](std::span<Value> v) { v[0] = (c2 + b - v[0]) % b; });
  run.step("sub:r2=c2-r2 (mod b)");
  run.st.apply_controlled(f, 0, BijectionSpec::in_place({r1}, [c1, quot_mod](std::span<Value> v) {
                            v[0] = (c1 + quot_mod - v[0]) % quot_mod;
                          }));
  run.step("ctrl-sub:r1=c1-r1 if !borrow");
  run.st.apply_controlled(f, 1, BijectionSpec::in_place({r1}, [c1, quot_mod](std::span<Value> v) {
                            v[0] = (c1 + 2 * quot_mod - 1 - v[0]) % quot_mod;
                          }));
  run.step("ctrl-sub:r1=c1-r1-1 if borrow");
  run.st.apply_out_of_place({r2}, f,
                            [c2](std::span<const Value> v) { return v[0] > c2 ? 1 : 0; },
                            Accumulate::subtract);
  run.step("compare:borrow-=[a2>c2]");
  run.drop(f);
  run.drop(a);

  std::vector<std::tuple<Value, Value, Amplitude>> ideal;
  for (const auto& [av, amp] : input.amplitudes) ideal.push_back({av / b, av % b, amp});
  auto ideal_state = ideal_pair(quot_mod, "r1", b, "r2", ideal);

  run.out.fidelity = qsim::fidelity(run.st, ideal_state);
  run.out.success = in_success_region && run.out.fidelity >= kFidelityFloor;
  run.out.final_state = std::move(run.st);
  run.out.ideal_state = std::move(ideal_state);
  return std::move(run.out);
}

}  // namespace qmask::protocols
