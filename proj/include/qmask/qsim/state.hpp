#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qmask/errors.hpp"

namespace qmask::qsim {

using Value = std::uint64_t;
using Amplitude = std::complex<double>;
using Key = unsigned __int128;

struct RegisterDescriptor {
  std::uint32_t id = 0;
  std::uint64_t modulus = 0;
  std::string label;
};

/// Wraps mt19937_64 so the seed travels with the generator (measurement
/// records store it). next_unit() maps raw draws to [0,1) the same way on
/// every platform; std::uniform_real_distribution is not portable.
struct SeededRng {
  explicit SeededRng(std::uint64_t s) : seed(s), engine(s) {}
  std::uint64_t seed;
  std::mt19937_64 engine;

  double next_unit() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
};

/// Exact pre-measurement distribution, sorted by value.
using Marginal = std::vector<std::pair<Value, double>>;

struct MeasurementRecord {
  std::uint32_t register_id = 0;
  std::string register_label;
  Value outcome = 0;
  Marginal marginal;
  std::uint64_t rng_seed = 0;

  bool operator==(const MeasurementRecord&) const = default;
};

struct SimConfig {
  double prune_threshold = 1e-15;
  /// Rank-1 factorization residual allowed by discard().
  double factor_tolerance = 1e-9;
  /// In-place bijections over product domains up to this size are validated
  /// exhaustively before use.
  std::uint64_t bijection_check_bound = std::uint64_t{1} << 20;
  /// Above the bound the caller is trusted (set false to reject instead).
  bool trust_large_domains = true;
};

enum class Accumulate { add, subtract, multiply, divide };

using InPlaceFn = std::function<void(std::span<Value>)>;
using OutOfPlaceFn = std::function<Value(std::span<const Value>)>;

/// A reversible update: either an in-place bijection on `regs`, or an
/// accumulation dst' = combine(dst, fn(src)). Built via the factories; used
/// directly by apply_bijection/apply_out_of_place and under a control by
/// apply_controlled.
struct BijectionSpec {
  bool out_of_place = false;
  std::vector<RegisterDescriptor> regs;  // in-place: touched; out-of-place: src
  RegisterDescriptor dst;
  InPlaceFn map;
  OutOfPlaceFn fn;
  Accumulate combine = Accumulate::add;

  static BijectionSpec in_place(std::vector<RegisterDescriptor> regs, InPlaceFn map) {
    BijectionSpec s;
    s.regs = std::move(regs);
    s.map = std::move(map);
    return s;
  }

  static BijectionSpec accumulate(std::vector<RegisterDescriptor> src, RegisterDescriptor dst,
                                  OutOfPlaceFn fn, Accumulate combine) {
    BijectionSpec s;
    s.out_of_place = true;
    s.regs = std::move(src);
    s.dst = std::move(dst);
    s.fn = std::move(fn);
    s.combine = combine;
    return s;
  }
};

/// Exact sparse quantum state over integer-valued registers. Entries map
/// packed register tuples to complex amplitudes; the packing is mixed-radix
/// over the register moduli and entries stay sorted by packed key.
class SparseState {
 public:
  struct Entry {
    Key key;
    Amplitude amp;
  };

  SparseState() : SparseState(SimConfig{}) {}
  explicit SparseState(SimConfig cfg);

  /// Builds a state directly from (tuple, amplitude) entries, normalizing the
  /// total weight. Used to construct reference states without replaying ops.
  static SparseState with_amplitudes(
      const std::vector<std::pair<std::uint64_t, std::string>>& registers,
      const std::vector<std::pair<std::vector<Value>, Amplitude>>& entries);

  /// New register appended in value 0; existing tuples extended.
  RegisterDescriptor alloc_register(std::uint64_t modulus, std::string label);

  /// reg (holding 0 in every tuple) becomes a uniform superposition over
  /// `support`, tensored with the rest.
  void prepare_uniform(const RegisterDescriptor& reg, std::span<const Value> support);

  /// General preparation of a fresh register into a normalized superposition.
  void prepare_superposition(const RegisterDescriptor& reg,
                             std::span<const std::pair<Value, Amplitude>> amplitudes);

  void apply_bijection(const std::vector<RegisterDescriptor>& regs, const InPlaceFn& map);

  void apply_out_of_place(const std::vector<RegisterDescriptor>& src,
                          const RegisterDescriptor& dst, const OutOfPlaceFn& fn,
                          Accumulate combine);

  /// Applies `inner` only on tuples where `control` holds `control_value`.
  void apply_controlled(const RegisterDescriptor& control, Value control_value,
                        const BijectionSpec& inner);

  Marginal marginal(const RegisterDescriptor& reg) const;

  /// Samples from the exact marginal, projects and renormalizes. The record
  /// keeps the full pre-measurement marginal.
  MeasurementRecord measure(const RegisterDescriptor& reg, SeededRng& rng);

  /// Removes a register whose state factors out (rank-1 within the
  /// configured tolerance); throws discard-of-entangled-register otherwise.
  void discard(const RegisterDescriptor& reg);

  /// The factorization residual discard() checks against its tolerance.
  double disentangle_residual(const RegisterDescriptor& reg) const;

  double norm_squared() const;
  std::size_t num_registers() const { return regs_.size(); }
  const std::vector<RegisterDescriptor>& registers() const { return regs_; }
  std::size_t size() const { return entries_.size(); }
  const SimConfig& config() const { return cfg_; }
  SimConfig& config() { return cfg_; }

  Amplitude amplitude(std::span<const Value> tuple) const;
  /// Decoded (tuple, amplitude) pairs in key order.
  std::vector<std::pair<std::vector<Value>, Amplitude>> snapshot() const;
  /// The register's value if it is the same in every tuple.
  std::optional<Value> deterministic_value(const RegisterDescriptor& reg) const;

 private:
  SimConfig cfg_;
  std::vector<RegisterDescriptor> regs_;
  std::vector<Key> strides_;  // strides_[i] = product of moduli after i
  Key domain_ = 1;
  std::vector<Entry> entries_;
  std::uint32_t next_id_ = 0;

  std::size_t index_of(const RegisterDescriptor& reg) const;
  void recompute_strides();
  Value digit(Key key, std::size_t idx) const;
  void apply_spec(const BijectionSpec& spec, const RegisterDescriptor* control,
                  Value control_value);
  void validate_in_place(const BijectionSpec& spec, std::span<const std::size_t> idx) const;
  void sort_entries_and_reject_collisions();
  void prune();

  friend double fidelity(const SparseState& a, const SparseState& b);
};

/// |<a|b>|^2 for states with the same register layout (same moduli in order;
/// ids and labels are not compared, so independently built states work).
double fidelity(const SparseState& a, const SparseState& b);

}  // namespace qmask::qsim
