#include "qmask/qsim/state.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "qmask/classical/modular.hpp"

namespace qmask::qsim {

namespace {

constexpr std::size_t kMaxTouched = 8;
constexpr Key kDomainCap = Key{1} << 126;

struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    double y = x - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

std::string u128_str(Key v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<unsigned>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

}  // namespace

SparseState::SparseState(SimConfig cfg) : cfg_(cfg) {
  entries_.push_back({0, {1.0, 0.0}});
  recompute_strides();
}

SparseState SparseState::with_amplitudes(
    const std::vector<std::pair<std::uint64_t, std::string>>& registers,
    const std::vector<std::pair<std::vector<Value>, Amplitude>>& entries) {
  SparseState st;
  std::vector<RegisterDescriptor> regs;
  for (const auto& [modulus, label] : registers) regs.push_back(st.alloc_register(modulus, label));
  if (entries.empty()) fail(ErrorCode::invalid_input, "no amplitudes given");

  st.entries_.clear();
  KahanSum total;
  for (const auto& [tuple, amp] : entries) {
    if (tuple.size() != regs.size()) {
      fail(ErrorCode::layout_mismatch, "tuple length does not match register count");
    }
    Key key = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      if (tuple[i] >= regs[i].modulus) {
        fail(ErrorCode::invalid_input, "tuple value exceeds register modulus");
      }
      key += static_cast<Key>(tuple[i]) * st.strides_[i];
    }
    st.entries_.push_back({key, amp});
    total.add(std::norm(amp));
  }
  if (total.sum <= 0.0) fail(ErrorCode::invalid_input, "zero-norm amplitude set");
  const double scale = 1.0 / std::sqrt(total.sum);
  for (Entry& e : st.entries_) e.amp *= scale;
  std::sort(st.entries_.begin(), st.entries_.end(),
            [](const Entry& x, const Entry& y) { return x.key < y.key; });
  for (std::size_t i = 1; i < st.entries_.size(); ++i) {
    if (st.entries_[i].key == st.entries_[i - 1].key) {
      fail(ErrorCode::invalid_input, "duplicate tuple");
    }
  }
  st.prune();
  return st;
}

std::size_t SparseState::index_of(const RegisterDescriptor& reg) const {
  for (std::size_t i = 0; i < regs_.size(); ++i) {
    if (regs_[i].id == reg.id) {
      if (regs_[i].modulus != reg.modulus) {
        fail(ErrorCode::unknown_register, "descriptor does not match register " + regs_[i].label);
      }
      return i;
    }
  }
  fail(ErrorCode::unknown_register, "no register with id " + std::to_string(reg.id));
}

void SparseState::recompute_strides() {
  strides_.assign(regs_.size(), 1);
  domain_ = 1;
  for (std::size_t i = regs_.size(); i-- > 0;) {
    strides_[i] = domain_;
    domain_ *= regs_[i].modulus;
  }
}

Value SparseState::digit(Key key, std::size_t idx) const {
  return static_cast<Value>((key / strides_[idx]) % regs_[idx].modulus);
}

RegisterDescriptor SparseState::alloc_register(std::uint64_t modulus, std::string label) {
  if (modulus < 2) {
    fail(ErrorCode::invalid_modulus, "modulus must be >= 2 (got " + std::to_string(modulus) + ")");
  }
  if (domain_ > kDomainCap / modulus) {
    fail(ErrorCode::domain_too_large, "register product domain exceeds capacity");
  }
  RegisterDescriptor reg{next_id_++, modulus, std::move(label)};
  regs_.push_back(reg);
  for (Entry& e : entries_) e.key *= modulus;
  recompute_strides();
  return reg;
}

void SparseState::prepare_uniform(const RegisterDescriptor& reg, std::span<const Value> support) {
  std::vector<std::pair<Value, Amplitude>> amps;
  amps.reserve(support.size());
  const double a = 1.0 / std::sqrt(static_cast<double>(support.size()));
  for (Value v : support) amps.push_back({v, {a, 0.0}});
  prepare_superposition(reg, amps);
}

void SparseState::prepare_superposition(const RegisterDescriptor& reg,
                                        std::span<const std::pair<Value, Amplitude>> amplitudes) {
  const std::size_t idx = index_of(reg);
  if (amplitudes.empty()) fail(ErrorCode::invalid_support, "empty support");
  KahanSum nrm;
  for (const auto& [v, a] : amplitudes) {
    if (v >= regs_[idx].modulus) {
      fail(ErrorCode::invalid_support,
           "support value " + std::to_string(v) + " exceeds modulus " +
               std::to_string(regs_[idx].modulus));
    }
    nrm.add(std::norm(a));
  }
  if (std::abs(nrm.sum - 1.0) > 1e-12) {
    fail(ErrorCode::invalid_support, "amplitudes are not normalized");
  }
  std::vector<std::pair<Value, Amplitude>> sorted(amplitudes.begin(), amplitudes.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].first == sorted[i - 1].first) {
      fail(ErrorCode::invalid_support, "duplicate support value " + std::to_string(sorted[i].first));
    }
  }
  for (const Entry& e : entries_) {
    if (digit(e.key, idx) != 0) {
      fail(ErrorCode::register_not_fresh,
           "register " + regs_[idx].label + " is not uniformly 0");
    }
  }

  const Key stride = strides_[idx];
  std::vector<Entry> next;
  next.reserve(entries_.size() * sorted.size());
  for (const Entry& e : entries_) {
    for (const auto& [v, a] : sorted) {
      next.push_back({e.key + static_cast<Key>(v) * stride, e.amp * a});
    }
  }
  entries_ = std::move(next);
  if (!std::is_sorted(entries_.begin(), entries_.end(),
                      [](const Entry& x, const Entry& y) { return x.key < y.key; })) {
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& x, const Entry& y) { return x.key < y.key; });
  }
  prune();
}

void SparseState::apply_bijection(const std::vector<RegisterDescriptor>& regs,
                                  const InPlaceFn& map) {
  apply_spec(BijectionSpec::in_place(regs, map), nullptr, 0);
}

void SparseState::apply_out_of_place(const std::vector<RegisterDescriptor>& src,
                                     const RegisterDescriptor& dst, const OutOfPlaceFn& fn,
                                     Accumulate combine) {
  apply_spec(BijectionSpec::accumulate(src, dst, fn, combine), nullptr, 0);
}

void SparseState::apply_controlled(const RegisterDescriptor& control, Value control_value,
                                   const BijectionSpec& inner) {
  const std::size_t cidx = index_of(control);
  if (control_value >= regs_[cidx].modulus) {
    fail(ErrorCode::invalid_input, "control value exceeds control modulus");
  }
  apply_spec(inner, &control, control_value);
}

void SparseState::validate_in_place(const BijectionSpec& spec,
                                    std::span<const std::size_t> idx) const {
  Key dom = 1;
  for (std::size_t i : idx) {
    if (dom > Key{cfg_.bijection_check_bound} / regs_[i].modulus) {
      dom = Key{cfg_.bijection_check_bound} + 1;
      break;
    }
    dom *= regs_[i].modulus;
  }
  if (dom > cfg_.bijection_check_bound) {
    if (!cfg_.trust_large_domains) {
      fail(ErrorCode::domain_too_large,
           "bijection domain exceeds the check bound and trust_large_domains is off");
    }
    return;  // trusted: per-entry collision scan still applies
  }
  const std::size_t n = idx.size();
  const std::size_t domain = static_cast<std::size_t>(dom);
  std::vector<bool> seen(domain, false);
  std::array<Value, kMaxTouched> tuple{};
  for (std::size_t t = 0; t < domain; ++t) {
    std::size_t rem = t;
    for (std::size_t i = n; i-- > 0;) {
      tuple[i] = rem % regs_[idx[i]].modulus;
      rem /= regs_[idx[i]].modulus;
    }
    spec.map(std::span<Value>(tuple.data(), n));
    std::size_t packed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (tuple[i] >= regs_[idx[i]].modulus) {
        fail(ErrorCode::non_reversible_map, "bijection image out of register range");
      }
      packed = packed * regs_[idx[i]].modulus + static_cast<std::size_t>(tuple[i]);
    }
    if (seen[packed]) {
      fail(ErrorCode::non_reversible_map, "map is not injective on its domain");
    }
    seen[packed] = true;
  }
}

void SparseState::apply_spec(const BijectionSpec& spec, const RegisterDescriptor* control,
                             Value control_value) {
  // Resolve touched registers: in-place regs, or src + dst.
  std::vector<std::size_t> src_idx;
  for (const RegisterDescriptor& r : spec.regs) src_idx.push_back(index_of(r));
  std::size_t dst_idx = 0;
  std::vector<std::size_t> touched = src_idx;
  if (spec.out_of_place) {
    dst_idx = index_of(spec.dst);
    touched.push_back(dst_idx);
  }
  if (touched.empty()) fail(ErrorCode::invalid_input, "no registers named");
  if (touched.size() > kMaxTouched) fail(ErrorCode::invalid_input, "too many registers in one update");
  {
    auto sorted = touched;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      fail(ErrorCode::overlapping_register, "a register appears twice in the update");
    }
  }
  std::size_t cidx = 0;
  if (control != nullptr) {
    cidx = index_of(*control);
    if (std::find(touched.begin(), touched.end(), cidx) != touched.end()) {
      fail(ErrorCode::overlapping_register, "inner update touches its control register");
    }
  }

  if (!spec.out_of_place) {
    if (!spec.map) fail(ErrorCode::invalid_input, "missing in-place map");
    validate_in_place(spec, src_idx);
  } else if (!spec.fn) {
    fail(ErrorCode::invalid_input, "missing out-of-place function");
  }

  const std::size_t n_src = src_idx.size();
  const Value dst_mod = spec.out_of_place ? regs_[dst_idx].modulus : 0;
  std::array<Value, kMaxTouched> vals{};
  for (Entry& e : entries_) {
    if (control != nullptr && digit(e.key, cidx) != control_value) continue;
    for (std::size_t i = 0; i < n_src; ++i) vals[i] = digit(e.key, src_idx[i]);
    Key key = e.key;
    if (!spec.out_of_place) {
      std::array<Value, kMaxTouched> old = vals;
      spec.map(std::span<Value>(vals.data(), n_src));
      for (std::size_t i = 0; i < n_src; ++i) {
        const std::size_t ri = src_idx[i];
        if (vals[i] >= regs_[ri].modulus) {
          fail(ErrorCode::non_reversible_map, "bijection image out of register range");
        }
        key += (static_cast<Key>(vals[i]) - static_cast<Key>(old[i])) * strides_[ri];
      }
    } else {
      const Value image = spec.fn(std::span<const Value>(vals.data(), n_src));
      if (image >= dst_mod) {
        fail(ErrorCode::invalid_input, "out-of-place image exceeds destination modulus");
      }
      const Value d = digit(e.key, dst_idx);
      Value nd = 0;
      switch (spec.combine) {
        case Accumulate::add:
          nd = (d + image) % dst_mod;
          break;
        case Accumulate::subtract:
          nd = (d + dst_mod - image) % dst_mod;
          break;
        case Accumulate::multiply:
        case Accumulate::divide: {
          if (image == 0 || std::gcd(image, dst_mod) != 1) {
            fail(ErrorCode::non_reversible_map,
                 "multiplicative accumulation with non-unit image " + std::to_string(image));
          }
          const Value m = spec.combine == Accumulate::multiply
                              ? image
                              : classical::mod_inverse(image, dst_mod);
          nd = classical::mul_mod(d, m, dst_mod);
          break;
        }
      }
      key += (static_cast<Key>(nd) - static_cast<Key>(d)) * strides_[dst_idx];
    }
    e.key = key;
  }
  sort_entries_and_reject_collisions();
}

void SparseState::sort_entries_and_reject_collisions() {
  if (!std::is_sorted(entries_.begin(), entries_.end(),
                      [](const Entry& x, const Entry& y) { return x.key < y.key; })) {
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& x, const Entry& y) { return x.key < y.key; });
  }
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].key == entries_[i - 1].key) {
      fail(ErrorCode::non_reversible_map,
           "map is not injective on the touched values (collision at tuple key " +
               u128_str(entries_[i].key) + ")");
    }
  }
}

Marginal SparseState::marginal(const RegisterDescriptor& reg) const {
  const std::size_t idx = index_of(reg);
  const Value mod = regs_[idx].modulus;
  Marginal result;
  if (mod <= (Value{1} << 16)) {
    std::vector<KahanSum> buckets(static_cast<std::size_t>(mod));
    for (const Entry& e : entries_) {
      buckets[static_cast<std::size_t>(digit(e.key, idx))].add(std::norm(e.amp));
    }
    for (Value v = 0; v < mod; ++v) {
      if (buckets[static_cast<std::size_t>(v)].sum > 0.0) {
        result.push_back({v, buckets[static_cast<std::size_t>(v)].sum});
      }
    }
  } else {
    std::vector<std::pair<Value, double>> weights;
    weights.reserve(entries_.size());
    for (const Entry& e : entries_) weights.push_back({digit(e.key, idx), std::norm(e.amp)});
    std::sort(weights.begin(), weights.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t i = 0; i < weights.size();) {
      KahanSum s;
      const Value v = weights[i].first;
      while (i < weights.size() && weights[i].first == v) s.add(weights[i++].second);
      if (s.sum > 0.0) result.push_back({v, s.sum});
    }
  }
  return result;
}

MeasurementRecord SparseState::measure(const RegisterDescriptor& reg, SeededRng& rng) {
  const std::size_t idx = index_of(reg);
  if (entries_.empty()) fail(ErrorCode::invalid_input, "state has no amplitudes");
  Marginal marg = marginal(reg);

  const double u = rng.next_unit();
  double cum = 0.0;
  Value outcome = marg.back().first;
  for (const auto& [v, p] : marg) {
    cum += p;
    if (u < cum) {
      outcome = v;
      break;
    }
  }

  std::vector<Entry> kept;
  KahanSum w;
  for (const Entry& e : entries_) {
    if (digit(e.key, idx) == outcome) {
      kept.push_back(e);
      w.add(std::norm(e.amp));
    }
  }
  const double scale = 1.0 / std::sqrt(w.sum);
  for (Entry& e : kept) e.amp *= scale;
  entries_ = std::move(kept);
  prune();

  MeasurementRecord rec;
  rec.register_id = regs_[idx].id;
  rec.register_label = regs_[idx].label;
  rec.outcome = outcome;
  rec.marginal = std::move(marg);
  rec.rng_seed = rng.seed;
  return rec;
}

namespace {

// Entries regrouped by the tuple with one register removed, plus the
// reference register-factor taken from the heaviest group. rest keys keep the
// removed digit zeroed (re-packing happens in discard).
struct Factorization {
  std::vector<std::tuple<Key, Value, Amplitude>> items;  // sorted by (rest, value)
  std::vector<std::pair<Value, Amplitude>> phi;          // normalized reference factor
};

Factorization factor_by(const std::vector<SparseState::Entry>& entries,
                        const std::function<Value(Key)>& digit_of, Key stride) {
  Factorization f;
  f.items.reserve(entries.size());
  for (const SparseState::Entry& e : entries) {
    const Value v = digit_of(e.key);
    f.items.push_back({e.key - static_cast<Key>(v) * stride, v, e.amp});
  }
  std::sort(f.items.begin(), f.items.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
  });

  std::size_t best_begin = 0, best_end = 0;
  double best_weight = -1.0;
  for (std::size_t i = 0; i < f.items.size();) {
    const Key rest = std::get<0>(f.items[i]);
    std::size_t j = i;
    KahanSum w;
    while (j < f.items.size() && std::get<0>(f.items[j]) == rest) {
      w.add(std::norm(std::get<2>(f.items[j])));
      ++j;
    }
    if (w.sum > best_weight) {
      best_weight = w.sum;
      best_begin = i;
      best_end = j;
    }
    i = j;
  }
  f.phi.resize(best_end - best_begin);
  const double phi_scale = 1.0 / std::sqrt(best_weight);
  for (std::size_t i = best_begin; i < best_end; ++i) {
    f.phi[i - best_begin] = {std::get<1>(f.items[i]), std::get<2>(f.items[i]) * phi_scale};
  }
  // Canonical phase: largest component real positive. Keeps discard from
  // rotating the remaining state by the heaviest branch's phase.
  std::size_t top = 0;
  for (std::size_t i = 1; i < f.phi.size(); ++i) {
    if (std::abs(f.phi[i].second) > std::abs(f.phi[top].second)) top = i;
  }
  const Amplitude lead = f.phi[top].second;
  const Amplitude rot = std::conj(lead) / std::abs(lead);
  for (auto& pv : f.phi) pv.second *= rot;
  return f;
}

// <phi|psi_g> for the group starting at i; advances i past the group.
Amplitude group_projection(const Factorization& f, std::size_t& i) {
  const Key rest = std::get<0>(f.items[i]);
  Amplitude proj{0.0, 0.0};
  std::size_t pi = 0;
  while (i < f.items.size() && std::get<0>(f.items[i]) == rest) {
    const Value v = std::get<1>(f.items[i]);
    const Amplitude a = std::get<2>(f.items[i]);
    while (pi < f.phi.size() && f.phi[pi].first < v) ++pi;
    if (pi < f.phi.size() && f.phi[pi].first == v) proj += std::conj(f.phi[pi].second) * a;
    ++i;
  }
  return proj;
}

}  // namespace

double SparseState::disentangle_residual(const RegisterDescriptor& reg) const {
  const std::size_t idx = index_of(reg);
  const Factorization f =
      factor_by(entries_, [this, idx](Key k) { return digit(k, idx); }, strides_[idx]);

  // Residual^2 = sum over groups of |psi_g - <phi|psi_g> phi|^2, accumulated
  // componentwise. (The algebraically equal |psi_g|^2 - |<phi|psi_g>|^2 form
  // cancels catastrophically and floors the residual near 1e-8.)
  KahanSum residual2;
  for (std::size_t i = 0; i < f.items.size();) {
    std::size_t begin = i;
    const Amplitude proj = group_projection(f, i);
    std::size_t gi = begin, pi = 0;
    while (gi < i || pi < f.phi.size()) {
      const Value gv = gi < i ? std::get<1>(f.items[gi]) : ~Value{0};
      const Value pv = pi < f.phi.size() ? f.phi[pi].first : ~Value{0};
      if (gv == pv) {
        residual2.add(std::norm(std::get<2>(f.items[gi]) - proj * f.phi[pi].second));
        ++gi;
        ++pi;
      } else if (gv < pv) {
        residual2.add(std::norm(std::get<2>(f.items[gi])));
        ++gi;
      } else {
        residual2.add(std::norm(proj * f.phi[pi].second));
        ++pi;
      }
    }
  }
  return std::sqrt(std::max(0.0, residual2.sum));
}

void SparseState::discard(const RegisterDescriptor& reg) {
  const std::size_t idx = index_of(reg);
  const double residual = disentangle_residual(reg);
  if (residual >= cfg_.factor_tolerance) {
    fail(ErrorCode::entangled_discard,
         "register " + regs_[idx].label + " is entangled (factorization residual " +
             std::to_string(residual) + ")");
  }

  const Key stride = strides_[idx];
  const Key block = stride * regs_[idx].modulus;
  const Factorization f =
      factor_by(entries_, [this, idx](Key k) { return digit(k, idx); }, strides_[idx]);

  std::vector<Entry> next;
  KahanSum total;
  for (std::size_t i = 0; i < f.items.size();) {
    const Key rest = std::get<0>(f.items[i]);
    const Amplitude proj = group_projection(f, i);
    // Re-pack the key without the removed digit.
    const Key packed = (rest / block) * stride + rest % stride;
    next.push_back({packed, proj});
    total.add(std::norm(proj));
  }
  const double scale = 1.0 / std::sqrt(total.sum);
  for (Entry& e : next) e.amp *= scale;
  entries_ = std::move(next);
  regs_.erase(regs_.begin() + static_cast<std::ptrdiff_t>(idx));
  recompute_strides();
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& x, const Entry& y) { return x.key < y.key; });
  prune();
}

void SparseState::prune() {
  const double t = cfg_.prune_threshold;
  entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                [t](const Entry& e) { return std::abs(e.amp) < t; }),
                 entries_.end());
}

double SparseState::norm_squared() const {
  KahanSum s;
  for (const Entry& e : entries_) s.add(std::norm(e.amp));
  return s.sum;
}

Amplitude SparseState::amplitude(std::span<const Value> tuple) const {
  if (tuple.size() != regs_.size()) {
    fail(ErrorCode::layout_mismatch, "tuple length does not match register count");
  }
  Key key = 0;
  for (std::size_t i = 0; i < regs_.size(); ++i) {
    if (tuple[i] >= regs_[i].modulus) return {0.0, 0.0};
    key += static_cast<Key>(tuple[i]) * strides_[i];
  }
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const Entry& e, Key k) { return e.key < k; });
  if (it != entries_.end() && it->key == key) return it->amp;
  return {0.0, 0.0};
}

std::vector<std::pair<std::vector<Value>, Amplitude>> SparseState::snapshot() const {
  std::vector<std::pair<std::vector<Value>, Amplitude>> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) {
    std::vector<Value> tuple(regs_.size());
    for (std::size_t i = 0; i < regs_.size(); ++i) tuple[i] = digit(e.key, i);
    out.push_back({std::move(tuple), e.amp});
  }
  return out;
}

std::optional<Value> SparseState::deterministic_value(const RegisterDescriptor& reg) const {
  const std::size_t idx = index_of(reg);
  if (entries_.empty()) return std::nullopt;
  const Value v = digit(entries_.front().key, idx);
  for (const Entry& e : entries_) {
    if (digit(e.key, idx) != v) return std::nullopt;
  }
  return v;
}

double fidelity(const SparseState& a, const SparseState& b) {
  if (a.regs_.size() != b.regs_.size()) {
    fail(ErrorCode::layout_mismatch, "register counts differ");
  }
  for (std::size_t i = 0; i < a.regs_.size(); ++i) {
    if (a.regs_[i].modulus != b.regs_[i].modulus) {
      fail(ErrorCode::layout_mismatch, "register moduli differ at position " + std::to_string(i));
    }
  }
  KahanSum re, im;
  std::size_t i = 0, j = 0;
  while (i < a.entries_.size() && j < b.entries_.size()) {
    if (a.entries_[i].key < b.entries_[j].key) {
      ++i;
    } else if (b.entries_[j].key < a.entries_[i].key) {
      ++j;
    } else {
      const Amplitude t = std::conj(a.entries_[i].amp) * b.entries_[j].amp;
      re.add(t.real());
      im.add(t.imag());
      ++i;
      ++j;
    }
  }
  return re.sum * re.sum + im.sum * im.sum;
}

}  // namespace qmask::qsim
