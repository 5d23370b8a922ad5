#pragma once

#include <string_view>

namespace forge::simd {

enum class Isa { kScalar, kAvx2 };

/// Best instruction set the running CPU supports (AVX2 requires FMA too).
Isa detected_isa();

/// Instruction set kernels dispatch to. Defaults to detected_isa(), lowered
/// by the FORGE_SIMD environment variable ("scalar") when set.
Isa active_isa();

/// Overrides dispatch; requests above detected_isa() are clamped.
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

/// Restores the previous dispatch setting on scope exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : saved_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(saved_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa saved_;
};

}  // namespace forge::simd
