#include "forge/simd/cpu.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace forge::simd {

namespace {

Isa probe() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

Isa initial_active() {
  const Isa best = detected_isa();
  const char* env = std::getenv("FORGE_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::kScalar;
  return best;
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{initial_active()};
  return slot;
}

}  // namespace

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) isa = Isa::kScalar;
  active_slot().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kAvx2:
      return "avx2";
    case Isa::kScalar:
      return "scalar";
  }
  return "unknown";
}

}  // namespace forge::simd
