#include <atomic>
#include <stdexcept>

#include "triad/simd.hpp"

namespace triad::simd {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(detect_best())};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

Isa detect_best() { return available_isas().back(); }

const KernelTable& kernels_for(Isa isa) {
  if (!cpu_supports(isa)) throw std::invalid_argument("ISA not available on this CPU");
  switch (isa) {
    case Isa::Scalar:
      return detail::kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2:
      return detail::kAvx2Table;
#endif
#if defined(__aarch64__)
    case Isa::Neon:
      return detail::kNeonTable;
#endif
    default:
      break;
  }
  throw std::invalid_argument("ISA not compiled into this binary");
}

const KernelTable& active() { return *active_table().load(std::memory_order_acquire); }

Isa active_isa() {
  const KernelTable* t = &active();
  for (Isa isa : available_isas()) {
    if (&kernels_for(isa) == t) return isa;
  }
  return Isa::Scalar;
}

void set_active_isa(Isa isa) { active_table().store(&kernels_for(isa), std::memory_order_release); }

}  // namespace triad::simd
