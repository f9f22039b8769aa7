#include <cstdlib>
#include <stdexcept>
#include <string>

#include "phaselock/simd/kernels.hpp"

namespace phaselock::simd {

namespace {

const KernelTable& select_kernels() {
  const char* env = std::getenv("PHASELOCK_SIMD");
  const std::string choice = env ? env : "";
  if (choice == "scalar") return scalar_kernels();
  if (choice == "avx2") {
    if (const KernelTable* t = avx2_kernels()) return *t;
    throw std::runtime_error("PHASELOCK_SIMD=avx2 requested but the CPU lacks AVX2");
  }
  if (!choice.empty() && choice != "auto") {
    throw std::runtime_error("PHASELOCK_SIMD must be scalar, avx2 or auto");
  }
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace phaselock::simd
