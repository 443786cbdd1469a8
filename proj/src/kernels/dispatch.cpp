#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace xdiff::kernels {

namespace {

const KernelTable kScalar{
    "scalar",
    &scalar::rbf_eval4,
    &scalar::rbf_accumulate_transpose,
    &scalar::rbf_basis_matrix,
    &scalar::face_flux,
    &scalar::face_flux_vjp,
};

#if XDIFF_HAVE_AVX2
const KernelTable kAvx2{
    "avx2",
    &avx2::rbf_eval4,
    &avx2::rbf_accumulate_transpose,
    &avx2::rbf_basis_matrix,
    &avx2::face_flux,
    &avx2::face_flux_vjp,
};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* select_default() {
  const char* forced = std::getenv("XDIFF_KERNELS");
  if (forced != nullptr && std::string_view(forced) == "scalar") return &kScalar;
  if (const KernelTable* t = avx2_table()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{select_default()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if XDIFF_HAVE_AVX2
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_active(const KernelTable& table) { current().store(&table, std::memory_order_release); }

}  // namespace xdiff::kernels
