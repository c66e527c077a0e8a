#include "cmpe/kernels.hpp"

#include <cstdlib>

namespace cmpe::kernels {

namespace {

const Ops* g_active = nullptr;

const Ops* lookup(std::string_view name) {
  if (name == "scalar") return &scalar_ops();
  if (name == "avx2") return avx2_ops();
  return nullptr;
}

const Ops* select_initial() {
  if (const char* env = std::getenv("CMPE_SIMD")) {
    if (const Ops* ops = lookup(env)) return ops;
  }
  if (const Ops* ops = avx2_ops()) return ops;
  return &scalar_ops();
}

}  // namespace

const Ops& active_ops() {
  if (!g_active) g_active = select_initial();
  return *g_active;
}

bool set_active(std::string_view name) {
  const Ops* ops = lookup(name);
  if (!ops) return false;
  g_active = ops;
  return true;
}

}  // namespace cmpe::kernels
