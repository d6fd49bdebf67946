#include "tnid/kernels.hpp"

#include "tnid/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace tnid::kernels {

namespace {

const Backend* resolve_auto() {
    return avx2_available() ? &avx2_backend() : &scalar_backend();
}

const Backend* initial_backend() {
    if (const char* env = std::getenv("TNID_KERNELS")) {
        const std::string name(env);
        if (name == "scalar") {
            return &scalar_backend();
        }
        if (name == "avx2" && avx2_available()) {
            return &avx2_backend();
        }
        // Unknown or unavailable request falls back to auto selection.
    }
    return resolve_auto();
}

std::atomic<const Backend*> g_active{initial_backend()};

} // namespace

const Backend& active() { return *g_active.load(std::memory_order_relaxed); }

void set_active(std::string_view name) {
    if (name == "auto") {
        g_active.store(resolve_auto(), std::memory_order_relaxed);
        return;
    }
    if (name == "scalar") {
        g_active.store(&scalar_backend(), std::memory_order_relaxed);
        return;
    }
    if (name == "avx2") {
        if (!avx2_available()) {
            throw ConfigError("avx2 kernels unavailable on this machine");
        }
        g_active.store(&avx2_backend(), std::memory_order_relaxed);
        return;
    }
    throw ConfigError("unknown kernel backend: " + std::string(name));
}

} // namespace tnid::kernels
