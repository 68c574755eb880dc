#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "m3/linker.hpp"

namespace m3 {

// Execution options. The image is position independent, so `base` can be any
// 8-aligned address; results must not depend on it.
struct VmOptions {
    uint64_t base = 0x10000;
    uint64_t stack_bytes = 1 << 20;
    // Bind every procedure slot at load time instead of on first call.
    bool eager_bind = false;
    uint64_t step_limit = 50'000'000;
};

struct VmResult {
    int64_t value = 0;
    // Lazy stub resolutions, per symbol: how many times the resolver ran.
    // With eager_bind no entry ever appears. A bound slot never re-resolves,
    // so every count is exactly 1.
    std::map<std::string, uint64_t> resolutions;
    uint64_t steps = 0;
    // Data section contents after execution, for differential comparison.
    std::vector<uint8_t> data_after;
};

// Loads the image at opts.base, binds data slots, runs every module
// initializer in image.init_order, then calls `entry` (or image.entry when
// empty) with `args` and returns R0. Trap conditions raise Error with the
// matching Err code.
VmResult load_and_run(const Image& image, const std::string& entry,
                      const std::vector<int64_t>& args, const VmOptions& opts = {});

} // namespace m3
