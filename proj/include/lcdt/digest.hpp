#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "lcdt/rng.hpp"

namespace lcdt {

// Incremental FNV-1a digest for shard files and manifests. Not cryptographic;
// detects corruption and run-to-run drift.
class Digest {
  public:
    void update(std::string_view bytes) { state_ = fnv1a64(bytes, state_); }

    void update(const void* data, std::size_t n) {
        update(std::string_view(static_cast<const char*>(data), n));
    }

    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
        return buf;
    }

    std::uint64_t value() const { return state_; }

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string digest_file(const std::string& path);

}  // namespace lcdt
