#pragma once

#include <cstdint>
#include <vector>

namespace lcdt {

struct RopeConfig {
    double original_base = 0.0;
    std::uint64_t original_context = 0;
    std::uint64_t target_context = 0;
    std::uint32_t head_dim = 0;
};

/// Dynamic-NTK frequency base for extending the context window: scales the
/// base by t^(d/(d-2)) with t = target/original context and d the attention
/// head dimension.
double suggested_base(const RopeConfig& cfg);

/// The recipe constants actually used per stage (deliberately above the NTK
/// suggestion): 8e6 for stage 1 (64K), 1.28e8 for stage 2 (512K).
double recipe_base(int stage);

struct LossShard {
    double loss_sum = 0.0;
    std::uint64_t token_count = 0;
};

/// Sum of loss over sum of valid tokens across shards — every unmasked token
/// weighs equally no matter how tokens spread over devices. Errors if no
/// shard has tokens.
double token_avg(const std::vector<LossShard>& shards);

}  // namespace lcdt
