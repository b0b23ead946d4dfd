#include "lcdt/trainmath.hpp"

#include <cmath>
#include <stdexcept>

namespace lcdt {

double suggested_base(const RopeConfig& cfg) {
    if (cfg.original_base <= 0.0) {
        throw std::invalid_argument("original base must be positive");
    }
    if (cfg.head_dim < 4 || cfg.head_dim % 2 != 0) {
        throw std::invalid_argument("head dimension must be even and >= 4");
    }
    if (cfg.original_context == 0 || cfg.target_context < cfg.original_context) {
        throw std::invalid_argument("target context must be >= original context");
    }
    const double t = static_cast<double>(cfg.target_context) /
                     static_cast<double>(cfg.original_context);
    const double d = static_cast<double>(cfg.head_dim);
    return cfg.original_base * std::pow(t, d / (d - 2.0));
}

double recipe_base(int stage) {
    switch (stage) {
        case 1:
            return 8.0e6;
        case 2:
            return 1.28e8;
        default:
            throw std::invalid_argument("stage must be 1 or 2");
    }
}

double token_avg(const std::vector<LossShard>& shards) {
    double loss = 0.0;
    std::uint64_t tokens = 0;
    for (const auto& s : shards) {
        if (s.token_count == 0 && s.loss_sum != 0.0) {
            throw std::invalid_argument("shard with zero tokens must carry zero loss");
        }
        loss += s.loss_sum;
        tokens += s.token_count;
    }
    if (tokens == 0) {
        throw std::invalid_argument("no valid tokens");
    }
    return loss / static_cast<double>(tokens);
}

}  // namespace lcdt
