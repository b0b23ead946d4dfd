#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lcdt/packing.hpp"

namespace lcdt {

// An immutable pool of packed sequences, all of one pack length.
struct SequencePool {
    std::string name;
    std::uint64_t pack_length = 0;
    std::vector<std::shared_ptr<const PackedSequence>> sequences;

    void add(PackedSequence&& seq);
    bool empty() const { return sequences.empty(); }
};

// One sampled domain: `weight` is the token share within its group (long or
// short); `pool` names the pre-packed pool; `pack_length` is the length class.
struct DomainEntry {
    std::string name;
    double weight = 0.0;
    std::string pool;
    std::uint64_t pack_length = 0;
    bool is_long = false;
};

struct MixtureSpec {
    std::string stage;
    double long_ratio = 0.0;  // fraction of tokens from long pools
    std::vector<DomainEntry> domains;
    std::uint64_t seed = 0;
};

// Per long domain: how the domain's tokens split across pack-length classes,
// plus stage-level budget and batch size.
struct StageCurriculum {
    struct Split {
        std::string domain;
        std::uint64_t pack_length = 0;
        double fraction = 0.0;
    };
    std::vector<Split> splits;
    std::uint64_t token_budget = 0;
    std::uint64_t batch_size_tokens = 0;
    double rope_base = 0.0;  // informational; consumed by trainmath/CLI

    double split_fraction(const std::string& domain, std::uint64_t pack_length) const;
};

using PoolMap = std::map<std::string, std::shared_ptr<const SequencePool>>;

/// Lists every invariant violation in (spec, curriculum, pools); empty means
/// usable. Pool checks are skipped for pools absent from `pools` when
/// `require_pools` is false.
std::vector<std::string> validate_spec(const MixtureSpec& spec, const StageCurriculum& curriculum,
                                       const PoolMap& pools, bool require_pools = true);

enum class ExhaustionPolicy {
    kWrapAround,  // reshuffle and restart the pool, bumping an epoch counter
    kFatal,
};

struct MixStats {
    std::uint64_t sequences_emitted = 0;
    std::uint64_t tokens_emitted = 0;
    std::map<std::string, std::uint64_t> tokens_by_domain;
    // tokens per (domain, pack length) pair, for curriculum-split accounting
    std::map<std::string, std::map<std::uint64_t, std::uint64_t>> tokens_by_domain_length;
    std::uint64_t epochs_wrapped = 0;
};

using MixSink = std::function<void(const std::shared_ptr<const PackedSequence>&)>;

/// Emits sequences drawn from the pools until at least `token_budget` tokens
/// have been emitted. The stream is a pure function of (spec, curriculum,
/// pools, spec.seed). Draws are two-level (group, then domain/class) with
/// probabilities corrected by pack length so that expected token fractions
/// equal weight x group ratio (and the curriculum split within a domain).
MixStats sample_stream(const MixtureSpec& spec, const StageCurriculum& curriculum,
                       const PoolMap& pools, std::uint64_t token_budget, const MixSink& sink,
                       ExhaustionPolicy policy = ExhaustionPolicy::kWrapAround);

struct DedupReport {
    std::uint64_t removed_sequences = 0;
    std::uint64_t overlapping_origins = 0;
};

/// Removes from `pool_64k` every sequence whose origin ids intersect the
/// origin ids present in `pool_512k`. The 512K pool is never modified.
DedupReport dedup_pools(SequencePool& pool_64k, const SequencePool& pool_512k);

// Spec + curriculum parsed from a TOML config file (see configs/ presets).
struct MixtureConfig {
    MixtureSpec spec;
    StageCurriculum curriculum;
    std::map<std::string, std::string> pool_paths;  // pool name -> shard path hint
};

MixtureConfig load_mixture_config(const std::string& path);

}  // namespace lcdt
