#include "lcdt/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "lcdt/rng.hpp"
#include "lcdt/toml.hpp"

namespace lcdt {

void SequencePool::add(PackedSequence&& seq) {
    validate_packed(seq);
    if (pack_length == 0) {
        pack_length = seq.length();
    } else if (seq.length() != pack_length) {
        throw std::invalid_argument("pool '" + name + "': sequence length " +
                                    std::to_string(seq.length()) + " != pack length " +
                                    std::to_string(pack_length));
    }
    sequences.push_back(std::make_shared<const PackedSequence>(std::move(seq)));
}

double StageCurriculum::split_fraction(const std::string& domain,
                                       std::uint64_t pack_length) const {
    bool domain_has_splits = false;
    for (const auto& s : splits) {
        if (s.domain != domain) {
            continue;
        }
        domain_has_splits = true;
        if (s.pack_length == pack_length) {
            return s.fraction;
        }
    }
    // A domain without curriculum entries lives at a single length class.
    return domain_has_splits ? 0.0 : 1.0;
}

namespace {
constexpr double kWeightTolerance = 1e-9;
}  // namespace

std::vector<std::string> validate_spec(const MixtureSpec& spec, const StageCurriculum& curriculum,
                                       const PoolMap& pools, bool require_pools) {
    std::vector<std::string> violations;
    if (spec.long_ratio < 0.0 || spec.long_ratio > 1.0) {
        violations.push_back("long_ratio " + std::to_string(spec.long_ratio) +
                             " outside [0,1]");
    }
    if (curriculum.token_budget == 0) {
        violations.push_back("token budget must be > 0");
    }

    // Weights are per domain name; a long domain split across length classes
    // repeats its weight on every row.
    std::map<std::string, double> long_weights;
    std::map<std::string, double> short_weights;
    for (const auto& d : spec.domains) {
        if (d.weight < 0.0 || d.weight > 1.0) {
            violations.push_back("domain '" + d.name + "' weight outside [0,1]");
        }
        auto& weights = d.is_long ? long_weights : short_weights;
        auto [it, inserted] = weights.emplace(d.name, d.weight);
        if (!inserted && std::fabs(it->second - d.weight) > kWeightTolerance) {
            violations.push_back("domain '" + d.name + "' repeats with different weights");
        }
        if (require_pools) {
            auto pit = pools.find(d.pool);
            if (pit == pools.end()) {
                violations.push_back("pool not found: '" + d.pool + "'");
            } else if (pit->second->empty()) {
                violations.push_back("pool '" + d.pool + "' is empty");
            } else if (pit->second->pack_length != d.pack_length) {
                violations.push_back("pool '" + d.pool + "' packed at " +
                                     std::to_string(pit->second->pack_length) +
                                     ", spec expects " + std::to_string(d.pack_length));
            }
        }
    }

    auto check_group = [&](const std::map<std::string, double>& weights, const char* label,
                           bool needed) {
        double sum = 0.0;
        for (const auto& [name, w] : weights) {
            sum += w;
        }
        if (weights.empty()) {
            if (needed) {
                violations.push_back(std::string(label) + " group is empty but its ratio is > 0");
            }
            return;
        }
        if (std::fabs(sum - 1.0) > kWeightTolerance) {
            violations.push_back(std::string(label) + " group sums to " + std::to_string(sum));
        }
    };
    check_group(short_weights, "short", spec.long_ratio < 1.0 - kWeightTolerance);
    check_group(long_weights, "long", spec.long_ratio > kWeightTolerance);

    // Curriculum splits must tile each multi-class long domain.
    std::map<std::string, double> split_sums;
    for (const auto& s : curriculum.splits) {
        split_sums[s.domain] += s.fraction;
        bool matched = false;
        for (const auto& d : spec.domains) {
            if (d.is_long && d.name == s.domain && d.pack_length == s.pack_length) {
                matched = true;
                break;
            }
        }
        if (!matched) {
            violations.push_back("curriculum split for ('" + s.domain + "', " +
                                 std::to_string(s.pack_length) + ") has no matching domain row");
        }
    }
    for (const auto& [domain, sum] : split_sums) {
        if (std::fabs(sum - 1.0) > kWeightTolerance) {
            violations.push_back("curriculum splits for '" + domain + "' sum to " +
                                 std::to_string(sum));
        }
    }
    return violations;
}

namespace {

// Sampling state for one (domain, pack length) row.
struct DrawEntry {
    const DomainEntry* domain = nullptr;
    std::shared_ptr<const SequencePool> pool;
    double token_weight = 0.0;  // target fraction of emitted tokens
    double draw_prob = 0.0;     // per-draw probability, length-corrected
    std::vector<std::uint32_t> order;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
};

void reshuffle(DrawEntry& e, std::uint64_t seed) {
    e.order.resize(e.pool->sequences.size());
    for (std::uint32_t i = 0; i < e.order.size(); ++i) {
        e.order[i] = i;
    }
    Rng rng(derive_seed(derive_seed(seed, e.domain->pool), e.epoch));
    rng.shuffle(e.order);
    e.cursor = 0;
}

}  // namespace

MixStats sample_stream(const MixtureSpec& spec, const StageCurriculum& curriculum,
                       const PoolMap& pools, std::uint64_t token_budget, const MixSink& sink,
                       ExhaustionPolicy policy) {
    auto violations = validate_spec(spec, curriculum, pools, true);
    if (!violations.empty()) {
        throw std::runtime_error("invalid mixture spec: " + violations.front());
    }

    std::vector<DrawEntry> entries;
    for (const auto& d : spec.domains) {
        DrawEntry e;
        e.domain = &d;
        e.pool = pools.at(d.pool);
        const double group_ratio = d.is_long ? spec.long_ratio : 1.0 - spec.long_ratio;
        const double split = d.is_long ? curriculum.split_fraction(d.name, d.pack_length) : 1.0;
        e.token_weight = group_ratio * d.weight * split;
        // Drawing whole sequences: a pool at pack length La must be drawn
        // La/Lb times less often than one at Lb for equal token share.
        e.draw_prob = e.token_weight / static_cast<double>(d.pack_length);
        if (e.token_weight > 0.0) {
            entries.push_back(std::move(e));
        }
    }
    if (entries.empty()) {
        throw std::runtime_error("mixture has no sampleable domains");
    }

    double long_mass = 0.0;
    double short_mass = 0.0;
    for (const auto& e : entries) {
        (e.domain->is_long ? long_mass : short_mass) += e.draw_prob;
    }
    const double total_mass = long_mass + short_mass;

    Rng rng(derive_seed(spec.seed, "mix-draws"));
    for (auto& e : entries) {
        reshuffle(e, spec.seed);
    }

    MixStats stats;
    while (stats.tokens_emitted < token_budget) {
        // Two-level draw: group first, then (domain, class) within the group.
        const bool pick_long = rng.next_double() * total_mass < long_mass;
        const double group_mass = pick_long ? long_mass : short_mass;
        double u = rng.next_double() * group_mass;
        DrawEntry* chosen = nullptr;
        for (auto& e : entries) {
            if (e.domain->is_long != pick_long) {
                continue;
            }
            chosen = &e;
            if (u < e.draw_prob) {
                break;
            }
            u -= e.draw_prob;
        }

        if (chosen->cursor == chosen->order.size()) {
            if (policy == ExhaustionPolicy::kFatal) {
                throw std::runtime_error("pool exhausted: '" + chosen->domain->pool + "'");
            }
            chosen->epoch += 1;
            stats.epochs_wrapped += 1;
            reshuffle(*chosen, spec.seed);
        }
        const auto& seq = chosen->pool->sequences[chosen->order[chosen->cursor++]];
        stats.sequences_emitted += 1;
        stats.tokens_emitted += seq->length();
        stats.tokens_by_domain[chosen->domain->name] += seq->length();
        stats.tokens_by_domain_length[chosen->domain->name][chosen->domain->pack_length] +=
            seq->length();
        sink(seq);
    }
    return stats;
}

MixtureConfig load_mixture_config(const std::string& path) {
    const nlohmann::json cfg = parse_toml_file(path);
    MixtureConfig out;
    out.spec.stage = cfg.value("stage", "");
    out.spec.long_ratio = cfg.value("long_ratio", 0.0);
    out.curriculum.token_budget = cfg.value("token_budget", std::uint64_t{0});
    out.curriculum.batch_size_tokens = cfg.value("batch_size_tokens", std::uint64_t{0});
    out.curriculum.rope_base = cfg.value("rope_base", 0.0);

    if (!cfg.contains("domain") || !cfg["domain"].is_array()) {
        throw std::runtime_error(path + ": config needs at least one [[domain]] entry");
    }
    for (const auto& d : cfg["domain"]) {
        DomainEntry entry;
        entry.name = d.at("name").get<std::string>();
        entry.weight = d.at("weight").get<double>();
        entry.pack_length = d.at("pack_length").get<std::uint64_t>();
        entry.pool = d.value("pool", entry.name);
        const std::string group = d.at("group").get<std::string>();
        if (group != "long" && group != "short") {
            throw std::runtime_error(path + ": domain group must be 'long' or 'short'");
        }
        entry.is_long = group == "long";
        if (d.contains("path")) {
            out.pool_paths[entry.pool] = d["path"].get<std::string>();
        }
        out.spec.domains.push_back(std::move(entry));
    }
    if (cfg.contains("curriculum")) {
        for (const auto& c : cfg["curriculum"]) {
            StageCurriculum::Split split;
            split.domain = c.at("domain").get<std::string>();
            split.pack_length = c.at("pack_length").get<std::uint64_t>();
            split.fraction = c.at("fraction").get<double>();
            out.curriculum.splits.push_back(std::move(split));
        }
    }
    return out;
}

DedupReport dedup_pools(SequencePool& pool_64k, const SequencePool& pool_512k) {
    std::set<std::string> reserved;
    for (const auto& seq : pool_512k.sequences) {
        for (const auto& origin : seq->origins) {
            reserved.insert(origin.doc_id);
        }
    }
    DedupReport report;
    std::set<std::string> overlapping;
    auto overlaps = [&](const std::shared_ptr<const PackedSequence>& seq) {
        bool hit = false;
        for (const auto& origin : seq->origins) {
            if (reserved.count(origin.doc_id)) {
                overlapping.insert(origin.doc_id);
                hit = true;
            }
        }
        return hit;
    };
    auto& seqs = pool_64k.sequences;
    auto it = std::remove_if(seqs.begin(), seqs.end(), overlaps);
    report.removed_sequences = static_cast<std::uint64_t>(seqs.end() - it);
    seqs.erase(it, seqs.end());
    report.overlapping_origins = overlapping.size();
    return report;
}

}  // namespace lcdt
