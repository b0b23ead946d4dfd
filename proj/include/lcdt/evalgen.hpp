#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lcdt/tokenizer.hpp"

namespace lcdt {

// Key-value recall task: find the value for query_key inside a large
// randomly-generated JSON object.
struct KvTask {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string query_key;
    std::string gold_value;

    /// Single-line JSON object of all pairs, in order, with ": " / ", "
    /// separators (so token-count oracles that split on whitespace see a
    /// stable, linear-in-n length).
    std::string serialize() const;
};

/// Seeded generation: keys and values are fixed-length lowercase-hex strings,
/// keys unique, query position uniform. Deterministic per (n_pairs, seed,
/// key_len, val_len).
KvTask gen_kv(std::uint64_t n_pairs, std::uint64_t seed, std::size_t key_len = 32,
              std::size_t val_len = 32);

/// Picks n_pairs so that the serialized task measures within `tolerance`
/// (relative) of target_tokens under `count`. Iterates on the measured
/// length, so any token-count oracle works.
std::uint64_t kv_pairs_for_context(std::uint64_t target_tokens, Tokenizer& tokenizer,
                                   std::size_t key_len = 32, std::size_t val_len = 32,
                                   double tolerance = 0.02);

struct LabeledExample {
    std::string input;
    std::string class_name;
};

// Class-balanced in-context-learning task with numeric labels 1..C.
struct IclTask {
    std::vector<std::string> classes;          // classes[label-1] = class name
    std::map<std::string, int> label_of;       // bijection class -> 1..C
    std::vector<std::pair<std::string, int>> demos;
    std::string query;
    int gold_label = 0;

    /// Metadata header line followed by one JSON record per demo.
    std::string serialize() const;
};

/// Builds a balanced task: exactly k demos per class drawn (seeded) from
/// `dataset` minus the held-out query at `query_index`; demo order is a
/// seeded shuffle and class->numeric-label assignment is a seeded
/// permutation, consistent across demos and gold. Errors name any class left
/// with fewer than k examples.
IclTask gen_icl(const std::vector<LabeledExample>& dataset, std::size_t k, std::uint64_t seed,
                std::size_t query_index);

}  // namespace lcdt
