#include "lcdt/evalgen.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "lcdt/rng.hpp"

namespace lcdt {

namespace {

std::string random_hex(Rng& rng, std::size_t len) {
    static const char kAlphabet[] = "0123456789abcdef";
    std::string out(len, '0');
    for (auto& c : out) {
        c = kAlphabet[rng.next_below(16)];
    }
    return out;
}

}  // namespace

std::string KvTask::serialize() const {
    std::string out = "{";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += '"';
        out += pairs[i].first;
        out += "\": \"";
        out += pairs[i].second;
        out += '"';
    }
    out += "}";
    return out;
}

KvTask gen_kv(std::uint64_t n_pairs, std::uint64_t seed, std::size_t key_len,
              std::size_t val_len) {
    if (n_pairs == 0) {
        throw std::invalid_argument("gen_kv: need at least one pair");
    }
    Rng rng(derive_seed(seed, "kv-task"));
    KvTask task;
    task.pairs.reserve(n_pairs);
    std::set<std::string> seen;
    while (task.pairs.size() < n_pairs) {
        std::string key = random_hex(rng, key_len);
        if (!seen.insert(key).second) {
            continue;  // collision; redraw
        }
        task.pairs.emplace_back(std::move(key), random_hex(rng, val_len));
    }
    const std::uint64_t query_at = rng.next_below(n_pairs);
    task.query_key = task.pairs[query_at].first;
    task.gold_value = task.pairs[query_at].second;
    return task;
}

std::uint64_t kv_pairs_for_context(std::uint64_t target_tokens, Tokenizer& tokenizer,
                                   std::size_t key_len, std::size_t val_len, double tolerance) {
    if (target_tokens == 0) {
        throw std::invalid_argument("target token count must be positive");
    }
    auto measure = [&](std::uint64_t n) {
        return static_cast<std::uint64_t>(tokenizer.count(gen_kv(n, 0, key_len, val_len).serialize()));
    };
    // Probe with a small task, scale linearly, then refine on the measured
    // count; fixed-length keys/values make tokens-per-pair near constant.
    const std::uint64_t probe_n = 64;
    std::uint64_t measured = measure(probe_n);
    if (measured == 0) {
        throw std::runtime_error("tokenizer reports zero tokens for a non-empty task");
    }
    std::uint64_t n = std::max<std::uint64_t>(
        1, probe_n * target_tokens / std::max<std::uint64_t>(1, measured));
    for (int iter = 0; iter < 16; ++iter) {
        measured = measure(n);
        const double rel = (static_cast<double>(measured) - static_cast<double>(target_tokens)) /
                           static_cast<double>(target_tokens);
        if (rel >= -tolerance && rel <= tolerance) {
            return n;
        }
        const double per_pair = static_cast<double>(measured) / static_cast<double>(n);
        std::uint64_t next = static_cast<std::uint64_t>(
            static_cast<double>(target_tokens) / per_pair + 0.5);
        if (next == n) {
            next = rel < 0 ? n + 1 : (n > 1 ? n - 1 : 1);
        }
        n = std::max<std::uint64_t>(1, next);
    }
    throw std::runtime_error("could not hit target context length within tolerance");
}

std::string IclTask::serialize() const {
    nlohmann::ordered_json header;
    header["classes"] = nlohmann::ordered_json::object();
    for (const auto& [name, label] : label_of) {
        header["classes"][name] = label;
    }
    header["k"] = demos.size() / classes.size();
    header["query"] = query;
    header["gold_label"] = gold_label;
    std::string out = header.dump();
    out += '\n';
    for (const auto& [input, label] : demos) {
        nlohmann::ordered_json rec;
        rec["input"] = input;
        rec["label"] = label;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

IclTask gen_icl(const std::vector<LabeledExample>& dataset, std::size_t k, std::uint64_t seed,
                std::size_t query_index) {
    if (k == 0) {
        throw std::invalid_argument("gen_icl: k must be >= 1");
    }
    if (query_index >= dataset.size()) {
        throw std::invalid_argument("gen_icl: query index out of range");
    }
    Rng rng(derive_seed(seed, "icl-task"));

    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (i == query_index) {
            continue;  // query held out from demos
        }
        by_class[dataset[i].class_name].push_back(i);
    }
    by_class[dataset[query_index].class_name];  // query class exists even if empty

    IclTask task;
    for (const auto& [name, members] : by_class) {
        if (members.size() < k) {
            throw std::invalid_argument("gen_icl: class '" + name + "' has " +
                                        std::to_string(members.size()) +
                                        " examples, need at least " + std::to_string(k));
        }
        task.classes.push_back(name);
    }

    // Seeded label assignment: permute the (sorted) class list, then label by
    // position. Demos and gold share the same map.
    rng.shuffle(task.classes);
    for (std::size_t i = 0; i < task.classes.size(); ++i) {
        task.label_of[task.classes[i]] = static_cast<int>(i) + 1;
    }

    for (const auto& [name, members] : by_class) {
        std::vector<std::size_t> picks = members;
        rng.shuffle(picks);
        picks.resize(k);
        for (std::size_t idx : picks) {
            task.demos.emplace_back(dataset[idx].input, task.label_of.at(name));
        }
    }
    rng.shuffle(task.demos);

    task.query = dataset[query_index].input;
    task.gold_label = task.label_of.at(dataset[query_index].class_name);
    return task;
}

}  // namespace lcdt
