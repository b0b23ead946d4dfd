#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcdt/evalgen.hpp"
#include "lcdt/rng.hpp"

using namespace lcdt;

TEST_CASE("gen_kv parses back and the gold value is retrievable") {
    KvTask task = gen_kv(100, 4242);
    nlohmann::json parsed = nlohmann::json::parse(task.serialize());
    REQUIRE(parsed.is_object());
    CHECK(parsed.size() == 100);
    CHECK(parsed.at(task.query_key).get<std::string>() == task.gold_value);
}

TEST_CASE("gen_kv with a single pair queries that pair") {
    KvTask task = gen_kv(1, 7);
    CHECK(task.pairs.size() == 1);
    CHECK(task.query_key == task.pairs[0].first);
    CHECK(task.gold_value == task.pairs[0].second);
}

TEST_CASE("gen_kv keys are unique and fixed length") {
    KvTask task = gen_kv(500, 9);
    std::set<std::string> keys;
    for (const auto& [k, v] : task.pairs) {
        CHECK(k.size() == 32);
        CHECK(v.size() == 32);
        keys.insert(k);
    }
    CHECK(keys.size() == 500);
}

TEST_CASE("gen_kv is byte-identical for a fixed seed") {
    CHECK(gen_kv(64, 123).serialize() == gen_kv(64, 123).serialize());
    CHECK(gen_kv(64, 123).serialize() != gen_kv(64, 124).serialize());
}

TEST_CASE("gen_kv round-trips across many seeds") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        KvTask task = gen_kv(1 + seed % 50, seed);
        nlohmann::json parsed = nlohmann::json::parse(task.serialize());
        CHECK(parsed.at(task.query_key).get<std::string>() == task.gold_value);
    }
}

TEST_CASE("kv pair count can be derived from a context-length target") {
    WhitespaceTokenizer tokenizer;
    const std::uint64_t target = 65536;
    const std::uint64_t n = kv_pairs_for_context(target, tokenizer, 36, 36);
    KvTask task = gen_kv(n, 1);
    const double measured = static_cast<double>(tokenizer.count(task.serialize()));
    CHECK(std::fabs(measured - static_cast<double>(target)) / static_cast<double>(target) <=
          0.02);
}

namespace {

std::vector<LabeledExample> balanced_dataset(std::size_t classes, std::size_t per_class,
                                             std::size_t extra_in_first = 0) {
    std::vector<LabeledExample> data;
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t count = per_class + (c == 0 ? extra_in_first : 0);
        for (std::size_t i = 0; i < count; ++i) {
            data.push_back({"input-" + std::to_string(c) + "-" + std::to_string(i),
                            "class-" + std::to_string(c)});
        }
    }
    return data;
}

}  // namespace

TEST_CASE("gen_icl balances six classes at k=10") {
    auto data = balanced_dataset(6, 10, 1);  // class-0 also hosts the query
    IclTask task = gen_icl(data, 10, 5, 0);
    CHECK(task.demos.size() == 60);
    std::map<int, int> per_label;
    for (const auto& [input, label] : task.demos) {
        per_label[label] += 1;
    }
    CHECK(per_label.size() == 6);
    for (const auto& [label, count] : per_label) {
        CHECK(count == 10);
        CHECK(label >= 1);
        CHECK(label <= 6);
    }
}

TEST_CASE("gen_icl labels are a bijection onto 1..C and the gold maps consistently") {
    auto data = balanced_dataset(5, 4, 1);
    IclTask task = gen_icl(data, 4, 77, 0);
    std::set<int> labels;
    for (const auto& [name, label] : task.label_of) {
        labels.insert(label);
    }
    CHECK(labels == std::set<int>{1, 2, 3, 4, 5});
    CHECK(task.gold_label == task.label_of.at("class-0"));
    CHECK(task.query == "input-0-0");
}

TEST_CASE("gen_icl errors name the class that is too small") {
    auto data = balanced_dataset(3, 5);
    try {
        gen_icl(data, 6, 1, 0);
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("class-") != std::string::npos);
    }
}

TEST_CASE("gen_icl holds the query out of the demos") {
    auto data = balanced_dataset(3, 4, 1);
    IclTask task = gen_icl(data, 4, 3, 0);
    for (const auto& [input, label] : task.demos) {
        CHECK(input != task.query);
    }
}

TEST_CASE("two seeds keep the per-class demo multisets but change the order") {
    // Exactly k examples per class once the designated query is held out, so
    // the selection is forced and only shuffles can differ.
    auto data = balanced_dataset(4, 6, 1);
    IclTask a = gen_icl(data, 6, 101, 0);
    IclTask b = gen_icl(data, 6, 202, 0);

    auto inputs_by_class = [&](const IclTask& task) {
        std::map<std::string, std::multiset<std::string>> by_class;
        std::map<int, std::string> class_of_label;
        for (const auto& [name, label] : task.label_of) {
            class_of_label[label] = name;
        }
        for (const auto& [input, label] : task.demos) {
            by_class[class_of_label.at(label)].insert(input);
        }
        return by_class;
    };
    CHECK(inputs_by_class(a) == inputs_by_class(b));

    auto order = [](const IclTask& task) {
        std::vector<std::string> inputs;
        for (const auto& [input, label] : task.demos) {
            inputs.push_back(input);
        }
        return inputs;
    };
    CHECK(order(a) != order(b));
}

TEST_CASE("icl serialization has a metadata header plus one record per demo") {
    auto data = balanced_dataset(2, 3, 1);
    IclTask task = gen_icl(data, 3, 1, 0);
    std::istringstream in(task.serialize());
    std::string line;
    REQUIRE(std::getline(in, line));
    nlohmann::json header = nlohmann::json::parse(line);
    CHECK(header.at("gold_label").get<int>() == task.gold_label);
    CHECK(header.at("classes").size() == 2);
    std::size_t demo_lines = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            nlohmann::json rec = nlohmann::json::parse(line);
            CHECK(rec.contains("input"));
            CHECK(rec.contains("label"));
            ++demo_lines;
        }
    }
    CHECK(demo_lines == task.demos.size());
}
