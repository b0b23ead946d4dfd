#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "lcdt/digest.hpp"
#include "lcdt/rng.hpp"
#include "lcdt/shard_io.hpp"

using namespace lcdt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("lcdt-test-" + std::to_string(Rng(std::random_device{}()).next_u64()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

Document make_doc(const std::string& id, std::size_t length) {
    Document d;
    d.id = id;
    d.domain = "books";
    d.repo_key = id + "-repo";
    d.tokens.resize(length);
    Rng rng(fnv1a64(id));
    for (auto& t : d.tokens) {
        t = static_cast<TokenId>(rng.next_below(1 << 20));
    }
    return d;
}

}  // namespace

TEST_CASE("document shards round-trip exactly") {
    TempDir dir;
    const std::string path = dir.file("docs.docs");
    std::vector<Document> docs = {make_doc("a", 100), make_doc("b", 1), make_doc("c", 5000)};
    {
        DocumentShardWriter writer(path);
        for (const auto& d : docs) {
            writer.add(d);
        }
        ShardSummary summary = writer.close();
        CHECK(summary.count == 3);
        CHECK(summary.tokens == 5101);
        CHECK(!summary.digest.empty());
        CHECK(summary.digest == digest_file(path));
    }
    auto loaded = load_document_shard(path);
    REQUIRE(loaded.size() == docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        CHECK(loaded[i].id == docs[i].id);
        CHECK(loaded[i].domain == docs[i].domain);
        CHECK(loaded[i].repo_key == docs[i].repo_key);
        CHECK(loaded[i].tokens == docs[i].tokens);
    }
    CHECK(fs::exists(path + ".manifest.json"));
}

TEST_CASE("identical document streams produce identical digests") {
    TempDir dir;
    auto write = [&](const std::string& name) {
        DocumentShardWriter writer(dir.file(name));
        writer.add(make_doc("x", 500));
        writer.add(make_doc("y", 400));
        return writer.close().digest;
    };
    CHECK(write("one.docs") == write("two.docs"));
}

TEST_CASE("packed shards round-trip with boundaries and origins") {
    TempDir dir;
    const std::string path = dir.file("seqs.packs");
    PackedSequence seq;
    seq.tokens.resize(1000);
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        seq.tokens[i] = static_cast<TokenId>(i * 3);
    }
    seq.boundaries = {0, 200, 1000};
    seq.segment_domains = {"books", "code"};
    seq.origins = {{"d1", 50, true}, {"d2", 0, false}};
    {
        PackedShardWriter writer(path, 1000);
        writer.add(seq);
        ShardSummary summary = writer.close();
        CHECK(summary.count == 1);
        CHECK(summary.tokens == 1000);
    }
    PackedShard shard = load_packed_shard(path);
    CHECK(shard.pack_length == 1000);
    REQUIRE(shard.sequences.size() == 1);
    const auto& got = shard.sequences[0];
    CHECK(got.tokens == seq.tokens);
    CHECK(got.boundaries == seq.boundaries);
    CHECK(got.segment_domains == seq.segment_domains);
    CHECK(got.origins[0].doc_id == "d1");
    CHECK(got.origins[0].doc_offset == 50);
    CHECK(got.origins[0].carried);
    CHECK_FALSE(got.origins[1].carried);
}

TEST_CASE("packed shard writer rejects wrong-length sequences") {
    TempDir dir;
    PackedShardWriter writer(dir.file("seqs.packs"), 64);
    PackedSequence seq;
    seq.tokens.assign(32, 1);
    seq.boundaries = {0, 32};
    seq.segment_domains = {"d"};
    seq.origins = {{"x", 0, false}};
    CHECK_THROWS_AS(writer.add(seq), std::invalid_argument);
}

TEST_CASE("sft shards round-trip masks and spans") {
    TempDir dir;
    const std::string path = dir.file("ex.sft");
    SftExample ex;
    ex.tokens = {1, 2, 3, 4, 5, 6};
    ex.loss_mask = {false, false, true, true, false, true};
    ex.turn_spans = {{"user", 0, 2}, {"assistant", 2, 4}, {"user", 4, 5}, {"assistant", 5, 6}};
    {
        SftShardWriter writer(path, 0);
        writer.add(ex);
        writer.close();
    }
    SftShard shard = load_sft_shard(path);
    REQUIRE(shard.examples.size() == 1);
    CHECK(sft_example_bytes(shard.examples[0]) == sft_example_bytes(ex));
}

TEST_CASE("corrupted shards are rejected") {
    TempDir dir;
    const std::string path = dir.file("bad.docs");
    std::ofstream out(path, std::ios::binary);
    out << "not a shard at all";
    out.close();
    CHECK_THROWS_AS(load_document_shard(path), std::runtime_error);
    CHECK_THROWS_AS(load_document_shard(dir.file("missing.docs")), std::runtime_error);
}

TEST_CASE("run manifests serialize inputs, outputs and counters") {
    TempDir dir;
    RunManifest manifest;
    manifest.command = "pack";
    manifest.seed = 42;
    manifest.inputs.emplace_back("in.docs", "abc");
    manifest.outputs.emplace_back("out.packs", "def");
    manifest.counters = {{"tokens_packed", 123}};
    const std::string path = dir.file("run.json");
    manifest.write(path);
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    CHECK(j["command"] == "pack");
    CHECK(j["seed"] == 42);
    CHECK(j["inputs"][0]["digest"] == "abc");
    CHECK(j["counters"]["tokens_packed"] == 123);
}
