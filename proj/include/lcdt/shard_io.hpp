#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcdt/packing.hpp"
#include "lcdt/types.hpp"

namespace lcdt {

// Binary shard formats (fixed little-endian widths; see docs/formats.md).
// Every writer hashes the bytes it emits and drops a JSON manifest next to
// the shard, so re-reads and reruns can be verified by digest.

struct ShardSummary {
    std::string path;
    std::uint64_t count = 0;
    std::uint64_t tokens = 0;
    std::string digest;
    std::map<std::string, std::uint64_t> domain_counts;
};

class DocumentShardWriter {
  public:
    explicit DocumentShardWriter(const std::string& path);
    ~DocumentShardWriter();

    void add(const Document& doc);
    /// Flushes, rewrites the header count, writes the manifest and returns
    /// the summary. No-op on second call.
    ShardSummary close(const nlohmann::json& extra_manifest = {});

  private:
    struct Impl;
    std::string path_;
    std::unique_ptr<Impl> impl_;
    ShardSummary summary_;
    bool closed_ = false;
};

/// Streams documents from a shard in stored order.
void read_document_shard(const std::string& path, const std::function<void(Document&&)>& sink);

std::vector<Document> load_document_shard(const std::string& path);

class PackedShardWriter {
  public:
    PackedShardWriter(const std::string& path, std::uint64_t pack_length);
    ~PackedShardWriter();

    void add(const PackedSequence& seq);
    ShardSummary close(const nlohmann::json& extra_manifest = {});

  private:
    struct Impl;
    std::string path_;
    std::uint64_t pack_length_;
    std::unique_ptr<Impl> impl_;
    ShardSummary summary_;
    bool closed_ = false;
};

struct PackedShard {
    std::uint64_t pack_length = 0;
    std::vector<PackedSequence> sequences;
};

PackedShard load_packed_shard(const std::string& path);
void read_packed_shard(const std::string& path, std::uint64_t& pack_length,
                       const std::function<void(PackedSequence&&)>& sink);

class SftShardWriter {
  public:
    SftShardWriter(const std::string& path, std::uint64_t max_length);
    ~SftShardWriter();

    void add(const SftExample& ex);
    ShardSummary close(const nlohmann::json& extra_manifest = {});

  private:
    struct Impl;
    std::string path_;
    std::uint64_t max_length_;
    std::unique_ptr<Impl> impl_;
    ShardSummary summary_;
    bool closed_ = false;
};

struct SftShard {
    std::uint64_t max_length = 0;
    std::vector<SftExample> examples;
};

SftShard load_sft_shard(const std::string& path);

/// Serialized byte image of one example (the byte-identity unit for replay
/// comparisons).
std::string sft_example_bytes(const SftExample& ex);

// Run manifest: written beside outputs by every CLI subcommand.
struct RunManifest {
    std::string command;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
    nlohmann::json counters;
    double wall_time_seconds = 0.0;

    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

}  // namespace lcdt
