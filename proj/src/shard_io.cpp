#include "lcdt/shard_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "lcdt/digest.hpp"

namespace lcdt {

namespace {

constexpr char kDocMagic[4] = {'L', 'C', 'D', 'S'};
constexpr char kPackMagic[4] = {'L', 'C', 'P', 'S'};
constexpr char kSftMagic[4] = {'L', 'C', 'F', 'S'};
constexpr std::uint32_t kVersion = 1;

// Little-endian scalar encoding, independent of host byte order.
template <typename T>
void append_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
    }
}

void append_string(std::string& out, const std::string& s) {
    append_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Reader {
  public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) {
            throw std::runtime_error("cannot open shard: " + path);
        }
    }

    template <typename T>
    T get_le() {
        unsigned char buf[sizeof(T)];
        read(buf, sizeof(T));
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value = static_cast<T>(value | (static_cast<std::uint64_t>(buf[i]) << (8 * i)));
        }
        return value;
    }

    std::string get_string() {
        const std::uint32_t n = get_le<std::uint32_t>();
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }

    void read(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw std::runtime_error("truncated shard: " + path_);
        }
    }

    void expect_magic(const char magic[4]) {
        char buf[4];
        read(buf, 4);
        if (std::memcmp(buf, magic, 4) != 0) {
            throw std::runtime_error("bad shard magic in " + path_);
        }
        const std::uint32_t version = get_le<std::uint32_t>();
        if (version != kVersion) {
            throw std::runtime_error("unsupported shard version " + std::to_string(version) +
                                     " in " + path_);
        }
    }

  private:
    std::ifstream in_;
    std::string path_;
};

// Streaming shard writer: emits a header with a zero count up front, patches
// the count at close, then digests the final file in one pass.
class BodyWriter {
  public:
    BodyWriter(const std::string& path, const char magic[4],
               const std::vector<std::uint64_t>& header_fields)
        : path_(path),
          out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) {
            throw std::runtime_error("cannot open shard for write: " + path);
        }
        std::string header(magic, 4);
        append_le<std::uint32_t>(header, kVersion);
        for (std::uint64_t f : header_fields) {
            append_le<std::uint64_t>(header, f);
        }
        count_offset_ = header.size();
        append_le<std::uint64_t>(header, 0);  // record count, patched at close
        write(header);
    }

    void write(const std::string& bytes) {
        out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out_) {
            throw std::runtime_error("write failed: " + path_);
        }
    }

    std::string close(std::uint64_t count) {
        std::string patch;
        append_le<std::uint64_t>(patch, count);
        out_.seekp(static_cast<std::streamoff>(count_offset_));
        write(patch);
        out_.flush();
        out_.close();
        return digest_file(path_);
    }

  private:
    std::string path_;
    std::ofstream out_;
    std::size_t count_offset_ = 0;
};

void write_manifest(const ShardSummary& summary, const std::string& format,
                    const nlohmann::json& extra) {
    nlohmann::json m;
    m["format"] = format;
    m["count"] = summary.count;
    m["tokens"] = summary.tokens;
    m["digest"] = summary.digest;
    if (!summary.domain_counts.empty()) {
        m["domains"] = summary.domain_counts;
    }
    if (extra.is_object()) {
        m.update(extra);
    }
    std::ofstream out(summary.path + ".manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write manifest for " + summary.path);
    }
    out << m.dump(2) << "\n";
}

}  // namespace

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for digest: " + path);
    }
    Digest d;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        d.update(buf, static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

// ---------------------------------------------------------------------------
// Document shards

struct DocumentShardWriter::Impl {
    BodyWriter body;
};

DocumentShardWriter::DocumentShardWriter(const std::string& path) : path_(path) {
    impl_ = std::make_unique<Impl>(Impl{BodyWriter(path, kDocMagic, {})});
    summary_.path = path;
}

DocumentShardWriter::~DocumentShardWriter() {
    if (!closed_) {
        try {
            close();
        } catch (...) {
        }
    }
}

void DocumentShardWriter::add(const Document& doc) {
    validate_document(doc);
    std::string buf;
    append_string(buf, doc.id);
    append_string(buf, doc.domain);
    append_string(buf, doc.repo_key);
    append_le<std::uint64_t>(buf, doc.tokens.size());
    for (TokenId t : doc.tokens) {
        append_le<std::uint32_t>(buf, t);
    }
    impl_->body.write(buf);
    summary_.count += 1;
    summary_.tokens += doc.tokens.size();
    summary_.domain_counts[doc.domain] += 1;
}

ShardSummary DocumentShardWriter::close(const nlohmann::json& extra_manifest) {
    if (closed_) {
        return summary_;
    }
    closed_ = true;
    summary_.digest = impl_->body.close(summary_.count);
    write_manifest(summary_, "document-shard", extra_manifest);
    return summary_;
}

void read_document_shard(const std::string& path, const std::function<void(Document&&)>& sink) {
    Reader r(path);
    r.expect_magic(kDocMagic);
    const std::uint64_t count = r.get_le<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        Document doc;
        doc.id = r.get_string();
        doc.domain = r.get_string();
        doc.repo_key = r.get_string();
        const std::uint64_t n = r.get_le<std::uint64_t>();
        doc.tokens.resize(n);
        for (std::uint64_t j = 0; j < n; ++j) {
            doc.tokens[j] = r.get_le<std::uint32_t>();
        }
        sink(std::move(doc));
    }
}

std::vector<Document> load_document_shard(const std::string& path) {
    std::vector<Document> docs;
    read_document_shard(path, [&](Document&& d) { docs.push_back(std::move(d)); });
    return docs;
}

// ---------------------------------------------------------------------------
// Packed-sequence shards

struct PackedShardWriter::Impl {
    BodyWriter body;
};

PackedShardWriter::PackedShardWriter(const std::string& path, std::uint64_t pack_length)
    : path_(path), pack_length_(pack_length) {
    impl_ = std::make_unique<Impl>(Impl{BodyWriter(path, kPackMagic, {pack_length})});
    summary_.path = path;
}

PackedShardWriter::~PackedShardWriter() {
    if (!closed_) {
        try {
            close();
        } catch (...) {
        }
    }
}

void PackedShardWriter::add(const PackedSequence& seq) {
    validate_packed(seq);
    if (seq.length() != pack_length_) {
        throw std::invalid_argument("sequence length " + std::to_string(seq.length()) +
                                    " != shard pack length " + std::to_string(pack_length_));
    }
    std::string buf;
    append_le<std::uint32_t>(buf, static_cast<std::uint32_t>(seq.segment_count()));
    for (TokenId t : seq.tokens) {
        append_le<std::uint32_t>(buf, t);
    }
    for (std::uint64_t b : seq.boundaries) {
        append_le<std::uint64_t>(buf, b);
    }
    for (std::size_t i = 0; i < seq.segment_count(); ++i) {
        append_string(buf, seq.segment_domains[i]);
        append_string(buf, seq.origins[i].doc_id);
        append_le<std::uint64_t>(buf, seq.origins[i].doc_offset);
        buf.push_back(seq.origins[i].carried ? 1 : 0);
        summary_.domain_counts[seq.segment_domains[i]] += 1;
    }
    impl_->body.write(buf);
    summary_.count += 1;
    summary_.tokens += seq.length();
}

ShardSummary PackedShardWriter::close(const nlohmann::json& extra_manifest) {
    if (closed_) {
        return summary_;
    }
    closed_ = true;
    summary_.digest = impl_->body.close(summary_.count);
    nlohmann::json extra =
        extra_manifest.is_object() ? extra_manifest : nlohmann::json::object();
    extra["pack_length"] = pack_length_;
    write_manifest(summary_, "packed-shard", extra);
    return summary_;
}

void read_packed_shard(const std::string& path, std::uint64_t& pack_length,
                       const std::function<void(PackedSequence&&)>& sink) {
    Reader r(path);
    r.expect_magic(kPackMagic);
    pack_length = r.get_le<std::uint64_t>();
    const std::uint64_t count = r.get_le<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        PackedSequence seq;
        const std::uint32_t segments = r.get_le<std::uint32_t>();
        seq.tokens.resize(pack_length);
        for (std::uint64_t j = 0; j < pack_length; ++j) {
            seq.tokens[j] = r.get_le<std::uint32_t>();
        }
        seq.boundaries.resize(segments + 1);
        for (std::uint32_t j = 0; j <= segments; ++j) {
            seq.boundaries[j] = r.get_le<std::uint64_t>();
        }
        seq.segment_domains.resize(segments);
        seq.origins.resize(segments);
        for (std::uint32_t j = 0; j < segments; ++j) {
            seq.segment_domains[j] = r.get_string();
            seq.origins[j].doc_id = r.get_string();
            seq.origins[j].doc_offset = r.get_le<std::uint64_t>();
            seq.origins[j].carried = r.get_le<std::uint8_t>() != 0;
        }
        validate_packed(seq);
        sink(std::move(seq));
    }
}

PackedShard load_packed_shard(const std::string& path) {
    PackedShard shard;
    read_packed_shard(path, shard.pack_length,
                      [&](PackedSequence&& s) { shard.sequences.push_back(std::move(s)); });
    return shard;
}

// ---------------------------------------------------------------------------
// SFT shards

std::string sft_example_bytes(const SftExample& ex) {
    std::string buf;
    append_le<std::uint64_t>(buf, ex.tokens.size());
    for (TokenId t : ex.tokens) {
        append_le<std::uint32_t>(buf, t);
    }
    for (std::size_t i = 0; i < ex.loss_mask.size(); ++i) {
        buf.push_back(ex.loss_mask[i] ? 1 : 0);
    }
    append_le<std::uint32_t>(buf, static_cast<std::uint32_t>(ex.turn_spans.size()));
    for (const auto& span : ex.turn_spans) {
        buf.push_back(span.role == "assistant" ? 1 : 0);
        append_le<std::uint64_t>(buf, span.start);
        append_le<std::uint64_t>(buf, span.end);
    }
    return buf;
}

struct SftShardWriter::Impl {
    BodyWriter body;
};

SftShardWriter::SftShardWriter(const std::string& path, std::uint64_t max_length)
    : path_(path), max_length_(max_length) {
    impl_ = std::make_unique<Impl>(Impl{BodyWriter(path, kSftMagic, {max_length})});
    summary_.path = path;
}

SftShardWriter::~SftShardWriter() {
    if (!closed_) {
        try {
            close();
        } catch (...) {
        }
    }
}

void SftShardWriter::add(const SftExample& ex) {
    validate_sft(ex);
    if (max_length_ > 0 && ex.tokens.size() > max_length_) {
        throw std::invalid_argument("example exceeds shard max length");
    }
    impl_->body.write(sft_example_bytes(ex));
    summary_.count += 1;
    summary_.tokens += ex.tokens.size();
}

ShardSummary SftShardWriter::close(const nlohmann::json& extra_manifest) {
    if (closed_) {
        return summary_;
    }
    closed_ = true;
    summary_.digest = impl_->body.close(summary_.count);
    nlohmann::json extra =
        extra_manifest.is_object() ? extra_manifest : nlohmann::json::object();
    extra["max_length"] = max_length_;
    write_manifest(summary_, "sft-shard", extra);
    return summary_;
}

SftShard load_sft_shard(const std::string& path) {
    Reader r(path);
    r.expect_magic(kSftMagic);
    SftShard shard;
    shard.max_length = r.get_le<std::uint64_t>();
    const std::uint64_t count = r.get_le<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        SftExample ex;
        const std::uint64_t n = r.get_le<std::uint64_t>();
        ex.tokens.resize(n);
        for (std::uint64_t j = 0; j < n; ++j) {
            ex.tokens[j] = r.get_le<std::uint32_t>();
        }
        ex.loss_mask.resize(n);
        for (std::uint64_t j = 0; j < n; ++j) {
            ex.loss_mask[j] = r.get_le<std::uint8_t>() != 0;
        }
        const std::uint32_t spans = r.get_le<std::uint32_t>();
        ex.turn_spans.resize(spans);
        for (std::uint32_t j = 0; j < spans; ++j) {
            ex.turn_spans[j].role = r.get_le<std::uint8_t>() != 0 ? "assistant" : "user";
            ex.turn_spans[j].start = r.get_le<std::uint64_t>();
            ex.turn_spans[j].end = r.get_le<std::uint64_t>();
        }
        validate_sft(ex);
        shard.examples.push_back(std::move(ex));
    }
    return shard;
}

// ---------------------------------------------------------------------------
// Run manifest

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config_digest"] = config_digest;
    j["seed"] = seed;
    j["inputs"] = nlohmann::json::array();
    for (const auto& [path, digest] : inputs) {
        j["inputs"].push_back({{"path", path}, {"digest", digest}});
    }
    j["outputs"] = nlohmann::json::array();
    for (const auto& [path, digest] : outputs) {
        j["outputs"].push_back({{"path", path}, {"digest", digest}});
    }
    j["counters"] = counters;
    j["wall_time_seconds"] = wall_time_seconds;
    return j;
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write run manifest: " + path);
    }
    out << to_json().dump(2) << "\n";
}

}  // namespace lcdt
