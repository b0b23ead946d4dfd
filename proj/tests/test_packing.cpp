#include <doctest.h>

#include <map>

#include "lcdt/packing.hpp"
#include "lcdt/rng.hpp"

using namespace lcdt;

namespace {

// Documents whose tokens encode (doc index, offset) so provenance can be
// checked token by token.
Document provenance_doc(std::uint32_t index, std::size_t length, const std::string& domain) {
    Document d;
    d.id = "doc-" + std::to_string(index);
    d.domain = domain;
    d.tokens.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        d.tokens[i] = index * 1000003u + static_cast<std::uint32_t>(i % 1000003u);
    }
    return d;
}

std::vector<PackedSequence> pack_all(const std::vector<Document>& docs, std::uint64_t length,
                                     bool carry, PackStats* stats = nullptr) {
    std::vector<PackedSequence> out;
    ShortPacker packer(length, carry, [&](PackedSequence&& s) { out.push_back(std::move(s)); });
    for (const auto& d : docs) {
        packer.push(d);
    }
    PackStats s = packer.finish();
    if (stats) {
        *stats = s;
    }
    return out;
}

}  // namespace

TEST_CASE("pack_short carry rule on the worked stream") {
    // 30K + 40K + 10K + 24K documents at L = 64K: the 40K document is cut at
    // 34K, its 6K tail opens the second sequence.
    std::vector<Document> docs = {
        provenance_doc(0, 30000, "books"),
        provenance_doc(1, 40000, "books"),
        provenance_doc(2, 10000, "books"),
        provenance_doc(3, 24000, "books"),
        provenance_doc(4, 24000, "books"),  // tops up the second sequence to exactly 64K
    };
    PackStats stats;
    auto seqs = pack_all(docs, 64000, true, &stats);
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[0].boundaries == std::vector<std::uint64_t>{0, 30000, 64000});
    CHECK_FALSE(seqs[0].origins[1].carried);
    CHECK(seqs[1].boundaries == std::vector<std::uint64_t>{0, 6000, 16000, 40000, 64000});
    CHECK(seqs[1].origins[0].carried);
    CHECK(seqs[1].origins[0].doc_id == "doc-1");
    CHECK(seqs[1].origins[0].doc_offset == 34000);
    CHECK(stats.tokens_discarded == 0);
}

TEST_CASE("pack_short exact fit emits a single-segment sequence") {
    auto seqs = pack_all({provenance_doc(0, 64000, "books")}, 64000, true);
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].boundaries == std::vector<std::uint64_t>{0, 64000});
}

TEST_CASE("pack_short without carry discards the truncated tail") {
    PackStats stats;
    auto seqs = pack_all({provenance_doc(0, 30000, "b"), provenance_doc(1, 40000, "b")}, 64000,
                         false, &stats);
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].length() == 64000);
    CHECK(stats.tokens_discarded == 6000);
    CHECK(stats.tokens_emitted == 64000);
}

TEST_CASE("pack_short splits oversized documents into full chunks without carry") {
    PackStats stats;
    auto seqs = pack_all({provenance_doc(0, 200000, "b")}, 64000, false, &stats);
    CHECK(seqs.size() == 3);
    CHECK(stats.tokens_discarded == 200000 - 3 * 64000);
    for (const auto& s : seqs) {
        CHECK(s.segment_count() == 1);
    }
    CHECK(seqs[1].origins[0].doc_offset == 64000);
    CHECK(seqs[1].origins[0].carried);
}

TEST_CASE("pack_short final partial chunk is discarded and counted") {
    PackStats stats;
    auto seqs = pack_all({provenance_doc(0, 100, "b")}, 64000, true, &stats);
    CHECK(seqs.empty());
    CHECK(stats.tokens_discarded == 100);
}

TEST_CASE("pack_short conserves tokens and provenance under carry") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Document> docs;
        TokenCount input_tokens = 0;
        const std::size_t n = 5 + rng.next_below(40);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t len = 1 + rng.next_below(3000);
            input_tokens += len;
            docs.push_back(provenance_doc(static_cast<std::uint32_t>(i), len, "d"));
        }
        const std::uint64_t length = 512 + rng.next_below(2048);
        PackStats stats;
        auto seqs = pack_all(docs, length, true, &stats);

        CHECK(stats.tokens_emitted + stats.tokens_discarded == input_tokens);

        // Boundary soundness: every segment slice must equal the source slice,
        // and each document position must be consumed at most once.
        std::map<std::string, std::vector<bool>> consumed;
        for (const auto& d : docs) {
            consumed[d.id].assign(d.length(), false);
        }
        for (const auto& seq : seqs) {
            validate_packed(seq);
            CHECK(seq.length() == length);
            for (std::size_t s = 0; s < seq.segment_count(); ++s) {
                const auto& origin = seq.origins[s];
                const std::uint64_t seg_len = seq.boundaries[s + 1] - seq.boundaries[s];
                const Document& src = docs[std::stoul(origin.doc_id.substr(4))];
                REQUIRE(origin.doc_offset + seg_len <= src.length());
                for (std::uint64_t i = 0; i < seg_len; ++i) {
                    CHECK(seq.tokens[seq.boundaries[s] + i] ==
                          src.tokens[origin.doc_offset + i]);
                    CHECK_FALSE(consumed[origin.doc_id][origin.doc_offset + i]);
                    consumed[origin.doc_id][origin.doc_offset + i] = true;
                }
                CHECK(origin.carried == (origin.doc_offset > 0));
            }
        }
    }
}

TEST_CASE("pack_short with a separator inserts single-token segments between documents") {
    std::vector<PackedSequence> out;
    ShortPacker packer(100, true, [&](PackedSequence&& s) { out.push_back(std::move(s)); });
    packer.set_separator(77);
    packer.push(provenance_doc(0, 40, "a"));
    packer.push(provenance_doc(1, 59, "b"));   // 40 + 1 + 59 = exactly 100
    packer.push(provenance_doc(2, 10, "c"));
    PackStats stats = packer.finish();
    REQUIRE(out.size() == 1);
    const auto& seq = out[0];
    CHECK(seq.boundaries == std::vector<std::uint64_t>{0, 40, 41, 100});
    CHECK(seq.tokens[40] == 77);
    CHECK(seq.segment_domains[1] == kSeparatorOrigin);
    CHECK(seq.origins[1].doc_id == kSeparatorOrigin);
    // Only between documents within a chunk; a fresh chunk never opens with one.
    CHECK(stats.tokens_separator == 1);
    // Conservation including inserted separators.
    CHECK(stats.tokens_emitted + stats.tokens_discarded ==
          40 + 59 + 10 + stats.tokens_separator);
}

TEST_CASE("filter_long keeps and truncates only documents at the target length") {
    std::vector<PackedSequence> out;
    LongFilter filter(64000, [&](PackedSequence&& s) { out.push_back(std::move(s)); });
    filter.push(provenance_doc(0, 63000, "b"));
    filter.push(provenance_doc(1, 64000, "b"));
    filter.push(provenance_doc(2, 100000, "b"));
    REQUIRE(out.size() == 2);
    CHECK(out[0].length() == 64000);
    CHECK(out[1].length() == 64000);
    CHECK(filter.stats().documents_filtered == 1);
}

TEST_CASE("filter_long passes a 512K document at the 512K setting") {
    std::vector<PackedSequence> out;
    LongFilter filter(524288, [&](PackedSequence&& s) { out.push_back(std::move(s)); });
    filter.push(provenance_doc(0, 524288, "b"));
    REQUIRE(out.size() == 1);
    CHECK(out[0].length() == 524288);
    CHECK(out[0].segment_count() == 1);
}

TEST_CASE("cu_seqlens returns the boundary offsets verbatim") {
    PackedSequence seq;
    seq.tokens.assign(9, 1);
    seq.boundaries = {0, 3, 5, 9};
    seq.segment_domains = {"a", "b", "c"};
    seq.origins = {{"d1", 0, false}, {"d2", 0, false}, {"d3", 0, false}};
    CHECK(cu_seqlens(seq) == std::vector<std::uint64_t>{0, 3, 5, 9});
}

TEST_CASE("cu_seqlens on 64 segments of 1K") {
    PackedSequence seq;
    seq.tokens.assign(65536, 1);
    for (int i = 0; i <= 64; ++i) {
        seq.boundaries.push_back(static_cast<std::uint64_t>(i) * 1024);
    }
    seq.segment_domains.assign(64, "d");
    seq.origins.assign(64, {"x", 0, false});
    const auto& cu = cu_seqlens(seq);
    CHECK(cu.size() == 65);
    CHECK(cu.back() == 65536);
}

// The attention relation induced by cu_seqlens must equal brute-force
// same-segment membership.
TEST_CASE("cu_seqlens mask equivalence against brute force") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t length = 2 + rng.next_below(63);
        std::vector<Document> docs;
        std::uint64_t made = 0;
        std::uint32_t idx = 0;
        while (made < length * 2) {
            const std::size_t len = 1 + rng.next_below(16);
            docs.push_back(provenance_doc(idx++, len, "d"));
            made += len;
        }
        auto seqs = pack_all(docs, length, true);
        REQUIRE(!seqs.empty());
        const PackedSequence& seq = seqs[0];
        const auto& cu = cu_seqlens(seq);

        auto segment_of = [&](std::uint64_t pos) {
            std::size_t s = 0;
            while (cu[s + 1] <= pos) {
                ++s;
            }
            return s;
        };
        // Brute-force: position belongs to the segment whose token provenance
        // it shares (same origin entry).
        for (std::uint64_t i = 0; i < seq.length(); ++i) {
            for (std::uint64_t j = 0; j < seq.length(); ++j) {
                const bool allowed = segment_of(i) == segment_of(j);
                bool same_origin = false;
                for (std::size_t s = 0; s < seq.segment_count(); ++s) {
                    if (i >= seq.boundaries[s] && i < seq.boundaries[s + 1] &&
                        j >= seq.boundaries[s] && j < seq.boundaries[s + 1]) {
                        same_origin = true;
                    }
                }
                CHECK(allowed == same_origin);
            }
        }
    }
}

namespace {

Conversation make_conv(const std::string& id, std::initializer_list<std::pair<const char*, int>> turns) {
    Conversation c;
    c.id = id;
    for (const auto& [role, len] : turns) {
        ChatTurn t;
        t.role = role;
        t.tokens.assign(static_cast<std::size_t>(len), 3);
        c.turns.push_back(std::move(t));
    }
    return c;
}

}  // namespace

TEST_CASE("pack_sft packs sub-capacity conversations into one example") {
    std::vector<SftExample> out;
    SftPacker packer(4000, [&](SftExample&& ex) { out.push_back(std::move(ex)); });
    packer.push(make_conv("c1", {{"user", 1000}, {"assistant", 200}}));
    packer.push(make_conv("c2", {{"user", 1000}, {"assistant", 200}}));
    packer.finish();
    REQUIRE(out.size() == 1);
    CHECK(out[0].tokens.size() == 2400);
    std::size_t loss_bits = 0;
    for (bool b : out[0].loss_mask) {
        loss_bits += b;
    }
    CHECK(loss_bits == 400);
    validate_sft(out[0]);
}

TEST_CASE("pack_sft truncates an oversized conversation and counts the tail") {
    std::vector<SftExample> out;
    SftPacker packer(4000, [&](SftExample&& ex) { out.push_back(std::move(ex)); });
    packer.push(make_conv("big", {{"user", 2000}, {"assistant", 2010}}));
    PackStats stats = packer.finish();
    REQUIRE(out.size() == 1);
    CHECK(out[0].tokens.size() == 4000);
    CHECK(stats.tokens_discarded == 10);
}

TEST_CASE("pack_sft rejects conversations without a response turn") {
    std::vector<SftExample> out;
    SftPacker packer(4000, [&](SftExample&& ex) { out.push_back(std::move(ex)); });
    packer.push(make_conv("noresp", {{"user", 100}}));
    PackStats stats = packer.finish();
    CHECK(out.empty());
    CHECK(stats.rejected_records == 1);
    REQUIRE(packer.errors().size() == 1);
    CHECK(packer.errors()[0].find("noresp") != std::string::npos);
}

TEST_CASE("pack_sft rejects non-alternating turns") {
    std::vector<SftExample> out;
    SftPacker packer(4000, [&](SftExample&& ex) { out.push_back(std::move(ex)); });
    packer.push(make_conv("dup", {{"user", 10}, {"user", 10}, {"assistant", 10}}));
    CHECK(packer.stats().rejected_records == 1);
}

TEST_CASE("pack_sft masks cover every token via exactly one span") {
    Rng rng(23);
    std::vector<SftExample> out;
    SftPacker packer(2048, [&](SftExample&& ex) { out.push_back(std::move(ex)); });
    for (int i = 0; i < 60; ++i) {
        Conversation c;
        c.id = "c" + std::to_string(i);
        const std::size_t rounds = 1 + rng.next_below(3);
        for (std::size_t r = 0; r < rounds; ++r) {
            ChatTurn user;
            user.role = "user";
            user.tokens.assign(1 + rng.next_below(300), 1);
            c.turns.push_back(std::move(user));
            ChatTurn reply;
            reply.role = "assistant";
            reply.tokens.assign(1 + rng.next_below(300), 2);
            c.turns.push_back(std::move(reply));
        }
        packer.push(c);
    }
    packer.finish();
    CHECK(!out.empty());
    for (const auto& ex : out) {
        validate_sft(ex);  // covers span tiling + mask-iff-response
        CHECK(ex.tokens.size() <= 2048);
    }
}
