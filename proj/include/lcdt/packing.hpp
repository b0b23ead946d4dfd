#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lcdt/types.hpp"

namespace lcdt {

// Provenance of one segment inside a packed sequence. `doc_offset` is the
// position of the segment's first token inside the source document;
// carried == (doc_offset > 0), i.e. the segment continues a document that was
// truncated at an earlier chunk boundary.
struct SegmentOrigin {
    std::string doc_id;
    std::uint64_t doc_offset = 0;
    bool carried = false;
};

// A fixed-length training sequence. boundaries[0] == 0, boundaries.back() ==
// tokens.size(), strictly increasing; segment i spans
// [boundaries[i], boundaries[i+1]) and belongs to segment_domains[i] /
// origins[i]. The boundary offsets are the cross-document attention mask
// contract: token a may attend to token b iff both fall in the same segment.
struct PackedSequence {
    std::vector<TokenId> tokens;
    std::vector<std::uint64_t> boundaries;
    std::vector<std::string> segment_domains;
    std::vector<SegmentOrigin> origins;

    std::size_t segment_count() const { return segment_domains.size(); }
    std::uint64_t length() const { return tokens.size(); }
};

void validate_packed(const PackedSequence& seq);

/// Returns the cumulative segment-length offsets (the boundaries verbatim)
/// for variable-length attention.
const std::vector<std::uint64_t>& cu_seqlens(const PackedSequence& seq);

struct TurnSpan {
    std::string role;  // "user" or "assistant"
    std::uint64_t start = 0;
    std::uint64_t end = 0;  // exclusive
};

// One SFT training example: possibly several concatenated conversations.
// loss_mask[i] is true only for tokens inside assistant (response) spans.
struct SftExample {
    std::vector<TokenId> tokens;
    std::vector<bool> loss_mask;
    std::vector<TurnSpan> turn_spans;
};

void validate_sft(const SftExample& ex);

struct PackStats {
    std::uint64_t sequences_emitted = 0;
    std::uint64_t tokens_emitted = 0;
    std::uint64_t tokens_discarded = 0;   // truncated tails (carry=false) + final partial
    std::uint64_t tokens_carried = 0;     // tails moved across a chunk boundary
    std::uint64_t tokens_separator = 0;   // inserted separator tokens (when enabled)
    std::uint64_t documents_in = 0;
    std::uint64_t documents_filtered = 0; // filter_long: too-short documents
    std::uint64_t rejected_records = 0;   // pack_sft: conversations failing preconditions
};

using SequenceSink = std::function<void(PackedSequence&&)>;

// Reserved origin/domain label for separator segments.
inline constexpr const char* kSeparatorOrigin = "<sep>";

// Streaming packer for the short-data regime: concatenates documents into
// chunks of exactly `length` tokens. With carry enabled, the truncated tail
// of a split document opens the next chunk; otherwise the tail is discarded.
// The final partial chunk at end-of-stream is always discarded (and counted).
//
// Boundaries carry the document-mask information, so no separator is inserted
// by default; set_separator() adds a single-token segment (origin "<sep>")
// between documents for parity with full-attention setups.
class ShortPacker {
  public:
    ShortPacker(std::uint64_t length, bool carry, SequenceSink sink);

    void set_separator(TokenId separator) { separator_ = separator; }

    void push(const Document& doc);
    /// Discards any buffered partial chunk and returns the final counters.
    PackStats finish();

    const PackStats& stats() const { return stats_; }

  private:
    void append_segment(const Document& doc, std::uint64_t doc_offset, std::uint64_t count);
    void maybe_append_separator();
    void emit();

    std::uint64_t length_;
    bool carry_;
    SequenceSink sink_;
    std::optional<TokenId> separator_;
    PackedSequence current_;
    PackStats stats_;
    bool finished_ = false;
};

/// Long-data regime: keeps only documents with length >= `length`, each
/// truncated to exactly `length` tokens and emitted as a single-segment
/// sequence.
PackedSequence make_long_sequence(const Document& doc, std::uint64_t length);

class LongFilter {
  public:
    LongFilter(std::uint64_t length, SequenceSink sink) : length_(length), sink_(std::move(sink)) {}

    void push(const Document& doc);
    const PackStats& stats() const { return stats_; }

  private:
    std::uint64_t length_;
    SequenceSink sink_;
    PackStats stats_;
};

struct ChatTurn {
    std::string role;  // "user" | "assistant"
    std::vector<TokenId> tokens;
};

struct Conversation {
    std::string id;
    std::vector<ChatTurn> turns;
};

/// Builds a single-conversation SftExample (masks response tokens only).
SftExample sft_from_conversation(const Conversation& conv);

using SftSink = std::function<void(SftExample&&)>;

// SFT regime: packs conversations into examples of at most `length` tokens.
// A conversation that crosses the boundary is truncated at `length` and its
// remainder discarded; conversations without a response turn (or with
// non-alternating roles) are rejected with an error record.
class SftPacker {
  public:
    SftPacker(std::uint64_t length, SftSink sink);

    void push(const Conversation& conv);
    PackStats finish();

    const PackStats& stats() const { return stats_; }
    const std::vector<std::string>& errors() const { return errors_; }

  private:
    void emit();
    void append_turns(const Conversation& conv, std::uint64_t budget);

    std::uint64_t length_;
    SftSink sink_;
    SftExample current_;
    PackStats stats_;
    std::vector<std::string> errors_;
    bool finished_ = false;
};

}  // namespace lcdt
