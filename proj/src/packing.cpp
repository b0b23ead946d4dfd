#include "lcdt/packing.hpp"

#include <algorithm>
#include <stdexcept>

namespace lcdt {

void validate_packed(const PackedSequence& seq) {
    if (seq.boundaries.size() < 2) {
        throw std::invalid_argument("packed sequence has no segments");
    }
    if (seq.boundaries.front() != 0 || seq.boundaries.back() != seq.tokens.size()) {
        throw std::invalid_argument("boundaries must start at 0 and end at token count");
    }
    for (std::size_t i = 1; i < seq.boundaries.size(); ++i) {
        if (seq.boundaries[i] <= seq.boundaries[i - 1]) {
            throw std::invalid_argument("boundaries must be strictly increasing");
        }
    }
    const std::size_t segments = seq.boundaries.size() - 1;
    if (seq.segment_domains.size() != segments || seq.origins.size() != segments) {
        throw std::invalid_argument("segment metadata does not match boundary count");
    }
}

const std::vector<std::uint64_t>& cu_seqlens(const PackedSequence& seq) {
    validate_packed(seq);
    return seq.boundaries;
}

void validate_sft(const SftExample& ex) {
    if (ex.loss_mask.size() != ex.tokens.size()) {
        throw std::invalid_argument("loss mask length does not match token count");
    }
    std::uint64_t covered = 0;
    bool any_loss = false;
    for (const auto& span : ex.turn_spans) {
        if (span.end <= span.start || span.end > ex.tokens.size()) {
            throw std::invalid_argument("invalid turn span");
        }
        if (span.start != covered) {
            throw std::invalid_argument("turn spans must tile the tokens exactly");
        }
        covered = span.end;
        const bool is_response = span.role == "assistant";
        for (std::uint64_t i = span.start; i < span.end; ++i) {
            if (ex.loss_mask[i] != is_response) {
                throw std::invalid_argument("loss mask must be true exactly on response tokens");
            }
            any_loss = any_loss || ex.loss_mask[i];
        }
    }
    if (covered != ex.tokens.size()) {
        throw std::invalid_argument("turn spans must cover all tokens");
    }
    if (!any_loss) {
        throw std::invalid_argument("example has no trainable (response) tokens");
    }
}

// ---------------------------------------------------------------------------
// ShortPacker

ShortPacker::ShortPacker(std::uint64_t length, bool carry, SequenceSink sink)
    : length_(length), carry_(carry), sink_(std::move(sink)) {
    if (length_ == 0) {
        throw std::invalid_argument("pack length must be >= 1");
    }
    current_.boundaries.push_back(0);
}

void ShortPacker::append_segment(const Document& doc, std::uint64_t doc_offset,
                                 std::uint64_t count) {
    current_.tokens.insert(current_.tokens.end(), doc.tokens.begin() + doc_offset,
                           doc.tokens.begin() + doc_offset + count);
    current_.boundaries.push_back(current_.tokens.size());
    current_.segment_domains.push_back(doc.domain);
    current_.origins.push_back({doc.id, doc_offset, doc_offset > 0});
    if (doc_offset > 0) {
        stats_.tokens_carried += count;
    }
}

void ShortPacker::emit() {
    stats_.sequences_emitted += 1;
    stats_.tokens_emitted += current_.tokens.size();
    PackedSequence out = std::move(current_);
    current_ = PackedSequence{};
    current_.boundaries.push_back(0);
    sink_(std::move(out));
}

void ShortPacker::maybe_append_separator() {
    if (!separator_ || current_.tokens.empty()) {
        return;
    }
    current_.tokens.push_back(*separator_);
    current_.boundaries.push_back(current_.tokens.size());
    current_.segment_domains.push_back(kSeparatorOrigin);
    current_.origins.push_back({kSeparatorOrigin, 0, false});
    stats_.tokens_separator += 1;
    if (current_.tokens.size() == length_) {
        emit();
    }
}

void ShortPacker::push(const Document& doc) {
    if (finished_) {
        throw std::logic_error("ShortPacker::push after finish");
    }
    validate_document(doc);
    stats_.documents_in += 1;
    maybe_append_separator();
    const std::uint64_t n = doc.length();
    std::uint64_t offset = 0;
    while (offset < n) {
        // Without carry, a sub-chunk tail never opens a fresh chunk; full-L
        // pieces of an oversized document still do, so no document is ever
        // dropped whole.
        if (!carry_ && offset > 0 && current_.tokens.empty() && n - offset < length_) {
            stats_.tokens_discarded += n - offset;
            return;
        }
        const std::uint64_t space = length_ - current_.tokens.size();
        const std::uint64_t take = std::min(space, n - offset);
        append_segment(doc, offset, take);
        offset += take;
        if (current_.tokens.size() == length_) {
            emit();
        }
    }
}

PackStats ShortPacker::finish() {
    if (!finished_) {
        finished_ = true;
        stats_.tokens_discarded += current_.tokens.size();
        current_ = PackedSequence{};
    }
    return stats_;
}

// ---------------------------------------------------------------------------
// Long-data regime

PackedSequence make_long_sequence(const Document& doc, std::uint64_t length) {
    if (doc.length() < length) {
        throw std::invalid_argument("document '" + doc.id + "' shorter than target length");
    }
    PackedSequence seq;
    seq.tokens.assign(doc.tokens.begin(), doc.tokens.begin() + length);
    seq.boundaries = {0, length};
    seq.segment_domains = {doc.domain};
    seq.origins = {{doc.id, 0, false}};
    return seq;
}

void LongFilter::push(const Document& doc) {
    validate_document(doc);
    stats_.documents_in += 1;
    if (doc.length() < length_) {
        stats_.documents_filtered += 1;
        return;
    }
    stats_.sequences_emitted += 1;
    stats_.tokens_emitted += length_;
    stats_.tokens_discarded += doc.length() - length_;
    sink_(make_long_sequence(doc, length_));
}

// ---------------------------------------------------------------------------
// SftPacker

SftExample sft_from_conversation(const Conversation& conv) {
    SftExample ex;
    for (const auto& turn : conv.turns) {
        const std::uint64_t start = ex.tokens.size();
        ex.tokens.insert(ex.tokens.end(), turn.tokens.begin(), turn.tokens.end());
        const bool is_response = turn.role == "assistant";
        ex.loss_mask.insert(ex.loss_mask.end(), turn.tokens.size(), is_response);
        ex.turn_spans.push_back({turn.role, start, ex.tokens.size()});
    }
    return ex;
}

SftPacker::SftPacker(std::uint64_t length, SftSink sink)
    : length_(length), sink_(std::move(sink)) {
    if (length_ == 0) {
        throw std::invalid_argument("pack length must be >= 1");
    }
}

void SftPacker::emit() {
    const bool any_loss =
        std::find(current_.loss_mask.begin(), current_.loss_mask.end(), true) !=
        current_.loss_mask.end();
    if (!any_loss) {
        // Truncation can leave an all-instruction batch; dropping it keeps the
        // every-example-trains invariant.
        stats_.tokens_discarded += current_.tokens.size();
    } else {
        stats_.sequences_emitted += 1;
        stats_.tokens_emitted += current_.tokens.size();
        sink_(std::move(current_));
    }
    current_ = SftExample{};
}

void SftPacker::push(const Conversation& conv) {
    if (finished_) {
        throw std::logic_error("SftPacker::push after finish");
    }
    stats_.documents_in += 1;

    std::uint64_t conv_tokens = 0;
    bool has_response = false;
    std::string problem;
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        const auto& turn = conv.turns[i];
        if (turn.role != "user" && turn.role != "assistant") {
            problem = "unknown role '" + turn.role + "'";
            break;
        }
        if (i > 0 && turn.role == conv.turns[i - 1].role) {
            problem = "turns do not alternate";
            break;
        }
        if (turn.tokens.empty()) {
            problem = "empty turn";
            break;
        }
        has_response = has_response || turn.role == "assistant";
        conv_tokens += turn.tokens.size();
    }
    if (problem.empty() && conv.turns.empty()) {
        problem = "no turns";
    }
    if (problem.empty() && !has_response) {
        problem = "no response turn";
    }
    if (!problem.empty()) {
        stats_.rejected_records += 1;
        errors_.push_back("conversation '" + conv.id + "': " + problem);
        return;
    }

    if (current_.tokens.size() + conv_tokens > length_) {
        // The crossing conversation is truncated to fill the chunk exactly;
        // its remainder is discarded (not carried, unlike the short regime).
        const std::uint64_t space = length_ - current_.tokens.size();
        append_turns(conv, space);
        stats_.tokens_discarded += conv_tokens - space;
        emit();
        return;
    }

    append_turns(conv, conv_tokens);
    if (current_.tokens.size() == length_) {
        emit();
    }
}

void SftPacker::append_turns(const Conversation& conv, std::uint64_t budget) {
    for (const auto& turn : conv.turns) {
        if (budget == 0) {
            break;
        }
        const std::uint64_t take = std::min<std::uint64_t>(budget, turn.tokens.size());
        const std::uint64_t start = current_.tokens.size();
        current_.tokens.insert(current_.tokens.end(), turn.tokens.begin(),
                               turn.tokens.begin() + take);
        current_.loss_mask.insert(current_.loss_mask.end(), take, turn.role == "assistant");
        current_.turn_spans.push_back({turn.role, start, current_.tokens.size()});
        budget -= take;
    }
}

PackStats SftPacker::finish() {
    if (!finished_) {
        finished_ = true;
        if (!current_.tokens.empty()) {
            emit();
        }
    }
    return stats_;
}

}  // namespace lcdt
