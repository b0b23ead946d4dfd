#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcdt {

using TokenId = std::uint32_t;
using TokenCount = std::uint64_t;

// A tokenized text unit with a domain identity. Immutable after construction.
struct Document {
    std::string id;
    std::string domain;
    std::vector<TokenId> tokens;
    std::string repo_key;  // empty = not part of a repository

    TokenCount length() const { return tokens.size(); }
};

inline void validate_document(const Document& doc) {
    if (doc.tokens.empty()) {
        throw std::invalid_argument("document '" + doc.id + "' has zero tokens");
    }
}

}  // namespace lcdt
