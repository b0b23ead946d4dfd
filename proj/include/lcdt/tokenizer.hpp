#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lcdt/types.hpp"

namespace lcdt {

// Token-count oracle plus encode/decode. The pipeline itself only moves
// integer ids around; a tokenizer is needed where text enters (ingest,
// synthetic example assembly) or leaves (generation prompts).
class Tokenizer {
  public:
    virtual ~Tokenizer() = default;
    virtual std::vector<TokenId> encode(std::string_view text) = 0;
    virtual std::string decode(const std::vector<TokenId>& tokens) const = 0;
    virtual std::size_t count(std::string_view text) { return encode(text).size(); }
};

// Deterministic whitespace-split tokenizer. Ids are assigned in first-seen
// order, so the same instance round-trips decode(encode(x)) up to whitespace
// normalization. Ships as the test/fallback tokenizer; real corpora arrive
// pre-tokenized.
class WhitespaceTokenizer : public Tokenizer {
  public:
    std::vector<TokenId> encode(std::string_view text) override;
    std::string decode(const std::vector<TokenId>& tokens) const override;

    std::size_t vocab_size() const { return words_.size(); }

    // Vocabulary sidecar (one word per line, id = line index) so a later
    // process can decode ids produced by an earlier one.
    void save_vocab(const std::string& path) const;
    void load_vocab(const std::string& path);

  private:
    std::map<std::string, TokenId, std::less<>> vocab_;
    std::vector<std::string> words_;
};

}  // namespace lcdt
