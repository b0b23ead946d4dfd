#include "lcdt/tokenizer.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace lcdt {

std::vector<TokenId> WhitespaceTokenizer::encode(std::string_view text) {
    std::vector<TokenId> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i > start) {
            std::string_view word = text.substr(start, i - start);
            auto it = vocab_.find(word);
            if (it == vocab_.end()) {
                TokenId id = static_cast<TokenId>(words_.size());
                words_.emplace_back(word);
                it = vocab_.emplace(words_.back(), id).first;
            }
            out.push_back(it->second);
        }
    }
    return out;
}

void WhitespaceTokenizer::save_vocab(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write vocabulary: " + path);
    }
    for (const auto& word : words_) {
        out << word << "\n";
    }
}

void WhitespaceTokenizer::load_vocab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read vocabulary: " + path);
    }
    vocab_.clear();
    words_.clear();
    std::string word;
    while (std::getline(in, word)) {
        if (word.empty()) {
            continue;
        }
        TokenId id = static_cast<TokenId>(words_.size());
        words_.push_back(word);
        vocab_.emplace(words_.back(), id);
    }
}

std::string WhitespaceTokenizer::decode(const std::vector<TokenId>& tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] >= words_.size()) {
            throw std::out_of_range("token id " + std::to_string(tokens[i]) + " not in vocabulary");
        }
        if (i > 0) {
            out += ' ';
        }
        out += words_[tokens[i]];
    }
    return out;
}

}  // namespace lcdt
