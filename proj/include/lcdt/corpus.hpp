#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lcdt/tokenizer.hpp"
#include "lcdt/types.hpp"

namespace lcdt {

struct IngestError {
    std::uint64_t line = 0;
    std::string message;
};

struct IngestReport {
    std::uint64_t documents = 0;
    std::uint64_t dropped_empty = 0;
    std::uint64_t token_total = 0;
    std::vector<IngestError> errors;
};

using DocumentSink = std::function<void(Document&&)>;

/// Reads newline-delimited JSON records {id, domain, tokens|text, repo_key?}
/// from `in` and streams Documents to `sink` in input order. `domain`, when
/// non-empty, overrides any per-record domain. Records with zero tokens are
/// dropped and counted; malformed records are reported with their line number
/// and the stream continues.
IngestReport ingest(std::istream& in, const std::string& domain, Tokenizer& tokenizer,
                    const DocumentSink& sink);

/// Joins the token arrays of files from one repository with `separator` into
/// a single document (length = sum of file lengths + (n-1) separators).
/// File order is preserved as given; no dependency sorting.
Document concat_repo(const std::vector<Document>& files, TokenId separator,
                     const std::string& domain = "code_repos");

struct DomainCensus {
    TokenCount total_tokens = 0;
    TokenCount long_tokens = 0;       // tokens in documents with length >= long_threshold
    std::uint64_t documents = 0;
    std::uint64_t long_documents = 0;
    std::vector<std::uint64_t> docs_over;  // # documents with length > thresholds[i]
};

// Per-domain length statistics. Counts are exact; fractions are derived on
// demand so partial censuses merge exactly.
struct LengthCensus {
    TokenCount long_threshold = 65536;
    std::vector<TokenCount> thresholds;  // ascending
    std::map<std::string, DomainCensus> domains;

    void add(const Document& doc);
    void merge(const LengthCensus& other);

    /// docs_over[i] / documents for one domain; in [0,1], non-increasing in i.
    std::vector<double> fractions_over(const std::string& domain) const;
};

LengthCensus census(const std::vector<Document>& docs, TokenCount long_threshold,
                    std::vector<TokenCount> thresholds);

}  // namespace lcdt
