#include "lcdt/corpus.hpp"

#include <algorithm>
#include <istream>
#include <stdexcept>

#include <json.hpp>

namespace lcdt {

IngestReport ingest(std::istream& in, const std::string& domain, Tokenizer& tokenizer,
                    const DocumentSink& sink) {
    if (!in) {
        throw std::runtime_error("ingest: unreadable input stream");
    }
    IngestReport report;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            report.errors.push_back({line_no, "not a JSON object"});
            continue;
        }
        Document doc;
        doc.id = rec.value("id", "line-" + std::to_string(line_no));
        doc.domain = !domain.empty() ? domain : rec.value("domain", "");
        doc.repo_key = rec.value("repo_key", "");
        if (rec.contains("tokens")) {
            const auto& toks = rec["tokens"];
            if (!toks.is_array()) {
                report.errors.push_back({line_no, "'tokens' is not an array"});
                continue;
            }
            bool bad = false;
            doc.tokens.reserve(toks.size());
            for (const auto& t : toks) {
                if (!t.is_number_unsigned() && !(t.is_number_integer() && t.get<std::int64_t>() >= 0)) {
                    report.errors.push_back({line_no, "negative or non-integer token id"});
                    bad = true;
                    break;
                }
                doc.tokens.push_back(t.get<TokenId>());
            }
            if (bad) {
                continue;
            }
        } else if (rec.contains("text")) {
            if (!rec["text"].is_string()) {
                report.errors.push_back({line_no, "'text' is not a string"});
                continue;
            }
            doc.tokens = tokenizer.encode(rec["text"].get<std::string>());
        } else {
            report.errors.push_back({line_no, "record has neither 'tokens' nor 'text'"});
            continue;
        }
        if (doc.tokens.empty()) {
            ++report.dropped_empty;
            continue;
        }
        ++report.documents;
        report.token_total += doc.tokens.size();
        sink(std::move(doc));
    }
    return report;
}

Document concat_repo(const std::vector<Document>& files, TokenId separator,
                     const std::string& domain) {
    if (files.empty()) {
        throw std::invalid_argument("concat_repo: empty file list");
    }
    const std::string& key = files.front().repo_key;
    TokenCount total = 0;
    for (const auto& f : files) {
        if (f.repo_key != key) {
            throw std::invalid_argument("concat_repo: mixed repo_key '" + f.repo_key +
                                        "' vs '" + key + "'");
        }
        total += f.length();
    }
    Document out;
    out.id = key.empty() ? files.front().id : key;
    out.domain = domain;
    out.repo_key = key;
    out.tokens.reserve(total + files.size() - 1);
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (i > 0) {
            out.tokens.push_back(separator);
        }
        out.tokens.insert(out.tokens.end(), files[i].tokens.begin(), files[i].tokens.end());
    }
    return out;
}

void LengthCensus::add(const Document& doc) {
    DomainCensus& d = domains[doc.domain];
    if (d.docs_over.size() != thresholds.size()) {
        d.docs_over.assign(thresholds.size(), 0);
    }
    const TokenCount len = doc.length();
    d.total_tokens += len;
    d.documents += 1;
    if (len >= long_threshold) {
        d.long_tokens += len;
        d.long_documents += 1;
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (len > thresholds[i]) {
            d.docs_over[i] += 1;
        } else {
            break;  // thresholds ascending
        }
    }
}

void LengthCensus::merge(const LengthCensus& other) {
    if (other.long_threshold != long_threshold || other.thresholds != thresholds) {
        throw std::invalid_argument("LengthCensus::merge: mismatched thresholds");
    }
    for (const auto& [name, src] : other.domains) {
        DomainCensus& dst = domains[name];
        if (dst.docs_over.size() != thresholds.size()) {
            dst.docs_over.assign(thresholds.size(), 0);
        }
        dst.total_tokens += src.total_tokens;
        dst.long_tokens += src.long_tokens;
        dst.documents += src.documents;
        dst.long_documents += src.long_documents;
        for (std::size_t i = 0; i < thresholds.size(); ++i) {
            dst.docs_over[i] += src.docs_over[i];
        }
    }
}

std::vector<double> LengthCensus::fractions_over(const std::string& domain) const {
    auto it = domains.find(domain);
    if (it == domains.end() || it->second.documents == 0) {
        return std::vector<double>(thresholds.size(), 0.0);
    }
    std::vector<double> out(thresholds.size());
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        out[i] = static_cast<double>(it->second.docs_over[i]) /
                 static_cast<double>(it->second.documents);
    }
    return out;
}

LengthCensus census(const std::vector<Document>& docs, TokenCount long_threshold,
                    std::vector<TokenCount> thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        throw std::invalid_argument("census: thresholds must be ascending");
    }
    LengthCensus c;
    c.long_threshold = long_threshold;
    c.thresholds = std::move(thresholds);
    for (const auto& doc : docs) {
        c.add(doc);
    }
    return c;
}

}  // namespace lcdt
