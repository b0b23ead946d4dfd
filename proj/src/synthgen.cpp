#include "lcdt/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "lcdt/rng.hpp"

namespace lcdt {

namespace {

// Generation prompt for QA-over-a-snippet. The sampled chunk is spliced
// between the start/end markers; responses must come back in the
// Reasoning/Question/Answer format parsed below.
const char kQaGenerationPrompt[] =
    "Given the following snippet of a book, ask a relevant question and provide the answer. "
    "The question and the answer should follow the following rules:\n\n"
    "(1) The question should be specific enough that it can only be answered with the snippet. "
    "The question should also be interesting and intellectual enough that a curious reader of "
    "the book would ask about it.\n"
    "(2) The question and the answer should be comprehensible given just the whole book without "
    "highlighting the snippet. With that being said, the question should NOT refer to the "
    "snippet directly (e.g., do NOT say things like \"Question: given the conversation in the "
    "snippet, what ...\"). The answer also should not mention \"the snippet ...\" explicitly "
    "(assuming that the snippet is never provided), but it can copy the snippet content as a "
    "reference when answering the question.\n"
    "(3) The answer should be concise but also should provide references to the book when "
    "needed. For example, \"Wellington Yueh betrayed the Atreides, as the book mentioned, "
    "'...'\".\n\n"
    "*** Start of the snippet ***\n\n";

const char kQaGenerationPromptTail[] =
    "\n\n*** End of the snippet ***\n\n"
    "Before generating the question and the answer, first reason about what this snippet is "
    "about. In your generation, stick to the following format:\n\n"
    "Reasoning: this snippet is about ...\n"
    "Question: ...\n"
    "Answer: ...";

const std::vector<std::string> kQuestionPrompts = {
    "Given the document, please answer the question.",
    "Here is a piece of text; answer the following question based on it.",
    "Please answer the question using the provided content.",
    "Based on the given passage, respond to the question.",
    "Read the snippet and answer the question that follows.",
    "Using the provided text, answer the following question.",
};

const std::vector<std::string> kLayouts = {
    "{prompt}\n\n{documents}\n\nQuestion: {question}",
    "{prompt}\n\n==== document starts ====\n{documents}\n==== document ends ====\n\n"
    "Question: {question}",
    "{prompt}\n\n{documents}\n\n{question}",
    "{prompt} Question: {question}\n\n{documents}",
    "{prompt} {question}\n\n{documents}",
    "{prompt}\n\n{question}\n\n{documents}",
};

const std::vector<std::string> kSummaryInstructions = {
    "Summarize the following document.",
    "Write a concise summary of the text below.",
    "Provide a summary of the given content.",
};

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string replace_once(std::string text, const std::string& placeholder,
                         const std::string& value) {
    const std::size_t pos = text.find(placeholder);
    if (pos != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
    }
    return text;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

SftExample make_instruction_response(const std::string& instruction, const std::string& response,
                                     Tokenizer& tokenizer) {
    Conversation conv;
    conv.turns.push_back({"user", tokenizer.encode(instruction)});
    conv.turns.push_back({"assistant", tokenizer.encode(response)});
    if (conv.turns[0].tokens.empty() || conv.turns[1].tokens.empty()) {
        throw std::invalid_argument("instruction and response must tokenize to >= 1 token");
    }
    return sft_from_conversation(conv);
}

}  // namespace

void validate_template(const PromptTemplate& tpl) {
    if (count_occurrences(tpl.layout, "{documents}") != 1) {
        throw std::invalid_argument("template '" + tpl.id +
                                    "': layout must contain {documents} exactly once");
    }
    if (count_occurrences(tpl.layout, "{prompt}") > 1 ||
        count_occurrences(tpl.layout, "{question}") > 1) {
        throw std::invalid_argument("template '" + tpl.id +
                                    "': {prompt} and {question} may appear at most once");
    }
}

const std::vector<std::string>& default_question_prompts() { return kQuestionPrompts; }
const std::vector<std::string>& default_layouts() { return kLayouts; }

const char* to_string(QaRejectReason reason) {
    switch (reason) {
        case QaRejectReason::kMissingQuestion: return "missing question field";
        case QaRejectReason::kMissingAnswer: return "missing answer field";
        case QaRejectReason::kSnippetReference: return "question refers to the snippet";
        case QaRejectReason::kEmptyAnswer: return "empty answer";
    }
    return "unknown";
}

QaParseResult parse_qa(const std::string& response) {
    QaParseResult result;
    const std::size_t q_pos = response.find("Question:");
    if (q_pos == std::string::npos) {
        result.reason = QaRejectReason::kMissingQuestion;
        return result;
    }
    const std::size_t a_pos = response.find("Answer:", q_pos);
    if (a_pos == std::string::npos) {
        result.reason = QaRejectReason::kMissingAnswer;
        return result;
    }
    QaPair qa;
    qa.question = trim(response.substr(q_pos + 9, a_pos - (q_pos + 9)));
    qa.answer = trim(response.substr(a_pos + 7));
    if (qa.question.empty()) {
        result.reason = QaRejectReason::kMissingQuestion;
        return result;
    }
    if (qa.answer.empty()) {
        result.reason = QaRejectReason::kEmptyAnswer;
        return result;
    }
    if (lowercase(qa.question).find("snippet") != std::string::npos) {
        result.reason = QaRejectReason::kSnippetReference;
        return result;
    }
    result.qa = std::move(qa);
    return result;
}

QaRequest make_qa_request(const Document& doc, std::uint64_t chunk_len, std::uint64_t seed,
                          const Tokenizer& tokenizer) {
    if (chunk_len == 0) {
        throw std::invalid_argument("chunk length must be >= 1");
    }
    if (doc.length() < chunk_len) {
        throw std::invalid_argument("document '" + doc.id + "' shorter than chunk length " +
                                    std::to_string(chunk_len));
    }
    Rng rng(derive_seed(seed, "qa-chunk"));
    const std::uint64_t offset = rng.next_below(doc.length() - chunk_len + 1);
    std::vector<TokenId> chunk(doc.tokens.begin() + offset,
                               doc.tokens.begin() + offset + chunk_len);
    QaRequest req;
    req.chunk_offset = offset;
    req.chunk_len = chunk_len;
    req.prompt = kQaGenerationPrompt + tokenizer.decode(chunk) + kQaGenerationPromptTail;
    return req;
}

std::string make_summary_request(const std::string& content) {
    return "Summarize the following text in one concise paragraph. Reply with the summary only."
           "\n\n" +
           content + "\n\nSummary:";
}

namespace {

std::string render_layout(const PromptTemplate& tpl, const std::string& documents,
                          const std::string& question) {
    validate_template(tpl);
    std::string text = tpl.layout;
    text = replace_once(text, "{prompt}", tpl.question_prompt);
    text = replace_once(text, "{documents}", documents);
    text = replace_once(text, "{question}", question);
    return text;
}

PromptTemplate pick_template(std::uint64_t seed, const char* label) {
    Rng rng(derive_seed(seed, label));
    const std::size_t p = rng.next_below(kQuestionPrompts.size());
    const std::size_t l = rng.next_below(kLayouts.size());
    PromptTemplate tpl;
    tpl.id = "builtin-p" + std::to_string(p) + "-l" + std::to_string(l);
    tpl.question_prompt = kQuestionPrompts[p];
    tpl.layout = kLayouts[l];
    return tpl;
}

}  // namespace

SftExample assemble_qa(const Document& doc, const QaPair& qa, const PromptTemplate& tpl,
                       Tokenizer& tokenizer) {
    const std::string instruction =
        render_layout(tpl, tokenizer.decode(doc.tokens), qa.question);
    return make_instruction_response(instruction, qa.answer, tokenizer);
}

SftExample assemble_qa(const Document& doc, const QaPair& qa, std::uint64_t seed,
                       Tokenizer& tokenizer) {
    return assemble_qa(doc, qa, pick_template(seed, "qa-template"), tokenizer);
}

SftExample assemble_rag(const Document& doc, const QaPair& qa, std::uint64_t source_offset,
                        std::uint64_t chunk_len, std::size_t n_chunks, std::uint64_t seed,
                        Tokenizer& tokenizer) {
    if (n_chunks == 0) {
        throw std::invalid_argument("need at least one chunk");
    }
    if (chunk_len == 0 || source_offset + chunk_len > doc.length()) {
        throw std::invalid_argument("source chunk out of range");
    }
    // Candidate distractors: aligned windows that do not overlap the source.
    std::vector<std::uint64_t> candidates;
    for (std::uint64_t start = 0; start + chunk_len <= doc.length(); start += chunk_len) {
        if (start + chunk_len <= source_offset || start >= source_offset + chunk_len) {
            candidates.push_back(start);
        }
    }
    if (candidates.size() + 1 < n_chunks) {
        throw std::invalid_argument("document '" + doc.id + "' cannot supply " +
                                    std::to_string(n_chunks) + " disjoint chunks");
    }
    Rng rng(derive_seed(seed, "rag-chunks"));
    rng.shuffle(candidates);
    candidates.resize(n_chunks - 1);
    candidates.push_back(source_offset);
    rng.shuffle(candidates);

    std::string passages;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        std::vector<TokenId> chunk(doc.tokens.begin() + candidates[i],
                                   doc.tokens.begin() + candidates[i] + chunk_len);
        if (i > 0) {
            passages += "\n\n";
        }
        passages += tokenizer.decode(chunk);
    }
    const std::string instruction =
        render_layout(pick_template(seed, "rag-template"), passages, qa.question);
    return make_instruction_response(instruction, qa.answer, tokenizer);
}

SftExample assemble_summary(const Document& doc, const std::string& summary, std::uint64_t seed,
                            Tokenizer& tokenizer) {
    if (trim(summary).empty()) {
        throw std::invalid_argument("empty summary");
    }
    Rng rng(derive_seed(seed, "summ-template"));
    const std::string& prompt = kSummaryInstructions[rng.next_below(kSummaryInstructions.size())];
    const std::string instruction = prompt + "\n\n" + tokenizer.decode(doc.tokens);
    return make_instruction_response(instruction, summary, tokenizer);
}

SummaryPlan recursive_summary_plan(TokenCount doc_length, std::uint64_t window,
                                   std::size_t fan_in) {
    if (window == 0) {
        throw std::invalid_argument("window must be >= 1");
    }
    if (fan_in < 2) {
        throw std::invalid_argument("fan-in must be >= 2 (no reduction otherwise)");
    }
    if (doc_length == 0) {
        throw std::invalid_argument("empty document");
    }
    SummaryPlan plan;
    std::vector<std::size_t> level;
    for (std::uint64_t start = 0; start < doc_length; start += window) {
        SummaryNode leaf;
        leaf.window_start = start;
        leaf.window_len = std::min<std::uint64_t>(window, doc_length - start);
        level.push_back(plan.nodes.size());
        plan.nodes.push_back(leaf);
    }
    while (level.size() > 1) {
        std::vector<std::size_t> next;
        for (std::size_t i = 0; i < level.size(); i += fan_in) {
            SummaryNode parent;
            for (std::size_t j = i; j < std::min(level.size(), i + fan_in); ++j) {
                parent.children.push_back(level[j]);
            }
            next.push_back(plan.nodes.size());
            plan.nodes.push_back(parent);
        }
        level = std::move(next);
    }
    plan.root = level.front();
    return plan;
}

// ---------------------------------------------------------------------------
// Clients

HttpGenerationClient::HttpGenerationClient(Options options) : options_(std::move(options)) {
    if (options_.base_url.empty()) {
        throw std::invalid_argument("generation endpoint URL is empty");
    }
}

std::optional<std::string> HttpGenerationClient::generate(const std::string& prompt,
                                                          std::string& error) {
    nlohmann::json body;
    body["model"] = options_.model;
    body["temperature"] = options_.temperature;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* token = std::getenv("LCDT_API_TOKEN")) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        httplib::Client client(options_.base_url);
        client.set_read_timeout(options_.timeout_seconds, 0);
        client.set_write_timeout(options_.timeout_seconds, 0);
        auto res = client.Post(options_.path, headers, payload, "application/json");
        if (!res) {
            error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            error = "http status " + std::to_string(res->status);
            continue;
        }
        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) {
            error = "response is not valid JSON";
            continue;
        }
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            error = std::string("unexpected response shape: ") + e.what();
        }
    }
    return std::nullopt;
}

std::optional<std::string> StubGenerationClient::generate(const std::string& prompt,
                                                          std::string& error) {
    (void)error;
    char tag[17];
    std::snprintf(tag, sizeof(tag), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(prompt) ^ seed_));
    const std::string key(tag, 8);
    if (prompt.find("*** Start of the snippet ***") != std::string::npos) {
        return "Reasoning: this snippet is about topic " + key +
               ".\nQuestion: What detail does the text report for record " + key +
               "?\nAnswer: The text reports detail " + key + " in full.";
    }
    return "The content covers topic " + key + " and its main points.";
}

// ---------------------------------------------------------------------------
// Request log + pipeline

std::string GenRecord::to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = kind;
    j["doc_id"] = doc_id;
    j["seed"] = seed;
    j["chunk_offset"] = chunk_offset;
    j["chunk_len"] = chunk_len;
    j["node"] = node;
    j["root"] = root;
    j["prompt"] = prompt;
    j["response"] = response;
    return j.dump();
}

GenRecord GenRecord::from_json(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    GenRecord rec;
    rec.kind = j.at("kind").get<std::string>();
    rec.doc_id = j.at("doc_id").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.chunk_offset = j.value("chunk_offset", std::uint64_t{0});
    rec.chunk_len = j.value("chunk_len", std::uint64_t{0});
    rec.node = j.value("node", std::uint64_t{0});
    rec.root = j.value("root", true);
    rec.prompt = j.value("prompt", "");
    rec.response = j.at("response").get<std::string>();
    return rec;
}

SynthGenerator::SynthGenerator(SynthConfig config, Tokenizer& tokenizer,
                               GenerationClient& client,
                               std::function<void(const GenRecord&)> log_sink)
    : config_(config), tokenizer_(tokenizer), client_(client), log_sink_(std::move(log_sink)) {}

SynthOutcome SynthGenerator::generate_qa(const Document& doc, std::uint64_t seed) {
    SynthOutcome outcome;
    if (doc.length() < config_.qa_chunk_len) {
        outcome.skip_reason = "document shorter than QA chunk length";
        return outcome;
    }
    const QaRequest req = make_qa_request(doc, config_.qa_chunk_len, seed, tokenizer_);
    std::string error;
    auto response = client_.generate(req.prompt, error);
    if (!response) {
        outcome.skip_reason = "generation failed: " + error;
        return outcome;
    }
    log_sink_({"qa", doc.id, seed, req.chunk_offset, req.chunk_len, 0, true, req.prompt,
               *response});
    const QaParseResult parsed = parse_qa(*response);
    if (!parsed.ok()) {
        outcome.skip_reason = std::string("rejected: ") + to_string(parsed.reason);
        return outcome;
    }
    outcome.example = assemble_qa(doc, *parsed.qa, seed, tokenizer_);
    return outcome;
}

SynthOutcome SynthGenerator::generate_rag(const Document& doc, std::uint64_t seed) {
    SynthOutcome outcome;
    if (doc.length() < config_.qa_chunk_len) {
        outcome.skip_reason = "document shorter than QA chunk length";
        return outcome;
    }
    const QaRequest req = make_qa_request(doc, config_.qa_chunk_len, seed, tokenizer_);
    std::string error;
    auto response = client_.generate(req.prompt, error);
    if (!response) {
        outcome.skip_reason = "generation failed: " + error;
        return outcome;
    }
    log_sink_({"rag", doc.id, seed, req.chunk_offset, req.chunk_len, 0, true, req.prompt,
               *response});
    const QaParseResult parsed = parse_qa(*response);
    if (!parsed.ok()) {
        outcome.skip_reason = std::string("rejected: ") + to_string(parsed.reason);
        return outcome;
    }
    try {
        outcome.example = assemble_rag(doc, *parsed.qa, req.chunk_offset, req.chunk_len,
                                       config_.rag_chunks, seed, tokenizer_);
    } catch (const std::invalid_argument& e) {
        outcome.skip_reason = e.what();
    }
    return outcome;
}

SynthOutcome SynthGenerator::generate_summary(const Document& doc, std::uint64_t seed) {
    SynthOutcome outcome;
    const SummaryPlan plan =
        recursive_summary_plan(doc.length(), config_.summary_window, config_.summary_fan_in);
    std::vector<std::string> summaries(plan.nodes.size());
    for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
        const SummaryNode& node = plan.nodes[i];
        std::string content;
        if (node.children.empty()) {
            std::vector<TokenId> window(
                doc.tokens.begin() + node.window_start,
                doc.tokens.begin() + node.window_start + node.window_len);
            content = tokenizer_.decode(window);
        } else {
            for (std::size_t j = 0; j < node.children.size(); ++j) {
                if (j > 0) {
                    content += "\n";
                }
                content += summaries[node.children[j]];
            }
        }
        const std::string prompt = make_summary_request(content);
        std::string error;
        auto response = client_.generate(prompt, error);
        if (!response) {
            outcome.skip_reason = "generation failed at node " + std::to_string(i) + ": " + error;
            return outcome;
        }
        summaries[i] = *response;
        log_sink_({"summ", doc.id, seed, 0, 0, i, i == plan.root, prompt, *response});
    }
    outcome.example = assemble_summary(doc, summaries[plan.root], seed, tokenizer_);
    return outcome;
}

std::vector<SftExample> replay_log(const std::vector<GenRecord>& records,
                                   const std::map<std::string, Document>& corpus,
                                   const SynthConfig& config, Tokenizer& tokenizer) {
    std::vector<SftExample> out;
    for (const auto& rec : records) {
        auto it = corpus.find(rec.doc_id);
        if (it == corpus.end()) {
            throw std::runtime_error("replay: document '" + rec.doc_id + "' not in corpus");
        }
        const Document& doc = it->second;
        if (rec.kind == "qa" || rec.kind == "rag") {
            const QaParseResult parsed = parse_qa(rec.response);
            if (!parsed.ok()) {
                continue;  // was skipped during generation as well
            }
            if (rec.kind == "qa") {
                out.push_back(assemble_qa(doc, *parsed.qa, rec.seed, tokenizer));
            } else {
                out.push_back(assemble_rag(doc, *parsed.qa, rec.chunk_offset, rec.chunk_len,
                                           config.rag_chunks, rec.seed, tokenizer));
            }
        } else if (rec.kind == "summ") {
            if (rec.root) {
                out.push_back(assemble_summary(doc, rec.response, rec.seed, tokenizer));
            }
        } else {
            throw std::runtime_error("replay: unknown record kind '" + rec.kind + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic SFT mixing

void SftPool::add(SftExample&& ex) {
    validate_sft(ex);
    total_tokens += ex.tokens.size();
    examples.push_back(std::make_shared<const SftExample>(std::move(ex)));
}

double SftPool::mean_length() const {
    if (examples.empty()) {
        return 0.0;
    }
    return static_cast<double>(total_tokens) / static_cast<double>(examples.size());
}

std::vector<std::string> validate_synth_spec(const SynthMixSpec& spec, const SftPoolMap& pools) {
    std::vector<std::string> violations;
    if (std::fabs(spec.qa + spec.rag + spec.summ - 1.0) > 1e-9) {
        violations.push_back("qa + rag + summ fractions sum to " +
                             std::to_string(spec.qa + spec.rag + spec.summ));
    }
    if (spec.synthetic_ratio < 0.0 || spec.synthetic_ratio > 1.0) {
        violations.push_back("synthetic ratio outside [0,1]");
    }
    auto need_pool = [&](const std::string& name, double weight) {
        if (weight <= 0.0) {
            return;
        }
        auto it = pools.find(name);
        if (it == pools.end()) {
            violations.push_back("pool not found: '" + name + "'");
        } else if (it->second->empty()) {
            violations.push_back("pool '" + name + "' is empty");
        }
    };
    need_pool("qa", spec.synthetic_ratio * spec.qa);
    need_pool("rag", spec.synthetic_ratio * spec.rag);
    need_pool("summ", spec.synthetic_ratio * spec.summ);
    need_pool("short", 1.0 - spec.synthetic_ratio);
    return violations;
}

SynthMixStats mix_synth(const SynthMixSpec& spec, const SftPoolMap& pools,
                        std::uint64_t token_budget, const SftMixSink& sink) {
    auto violations = validate_synth_spec(spec, pools);
    if (!violations.empty()) {
        throw std::runtime_error("invalid synthetic mix spec: " + violations.front());
    }

    struct Entry {
        std::string name;
        std::shared_ptr<const SftPool> pool;
        double draw_prob = 0.0;
        std::vector<std::uint32_t> order;
        std::size_t cursor = 0;
        std::uint64_t epoch = 0;
    };
    auto make_entry = [&](const std::string& name, double weight) -> std::optional<Entry> {
        if (weight <= 0.0) {
            return std::nullopt;
        }
        Entry e;
        e.name = name;
        e.pool = pools.at(name);
        e.draw_prob = weight / e.pool->mean_length();
        return e;
    };
    std::vector<Entry> entries;
    for (auto& maybe : {make_entry("qa", spec.synthetic_ratio * spec.qa),
                        make_entry("rag", spec.synthetic_ratio * spec.rag),
                        make_entry("summ", spec.synthetic_ratio * spec.summ),
                        make_entry("short", 1.0 - spec.synthetic_ratio)}) {
        if (maybe) {
            entries.push_back(*maybe);
        }
    }
    if (entries.empty()) {
        throw std::runtime_error("synthetic mix has no sampleable pools");
    }
    double total_mass = 0.0;
    for (const auto& e : entries) {
        total_mass += e.draw_prob;
    }

    auto reshuffle = [&](Entry& e) {
        e.order.resize(e.pool->examples.size());
        for (std::uint32_t i = 0; i < e.order.size(); ++i) {
            e.order[i] = i;
        }
        Rng rng(derive_seed(derive_seed(spec.seed, e.name), e.epoch));
        rng.shuffle(e.order);
        e.cursor = 0;
    };
    for (auto& e : entries) {
        reshuffle(e);
    }

    Rng rng(derive_seed(spec.seed, "synth-mix"));
    SynthMixStats stats;
    while (stats.tokens_emitted < token_budget) {
        double u = rng.next_double() * total_mass;
        Entry* chosen = &entries.back();
        for (auto& e : entries) {
            if (u < e.draw_prob) {
                chosen = &e;
                break;
            }
            u -= e.draw_prob;
        }
        if (chosen->cursor == chosen->order.size()) {
            chosen->epoch += 1;
            stats.epochs_wrapped += 1;
            reshuffle(*chosen);
        }
        const auto& ex = chosen->pool->examples[chosen->order[chosen->cursor++]];
        stats.examples_emitted += 1;
        stats.tokens_emitted += ex->tokens.size();
        stats.tokens_by_pool[chosen->name] += ex->tokens.size();
        sink(ex);
    }
    return stats;
}

}  // namespace lcdt
