#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcdt/packing.hpp"
#include "lcdt/tokenizer.hpp"
#include "lcdt/types.hpp"

namespace lcdt {

// Layout for combining a question prompt, the presented document(s) and a
// generated question into one instruction. {documents} must appear exactly
// once; {prompt} and {question} at most once.
struct PromptTemplate {
    std::string id;
    std::string question_prompt;
    std::string layout;
};

void validate_template(const PromptTemplate& tpl);

/// Built-in question prompts and layouts sampled per example for diversity.
const std::vector<std::string>& default_question_prompts();
const std::vector<std::string>& default_layouts();

struct QaPair {
    std::string question;
    std::string answer;
};

enum class QaRejectReason {
    kMissingQuestion,
    kMissingAnswer,
    kSnippetReference,
    kEmptyAnswer,
};

const char* to_string(QaRejectReason reason);

struct QaParseResult {
    std::optional<QaPair> qa;
    QaRejectReason reason = QaRejectReason::kMissingQuestion;

    bool ok() const { return qa.has_value(); }
};

/// Extracts the Question/Answer fields from a generation response formatted
/// as "Reasoning: ...\nQuestion: ...\nAnswer: ...". Rejects responses missing
/// either field, with an empty answer, or whose question refers to the
/// snippet directly.
QaParseResult parse_qa(const std::string& response);

struct QaRequest {
    std::string prompt;
    std::uint64_t chunk_offset = 0;
    std::uint64_t chunk_len = 0;
};

/// Splices a seeded-random chunk of `chunk_len` tokens into the QA generation
/// prompt (between the start/end snippet markers). Errors if the document is
/// shorter than the chunk.
QaRequest make_qa_request(const Document& doc, std::uint64_t chunk_len, std::uint64_t seed,
                          const Tokenizer& tokenizer);

/// Prompt asking for a summary of `content` (used for every node of a
/// recursive summarization tree).
std::string make_summary_request(const std::string& content);

/// Renders the template around the full document and the QA pair; the answer
/// is the response turn and the only masked-in span.
SftExample assemble_qa(const Document& doc, const QaPair& qa, const PromptTemplate& tpl,
                       Tokenizer& tokenizer);

/// Same, with a seeded-random pick of the built-in prompt/layout pair.
SftExample assemble_qa(const Document& doc, const QaPair& qa, std::uint64_t seed,
                       Tokenizer& tokenizer);

/// Presents `n_chunks` disjoint chunks of the document -- always including
/// the chunk the QA was generated from -- in seeded-shuffled order, to mimic
/// retrieved passages. Errors if the document cannot supply n_chunks disjoint
/// chunks.
SftExample assemble_rag(const Document& doc, const QaPair& qa, std::uint64_t source_offset,
                        std::uint64_t chunk_len, std::size_t n_chunks, std::uint64_t seed,
                        Tokenizer& tokenizer);

/// Instruction presenting the document with a summarize request; the summary
/// is the response turn.
SftExample assemble_summary(const Document& doc, const std::string& summary, std::uint64_t seed,
                            Tokenizer& tokenizer);

struct SummaryNode {
    std::vector<std::size_t> children;      // empty for leaves
    std::uint64_t window_start = 0;         // leaves only
    std::uint64_t window_len = 0;
};

struct SummaryPlan {
    std::vector<SummaryNode> nodes;
    std::size_t root = 0;

    std::size_t request_count() const { return nodes.size(); }
};

/// Tree of summarization requests: leaves cover the document in order in
/// `window`-token pieces; each internal node summarizes the concatenation of
/// up to `fan_in` child summaries; the root yields the final summary.
SummaryPlan recursive_summary_plan(TokenCount doc_length, std::uint64_t window,
                                   std::size_t fan_in);

// ---------------------------------------------------------------------------
// Generation service client

class GenerationClient {
  public:
    virtual ~GenerationClient() = default;
    /// Completion text for `prompt`, or nullopt with `error` set once bounded
    /// retries are exhausted.
    virtual std::optional<std::string> generate(const std::string& prompt,
                                                std::string& error) = 0;
};

// Chat-completions-style HTTP/JSON client. The auth token, if any, comes from
// the LCDT_API_TOKEN environment variable.
class HttpGenerationClient : public GenerationClient {
  public:
    struct Options {
        std::string base_url;   // e.g. http://localhost:8080
        std::string path = "/v1/chat/completions";
        std::string model = "llama-3-8b-instruct";
        double temperature = 0.7;
        int max_attempts = 3;
        int timeout_seconds = 120;
    };

    explicit HttpGenerationClient(Options options);
    std::optional<std::string> generate(const std::string& prompt, std::string& error) override;

  private:
    Options options_;
};

// Deterministic offline stand-in: replies to QA prompts in the expected
// Question/Answer format and to summary prompts with a short summary line,
// keyed by a digest of the prompt.
class StubGenerationClient : public GenerationClient {
  public:
    explicit StubGenerationClient(std::uint64_t seed = 0) : seed_(seed) {}
    std::optional<std::string> generate(const std::string& prompt, std::string& error) override;

  private:
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Request log + generation pipeline

struct GenRecord {
    std::string kind;  // "qa" | "rag" | "summ"
    std::string doc_id;
    std::uint64_t seed = 0;
    std::uint64_t chunk_offset = 0;  // qa/rag source chunk
    std::uint64_t chunk_len = 0;
    std::uint64_t node = 0;          // summarization tree node index
    bool root = true;                // summ: whether this node's response is the final summary
    std::string prompt;
    std::string response;

    std::string to_json() const;
    static GenRecord from_json(const std::string& line);
};

struct SynthConfig {
    std::uint64_t qa_chunk_len = 2048;
    std::size_t rag_chunks = 8;
    std::uint64_t summary_window = 4096;
    std::size_t summary_fan_in = 5;
};

struct SynthOutcome {
    std::optional<SftExample> example;
    std::string skip_reason;  // set when example is empty
};

// Drives generation end to end and logs every request/response pair. Given
// the same corpus, seeds and log, `replay_*` rebuilds byte-identical examples
// without the service.
class SynthGenerator {
  public:
    SynthGenerator(SynthConfig config, Tokenizer& tokenizer, GenerationClient& client,
                   std::function<void(const GenRecord&)> log_sink);

    SynthOutcome generate_qa(const Document& doc, std::uint64_t seed);
    SynthOutcome generate_rag(const Document& doc, std::uint64_t seed);
    SynthOutcome generate_summary(const Document& doc, std::uint64_t seed);

    const SynthConfig& config() const { return config_; }

  private:
    SynthConfig config_;
    Tokenizer& tokenizer_;
    GenerationClient& client_;
    std::function<void(const GenRecord&)> log_sink_;
};

/// Rebuilds SftExamples from a request log, in log order, without contacting
/// any service. `corpus` maps document id to Document.
std::vector<SftExample> replay_log(const std::vector<GenRecord>& records,
                                   const std::map<std::string, Document>& corpus,
                                   const SynthConfig& config, Tokenizer& tokenizer);

// ---------------------------------------------------------------------------
// Synthetic SFT mixing

struct SftPool {
    std::string name;
    std::vector<std::shared_ptr<const SftExample>> examples;
    std::uint64_t total_tokens = 0;

    void add(SftExample&& ex);
    bool empty() const { return examples.empty(); }
    double mean_length() const;
};

using SftPoolMap = std::map<std::string, std::shared_ptr<const SftPool>>;

// Token-based fractions: qa + rag + summ must sum to 1; synthetic_ratio is
// the share of tokens from synthetic pools vs the short-conversation pool.
struct SynthMixSpec {
    double qa = 0.4;
    double rag = 0.3;
    double summ = 0.3;
    double synthetic_ratio = 1.0;
    std::uint64_t seed = 0;
};

std::vector<std::string> validate_synth_spec(const SynthMixSpec& spec, const SftPoolMap& pools);

struct SynthMixStats {
    std::uint64_t examples_emitted = 0;
    std::uint64_t tokens_emitted = 0;
    std::map<std::string, std::uint64_t> tokens_by_pool;
    std::uint64_t epochs_wrapped = 0;
};

using SftMixSink = std::function<void(const std::shared_ptr<const SftExample>&)>;

/// Emits SFT examples until `token_budget` is met; expected token fractions
/// converge to the spec. Pools are named "qa", "rag", "summ" and (when
/// synthetic_ratio < 1) "short".
SynthMixStats mix_synth(const SynthMixSpec& spec, const SftPoolMap& pools,
                        std::uint64_t token_budget, const SftMixSink& sink);

}  // namespace lcdt
