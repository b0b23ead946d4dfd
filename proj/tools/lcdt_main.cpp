// lcdt: long-context training-data toolkit. One binary, subcommand per
// pipeline stage; every run writes a manifest with input/output digests and
// counters beside its outputs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcdt/corpus.hpp"
#include "lcdt/digest.hpp"
#include "lcdt/evalgen.hpp"
#include "lcdt/mixture.hpp"
#include "lcdt/packing.hpp"
#include "lcdt/rng.hpp"
#include "lcdt/schedule.hpp"
#include "lcdt/shard_io.hpp"
#include "lcdt/synthgen.hpp"
#include "lcdt/tokenizer.hpp"
#include "lcdt/toml.hpp"
#include "lcdt/trainmath.hpp"

namespace fs = std::filesystem;
using namespace lcdt;

namespace {

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_run_manifest(RunManifest manifest, const std::string& beside_output,
                        const Stopwatch& watch) {
    manifest.wall_time_seconds = watch.seconds();
    manifest.write(beside_output + ".run.json");
}

std::vector<TokenCount> parse_thresholds(const std::string& csv) {
    std::vector<TokenCount> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(std::stoull(item));
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& input, const std::string& domain, const std::string& out_path,
               bool concat_repos, std::uint32_t separator_id) {
    Stopwatch watch;
    std::ifstream file;
    std::istream* in = &std::cin;
    if (input != "-") {
        file.open(input);
        if (!file) {
            std::cerr << "cannot open input: " << input << "\n";
            return 1;
        }
        in = &file;
    }

    WhitespaceTokenizer tokenizer;
    DocumentShardWriter writer(out_path);

    IngestReport report;
    if (!concat_repos) {
        report = ingest(*in, domain, tokenizer, [&](Document&& doc) { writer.add(doc); });
    } else {
        // Group files by repo_key (first-appearance order); keyless records
        // pass through unchanged.
        std::vector<std::string> repo_order;
        std::map<std::string, std::vector<Document>> repos;
        std::vector<Document> loose;
        report = ingest(*in, domain, tokenizer, [&](Document&& doc) {
            if (doc.repo_key.empty()) {
                loose.push_back(std::move(doc));
                return;
            }
            auto [it, inserted] = repos.try_emplace(doc.repo_key);
            if (inserted) {
                repo_order.push_back(doc.repo_key);
            }
            it->second.push_back(std::move(doc));
        });
        for (const auto& key : repo_order) {
            writer.add(concat_repo(repos.at(key), separator_id));
        }
        for (const auto& doc : loose) {
            writer.add(doc);
        }
    }

    for (const auto& err : report.errors) {
        std::cerr << "line " << err.line << ": " << err.message << "\n";
    }
    if (tokenizer.vocab_size() > 0) {
        // Text records were tokenized on the fly; keep the vocabulary beside
        // the shard so downstream stages (synthgen) can decode again.
        tokenizer.save_vocab(out_path + ".vocab");
    }
    ShardSummary summary = writer.close({{"run_manifest", out_path + ".run.json"}});
    std::cout << "documents: " << summary.count << "\n"
              << "tokens: " << summary.tokens << "\n"
              << "dropped empty: " << report.dropped_empty << "\n"
              << "record errors: " << report.errors.size() << "\n"
              << "digest: " << summary.digest << "\n";

    RunManifest manifest;
    manifest.command = "ingest";
    if (input != "-") {
        manifest.inputs.emplace_back(input, digest_file(input));
    }
    manifest.outputs.emplace_back(out_path, summary.digest);
    manifest.counters = {{"documents", summary.count},
                         {"tokens", summary.tokens},
                         {"dropped_empty", report.dropped_empty},
                         {"record_errors", report.errors.size()}};
    write_run_manifest(std::move(manifest), out_path, watch);
    return 0;
}

int cmd_census(const std::vector<std::string>& inputs, const std::string& thresholds_csv,
               TokenCount long_threshold, const std::string& out_path) {
    LengthCensus total;
    total.long_threshold = long_threshold;
    total.thresholds = parse_thresholds(thresholds_csv);
    for (const auto& path : inputs) {
        read_document_shard(path, [&](Document&& doc) { total.add(doc); });
    }

    nlohmann::json j;
    j["long_threshold"] = total.long_threshold;
    j["thresholds"] = total.thresholds;
    std::printf("%-16s %14s %14s %10s   fractions over thresholds\n", "domain", "tokens",
                "long_tokens", "docs");
    for (const auto& [name, d] : total.domains) {
        std::printf("%-16s %14llu %14llu %10llu  ", name.c_str(),
                    static_cast<unsigned long long>(d.total_tokens),
                    static_cast<unsigned long long>(d.long_tokens),
                    static_cast<unsigned long long>(d.documents));
        nlohmann::json dj;
        dj["total_tokens"] = d.total_tokens;
        dj["long_tokens"] = d.long_tokens;
        dj["documents"] = d.documents;
        dj["long_documents"] = d.long_documents;
        dj["fraction_over"] = total.fractions_over(name);
        j["domains"][name] = dj;
        for (double f : total.fractions_over(name)) {
            std::printf(" %.4f", f);
        }
        std::printf("\n");
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_pack(const std::string& mode, const std::string& input, const std::string& out_path,
             std::uint64_t length, bool carry, std::uint64_t seed,
             std::int64_t doc_separator) {
    Stopwatch watch;
    RunManifest manifest;
    manifest.command = "pack";
    manifest.seed = seed;
    nlohmann::json counters;

    if (mode == "short" || mode == "long") {
        std::vector<Document> docs = load_document_shard(input);
        manifest.inputs.emplace_back(input, digest_file(input));
        // Seeded shuffle of manifest order; the seed lands in the manifest so
        // the exact stream order is reproducible.
        Rng rng(derive_seed(seed, "pack-order"));
        rng.shuffle(docs);

        PackedShardWriter writer(out_path, length);
        PackStats stats;
        if (mode == "short") {
            ShortPacker packer(length, carry, [&](PackedSequence&& seq) { writer.add(seq); });
            if (doc_separator >= 0) {
                packer.set_separator(static_cast<TokenId>(doc_separator));
            }
            for (const auto& doc : docs) {
                packer.push(doc);
            }
            stats = packer.finish();
        } else {
            LongFilter filter(length, [&](PackedSequence&& seq) { writer.add(seq); });
            for (const auto& doc : docs) {
                filter.push(doc);
            }
            stats = filter.stats();
        }
        ShardSummary summary = writer.close(
            {{"seed", seed}, {"mode", mode}, {"run_manifest", out_path + ".run.json"}});
        counters = {{"sequences", stats.sequences_emitted},
                    {"tokens_packed", stats.tokens_emitted},
                    {"tokens_discarded", stats.tokens_discarded},
                    {"tokens_carried", stats.tokens_carried},
                    {"tokens_separator", stats.tokens_separator},
                    {"documents_in", stats.documents_in},
                    {"documents_filtered", stats.documents_filtered}};
        manifest.outputs.emplace_back(out_path, summary.digest);
        std::cout << "sequences: " << stats.sequences_emitted
                  << "  tokens: " << stats.tokens_emitted
                  << "  discarded: " << stats.tokens_discarded
                  << "  filtered docs: " << stats.documents_filtered << "\n";
    } else if (mode == "sft") {
        std::ifstream in(input);
        if (!in) {
            std::cerr << "cannot open input: " << input << "\n";
            return 1;
        }
        manifest.inputs.emplace_back(input, digest_file(input));
        WhitespaceTokenizer tokenizer;
        SftShardWriter writer(out_path, length);
        SftPacker packer(length, [&](SftExample&& ex) { writer.add(ex); });
        std::string line;
        std::uint64_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) {
                continue;
            }
            nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
            if (rec.is_discarded()) {
                std::cerr << "line " << line_no << ": not valid JSON\n";
                continue;
            }
            Conversation conv;
            conv.id = rec.value("id", "line-" + std::to_string(line_no));
            for (const auto& turn : rec.value("turns", nlohmann::json::array())) {
                ChatTurn t;
                t.role = turn.value("role", "");
                if (turn.contains("tokens")) {
                    for (const auto& tok : turn["tokens"]) {
                        t.tokens.push_back(tok.get<TokenId>());
                    }
                } else {
                    t.tokens = tokenizer.encode(turn.value("text", ""));
                }
                conv.turns.push_back(std::move(t));
            }
            packer.push(conv);
        }
        PackStats stats = packer.finish();
        for (const auto& err : packer.errors()) {
            std::cerr << err << "\n";
        }
        ShardSummary summary = writer.close(
            {{"seed", seed}, {"mode", mode}, {"run_manifest", out_path + ".run.json"}});
        counters = {{"examples", stats.sequences_emitted},
                    {"tokens_packed", stats.tokens_emitted},
                    {"tokens_discarded", stats.tokens_discarded},
                    {"rejected_conversations", stats.rejected_records}};
        manifest.outputs.emplace_back(out_path, summary.digest);
        std::cout << "examples: " << stats.sequences_emitted
                  << "  tokens: " << stats.tokens_emitted
                  << "  rejected: " << stats.rejected_records << "\n";
    } else {
        std::cerr << "unknown mode: " << mode << "\n";
        return 2;
    }

    manifest.counters = counters;
    write_run_manifest(std::move(manifest), out_path, watch);
    return 0;
}

int cmd_mix(const std::string& spec_path, std::uint64_t budget, std::uint64_t seed,
            const std::string& out_prefix, const std::string& pools_dir, bool dedup,
            bool fatal_exhaustion) {
    Stopwatch watch;
    MixtureConfig config = load_mixture_config(spec_path);
    config.spec.seed = seed;
    if (budget > 0) {
        config.curriculum.token_budget = budget;
    }

    RunManifest manifest;
    manifest.command = "mix";
    manifest.seed = seed;
    manifest.config_digest = digest_file(spec_path);
    manifest.inputs.emplace_back(spec_path, manifest.config_digest);

    // Resolve pool shard paths and load them.
    std::map<std::string, std::shared_ptr<SequencePool>> mutable_pools;
    for (const auto& d : config.spec.domains) {
        if (mutable_pools.count(d.pool)) {
            continue;
        }
        auto hint = config.pool_paths.find(d.pool);
        fs::path shard_path = hint != config.pool_paths.end() ? fs::path(hint->second)
                                                              : fs::path(d.pool + ".packs");
        if (shard_path.is_relative() && !pools_dir.empty()) {
            shard_path = fs::path(pools_dir) / shard_path.filename();
        }
        if (!fs::exists(shard_path)) {
            std::cerr << "pool not found: '" << d.pool << "' (no shard at " << shard_path
                      << ")\n";
            return 1;
        }
        auto pool = std::make_shared<SequencePool>();
        pool->name = d.pool;
        std::uint64_t pack_length = 0;
        read_packed_shard(shard_path.string(), pack_length,
                          [&](PackedSequence&& s) { pool->add(std::move(s)); });
        manifest.inputs.emplace_back(shard_path.string(), digest_file(shard_path.string()));
        mutable_pools.emplace(d.pool, std::move(pool));
    }

    // 512K/64K pools of the same domain must be disjoint by origin.
    nlohmann::json dedup_report = nlohmann::json::array();
    if (dedup) {
        for (const auto& a : config.spec.domains) {
            if (!a.is_long) {
                continue;
            }
            for (const auto& b : config.spec.domains) {
                if (a.name == b.name && a.pack_length < b.pack_length) {
                    DedupReport r =
                        dedup_pools(*mutable_pools.at(a.pool), *mutable_pools.at(b.pool));
                    if (r.removed_sequences > 0) {
                        dedup_report.push_back({{"domain", a.name},
                                                {"removed_from", a.pool},
                                                {"sequences", r.removed_sequences},
                                                {"origins", r.overlapping_origins}});
                    }
                }
            }
        }
    }

    PoolMap pools;
    for (auto& [name, pool] : mutable_pools) {
        pools.emplace(name, pool);
    }

    auto violations = validate_spec(config.spec, config.curriculum, pools, true);
    if (!violations.empty()) {
        for (const auto& v : violations) {
            std::cerr << v << "\n";
        }
        return 1;
    }

    // One output shard per pack-length class.
    std::map<std::uint64_t, std::unique_ptr<PackedShardWriter>> writers;
    auto writer_for = [&](std::uint64_t len) -> PackedShardWriter& {
        auto it = writers.find(len);
        if (it == writers.end()) {
            std::string path = out_prefix + "_" + std::to_string(len) + ".packs";
            it = writers.emplace(len, std::make_unique<PackedShardWriter>(path, len)).first;
        }
        return *it->second;
    };

    MixStats stats = sample_stream(
        config.spec, config.curriculum, pools, config.curriculum.token_budget,
        [&](const std::shared_ptr<const PackedSequence>& seq) {
            writer_for(seq->length()).add(*seq);
        },
        fatal_exhaustion ? ExhaustionPolicy::kFatal : ExhaustionPolicy::kWrapAround);

    nlohmann::json counters;
    counters["sequences"] = stats.sequences_emitted;
    counters["tokens"] = stats.tokens_emitted;
    counters["epochs_wrapped"] = stats.epochs_wrapped;
    counters["tokens_by_domain"] = stats.tokens_by_domain;
    counters["dedup"] = dedup_report;

    std::cout << "emitted " << stats.sequences_emitted << " sequences, " << stats.tokens_emitted
              << " tokens\n";
    for (const auto& [name, tokens] : stats.tokens_by_domain) {
        std::cout << "  " << name << ": " << tokens << " ("
                  << 100.0 * static_cast<double>(tokens) /
                         static_cast<double>(stats.tokens_emitted)
                  << "%)\n";
    }

    for (auto& [len, writer] : writers) {
        ShardSummary summary = writer->close({{"seed", seed},
                                              {"spec", spec_path},
                                              {"run_manifest", out_prefix + ".run.json"}});
        manifest.outputs.emplace_back(summary.path, summary.digest);
    }
    manifest.counters = counters;
    write_run_manifest(std::move(manifest), out_prefix, watch);
    return 0;
}

int cmd_plan(const std::string& input, std::uint32_t devices, std::uint32_t accum, bool compare,
             double alpha, std::uint64_t stage_budget, const std::string& report_path) {
    CostModel model;
    model.linear_coefficient = alpha;
    std::vector<double> costs;
    std::uint64_t pack_length = 0;
    std::uint64_t tokens = 0;
    read_packed_shard(input, pack_length, [&](PackedSequence&& seq) {
        costs.push_back(model.cost(seq));
        tokens += seq.length();
    });
    if (costs.empty()) {
        std::cerr << "no sequences in " << input << "\n";
        return 1;
    }
    if (!compare) {
        // Manifest-order makespans only; pass --reorder for the comparison.
        const std::size_t per_step = static_cast<std::size_t>(devices) * accum;
        double total = 0.0;
        std::size_t steps = 0;
        for (std::size_t s = 0; s + per_step <= costs.size(); s += per_step) {
            std::vector<double> step_costs(costs.begin() + static_cast<std::ptrdiff_t>(s),
                                           costs.begin() +
                                               static_cast<std::ptrdiff_t>(s + per_step));
            total += makespan(manifest_plan(step_costs, devices, accum));
            ++steps;
        }
        std::cout << "steps: " << steps << "\n"
                  << "makespan manifest order: " << total << "\n";
        return 0;
    }
    ThroughputReport report = throughput_report(costs, devices, accum, pack_length);
    std::cout << report.to_text(stage_budget);
    if (!report_path.empty()) {
        std::ofstream text(report_path + ".txt", std::ios::binary | std::ios::trunc);
        text << report.to_text(stage_budget);
        std::ofstream csv(report_path + ".csv", std::ios::binary | std::ios::trunc);
        csv << report.to_csv();
        std::cout << "report written to " << report_path << ".{txt,csv}\n";
    }
    return 0;
}

int cmd_rope(double orig_base, std::uint64_t orig_len, std::uint64_t target_len,
             std::uint32_t head_dim, double factor) {
    RopeConfig cfg;
    cfg.original_base = orig_base;
    cfg.original_context = orig_len;
    cfg.target_context = target_len;
    cfg.head_dim = head_dim;
    const double suggested = suggested_base(cfg) * factor;
    std::printf("suggested base: %.3g\n", suggested);
    std::printf("recipe base (stage 1, 64K): %.3g\n", recipe_base(1));
    std::printf("recipe base (stage 2, 512K): %.3g\n", recipe_base(2));
    return 0;
}

int cmd_lossagg() {
    // Shard records from stdin: either "loss_sum token_count" pairs or JSON
    // objects {"loss_sum": ..., "token_count": ...}, one per line.
    std::vector<LossShard> shards;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) {
            continue;
        }
        LossShard shard;
        if (line.front() == '{') {
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                std::cerr << "skipping malformed record: " << line << "\n";
                continue;
            }
            shard.loss_sum = j.value("loss_sum", 0.0);
            shard.token_count = j.value("token_count", std::uint64_t{0});
        } else {
            std::istringstream ss(line);
            if (!(ss >> shard.loss_sum >> shard.token_count)) {
                std::cerr << "skipping malformed record: " << line << "\n";
                continue;
            }
        }
        shards.push_back(shard);
    }
    if (shards.empty()) {
        std::cerr << "no shard records on stdin\n";
        return 1;
    }
    std::printf("token-averaged loss: %.10g\n", token_avg(shards));
    return 0;
}

int cmd_synthgen(const std::string& kind, const std::string& input, const std::string& out_path,
                 std::uint64_t seed, std::uint64_t count, const std::string& endpoint,
                 bool use_stub, const std::string& log_path, bool replay_mode,
                 const std::string& spec_path, std::uint64_t budget, const SynthConfig& config) {
    Stopwatch watch;

    if (kind == "mix") {
        if (spec_path.empty()) {
            std::cerr << "--spec is required for kind=mix\n";
            return 1;
        }
        nlohmann::json spec_json = parse_toml_file(spec_path);
        SynthMixSpec spec;
        spec.qa = spec_json.value("qa", 0.4);
        spec.rag = spec_json.value("rag", 0.3);
        spec.summ = spec_json.value("summ", 0.3);
        spec.synthetic_ratio = spec_json.value("synthetic_ratio", 1.0);
        spec.seed = seed;

        SftPoolMap pools;
        auto load_pool = [&](const std::string& name, const char* key) {
            if (!spec_json.contains(key)) {
                return;
            }
            auto pool = std::make_shared<SftPool>();
            pool->name = name;
            SftShard shard = load_sft_shard(spec_json[key].get<std::string>());
            for (auto& ex : shard.examples) {
                pool->add(std::move(ex));
            }
            pools.emplace(name, std::move(pool));
        };
        load_pool("qa", "qa_pool");
        load_pool("rag", "rag_pool");
        load_pool("summ", "summ_pool");
        load_pool("short", "short_pool");

        auto violations = validate_synth_spec(spec, pools);
        if (!violations.empty()) {
            for (const auto& v : violations) {
                std::cerr << v << "\n";
            }
            return 1;
        }
        SftShardWriter writer(out_path, 0);
        SynthMixStats stats = mix_synth(spec, pools, budget, [&](const auto& ex) {
            writer.add(*ex);
        });
        ShardSummary summary =
            writer.close({{"seed", seed}, {"run_manifest", out_path + ".run.json"}});
        std::cout << "emitted " << stats.examples_emitted << " examples, "
                  << stats.tokens_emitted << " tokens\n";
        for (const auto& [name, tokens] : stats.tokens_by_pool) {
            std::cout << "  " << name << ": " << tokens << " ("
                      << 100.0 * static_cast<double>(tokens) /
                             static_cast<double>(stats.tokens_emitted)
                      << "%)\n";
        }
        RunManifest manifest;
        manifest.command = "synthgen-mix";
        manifest.seed = seed;
        manifest.config_digest = digest_file(spec_path);
        manifest.outputs.emplace_back(out_path, summary.digest);
        manifest.counters = {{"examples", stats.examples_emitted},
                             {"tokens", stats.tokens_emitted}};
        write_run_manifest(std::move(manifest), out_path, watch);
        return 0;
    }

    // qa | rag | summ generation over a document shard
    std::map<std::string, Document> corpus;
    std::vector<std::string> doc_order;
    WhitespaceTokenizer tokenizer;
    if (fs::exists(input + ".vocab")) {
        tokenizer.load_vocab(input + ".vocab");
    } else {
        std::cerr << "no vocabulary sidecar at " << input
                  << ".vocab; generation prompts need text-ingested documents\n";
        return 1;
    }
    read_document_shard(input, [&](Document&& doc) {
        doc_order.push_back(doc.id);
        corpus.emplace(doc.id, std::move(doc));
    });
    if (corpus.empty()) {
        std::cerr << "no documents in " << input << "\n";
        return 1;
    }

    if (replay_mode) {
        if (log_path.empty()) {
            std::cerr << "--log is required for --replay\n";
            return 1;
        }
        std::ifstream log_in(log_path);
        if (!log_in) {
            std::cerr << "cannot open log: " << log_path << "\n";
            return 1;
        }
        std::vector<GenRecord> records;
        std::string line;
        while (std::getline(log_in, line)) {
            if (!line.empty()) {
                records.push_back(GenRecord::from_json(line));
            }
        }
        std::vector<SftExample> examples = replay_log(records, corpus, config, tokenizer);
        SftShardWriter writer(out_path, 0);
        for (const auto& ex : examples) {
            writer.add(ex);
        }
        ShardSummary summary = writer.close({{"seed", seed}, {"replayed_from", log_path}});
        std::cout << "replayed " << examples.size() << " examples from " << records.size()
                  << " log records\n";
        std::cout << "digest: " << summary.digest << "\n";
        return 0;
    }

    std::unique_ptr<GenerationClient> client;
    if (use_stub) {
        client = std::make_unique<StubGenerationClient>(seed);
    } else if (!endpoint.empty()) {
        HttpGenerationClient::Options options;
        options.base_url = endpoint;
        client = std::make_unique<HttpGenerationClient>(std::move(options));
    } else {
        std::cerr << "either --endpoint or --stub is required\n";
        return 1;
    }

    std::ofstream log_out;
    if (!log_path.empty()) {
        log_out.open(log_path, std::ios::binary | std::ios::app);
        if (!log_out) {
            std::cerr << "cannot open log for append: " << log_path << "\n";
            return 1;
        }
    }
    SynthGenerator generator(config, tokenizer, *client, [&](const GenRecord& rec) {
        if (log_out.is_open()) {
            log_out << rec.to_json() << "\n";
        }
    });

    SftShardWriter writer(out_path, 0);
    std::uint64_t made = 0;
    std::uint64_t skipped = 0;
    for (std::uint64_t i = 0; made < count; ++i) {
        const Document& doc = corpus.at(doc_order[i % doc_order.size()]);
        const std::uint64_t example_seed = derive_seed(seed, i);
        SynthOutcome outcome;
        if (kind == "qa") {
            outcome = generator.generate_qa(doc, example_seed);
        } else if (kind == "rag") {
            outcome = generator.generate_rag(doc, example_seed);
        } else if (kind == "summ") {
            outcome = generator.generate_summary(doc, example_seed);
        } else {
            std::cerr << "unknown kind: " << kind << "\n";
            return 2;
        }
        if (outcome.example) {
            writer.add(*outcome.example);
            ++made;
        } else {
            std::cerr << "skip doc '" << doc.id << "': " << outcome.skip_reason << "\n";
            if (++skipped > count * 10 + 100) {
                std::cerr << "too many skips, giving up\n";
                return 1;
            }
        }
    }
    ShardSummary summary = writer.close(
        {{"seed", seed}, {"kind", kind}, {"run_manifest", out_path + ".run.json"}});
    std::cout << "generated " << made << " examples (skipped " << skipped << ")\n"
              << "digest: " << summary.digest << "\n";

    RunManifest manifest;
    manifest.command = "synthgen-" + kind;
    manifest.seed = seed;
    manifest.inputs.emplace_back(input, digest_file(input));
    manifest.outputs.emplace_back(out_path, summary.digest);
    manifest.counters = {{"examples", made}, {"skipped", skipped}};
    write_run_manifest(std::move(manifest), out_path, watch);
    return 0;
}

int cmd_evalgen_kv(std::uint64_t pairs, std::uint64_t seed, std::size_t key_len,
                   std::size_t val_len, std::uint64_t target_tokens,
                   const std::string& out_path) {
    if (target_tokens > 0) {
        WhitespaceTokenizer tokenizer;
        pairs = kv_pairs_for_context(target_tokens, tokenizer, key_len, val_len);
        std::cout << "targeting " << target_tokens << " tokens -> " << pairs << " pairs\n";
    }
    KvTask task = gen_kv(pairs, seed, key_len, val_len);
    nlohmann::ordered_json meta;
    meta["query_key"] = task.query_key;
    meta["gold_value"] = task.gold_value;
    meta["pairs"] = task.pairs.size();
    meta["seed"] = seed;
    if (out_path.empty()) {
        std::cout << task.serialize() << "\n" << meta.dump() << "\n";
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        out << task.serialize() << "\n";
        std::ofstream meta_out(out_path + ".meta.json", std::ios::binary | std::ios::trunc);
        meta_out << meta.dump(2) << "\n";
        std::cout << "kv task written to " << out_path << " (" << task.pairs.size()
                  << " pairs)\n";
    }
    return 0;
}

int cmd_evalgen_icl(const std::string& dataset_path, std::size_t k, std::uint64_t seed,
                    std::int64_t query_index, const std::string& out_path) {
    std::ifstream in(dataset_path);
    if (!in) {
        std::cerr << "cannot open dataset: " << dataset_path << "\n";
        return 1;
    }
    std::vector<LabeledExample> dataset;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        nlohmann::json j = nlohmann::json::parse(line);
        dataset.push_back({j.at("input").get<std::string>(), j.at("class").get<std::string>()});
    }
    if (dataset.empty()) {
        std::cerr << "dataset is empty: " << dataset_path << "\n";
        return 1;
    }
    const std::size_t q = query_index < 0 ? dataset.size() - 1
                                          : static_cast<std::size_t>(query_index);
    IclTask task = gen_icl(dataset, k, seed, q);
    if (out_path.empty()) {
        std::cout << task.serialize();
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        out << task.serialize();
        std::cout << "icl task written to " << out_path << " (" << task.demos.size()
                  << " demos, " << task.classes.size() << " classes)\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"long-context training-data toolkit"};
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "tokenized corpus -> document shard");
    std::string in_input, in_domain, in_out;
    bool in_concat = false;
    std::uint32_t in_sep = 0;
    ingest_cmd->add_option("--input", in_input, "JSONL records, or - for stdin")->required();
    ingest_cmd->add_option("--domain", in_domain, "domain label for all records");
    ingest_cmd->add_option("--out", in_out, "output document shard")->required();
    ingest_cmd->add_flag("--concat-repos", in_concat,
                         "join files sharing repo_key into one document");
    ingest_cmd->add_option("--separator-id", in_sep, "separator token id (default 0)");

    // census
    auto* census_cmd = app.add_subcommand("census", "per-domain length statistics");
    std::vector<std::string> ce_inputs;
    std::string ce_thresholds = "4096,8192,16384,32768";
    std::string ce_out;
    std::uint64_t ce_long = 65536;
    census_cmd->add_option("--input", ce_inputs, "document shards")->required();
    census_cmd->add_option("--thresholds", ce_thresholds, "csv of doc-length thresholds");
    census_cmd->add_option("--long-threshold", ce_long, "long-token threshold (default 64K)");
    census_cmd->add_option("--out", ce_out, "optional JSON report path");

    // pack
    auto* pack_cmd = app.add_subcommand("pack", "documents -> fixed-length sequences");
    std::string pk_mode = "short", pk_input, pk_out;
    std::uint64_t pk_length = 65536, pk_seed = 0;
    bool pk_no_carry = false;
    pack_cmd->add_option("--mode", pk_mode, "short | long | sft")->required();
    pack_cmd->add_option("--input", pk_input, "document shard (jsonl for sft)")->required();
    pack_cmd->add_option("--out", pk_out, "output shard")->required();
    pack_cmd->add_option("--length", pk_length, "pack length in tokens");
    pack_cmd->add_flag("--no-carry", pk_no_carry, "discard truncated tails (short mode)");
    pack_cmd->add_option("--seed", pk_seed, "shuffle seed")->required();
    std::int64_t pk_separator = -1;
    pack_cmd->add_option("--doc-separator", pk_separator,
                         "insert this token id between documents (short mode; off by default)");

    // mix
    auto* mix_cmd = app.add_subcommand("mix", "sample sequences per mixture spec");
    std::string mx_spec, mx_out, mx_pools;
    std::uint64_t mx_budget = 0, mx_seed = 0;
    bool mx_no_dedup = false, mx_fatal = false;
    mix_cmd->add_option("--spec", mx_spec, "mixture config (TOML)")->required();
    mix_cmd->add_option("--budget-tokens", mx_budget, "override the config token budget");
    mix_cmd->add_option("--seed", mx_seed, "sampling seed")->required();
    mix_cmd->add_option("--out", mx_out, "output shard prefix")->required();
    mix_cmd->add_option("--pools-dir", mx_pools, "directory holding pool shards");
    mix_cmd->add_flag("--no-dedup", mx_no_dedup, "skip 512K/64K origin dedup");
    mix_cmd->add_flag("--fatal-exhaustion", mx_fatal, "fail instead of wrapping pools");

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "minibatch reordering report");
    std::string pl_input, pl_report;
    std::uint32_t pl_devices = 8, pl_accum = 4;
    double pl_alpha = 0.0;
    std::uint64_t pl_budget = 0;
    bool pl_reorder = false;
    plan_cmd->add_option("--input", pl_input, "packed shard")->required();
    plan_cmd->add_option("--devices", pl_devices, "device count");
    plan_cmd->add_option("--accum", pl_accum, "gradient accumulation steps");
    plan_cmd->add_flag("--reorder", pl_reorder, "compare sorted vs manifest-order makespans");
    plan_cmd->add_option("--alpha", pl_alpha, "linear cost term coefficient");
    plan_cmd->add_option("--budget", pl_budget, "stage token budget for progress reporting");
    plan_cmd->add_option("--report", pl_report, "report path prefix (.txt/.csv)");

    // rope
    auto* rope_cmd = app.add_subcommand("rope", "RoPE frequency-base calculator");
    double rp_base = 5e5, rp_factor = 1.0;
    std::uint64_t rp_orig = 8192, rp_target = 65536;
    std::uint32_t rp_dim = 128;
    rope_cmd->add_option("--orig-base", rp_base, "original frequency base");
    rope_cmd->add_option("--orig-len", rp_orig, "original context length");
    rope_cmd->add_option("--target-len", rp_target, "target context length");
    rope_cmd->add_option("--head-dim", rp_dim, "attention head dimension");
    rope_cmd->add_option("--factor", rp_factor, "extra multiplier on the suggestion");

    // lossagg
    app.add_subcommand("lossagg", "token-averaged loss over shard records from stdin");

    // synthgen
    auto* synth_cmd = app.add_subcommand("synthgen", "synthetic SFT example generation");
    std::string sg_kind, sg_input, sg_out, sg_endpoint, sg_log, sg_spec;
    std::uint64_t sg_seed = 0, sg_count = 100, sg_budget = 0;
    bool sg_stub = false, sg_replay = false;
    synth_cmd->add_option("--kind", sg_kind, "qa | rag | summ | mix")->required();
    synth_cmd->add_option("--input", sg_input, "document shard (qa/rag/summ)");
    synth_cmd->add_option("--out", sg_out, "output SFT shard")->required();
    synth_cmd->add_option("--seed", sg_seed, "generation seed")->required();
    synth_cmd->add_option("--count", sg_count, "examples to generate");
    synth_cmd->add_option("--endpoint", sg_endpoint, "generation service base URL");
    synth_cmd->add_flag("--stub", sg_stub, "use the built-in offline stub client");
    synth_cmd->add_option("--log", sg_log, "append-only request log (JSONL)");
    synth_cmd->add_flag("--replay", sg_replay, "rebuild examples from --log, no service");
    synth_cmd->add_option("--spec", sg_spec, "synthetic mix spec (TOML, kind=mix)");
    synth_cmd->add_option("--budget-tokens", sg_budget, "token budget (kind=mix)");
    SynthConfig sg_config;
    synth_cmd->add_option("--chunk-len", sg_config.qa_chunk_len,
                          "QA source chunk length in tokens");
    synth_cmd->add_option("--rag-chunks", sg_config.rag_chunks, "chunks presented per RAG example");
    synth_cmd->add_option("--summary-window", sg_config.summary_window,
                          "leaf window for recursive summarization");
    synth_cmd->add_option("--fan-in", sg_config.summary_fan_in, "summaries merged per reduction");

    // evalgen
    auto* eval_cmd = app.add_subcommand("evalgen", "synthetic evaluation inputs");
    eval_cmd->require_subcommand(1);
    auto* kv_cmd = eval_cmd->add_subcommand("kv", "JSON key-value recall task");
    std::uint64_t kv_pairs = 100, kv_seed = 0, kv_target = 0;
    std::size_t kv_key_len = 32, kv_val_len = 32;
    std::string kv_out;
    kv_cmd->add_option("--pairs", kv_pairs, "number of key-value pairs");
    kv_cmd->add_option("--seed", kv_seed, "generation seed")->required();
    kv_cmd->add_option("--key-len", kv_key_len, "key length in characters");
    kv_cmd->add_option("--val-len", kv_val_len, "value length in characters");
    kv_cmd->add_option("--target-tokens", kv_target, "derive pair count from a context target");
    kv_cmd->add_option("--out", kv_out, "output path (stdout if omitted)");

    auto* icl_cmd = eval_cmd->add_subcommand("icl", "class-balanced ICL task");
    std::string icl_dataset, icl_out;
    std::size_t icl_k = 10;
    std::uint64_t icl_seed = 0;
    std::int64_t icl_query = -1;
    icl_cmd->add_option("--dataset", icl_dataset, "JSONL of {input, class}")->required();
    icl_cmd->add_option("--k", icl_k, "demonstrations per class");
    icl_cmd->add_option("--seed", icl_seed, "sampling seed")->required();
    icl_cmd->add_option("--query-index", icl_query, "held-out query record (default last)");
    icl_cmd->add_option("--out", icl_out, "output path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // usage error
    }

    try {
        if (app.got_subcommand("ingest")) {
            return cmd_ingest(in_input, in_domain, in_out, in_concat, in_sep);
        }
        if (app.got_subcommand("census")) {
            return cmd_census(ce_inputs, ce_thresholds, ce_long, ce_out);
        }
        if (app.got_subcommand("pack")) {
            return cmd_pack(pk_mode, pk_input, pk_out, pk_length, !pk_no_carry, pk_seed,
                            pk_separator);
        }
        if (app.got_subcommand("mix")) {
            return cmd_mix(mx_spec, mx_budget, mx_seed, mx_out, mx_pools, !mx_no_dedup,
                           mx_fatal);
        }
        if (app.got_subcommand("plan")) {
            return cmd_plan(pl_input, pl_devices, pl_accum, pl_reorder, pl_alpha, pl_budget,
                            pl_report);
        }
        if (app.got_subcommand("rope")) {
            return cmd_rope(rp_base, rp_orig, rp_target, rp_dim, rp_factor);
        }
        if (app.got_subcommand("lossagg")) {
            return cmd_lossagg();
        }
        if (app.got_subcommand("synthgen")) {
            return cmd_synthgen(sg_kind, sg_input, sg_out, sg_seed, sg_count, sg_endpoint,
                                sg_stub, sg_log, sg_replay, sg_spec, sg_budget, sg_config);
        }
        if (app.got_subcommand("evalgen")) {
            auto* sub = app.get_subcommand("evalgen");
            if (sub->got_subcommand("kv")) {
                return cmd_evalgen_kv(kv_pairs, kv_seed, kv_key_len, kv_val_len, kv_target,
                                      kv_out);
            }
            return cmd_evalgen_icl(icl_dataset, icl_k, icl_seed, icl_query, icl_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
