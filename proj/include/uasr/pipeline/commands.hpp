#ifndef UASR_PIPELINE_COMMANDS_HPP
#define UASR_PIPELINE_COMMANDS_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "uasr/align/cloud.hpp"
#include "uasr/align/icp.hpp"
#include "uasr/align/io.hpp"
#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"
#include "uasr/data/segments_io.hpp"
#include "uasr/data/synthetic.hpp"
#include "uasr/data/text_io.hpp"
#include "uasr/disentangle/checkpoint.hpp"
#include "uasr/disentangle/train.hpp"
#include "uasr/eval/report.hpp"
#include "uasr/eval/similarity.hpp"
#include "uasr/eval/topk.hpp"
#include "uasr/pipeline/config.hpp"
#include "uasr/semantic/checkpoint.hpp"
#include "uasr/semantic/text_skipgram.hpp"
#include "uasr/semantic/train.hpp"

namespace uasr {

// Artifact names inside the output directory.
namespace artifacts {
inline constexpr const char* config = "config.ini";
inline constexpr const char* segments = "segments.jsonl";
inline constexpr const char* text = "text.txt";
inline constexpr const char* stage1_model = "stage1.ckpt";
inline constexpr const char* stage1_history = "stage1_history.csv";
inline constexpr const char* semantic_model = "semantic.ckpt";
inline constexpr const char* audio_embeddings = "audio_embeddings.txt";
inline constexpr const char* semantic_history = "semantic_history.csv";
inline constexpr const char* text_embeddings = "text_embeddings.txt";
inline constexpr const char* text_history = "text_history.csv";
inline constexpr const char* transform = "transform.txt";
inline constexpr const char* align_history = "align_history.csv";
inline constexpr const char* recognition = "recognition.tsv";
inline constexpr const char* report_stem = "report";  // report.csv and report.txt
} // namespace artifacts

namespace detail {

inline void ensure_out_dir(const PipelineConfig& cfg) {
    const std::filesystem::path dir(cfg.io.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw FileError("cannot create output directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : ""));
    }
    write_file(dir / artifacts::config, format_ini(cfg));
}

inline void require_file(const std::filesystem::path& p, const std::string& producer) {
    if (!std::filesystem::is_regular_file(p)) {
        throw DependencyError("missing upstream artifact '" + p.string() + "' (produced by " + producer + ")");
    }
}

inline void warn(std::ostream& log, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) log << "warning: " << w << "\n";
}

inline std::string semantic_history_csv(const SemanticHistory& h) {
    std::string out = "step,epoch,loss\n";
    for (std::size_t s = 0; s < h.step_loss.size(); ++s)
        out += std::to_string(s + 1) + "," + std::to_string(h.step_epoch[s]) + "," + format_double(h.step_loss[s]) + "\n";
    return out;
}

struct AlignInputs {
    WordEmbeddingTable audio;
    WordEmbeddingTable text;
    ProjectedCloud a;
    ProjectedCloud b;
    AnchorList anchors;
    std::vector<std::string> skipped_anchors;
};

inline AlignInputs load_align_inputs(const PipelineConfig& cfg) {
    const auto audio_path = cfg.out_path(artifacts::audio_embeddings);
    const auto text_path = cfg.out_path(artifacts::text_embeddings);
    require_file(audio_path, "train-semantic");
    require_file(text_path, "train-text");
    AlignInputs in;
    in.audio = load_embedding_table(audio_path);
    in.text = load_embedding_table(text_path);
    in.a = project_cloud(in.audio, cfg.align.k, cfg.align.vocab_cap, cfg.align.normalize);
    in.b = project_cloud(in.text, cfg.align.k, cfg.align.vocab_cap, cfg.align.normalize);
    if (!cfg.io.anchors.empty()) {
        if (!std::filesystem::is_regular_file(cfg.io.anchors)) throw DependencyError("anchor file '" + cfg.io.anchors + "' does not exist");
        in.anchors = resolve_anchors(in.a, in.b, load_token_pairs(cfg.io.anchors), &in.skipped_anchors);
    }
    return in;
}

} // namespace detail

// Writes the synthetic segment file and its transcripts.
inline void cmd_gen_data(const PipelineConfig& cfg, std::ostream& log) {
    detail::ensure_out_dir(cfg);
    const SyntheticCorpus corpus = generate_synthetic(cfg.data);
    save_segments(corpus.manifest, cfg.segments_path());
    save_text(corpus.manifest.transcripts, cfg.text_path());
    log << "gen-data: " << corpus.manifest.segments.size() << " segments in " << corpus.manifest.utterances.size()
        << " utterances -> " << cfg.segments_path().string() << ", " << cfg.text_path().string() << "\n";
}

inline void cmd_train_stage1(const PipelineConfig& cfg, std::ostream& log) {
    detail::require_file(cfg.segments_path(), "gen-data");
    detail::ensure_out_dir(cfg);
    const CorpusManifest m = load_segments(cfg.segments_path());
    std::string history = "epoch,reconstruction,speaker,critic,combined\n";
    const Stage1Result r = train_stage1(m.segments, cfg.stage1, [&](const Stage1Epoch& e) {
        history += std::to_string(e.epoch) + "," + format_double(e.reconstruction) + "," + format_double(e.speaker) + "," +
                   format_double(e.critic) + "," + format_double(e.combined) + "\n";
        log << "train-stage1: epoch " << e.epoch << " reconstruction " << e.reconstruction << " speaker " << e.speaker
            << " critic " << e.critic << "\n";
    });
    detail::warn(log, r.warnings);
    save_stage1(r.model, cfg.out_path(artifacts::stage1_model));
    write_file(cfg.out_path(artifacts::stage1_history), history);
}

inline void cmd_train_semantic(const PipelineConfig& cfg, std::ostream& log) {
    detail::require_file(cfg.segments_path(), "gen-data");
    detail::require_file(cfg.out_path(artifacts::stage1_model), "train-stage1");
    detail::ensure_out_dir(cfg);
    const CorpusManifest m = load_segments(cfg.segments_path());
    const Stage1Model model = load_stage1(cfg.out_path(artifacts::stage1_model));
    const auto codes = encode_corpus(model, m.segments);
    const SemanticResult r = train_semantic(build_sequences(m, codes), cfg.semantic, [&](std::size_t e, double loss) {
        log << "train-semantic: epoch " << e << " loss " << loss << "\n";
    });
    detail::warn(log, r.warnings);
    save_semantic(r.encoders, cfg.out_path(artifacts::semantic_model));
    save_embedding_table(average_by_label(r.embeddings), cfg.out_path(artifacts::audio_embeddings));
    write_file(cfg.out_path(artifacts::semantic_history), detail::semantic_history_csv(r.history));
}

inline void cmd_train_text(const PipelineConfig& cfg, std::ostream& log) {
    detail::require_file(cfg.text_path(), "gen-data");
    detail::ensure_out_dir(cfg);
    const auto sequences = load_text(cfg.text_path());
    const TextSkipgramResult r = train_text_skipgram(sequences, cfg.text, [&](std::size_t e, double loss) {
        log << "train-text: epoch " << e << " loss " << loss << "\n";
    });
    detail::warn(log, r.warnings);
    save_embedding_table(r.table, cfg.out_path(artifacts::text_embeddings));
    write_file(cfg.out_path(artifacts::text_history), detail::semantic_history_csv(r.history));
}

inline void cmd_align(const PipelineConfig& cfg, std::ostream& log) {
    auto in = detail::load_align_inputs(cfg);
    detail::ensure_out_dir(cfg);
    for (const auto& s : in.skipped_anchors) log << "warning: anchor not in both vocabularies: " << s << "\n";
    std::string history = "iteration,loss_before,loss_after,changed\n";
    const AlignResult r = train_align(in.a, in.b, cfg.align, in.anchors, [&](const AlignIteration& it) {
        history += std::to_string(it.iteration) + "," + format_double(it.loss_before) + "," + format_double(it.loss_after) +
                   "," + std::to_string(it.changed) + "\n";
    });
    detail::warn(log, r.warnings);
    const std::size_t iterations = r.history.size();
    log << "align: " << in.anchors.size() << " anchors, " << iterations << " iterations, final loss "
        << (r.history.empty() ? 0.0 : r.history.back().loss_after) << "\n";
    save_transform({r.transforms, cfg.align.lambda, iterations}, cfg.out_path(artifacts::transform));
    write_file(cfg.out_path(artifacts::align_history), history);
}

inline void cmd_recognize(const PipelineConfig& cfg, std::ostream& log) {
    auto in = detail::load_align_inputs(cfg);
    detail::require_file(cfg.out_path(artifacts::transform), "align");
    detail::ensure_out_dir(cfg);
    const TransformFile t = load_transform(cfg.out_path(artifacts::transform));
    const auto result = recognize(in.a, in.b, t.transforms);
    save_token_pairs(result, cfg.out_path(artifacts::recognition));
    std::size_t correct = 0;
    for (const auto& [a, b] : result) correct += a == b;
    log << "recognize: " << result.size() << " audio tokens, " << correct << " mapped to the identically labelled text token\n";
}

inline void cmd_evaluate(const PipelineConfig& cfg, std::ostream& log) {
    auto in = detail::load_align_inputs(cfg);
    detail::require_file(cfg.out_path(artifacts::transform), "align");
    detail::ensure_out_dir(cfg);
    const TransformFile t = load_transform(cfg.out_path(artifacts::transform));

    EvalReport report;
    WordPairSet pairs;
    std::string dataset = cfg.eval.dataset;
    if (!cfg.io.word_pairs.empty()) {
        if (!std::filesystem::is_regular_file(cfg.io.word_pairs)) throw DependencyError("word-pair file '" + cfg.io.word_pairs + "' does not exist");
        pairs = load_word_pairs(cfg.io.word_pairs);
        if (dataset.empty()) dataset = std::filesystem::path(cfg.io.word_pairs).stem().string();
    } else {
        std::vector<std::string> shared;
        for (const auto& tok : in.audio.tokens())
            if (in.text.find(tok)) shared.push_back(tok);
        pairs = all_word_pairs(shared);
        if (dataset.empty()) dataset = "all-pairs";
    }
    const auto corr = pair_similarity_correlation(pairs, in.audio, in.text);
    report.add(CorrelationEntry{cfg.stage1.disentangle ? "SE/SAD" : "SE/SA", dataset, corr.spearman, corr.covered, corr.skipped});

    const auto truth = identity_truth(in.a.labels);
    for (std::size_t k : cfg.eval.topk_values()) {
        if (k > in.b.size()) {
            log << "warning: skipping top-" << k << ": text cloud has " << in.b.size() << " points\n";
            continue;
        }
        const auto r = topk_evaluate(truth, in.a, in.b, t.transforms, k);
        report.add(TopKEntry{k, in.anchors.size(), r.accuracy, r.evaluated});
    }
    emit_report(report, cfg.out_path(artifacts::report_stem));
    log << format_report_table(report);
}

// Runs every stage in order; data generation is skipped when io.segments names an existing corpus.
inline void cmd_run_all(const PipelineConfig& cfg, std::ostream& log) {
    if (cfg.io.segments.empty()) cmd_gen_data(cfg, log);
    cmd_train_stage1(cfg, log);
    cmd_train_semantic(cfg, log);
    cmd_train_text(cfg, log);
    cmd_align(cfg, log);
    cmd_recognize(cfg, log);
    cmd_evaluate(cfg, log);
}

} // namespace uasr

#endif
