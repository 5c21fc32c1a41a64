// Command-line driver for the pipeline: one subcommand per stage plus run-all.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uasr/pipeline/commands.hpp"
#include "uasr/pipeline/config.hpp"

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string anchors;
    std::vector<std::string> overrides;
    bool quiet = false;
};

uasr::PipelineConfig resolve(const Options& o) {
    uasr::PipelineConfig cfg;
    std::map<std::string, std::string> values;
    if (!o.config_path.empty()) {
        try {
            values = uasr::parse_ini(uasr::read_file(o.config_path));
        } catch (const uasr::ParseError& e) {
            throw uasr::ConfigError(o.config_path + ": " + e.what());
        }
    }
    for (const auto& s : o.overrides) {
        auto [k, v] = uasr::parse_override(s);
        values[k] = v;
    }
    if (o.seed) values["seed"] = std::to_string(*o.seed);
    if (!o.out_dir.empty()) values["io.out_dir"] = o.out_dir;
    if (!o.anchors.empty()) values["io.anchors"] = o.anchors;
    cfg.apply(values);
    cfg.derive_seeds();
    try {
        cfg.validate();
    } catch (const uasr::DataError& e) {
        throw uasr::ConfigError(e.what());
    }
    return cfg;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const uasr::DivergenceError*>(&e)) return 3;
    if (dynamic_cast<const uasr::DataError*>(&e) || dynamic_cast<const uasr::ShapeError*>(&e) ||
        dynamic_cast<const uasr::UndefinedCorrelationError*>(&e))
        return 2;
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised speech-to-text embedding alignment pipeline"};
    app.require_subcommand(1);
    Options opts;

    using Command = void (*)(const uasr::PipelineConfig&, std::ostream&);
    const std::vector<std::tuple<std::string, std::string, Command>> commands = {
        {"gen-data", "generate the synthetic segment corpus and transcripts", uasr::cmd_gen_data},
        {"train-stage1", "train the disentangling autoencoder (phonetic/speaker encoders)", uasr::cmd_train_stage1},
        {"train-semantic", "train audio semantic embeddings on stage-1 phonetic vectors", uasr::cmd_train_semantic},
        {"train-text", "train one-hot skip-gram text embeddings", uasr::cmd_train_text},
        {"align", "learn the audio/text affine maps with mini-batch cycle ICP", uasr::cmd_align},
        {"evaluate", "write the Spearman and top-K report", uasr::cmd_evaluate},
        {"recognize", "map every audio word to its nearest transformed text word", uasr::cmd_recognize},
        {"run-all", "run every stage in order", uasr::cmd_run_all},
    };
    Command selected = nullptr;
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config_path, "INI file with namespaced keys (stage1.epochs = 30)")->check(CLI::ExistingFile);
        sub->add_option("--seed", opts.seed, "root seed; stage seeds derive from it unless set explicitly");
        sub->add_option("--out-dir", opts.out_dir, "directory for every artifact");
        sub->add_option("--anchors", opts.anchors, "TSV of (audio token, text token) anchors for semi-supervised alignment");
        sub->add_option("--set", opts.overrides, "override one key, e.g. --set align.lambda=0.2 (repeatable)");
        sub->add_flag("-q,--quiet", opts.quiet, "suppress progress output");
        const Command f = fn;
        sub->callback([&selected, f] { selected = f; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const uasr::PipelineConfig cfg = resolve(opts);
        std::ostream null_stream(nullptr);
        selected(cfg, opts.quiet ? null_stream : std::cerr);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}
