#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "uasr/pipeline/commands.hpp"
#include "uasr/pipeline/config.hpp"

using namespace uasr;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
    const auto dir = fs::path(UASR_TEST_TMP) / "pipeline" / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

const std::map<std::string, std::string> kSmall = {
    {"data.utterances", "30"},      {"data.segments", "0"},         {"data.feature_dim", "6"},
    {"data.vocabulary", "8"},       {"data.speakers", "2"},         {"stage1.epochs", "1"},
    {"stage1.phonetic_dim", "4"},   {"stage1.speaker_dim", "4"},    {"stage1.decoder_hidden", "6"},
    {"stage1.critic_hidden", "4"},  {"stage1.gru_layers", "1"},     {"stage1.critic_steps", "1"},
    {"semantic.epochs", "1"},       {"semantic.min_count", "1"},    {"semantic.embedding_dim", "4"},
    {"semantic.hidden", "6"},       {"text.epochs", "1"},           {"text.min_count", "1"},
    {"text.embedding_dim", "4"},    {"align.k", "4"},               {"align.iterations", "5"},
};

PipelineConfig small_config(const fs::path& out, std::uint64_t seed = 1) {
    PipelineConfig cfg;
    auto values = kSmall;
    values["io.out_dir"] = out.string();
    values["seed"] = std::to_string(seed);
    cfg.apply(values);
    cfg.derive_seeds();
    cfg.validate();
    return cfg;
}

const std::vector<std::string> kArtifacts = {
    artifacts::config,           artifacts::segments,       artifacts::text,
    artifacts::stage1_model,     artifacts::stage1_history, artifacts::semantic_model,
    artifacts::audio_embeddings, artifacts::semantic_history, artifacts::text_embeddings,
    artifacts::text_history,     artifacts::transform,      artifacts::align_history,
    artifacts::recognition,      "report.csv",              "report.txt",
};

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& name : kArtifacts) out[name] = read_file(dir / name);
    return out;
}

void run_all_quiet(const PipelineConfig& cfg) {
    std::ostringstream log;
    cmd_run_all(cfg, log);
}

struct CliResult {
    int code;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
    fs::create_directories(scratch);
    const auto err_path = scratch / "stderr.txt";
    const std::string cmd = std::string("\"") + UASR_CLI_PATH + "\" " + args + " >/dev/null 2>\"" + err_path.string() + "\"";
    const int status = std::system(cmd.c_str());
    CliResult r{-1, ""};
    if (status != -1 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
    if (fs::exists(err_path)) r.err = read_file(err_path);
    return r;
}

std::string small_cli_flags() {
    std::string out;
    for (const auto& [k, v] : kSmall) out += " --set " + k + "=" + v;
    return out;
}

} // namespace

// ---- configuration

TEST(Ini, SectionsPrefixKeysAndCommentsAreSkipped) {
    const auto m = parse_ini("seed = 4\n# note\n; other\n\n[stage1]\nepochs = 3\n[ align ]\n lambda=0.2 \n");
    const std::map<std::string, std::string> expected = {{"seed", "4"}, {"stage1.epochs", "3"}, {"align.lambda", "0.2"}};
    EXPECT_EQ(m, expected);
}

TEST(Ini, MalformedInputIsRejected) {
    try {
        parse_ini("[a]\nx = 1\nx = 2\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_ini("[a\n"), ParseError);
    EXPECT_THROW(parse_ini("novalue\n"), ParseError);
    EXPECT_THROW(parse_ini("= 3\n"), ParseError);
}

TEST(Config, FormatParseApplyRoundTrip) {
    PipelineConfig cfg;
    cfg.apply({{"stage1.epochs", "7"}, {"align.lambda", "0.25"}, {"eval.topk", "1,5"}, {"io.out_dir", "x y"}});
    cfg.derive_seeds();
    PipelineConfig back;
    back.apply(parse_ini(format_ini(cfg)));
    EXPECT_EQ(back.to_map(), cfg.to_map());
    EXPECT_EQ(back.stage1.epochs, 7u);
    EXPECT_DOUBLE_EQ(back.align.lambda, 0.25);
    EXPECT_EQ(back.eval.topk_values(), (std::vector<std::size_t>{1, 5}));
}

TEST(Config, UnknownKeysAndBadValuesAreConfigErrors) {
    PipelineConfig cfg;
    EXPECT_THROW(cfg.apply({{"stage1.epochz", "3"}}), ConfigError);
    EXPECT_THROW(cfg.apply({{"nosection", "3"}}), ConfigError);
    EXPECT_THROW(parse_override("align.lambda"), ConfigError);
    EXPECT_THROW(parse_override("=3"), ConfigError);
    EXPECT_EQ(parse_override(" align.k = 4 "), (std::pair<std::string, std::string>{"align.k", "4"}));
    PipelineConfig bad;
    bad.apply({{"eval.topk", "1,0"}});
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, DerivedSeedsFollowRootUnlessExplicit) {
    PipelineConfig a, b, c;
    a.apply({{"seed", "1"}});
    b.apply({{"seed", "2"}});
    c.apply({{"seed", "2"}, {"align.seed", "77"}});
    a.derive_seeds();
    b.derive_seeds();
    c.derive_seeds();
    EXPECT_NE(a.stage1.seed, b.stage1.seed);
    EXPECT_NE(a.data.seed, b.data.seed);
    EXPECT_NE(a.stage1.seed, a.semantic.seed);
    EXPECT_EQ(c.align.seed, 77u);
    EXPECT_EQ(c.stage1.seed, b.stage1.seed);
    PipelineConfig again;
    again.apply({{"seed", "1"}});
    again.derive_seeds();
    EXPECT_EQ(again.to_map(), a.to_map());
}

TEST(Config, ShippedDefaultFileLoadsAndValidates) {
    PipelineConfig cfg;
    cfg.apply(parse_ini(read_file(fs::path(UASR_SOURCE_DIR) / "configs" / "default.ini")));
    cfg.derive_seeds();
    EXPECT_NO_THROW(cfg.validate());
    PipelineConfig plain;
    plain.derive_seeds();
    EXPECT_EQ(cfg.to_map(), plain.to_map());
}

// ---- in-process pipeline

TEST(Pipeline, RunAllWritesEveryArtifactAndIsReproducible) {
    const auto out = tmp_dir("run_all");
    const auto cfg = small_config(out);
    run_all_quiet(cfg);
    for (const auto& name : kArtifacts) EXPECT_TRUE(fs::is_regular_file(out / name)) << name;
    const auto first = snapshot(out);
    run_all_quiet(cfg);
    EXPECT_EQ(snapshot(out), first);

    const auto other_out = tmp_dir("run_all_seed2");
    run_all_quiet(small_config(other_out, 2));
    const auto other = snapshot(other_out);
    for (const char* name : {artifacts::segments, artifacts::stage1_model, artifacts::transform})
        EXPECT_NE(other.at(name), first.at(name)) << name;
}

TEST(Pipeline, MissingUpstreamArtifactIsDependencyError) {
    const auto out = tmp_dir("missing");
    const auto cfg = small_config(out);
    std::ostringstream log;
    try {
        cmd_train_stage1(cfg, log);
        FAIL();
    } catch (const DependencyError& e) {
        EXPECT_NE(std::string(e.what()).find((out / artifacts::segments).string()), std::string::npos) << e.what();
    }
    EXPECT_THROW(cmd_align(cfg, log), DependencyError);
    EXPECT_THROW(cmd_evaluate(cfg, log), DependencyError);
}

TEST(Pipeline, UnwritableOutputDirectoryIsFileError) {
    const auto base = tmp_dir("blocked");
    fs::create_directories(base);
    write_file(base / "file", "x");
    const auto cfg = small_config(base / "file" / "sub");
    std::ostringstream log;
    EXPECT_THROW(cmd_gen_data(cfg, log), FileError);
}

// ---- command-line driver

TEST(Cli, UsageErrorsExitOne) {
    const auto scratch = tmp_dir("cli_usage");
    EXPECT_EQ(run_cli("", scratch).code, 1);
    EXPECT_EQ(run_cli("frobnicate", scratch).code, 1);
    EXPECT_EQ(run_cli("gen-data --set nosuch.key=1 --out-dir \"" + (scratch / "o").string() + "\"", scratch).code, 1);
    EXPECT_EQ(run_cli("gen-data --set align.k --out-dir \"" + (scratch / "o").string() + "\"", scratch).code, 1);
    const auto missing = (scratch / "absent.ini").string();
    const auto r = run_cli("run-all --config \"" + missing + "\"", scratch);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
    EXPECT_EQ(run_cli("--help", scratch).code, 0);
    EXPECT_EQ(run_cli("run-all --help", scratch).code, 0);
}

TEST(Cli, MalformedConfigFileExitsOneNamingTheFile) {
    const auto scratch = tmp_dir("cli_badini");
    fs::create_directories(scratch);
    const auto ini = scratch / "bad.ini";
    write_file(ini, "[stage1]\nepochs = 1\nepochs = 2\n");
    const auto r = run_cli("gen-data --config \"" + ini.string() + "\"", scratch);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find(ini.string()), std::string::npos) << r.err;
}

TEST(Cli, DataErrorsExitTwoNamingThePath) {
    const auto scratch = tmp_dir("cli_data");
    const auto out = scratch / "out";
    const auto r = run_cli("train-stage1 -q --out-dir \"" + out.string() + "\"", scratch);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find((out / artifacts::segments).string()), std::string::npos) << r.err;

    write_file(scratch / "file", "x");
    const auto blocked = scratch / "file" / "sub";
    const auto b = run_cli("gen-data -q --out-dir \"" + blocked.string() + "\"", scratch);
    EXPECT_EQ(b.code, 2);
    EXPECT_NE(b.err.find(blocked.string()), std::string::npos) << b.err;
}

TEST(Cli, StagewiseRunMatchesInProcessRunAll) {
    const auto scratch = tmp_dir("cli_stages");
    const auto out = scratch / "out";
    const std::string common = " -q --seed 1 --out-dir \"" + out.string() + "\"" + small_cli_flags();
    for (const char* stage : {"gen-data", "train-stage1", "train-semantic", "train-text", "align", "recognize", "evaluate"})
        ASSERT_EQ(run_cli(std::string(stage) + common, scratch).code, 0) << stage;
    const auto ref = tmp_dir("cli_stages_ref");
    run_all_quiet(small_config(ref));
    auto a = snapshot(out);
    auto b = snapshot(ref);
    // The stored configuration records its own output directory.
    a.erase(artifacts::config);
    b.erase(artifacts::config);
    EXPECT_EQ(a, b);
}

TEST(Cli, DivergenceExitsThree) {
    const auto scratch = tmp_dir("cli_diverge");
    const auto out = scratch / "out";
    const auto cfg = small_config(out);
    std::ostringstream log;
    cmd_gen_data(cfg, log);
    cmd_train_stage1(cfg, log);
    cmd_train_semantic(cfg, log);
    cmd_train_text(cfg, log);
    const auto r = run_cli("align -q --seed 1 --out-dir \"" + out.string() + "\"" + small_cli_flags() +
                               " --set align.learning_rate=1e6 --set align.iterations=50 --set align.early_stop=false",
                           scratch);
    EXPECT_EQ(r.code, 3) << r.err;
}
