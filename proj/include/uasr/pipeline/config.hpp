#ifndef UASR_PIPELINE_CONFIG_HPP
#define UASR_PIPELINE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uasr/align/icp.hpp"
#include "uasr/core/config_fields.hpp"
#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/data/synthetic.hpp"
#include "uasr/disentangle/config.hpp"
#include "uasr/semantic/config.hpp"

namespace uasr {

// Input/output paths. Empty input paths default to the files gen-data writes into out_dir.
struct IoConfig {
    std::string out_dir = "out";
    std::string segments;
    std::string text;
    std::string word_pairs;  // optional benchmark; all pairs of the shared vocabulary when empty
    std::string anchors;     // optional (audio token, text token) TSV for semi-supervised alignment

    template <class V>
    void visit(V&& v) {
        v("out_dir", out_dir);
        v("segments", segments);
        v("text", text);
        v("word_pairs", word_pairs);
        v("anchors", anchors);
    }
};

struct EvalConfig {
    std::string topk = "1,10";  // comma-separated k values
    std::string dataset = "";   // report name for the word-pair set; defaults to the file stem or "all-pairs"

    template <class V>
    void visit(V&& v) {
        v("topk", topk);
        v("dataset", dataset);
    }

    std::vector<std::size_t> topk_values() const {
        std::vector<std::size_t> out;
        for (auto f : split_char(topk, ',')) {
            f = trim(f);
            if (f.empty()) continue;
            try {
                out.push_back(parse_count(f));
            } catch (const ParseError&) {
                throw ConfigError("eval.topk: '" + std::string(f) + "' is not a count");
            }
            if (out.back() == 0) throw ConfigError("eval.topk values must be at least 1");
        }
        if (out.empty()) throw ConfigError("eval.topk lists no values");
        return out;
    }
};

// Every setting of the pipeline, addressed by namespaced keys ("stage1.epochs").
// The root seed feeds every stage seed that is not set explicitly.
struct PipelineConfig {
    std::uint64_t seed = 1;
    IoConfig io;
    SyntheticSpec data;
    Stage1Config stage1;
    SemanticConfig semantic;
    SemanticConfig text;
    AlignConfig align;
    EvalConfig eval;

    // Stage-seed keys given explicitly; those are not derived from the root seed.
    std::set<std::string> explicit_seeds;

    PipelineConfig() {
        // Desk-scale pipeline defaults for the synthetic corpus.
        data.segments = 2000;
        semantic.subsample = 0.05;
        text.subsample = 0.05;
        align.k = 8;
    }

    template <class Fn>
    void for_each_section(Fn&& fn) {
        fn("io.", io);
        fn("data.", data);
        fn("stage1.", stage1);
        fn("semantic.", semantic);
        fn("text.", text);
        fn("align.", align);
        fn("eval.", eval);
    }

    std::map<std::string, std::string> to_map() const {
        std::map<std::string, std::string> out;
        out["seed"] = std::to_string(seed);
        const_cast<PipelineConfig&>(*this).for_each_section([&](const std::string& prefix, auto& section) {
            auto m = config_to_map(section, prefix);
            out.insert(m.begin(), m.end());
        });
        return out;
    }

    // Applies key/value settings; unknown keys are rejected.
    void apply(const std::map<std::string, std::string>& values) {
        std::size_t used = 0;
        auto s = values.find("seed");
        if (s != values.end()) {
            field_from_string("seed", s->second, seed);
            ++used;
        }
        for_each_section([&](const std::string& prefix, auto& section) {
            std::map<std::string, std::string> part;
            for (const auto& [k, v] : values)
                if (k.rfind(prefix, 0) == 0) part.emplace(k, v);
            used += apply_config_map(section, part, prefix);
        });
        for (const auto& [k, v] : values) {
            if (k.size() > 5 && k.substr(k.size() - 5) == ".seed") explicit_seeds.insert(k);
        }
        if (used != values.size()) {
            const auto known = to_map();
            for (const auto& [k, v] : values)
                if (!known.count(k)) throw ConfigError("unknown configuration key '" + k + "'");
        }
    }

    // Stage seeds not set explicitly are drawn from the root seed, one fixed label per stage.
    void derive_seeds() {
        const Rng root(seed);
        auto derive = [&](const std::string& key, std::uint64_t& target) {
            if (!explicit_seeds.count(key)) target = root.split(key).next_u64();
        };
        derive("data.seed", data.seed);
        derive("stage1.seed", stage1.seed);
        derive("semantic.seed", semantic.seed);
        derive("text.seed", text.seed);
        derive("align.seed", align.seed);
    }

    void validate() const {
        stage1.validate();
        semantic.validate();
        text.validate();
        align.validate();
        data.validate();
        if (io.out_dir.empty()) throw ConfigError("io.out_dir must not be empty");
        (void)eval.topk_values();
    }

    std::filesystem::path out_path(const std::string& name) const { return std::filesystem::path(io.out_dir) / name; }
    std::filesystem::path segments_path() const { return io.segments.empty() ? out_path("segments.jsonl") : std::filesystem::path(io.segments); }
    std::filesystem::path text_path() const { return io.text.empty() ? out_path("text.txt") : std::filesystem::path(io.text); }
};

// Flat INI: "key = value" lines, '#' or ';' comments, and optional "[section]" headers
// that prefix the keys below them ("[stage1]" then "epochs = 5" is "stage1.epochs").
inline std::map<std::string, std::string> parse_ini(std::string_view text) {
    std::map<std::string, std::string> out;
    std::string section;
    for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
        auto line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') return;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!section.empty()) section += '.';
            return;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key = section + std::string(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key == section) throw ParseError("empty key", line_no);
        if (!out.emplace(key, value).second) throw ParseError("key '" + key + "' set twice", line_no);
    });
    return out;
}

// "key=value" as given to --set.
inline std::pair<std::string, std::string> parse_override(std::string_view s) {
    const auto eq = s.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("override '" + std::string(s) + "' is not key=value");
    return {std::string(trim(s.substr(0, eq))), std::string(trim(s.substr(eq + 1)))};
}

inline std::string format_ini(const PipelineConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg.to_map()) out += k + " = " + v + "\n";
    return out;
}

} // namespace uasr

#endif
