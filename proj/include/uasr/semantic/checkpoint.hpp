#ifndef UASR_SEMANTIC_CHECKPOINT_HPP
#define UASR_SEMANTIC_CHECKPOINT_HPP

#include <filesystem>

#include "uasr/core/io.hpp"
#include "uasr/nn/checkpoint.hpp"
#include "uasr/semantic/encoders.hpp"

namespace uasr {

inline Checkpoint semantic_checkpoint(const SemanticEncoderPair& enc) {
    Checkpoint c;
    c.kind = "semantic";
    c.config["input_dim"] = std::to_string(enc.input_dim());
    c.config["hidden"] = std::to_string(enc.semantic.layers.front().out_dim());
    c.config["output_dim"] = std::to_string(enc.output_dim());
    c.blocks = blocks_from(const_cast<SemanticEncoderPair&>(enc).params());
    return c;
}

inline SemanticEncoderPair semantic_from_checkpoint(const Checkpoint& c) {
    if (c.kind != "semantic") throw DataError("checkpoint holds a '" + c.kind + "' model, expected 'semantic'");
    auto get = [&](const char* key) {
        auto it = c.config.find(key);
        if (it == c.config.end()) throw DataError(std::string("semantic checkpoint lacks ") + key);
        return parse_count(it->second);
    };
    Rng scratch(0);
    auto enc = SemanticEncoderPair::create(get("input_dim"), get("hidden"), get("output_dim"), scratch);
    restore_blocks(c, enc.params());
    return enc;
}

inline void save_semantic(const SemanticEncoderPair& enc, const std::filesystem::path& path) {
    save_checkpoint(semantic_checkpoint(enc), path);
}

inline SemanticEncoderPair load_semantic(const std::filesystem::path& path) {
    return semantic_from_checkpoint(load_checkpoint(path));
}

} // namespace uasr

#endif
