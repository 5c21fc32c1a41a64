#ifndef UASR_DISENTANGLE_CHECKPOINT_HPP
#define UASR_DISENTANGLE_CHECKPOINT_HPP

#include <filesystem>

#include "uasr/core/config_fields.hpp"
#include "uasr/disentangle/model.hpp"
#include "uasr/nn/checkpoint.hpp"

namespace uasr {

inline Checkpoint stage1_checkpoint(const Stage1Model& model) {
    Checkpoint c;
    c.kind = "stage1";
    c.config = config_to_map(model.config);
    c.config["feature_dim"] = std::to_string(model.feature_dim);
    c.blocks = blocks_from(const_cast<Stage1Model&>(model).all_params());
    return c;
}

inline Stage1Model stage1_from_checkpoint(const Checkpoint& c) {
    if (c.kind != "stage1") throw DataError("checkpoint holds a '" + c.kind + "' model, expected 'stage1'");
    auto values = c.config;
    auto dim = values.find("feature_dim");
    if (dim == values.end()) throw DataError("stage-1 checkpoint lacks feature_dim");
    const std::size_t feature_dim = parse_count(dim->second);
    values.erase(dim);
    Stage1Config cfg;
    if (apply_config_map(cfg, values) != values.size()) throw DataError("stage-1 checkpoint has unknown config keys");
    Rng scratch(0);
    Stage1Model m = Stage1Model::create(cfg, feature_dim, scratch);
    restore_blocks(c, m.all_params());
    return m;
}

inline void save_stage1(const Stage1Model& model, const std::filesystem::path& path) {
    save_checkpoint(stage1_checkpoint(model), path);
}

inline Stage1Model load_stage1(const std::filesystem::path& path) { return stage1_from_checkpoint(load_checkpoint(path)); }

} // namespace uasr

#endif
