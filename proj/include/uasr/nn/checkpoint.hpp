#ifndef UASR_NN_CHECKPOINT_HPP
#define UASR_NN_CHECKPOINT_HPP

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/nn/params.hpp"

namespace uasr {

// Text checkpoint:
//   UASR-CHECKPOINT 1
//   kind <kind>
//   config <n>            followed by n "key value" lines
//   blocks <m>            followed by m blocks of "block <name> <rows> <cols>" and rows
struct Checkpoint {
    std::string kind;
    std::map<std::string, std::string> config;
    std::vector<std::pair<std::string, Matrix>> blocks;
};

inline constexpr std::string_view kCheckpointMagic = "UASR-CHECKPOINT 1";

inline std::string format_checkpoint(const Checkpoint& c) {
    std::string out(kCheckpointMagic);
    out += "\nkind " + c.kind + "\nconfig " + std::to_string(c.config.size()) + "\n";
    for (const auto& [k, v] : c.config) out += k + " " + v + "\n";
    out += "blocks " + std::to_string(c.blocks.size()) + "\n";
    for (const auto& [name, m] : c.blocks) {
        out += "block " + name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
        for (std::size_t r = 0; r < m.rows(); ++r) {
            auto row = m.row(r);
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j) out += ' ';
                out += format_double(row[j]);
            }
            out += '\n';
        }
    }
    return out;
}

inline Checkpoint parse_checkpoint(std::string_view text) {
    std::vector<std::string_view> lines;
    for_each_line(text, [&](std::string_view l, std::size_t) { lines.push_back(l); });
    std::size_t at = 0;
    auto next = [&]() -> std::string_view {
        if (at >= lines.size()) throw ParseError("checkpoint truncated", at + 1);
        return lines[at++];
    };
    auto expect = [&](std::string_view line, std::string_view key, std::size_t n_fields) {
        auto f = split_ws(line);
        if (f.size() != n_fields || f[0] != key) throw ParseError("expected '" + std::string(key) + "' line", at);
        return f;
    };
    if (next() != kCheckpointMagic) throw ParseError("not a checkpoint file (bad header)", 1);
    Checkpoint c;
    c.kind = std::string(expect(next(), "kind", 2)[1]);
    const std::size_t n_config = parse_count(expect(next(), "config", 2)[1], at);
    for (std::size_t i = 0; i < n_config; ++i) {
        auto f = split_ws(next());
        if (f.size() != 2) throw ParseError("expected 'key value'", at);
        c.config.emplace(std::string(f[0]), std::string(f[1]));
    }
    const std::size_t n_blocks = parse_count(expect(next(), "blocks", 2)[1], at);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        auto f = expect(next(), "block", 4);
        const std::size_t rows = parse_count(f[2], at), cols = parse_count(f[3], at);
        Matrix m(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            auto vals = split_ws(next());
            if (vals.size() != cols) throw ParseError("block row has " + std::to_string(vals.size()) + " values, expected " + std::to_string(cols), at);
            for (std::size_t j = 0; j < cols; ++j) m(r, j) = parse_double(vals[j], at);
        }
        c.blocks.emplace_back(std::string(f[1]), std::move(m));
    }
    return c;
}

inline std::vector<std::pair<std::string, Matrix>> blocks_from(const nn::ParamList& params) {
    std::vector<std::pair<std::string, Matrix>> out;
    for (const auto& p : params) out.emplace_back(p.name, *p.value);
    return out;
}

// Copies checkpoint blocks into params by name; every parameter must be present with its shape.
inline void restore_blocks(const Checkpoint& c, const nn::ParamList& params) {
    std::map<std::string, const Matrix*> by_name;
    for (const auto& [name, m] : c.blocks) by_name.emplace(name, &m);
    if (by_name.size() != params.size()) {
        throw DataError("checkpoint has " + std::to_string(by_name.size()) + " blocks, model expects " + std::to_string(params.size()));
    }
    for (const auto& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw DataError("checkpoint lacks block '" + p.name + "'");
        if (it->second->rows() != p.value->rows() || it->second->cols() != p.value->cols())
            throw ShapeError("checkpoint block '" + p.name + "' has the wrong shape");
        *p.value = *it->second;
    }
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) { write_file(path, format_checkpoint(c)); }
inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

} // namespace uasr

#endif
