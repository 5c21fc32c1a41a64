#ifndef UASR_ALIGN_IO_HPP
#define UASR_ALIGN_IO_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "uasr/align/icp.hpp"
#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"

namespace uasr {

struct TransformFile {
    AffineTransformPair transforms;
    double lambda = 0.0;
    std::size_t iterations = 0;
};

// Line 1: "K lambda iterations". Then K rows of T_ab, a blank line, K rows of T_ba, a
// blank line, and the T_ab and T_ba translations on one line each.
inline std::string format_transform(const TransformFile& f) {
    const auto& t = f.transforms;
    const std::size_t k = t.dim();
    auto row_text = [](std::span<const double> row) {
        std::string s;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) s += ' ';
            s += format_double(row[j]);
        }
        return s + "\n";
    };
    std::string out = std::to_string(k) + " " + format_double(f.lambda) + " " + std::to_string(f.iterations) + "\n";
    for (std::size_t r = 0; r < k; ++r) out += row_text(t.ab.row(r));
    out += "\n";
    for (std::size_t r = 0; r < k; ++r) out += row_text(t.ba.row(r));
    out += "\n";
    out += row_text(t.ab_shift);
    out += row_text(t.ba_shift);
    return out;
}

inline TransformFile parse_transform(std::string_view text) {
    std::vector<std::string_view> lines;
    for_each_line(text, [&](std::string_view l, std::size_t) { lines.push_back(l); });
    std::size_t at = 0;
    auto next = [&]() -> std::string_view {
        if (at >= lines.size()) throw ParseError("transform file truncated", at + 1);
        return lines[at++];
    };
    auto header = split_ws(next());
    if (header.size() != 3) throw ParseError("expected 'K lambda iterations' header", 1);
    TransformFile f;
    const std::size_t k = parse_count(header[0], 1);
    if (k == 0) throw ParseError("K must be at least 1", 1);
    f.lambda = parse_double(header[1], 1);
    f.iterations = parse_count(header[2], 1);
    f.transforms = AffineTransformPair::zeros(k);
    auto read_row = [&](std::span<double> dst) {
        auto vals = split_ws(next());
        if (vals.size() != k) throw ParseError("expected " + std::to_string(k) + " values, got " + std::to_string(vals.size()), at);
        for (std::size_t j = 0; j < k; ++j) dst[j] = parse_double(vals[j], at);
    };
    auto blank = [&] {
        if (!trim(next()).empty()) throw ParseError("expected a blank separator line", at);
    };
    for (std::size_t r = 0; r < k; ++r) read_row(f.transforms.ab.row(r));
    blank();
    for (std::size_t r = 0; r < k; ++r) read_row(f.transforms.ba.row(r));
    blank();
    read_row(f.transforms.ab_shift);
    read_row(f.transforms.ba_shift);
    if (!f.transforms.all_finite()) throw DataError("transform file holds non-finite values");
    return f;
}

inline void save_transform(const TransformFile& f, const std::filesystem::path& path) { write_file(path, format_transform(f)); }
inline TransformFile load_transform(const std::filesystem::path& path) { return parse_transform(read_file(path)); }

using TokenPairs = std::vector<std::pair<std::string, std::string>>;

// Two tab-separated columns per line (audio token, text token). Used for recognition
// output and for anchor lists.
inline std::string format_token_pairs(const TokenPairs& pairs) {
    std::string out;
    for (const auto& [a, b] : pairs) out += a + "\t" + b + "\n";
    return out;
}

inline TokenPairs parse_token_pairs(std::string_view text) {
    TokenPairs out;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty() || line.front() == '#') return;
        auto f = split_ws(line);
        if (f.size() != 2) throw ParseError("expected two tab-separated tokens", line_no);
        out.emplace_back(std::string(f[0]), std::string(f[1]));
    });
    return out;
}

inline void save_token_pairs(const TokenPairs& pairs, const std::filesystem::path& path) {
    write_file(path, format_token_pairs(pairs));
}
inline TokenPairs load_token_pairs(const std::filesystem::path& path) { return parse_token_pairs(read_file(path)); }

} // namespace uasr

#endif
