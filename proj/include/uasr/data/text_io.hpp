#ifndef UASR_DATA_TEXT_IO_HPP
#define UASR_DATA_TEXT_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "uasr/core/io.hpp"
#include "uasr/data/corpus.hpp"

namespace uasr {

// One utterance per line, whitespace-separated tokens, case-folded; blank lines skipped.
inline std::vector<TokenSequence> parse_text(std::string_view text) {
    std::vector<TokenSequence> out;
    for_each_line(text, [&](std::string_view line, std::size_t) {
        auto fields = split_ws(line);
        if (fields.empty()) return;
        TokenSequence seq;
        seq.reserve(fields.size());
        for (auto f : fields) seq.push_back(fold_case(f));
        out.push_back(std::move(seq));
    });
    return out;
}

inline std::vector<TokenSequence> load_text(const std::filesystem::path& path) { return parse_text(read_file(path)); }

inline std::string format_text(const std::vector<TokenSequence>& sequences) {
    std::string out;
    for (const auto& seq : sequences) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i) out += ' ';
            out += seq[i];
        }
        out += '\n';
    }
    return out;
}

inline void save_text(const std::vector<TokenSequence>& sequences, const std::filesystem::path& path) {
    write_file(path, format_text(sequences));
}

} // namespace uasr

#endif
