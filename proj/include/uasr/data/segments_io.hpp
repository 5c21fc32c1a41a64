#ifndef UASR_DATA_SEGMENTS_IO_HPP
#define UASR_DATA_SEGMENTS_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"
#include "uasr/data/corpus.hpp"

namespace uasr {

// JSON-lines segment file: one object per line with segment_id, utterance_id,
// speaker_id, optional word and frames (array of frame arrays).
inline std::string format_segment_line(const AcousticSegment& s) {
    nlohmann::ordered_json j;
    j["segment_id"] = s.segment_id;
    j["utterance_id"] = s.utterance_id;
    j["speaker_id"] = s.speaker_id;
    if (s.word) j["word"] = *s.word;
    auto frames = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < s.length(); ++t) {
        auto row = s.frames.row(t);
        frames.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["frames"] = std::move(frames);
    return j.dump();
}

inline std::string format_segments(const CorpusManifest& m) {
    std::string out;
    for (const auto& s : m.segments) {
        out += format_segment_line(s);
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::string required_string(const nlohmann::json& j, const char* key, std::size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw ParseError(std::string("field '") + key + "' missing or not a string", line_no);
    return it->get<std::string>();
}

} // namespace detail

inline AcousticSegment parse_segment_line(std::string_view line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("record is not a JSON object", line_no);
    AcousticSegment s;
    s.segment_id = detail::required_string(j, "segment_id", line_no);
    s.utterance_id = detail::required_string(j, "utterance_id", line_no);
    auto spk = j.find("speaker_id");
    if (spk != j.end() && !spk->is_null()) {
        if (!spk->is_string()) throw ParseError("field 'speaker_id' is not a string", line_no);
        s.speaker_id = spk->get<std::string>();
    }
    if (s.segment_id.empty() || s.utterance_id.empty()) throw ParseError("segment_id and utterance_id must be non-empty", line_no);
    auto word = j.find("word");
    if (word != j.end() && !word->is_null()) {
        if (!word->is_string()) throw ParseError("field 'word' is not a string", line_no);
        s.word = word->get<std::string>();
    }
    auto frames = j.find("frames");
    if (frames == j.end() || !frames->is_array() || frames->empty()) throw ParseError("field 'frames' must be a non-empty array", line_no);
    const auto& first = (*frames)[0];
    if (!first.is_array() || first.empty()) throw ParseError("each frame must be a non-empty array of numbers", line_no);
    const std::size_t dim = first.size();
    s.frames = Matrix(frames->size(), dim);
    for (std::size_t t = 0; t < frames->size(); ++t) {
        const auto& row = (*frames)[t];
        if (!row.is_array()) throw ParseError("each frame must be an array of numbers", line_no);
        if (row.size() != dim) {
            throw ShapeError("line " + std::to_string(line_no) + ": segment '" + s.segment_id + "' frame " + std::to_string(t) +
                             " has " + std::to_string(row.size()) + " values, expected " + std::to_string(dim));
        }
        for (std::size_t d = 0; d < dim; ++d) {
            if (!row[d].is_number()) throw ParseError("frame value is not a number", line_no);
            s.frames(t, d) = row[d].get<double>();
        }
    }
    return s;
}

// Parses a segment file into a manifest; every segment must share one feature dimension.
inline CorpusManifest parse_segments(std::string_view text) {
    std::vector<AcousticSegment> segments;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (trim(line).empty()) return;
        segments.push_back(parse_segment_line(line, line_no));
        if (segments.back().feature_dim() != segments.front().feature_dim()) {
            throw ShapeError("line " + std::to_string(line_no) + ": segment '" + segments.back().segment_id + "' has feature dim " +
                             std::to_string(segments.back().feature_dim()) + ", earlier segments have " +
                             std::to_string(segments.front().feature_dim()));
        }
    });
    if (segments.empty()) throw EmptyCorpusError("segment file has no records");
    return manifest_from_segments(std::move(segments));
}

inline CorpusManifest load_segments(const std::filesystem::path& path) { return parse_segments(read_file(path)); }

inline void save_segments(const CorpusManifest& m, const std::filesystem::path& path) {
    write_file(path, format_segments(m));
}

} // namespace uasr

#endif
