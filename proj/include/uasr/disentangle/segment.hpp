#ifndef UASR_DISENTANGLE_SEGMENT_HPP
#define UASR_DISENTANGLE_SEGMENT_HPP

#include <optional>
#include <string>

#include "uasr/core/matrix.hpp"

namespace uasr {

// One word-level stretch of acoustic features; frames is T x feature_dim.
struct AcousticSegment {
    std::string segment_id;
    std::string utterance_id;
    std::string speaker_id;
    std::optional<std::string> word;  // oracle label, never used by stage-1 training
    Matrix frames;

    std::size_t length() const { return frames.rows(); }
    std::size_t feature_dim() const { return frames.cols(); }

    // Without speaker labels, segments of one utterance are taken to share a speaker.
    const std::string& speaker_key() const { return speaker_id.empty() ? utterance_id : speaker_id; }

    bool operator==(const AcousticSegment&) const = default;
};

struct DisentangledCodes {
    Vector phonetic;
    Vector speaker;
};

} // namespace uasr

#endif
