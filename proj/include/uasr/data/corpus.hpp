#ifndef UASR_DATA_CORPUS_HPP
#define UASR_DATA_CORPUS_HPP

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/disentangle/segment.hpp"

namespace uasr {

struct UtteranceRecord {
    std::string utterance_id;
    std::string speaker_id;
    std::vector<std::string> segment_ids;  // in spoken order

    bool operator==(const UtteranceRecord&) const = default;
};

using TokenSequence = std::vector<std::string>;

// Segments in file order; utterances list them in spoken order. transcripts[k] is the
// token sequence of utterances[k] when word labels are available.
struct CorpusManifest {
    std::vector<UtteranceRecord> utterances;
    std::vector<AcousticSegment> segments;
    std::vector<TokenSequence> transcripts;

    bool operator==(const CorpusManifest&) const = default;

    std::map<std::string, std::size_t> segment_index() const {
        std::map<std::string, std::size_t> idx;
        for (std::size_t i = 0; i < segments.size(); ++i) idx.emplace(segments[i].segment_id, i);
        return idx;
    }
};

// Groups segments by utterance (order of first appearance) and rebuilds transcripts
// from word labels when every segment carries one.
inline CorpusManifest manifest_from_segments(std::vector<AcousticSegment> segments) {
    CorpusManifest m;
    std::map<std::string, std::size_t> utt_index;
    std::set<std::string> seen;
    for (const auto& s : segments) {
        if (!seen.insert(s.segment_id).second) throw DataError("duplicate segment id '" + s.segment_id + "'");
        auto [it, inserted] = utt_index.try_emplace(s.utterance_id, m.utterances.size());
        if (inserted) m.utterances.push_back({s.utterance_id, s.speaker_id, {}});
        m.utterances[it->second].segment_ids.push_back(s.segment_id);
    }
    const bool labelled = !segments.empty() && std::all_of(segments.begin(), segments.end(),
                                                           [](const AcousticSegment& s) { return s.word.has_value(); });
    if (labelled) {
        const auto by_id = [&] {
            std::map<std::string, const AcousticSegment*> idx;
            for (const auto& s : segments) idx.emplace(s.segment_id, &s);
            return idx;
        }();
        for (const auto& u : m.utterances) {
            TokenSequence t;
            for (const auto& id : u.segment_ids) t.push_back(*by_id.at(id)->word);
            m.transcripts.push_back(std::move(t));
        }
    }
    m.segments = std::move(segments);
    return m;
}

} // namespace uasr

#endif
