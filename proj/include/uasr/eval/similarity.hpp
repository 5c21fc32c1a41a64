#ifndef UASR_EVAL_SIMILARITY_HPP
#define UASR_EVAL_SIMILARITY_HPP

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"
#include "uasr/core/stats.hpp"
#include "uasr/semantic/table.hpp"

namespace uasr {

struct WordPair {
    std::string first;
    std::string second;
    std::optional<double> score;  // human rating, when the benchmark has one

    bool operator==(const WordPair&) const = default;
};

// Word pairs with no repeated unordered pair; words are stored case-folded.
class WordPairSet {
public:
    void add(std::string_view a, std::string_view b, std::optional<double> score = std::nullopt) {
        if (a.empty() || b.empty()) throw DataError("word pair with an empty word");
        std::string fa = fold_case(a), fb = fold_case(b);
        auto key = fa < fb ? std::make_pair(fa, fb) : std::make_pair(fb, fa);
        if (!seen_.insert(key).second) throw DataError("duplicate word pair '" + fa + "' / '" + fb + "'");
        pairs_.push_back({std::move(fa), std::move(fb), score});
    }

    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }
    const std::vector<WordPair>& pairs() const { return pairs_; }
    auto begin() const { return pairs_.begin(); }
    auto end() const { return pairs_.end(); }

private:
    std::vector<WordPair> pairs_;
    std::set<std::pair<std::string, std::string>> seen_;
};

// Tab-separated "word1 word2 [score]" per line; blank lines and lines starting with '#' are skipped.
inline WordPairSet parse_word_pairs(std::string_view text) {
    WordPairSet set;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        line = trim(line);
        if (line.empty() || line.front() == '#') return;
        auto fields = split_ws(line);
        if (fields.size() != 2 && fields.size() != 3) {
            throw ParseError("expected 'word1<TAB>word2[<TAB>score]', got " + std::to_string(fields.size()) + " fields", line_no);
        }
        std::optional<double> score;
        if (fields.size() == 3) score = parse_double(fields[2], line_no);
        try {
            set.add(fields[0], fields[1], score);
        } catch (const ParseError&) {
            throw;
        } catch (const DataError& e) {
            throw ParseError(e.what(), line_no);
        }
    });
    return set;
}

inline WordPairSet load_word_pairs(const std::filesystem::path& path) { return parse_word_pairs(read_file(path)); }

// Every unordered pair of the given words, in index order.
inline WordPairSet all_word_pairs(const std::vector<std::string>& words) {
    WordPairSet set;
    for (std::size_t i = 0; i < words.size(); ++i)
        for (std::size_t j = i + 1; j < words.size(); ++j) set.add(words[i], words[j]);
    return set;
}

struct CorrelationResult {
    double spearman = 0.0;
    std::size_t covered = 0;  // pairs with both words in both tables
    std::size_t skipped = 0;  // pairs dropped for out-of-vocabulary words
};

namespace detail {

// Case-folded token -> row; the first row wins when folding merges tokens.
inline std::map<std::string, std::size_t> folded_index(const WordEmbeddingTable& t) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < t.size(); ++i) idx.emplace(fold_case(t.token(i)), i);
    return idx;
}

} // namespace detail

// Spearman correlation between the pair cosine similarities of two tables.
inline CorrelationResult pair_similarity_correlation(const WordPairSet& pairs, const WordEmbeddingTable& a,
                                                     const WordEmbeddingTable& b) {
    const auto ia = detail::folded_index(a);
    const auto ib = detail::folded_index(b);
    CorrelationResult r;
    Vector xs, ys;
    for (const auto& p : pairs) {
        auto a1 = ia.find(p.first), a2 = ia.find(p.second);
        auto b1 = ib.find(p.first), b2 = ib.find(p.second);
        if (a1 == ia.end() || a2 == ia.end() || b1 == ib.end() || b2 == ib.end()) {
            ++r.skipped;
            continue;
        }
        xs.push_back(cosine_similarity(a.vector(a1->second), a.vector(a2->second)));
        ys.push_back(cosine_similarity(b.vector(b1->second), b.vector(b2->second)));
        ++r.covered;
    }
    if (r.covered < 2) {
        throw CoverageError("only " + std::to_string(r.covered) + " of " + std::to_string(pairs.size()) +
                            " word pairs are covered by both tables; need at least 2");
    }
    r.spearman = spearman(xs, ys);
    return r;
}

} // namespace uasr

#endif
