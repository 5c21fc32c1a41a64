#ifndef UASR_SEMANTIC_TABLE_HPP
#define UASR_SEMANTIC_TABLE_HPP

#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"
#include "uasr/core/matrix.hpp"

namespace uasr {

// Token -> embedding, with the number of occurrences behind each row.
class WordEmbeddingTable {
public:
    WordEmbeddingTable() = default;
    explicit WordEmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t size() const { return tokens_.size(); }
    std::size_t dim() const { return dim_; }
    bool empty() const { return tokens_.empty(); }

    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<std::size_t>& counts() const { return counts_; }
    const std::string& token(std::size_t i) const { return tokens_[i]; }
    std::size_t count(std::size_t i) const { return counts_[i]; }
    std::span<const double> vector(std::size_t i) const { return {vectors_.data() + i * dim_, dim_}; }
    std::span<double> vector(std::size_t i) { return {vectors_.data() + i * dim_, dim_}; }

    std::optional<std::size_t> find(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    void add(std::string token, std::span<const double> v, std::size_t count = 0) {
        if (v.size() != dim_) {
            throw ShapeError("embedding for '" + token + "' has " + std::to_string(v.size()) + " values, table dim is " +
                             std::to_string(dim_));
        }
        if (token.empty() || token.find_first_of(" \t\r\n") != std::string::npos)
            throw DataError("embedding token must be non-empty and free of whitespace: '" + token + "'");
        if (!index_.emplace(token, tokens_.size()).second) throw DataError("duplicate embedding token '" + token + "'");
        tokens_.push_back(std::move(token));
        counts_.push_back(count);
        vectors_.insert(vectors_.end(), v.begin(), v.end());
    }

    // Rows as a matrix (size x dim).
    Matrix as_matrix() const { return Matrix(size(), dim_, vectors_); }

    // Indices ordered by descending count; equal counts keep table order.
    std::vector<std::size_t> frequency_order() const {
        std::vector<std::size_t> order(size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts_[a] > counts_[b]; });
        return order;
    }

    bool operator==(const WordEmbeddingTable& o) const {
        return dim_ == o.dim_ && tokens_ == o.tokens_ && vectors_ == o.vectors_;
    }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> tokens_;
    std::vector<std::size_t> counts_;
    Vector vectors_;
    std::map<std::string, std::size_t> index_;
};

// Text format: "<count> <dim>" then one "token v1 ... vdim" line per row.
inline std::string format_embedding_table(const WordEmbeddingTable& table) {
    std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
        out += table.token(i);
        for (double v : table.vector(i)) {
            out += ' ';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

// Rows get descending pseudo-counts so file order acts as frequency order.
inline WordEmbeddingTable parse_embedding_table(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        return true;
    };
    std::string_view line;
    if (!next_line(line)) throw EmptyCorpusError("embedding table is empty");
    auto header = split_ws(line);
    if (header.size() != 2) throw ParseError("expected '<count> <dim>' header", line_no);
    const std::size_t count = parse_count(header[0], line_no);
    const std::size_t dim = parse_count(header[1], line_no);
    WordEmbeddingTable table(dim);
    Vector v(dim);
    while (table.size() < count) {
        if (!next_line(line)) throw ParseError("table ended after " + std::to_string(table.size()) + " of " +
                                                   std::to_string(count) + " rows", line_no);
        auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != dim + 1) {
            throw ParseError("expected token and " + std::to_string(dim) + " values, got " +
                                 std::to_string(fields.size()) + " fields", line_no);
        }
        for (std::size_t k = 0; k < dim; ++k) v[k] = parse_double(fields[k + 1], line_no);
        table.add(std::string(fields[0]), v, count - table.size());
    }
    return table;
}

inline void save_embedding_table(const WordEmbeddingTable& table, const std::filesystem::path& path) {
    write_file(path, format_embedding_table(table));
}

inline WordEmbeddingTable load_embedding_table(const std::filesystem::path& path) {
    return parse_embedding_table(read_file(path));
}

// Copy with rows sorted by descending count (ties by token) so a saved file lists the
// most frequent tokens first.
inline WordEmbeddingTable sorted_by_frequency(const WordEmbeddingTable& table) {
    std::vector<std::size_t> order(table.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (table.count(a) != table.count(b)) return table.count(a) > table.count(b);
        return table.token(a) < table.token(b);
    });
    WordEmbeddingTable out(table.dim());
    for (std::size_t i : order) out.add(table.token(i), table.vector(i), table.count(i));
    return out;
}

} // namespace uasr

#endif
