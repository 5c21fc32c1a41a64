#ifndef UASR_EVAL_REPORT_HPP
#define UASR_EVAL_REPORT_HPP

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"

namespace uasr {

struct CorrelationEntry {
    std::string embedding_set;  // e.g. "SE/SAD"
    std::string dataset;        // word-pair set name
    double spearman = 0.0;
    std::size_t covered = 0;
    std::size_t skipped = 0;

    bool operator==(const CorrelationEntry&) const = default;
};

struct TopKEntry {
    std::size_t k = 1;
    std::size_t anchors = 0;
    double accuracy = 0.0;
    std::size_t evaluated = 0;

    bool operator==(const TopKEntry&) const = default;
};

// Rows keep insertion order.
struct EvalReport {
    std::vector<CorrelationEntry> correlations;
    std::vector<TopKEntry> topk;

    void add(CorrelationEntry e) {
        check_name(e.embedding_set);
        check_name(e.dataset);
        if (!(e.spearman >= -1.0 && e.spearman <= 1.0)) throw DataError("spearman score outside [-1, 1]");
        correlations.push_back(std::move(e));
    }

    void add(TopKEntry e) {
        if (!(e.accuracy >= 0.0 && e.accuracy <= 1.0)) throw DataError("top-k accuracy outside [0, 1]");
        topk.push_back(e);
    }

    bool empty() const { return correlations.empty() && topk.empty(); }
    bool operator==(const EvalReport&) const = default;

    static void check_name(const std::string& s) {
        if (s.empty() || s.find_first_of(",\"\r\n") != std::string::npos)
            throw DataError("report names must be non-empty and free of commas, quotes and newlines: '" + s + "'");
    }
};

inline constexpr std::string_view kReportCsvHeader = "kind,embedding_set,dataset,k,anchors,value,covered,skipped";

// One row per entry: correlations first, then top-k rows. Values at 17 significant digits.
inline std::string format_report_csv(const EvalReport& r) {
    std::string out(kReportCsvHeader);
    out += '\n';
    for (const auto& e : r.correlations) {
        out += "spearman," + e.embedding_set + "," + e.dataset + ",,," + format_double(e.spearman) + "," +
               std::to_string(e.covered) + "," + std::to_string(e.skipped) + "\n";
    }
    for (const auto& e : r.topk) {
        out += "topk,,," + std::to_string(e.k) + "," + std::to_string(e.anchors) + "," + format_double(e.accuracy) + "," +
               std::to_string(e.evaluated) + ",\n";
    }
    return out;
}

inline EvalReport parse_report_csv(std::string_view text) {
    EvalReport r;
    bool header = false;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!header) {
            if (line != kReportCsvHeader) throw ParseError("unexpected report header", line_no);
            header = true;
            return;
        }
        if (line.empty()) return;
        const auto f = split_char(line, ',');
        if (f.size() != 8) throw ParseError("expected 8 fields, got " + std::to_string(f.size()), line_no);
        try {
            if (f[0] == "spearman") {
                r.add(CorrelationEntry{std::string(f[1]), std::string(f[2]), parse_double(f[5], line_no),
                                       parse_count(f[6], line_no), parse_count(f[7], line_no)});
            } else if (f[0] == "topk") {
                r.add(TopKEntry{parse_count(f[3], line_no), parse_count(f[4], line_no), parse_double(f[5], line_no),
                                parse_count(f[6], line_no)});
            } else {
                throw ParseError("unknown row kind '" + std::string(f[0]) + "'", line_no);
            }
        } catch (const ParseError&) {
            throw;
        } catch (const DataError& e) {
            throw ParseError(e.what(), line_no);
        }
    });
    if (!header) throw ParseError("report is empty; header missing", 1);
    return r;
}

// Human-readable rendering with the same numbers as the CSV.
inline std::string format_report_table(const EvalReport& r) {
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    std::string out;
    out += "Pair-similarity Spearman correlation\n";
    if (r.correlations.empty()) {
        out += "  (none)\n";
    } else {
        std::size_t ws = 14, wd = 10;
        for (const auto& e : r.correlations) {
            ws = std::max(ws, e.embedding_set.size() + 2);
            wd = std::max(wd, e.dataset.size() + 2);
        }
        out += "  " + pad("embedding set", ws) + pad("dataset", wd) + pad("spearman", 26) + pad("covered", 9) + "skipped\n";
        for (const auto& e : r.correlations) {
            out += "  " + pad(e.embedding_set, ws) + pad(e.dataset, wd) + pad(format_double(e.spearman), 26) +
                   pad(std::to_string(e.covered), 9) + std::to_string(e.skipped) + "\n";
        }
    }
    out += "\nTop-K nearest accuracy\n";
    if (r.topk.empty()) {
        out += "  (none)\n";
    } else {
        out += "  " + pad("k", 7) + pad("anchors", 9) + pad("accuracy", 26) + "evaluated\n";
        for (const auto& e : r.topk) {
            out += "  " + pad(std::to_string(e.k), 7) + pad(std::to_string(e.anchors), 9) +
                   pad(format_double(e.accuracy), 26) + std::to_string(e.evaluated) + "\n";
        }
    }
    return out;
}

// Writes <stem>.csv and <stem>.txt.
inline void emit_report(const EvalReport& r, const std::filesystem::path& stem) {
    auto csv = stem;
    csv += ".csv";
    auto txt = stem;
    txt += ".txt";
    write_file(csv, format_report_csv(r));
    write_file(txt, format_report_table(r));
}

} // namespace uasr

#endif
