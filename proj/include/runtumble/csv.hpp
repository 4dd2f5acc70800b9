#pragma once
// CSV output: `#`-prefixed metadata lines (tool version, effective config,
// seed, run diagnostics), then a column-header row, then %.17g data rows.
// Everything after the metadata block must be byte-identical across
// --workers settings, so callers emit rows in a canonical order regardless
// of scheduling.

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "runtumble/config.hpp"
#include "runtumble/version.hpp"

namespace runtumble {

inline std::string csv_cell(double x) { return detail::fmt_double(x); }

class CsvWriter {
public:
    CsvWriter(const std::string& path, const RunConfig& cfg) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("csv: cannot open " + path);
        out_ << "# version=" << kVersion << "\n";
        for (const auto& [key, val] : describe(cfg)) out_ << "# " << key << "=" << val << "\n";
    }

    // Extra metadata line; only valid before the column header.
    void note(const std::string& key, const std::string& val) {
        if (header_done_) throw std::logic_error("csv: metadata after column header");
        out_ << "# " << key << "=" << val << "\n";
    }

    void columns(const std::vector<std::string>& names) {
        if (header_done_) throw std::logic_error("csv: column header written twice");
        write_cells(names);
        header_done_ = true;
    }

    void row(const std::vector<std::string>& cells) {
        if (!header_done_) throw std::logic_error("csv: data row before column header");
        write_cells(cells);
    }

    void row(const std::vector<double>& vals) {
        std::vector<std::string> cells;
        cells.reserve(vals.size());
        for (double v : vals) cells.push_back(csv_cell(v));
        row(cells);
    }

private:
    void write_cells(const std::vector<std::string>& cells) {
        if (!out_) throw std::runtime_error("csv: write to failed stream");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << "\n";
    }

    std::ofstream out_;
    bool header_done_ = false;
};

}  // namespace runtumble
