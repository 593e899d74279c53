#pragma once

// Report output: CSV tables with '#' metadata comments, minimal SVG line
// plots and atomic file replacement.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace orliczq::cli {

// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
std::string num(double v);

// RFC 4180 quoting: fields with commas, quotes or line breaks are quoted.
std::string csv_field(std::string_view s);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    // '#'-prefixed lines before the header row.
    void comment(const std::string& line);
    // '#'-prefixed lines after the last row.
    void footer(const std::string& line);
    void row(const std::vector<std::string>& cells);

    std::size_t rows() const noexcept { return rows_.size(); }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::string> comments_;
    std::vector<std::string> footers_;
    std::vector<std::vector<std::string>> rows_;
};

// Writes to a temporary file in the same directory and renames it over path.
void write_atomic(const std::filesystem::path& path, std::string_view content);

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> xs;
    std::vector<double> ys;
    // Optional horizontal reference line.
    std::optional<double> reference;
    std::string reference_label;
    bool log2_x = false;
};

std::string render_svg(const LinePlot& plot);

}  // namespace orliczq::cli
