#include "orliczq/cli/report.hpp"

#include "orliczq/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <system_error>
#include <unistd.h>

namespace orliczq::cli {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::comment(const std::string& line) { comments_.push_back(line); }
void CsvTable::footer(const std::string& line) { footers_.push_back(line); }

void CsvTable::row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) throw UsageError("csv row width differs from the header");
    rows_.push_back(cells);
}

std::string CsvTable::str() const {
    std::string out;
    auto join = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out += ',';
            out += csv_field(cells[i]);
        }
        out += "\n";
    };
    for (const auto& c : comments_) out += "# " + c + "\n";
    join(header_);
    for (const auto& r : rows_) join(r);
    for (const auto& f : footers_) out += "# " + f + "\n";
    return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw UsageError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    std::filesystem::path tmp = path;
    tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw UsageError("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw UsageError("cannot replace '" + path.string() + "': " + ec.message());
    }
}

namespace {

std::string escape_xml(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Round numbers for axis ticks covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target) {
    const double span = hi - lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= target) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) ticks.push_back(t);
    return ticks;
}

}  // namespace

std::string render_svg(const LinePlot& plot) {
    constexpr double W = 720, H = 440, left = 80, right = 30, top = 50, bottom = 60;
    if (plot.xs.size() != plot.ys.size() || plot.xs.empty()) throw UsageError("plot needs matching, non-empty series");
    auto tx = [&](double x) { return plot.log2_x ? std::log2(x) : x; };
    double xmin = tx(plot.xs.front()), xmax = xmin;
    double ymin = plot.ys.front(), ymax = ymin;
    for (std::size_t i = 0; i < plot.xs.size(); ++i) {
        xmin = std::min(xmin, tx(plot.xs[i]));
        xmax = std::max(xmax, tx(plot.xs[i]));
        if (std::isfinite(plot.ys[i])) {
            ymin = std::min(ymin, plot.ys[i]);
            ymax = std::max(ymax, plot.ys[i]);
        }
    }
    if (plot.reference) {
        ymin = std::min(ymin, *plot.reference);
        ymax = std::max(ymax, *plot.reference);
    }
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    const double pad = (ymax > ymin ? ymax - ymin : std::max(std::abs(ymax), 1.0)) * 0.08;
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return left + (tx(x) - xmin) / (xmax - xmin) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };

    std::string s;
    s += fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}" viewBox="0 0 {:.0f} {:.0f}">)"
                     "\n",
                     W, H, W, H);
    s += fmt::format(R"(<rect x="0" y="0" width="{:.0f}" height="{:.0f}" fill="white"/>)" "\n", W, H);
    s += fmt::format(R"(<text x="{:.1f}" y="28" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>)" "\n",
                     W / 2, escape_xml(plot.title));
    s += fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="none" stroke="black"/>)" "\n",
                     left, top, W - left - right, H - top - bottom);
    for (double t : nice_ticks(ymin, ymax, 6)) {
        const double y = py(t);
        s += fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="#dddddd"/>)" "\n", left, y,
                         W - right, y);
        s += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>)" "\n",
                         left - 6, y + 4, num(std::round(t * 1e9) / 1e9));
    }
    for (double x : plot.xs) {
        const double X = px(x);
        s += fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="black"/>)" "\n", X, H - bottom, X,
                         H - bottom + 5);
        s += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>)" "\n",
                         X, H - bottom + 18, num(x));
    }
    s += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>)" "\n",
                     (left + W - right) / 2, H - 16, escape_xml(plot.x_label));
    s += fmt::format(
        R"svg(<text x="18" y="{:.1f}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1f})">{}</text>)svg" "\n",
        (top + H - bottom) / 2, (top + H - bottom) / 2, escape_xml(plot.y_label));
    if (plot.reference) {
        const double y = py(*plot.reference);
        s += fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="#c0392b" stroke-dasharray="6 4"/>)" "\n",
                         left, y, W - right, y);
        s += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11" fill="#c0392b" text-anchor="end">{}</text>)" "\n",
                         W - right - 4, y - 5, escape_xml(plot.reference_label));
    }
    std::string points;
    for (std::size_t i = 0; i < plot.xs.size(); ++i) {
        if (!std::isfinite(plot.ys[i])) continue;
        points += fmt::format("{}{:.1f},{:.1f}", points.empty() ? "" : " ", px(plot.xs[i]), py(plot.ys[i]));
    }
    s += fmt::format(R"(<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="2"/>)" "\n", points);
    for (std::size_t i = 0; i < plot.xs.size(); ++i) {
        if (!std::isfinite(plot.ys[i])) continue;
        s += fmt::format(R"(<circle cx="{:.1f}" cy="{:.1f}" r="3.5" fill="#1f4e9c"/>)" "\n", px(plot.xs[i]), py(plot.ys[i]));
    }
    s += "</svg>\n";
    return s;
}

}  // namespace orliczq::cli
