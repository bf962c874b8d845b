#pragma once

// Self-contained SVG plots: per-step regret curves with a ±1 std band, and
// two-dimensional safe-set rasters.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "safeban/csv.hpp"

namespace safeban {

inline constexpr std::size_t kMaxPlotPoints = 2000;

struct RegretCurve {
    std::string label;
    std::vector<double> rounds;
    std::vector<double> mean;
    std::vector<double> std;
};

/// Up to `max_points` uniformly spaced indices of [0, n), first and last included.
inline std::vector<std::size_t> decimate(std::size_t n, std::size_t max_points = kMaxPlotPoints) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    if (n <= max_points) {
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    for (std::size_t k = 0; k < max_points; ++k)
        idx.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(k) * (n - 1) / (max_points - 1))));
    return idx;
}

namespace detail {

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return colors[i % 6];
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << body;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace detail

inline std::string regret_svg(const std::vector<RegretCurve>& curves, const std::string& title = "per-step regret") {
    if (curves.empty()) throw std::invalid_argument("regret_svg: no curves");
    const double W = 720, H = 440, left = 70, right = 20, top = 40, bottom = 50;
    double xmax = 1, ymax = 0;
    for (const auto& c : curves) {
        if (c.rounds.empty() || c.mean.size() != c.rounds.size() || c.std.size() != c.rounds.size())
            throw std::invalid_argument("regret_svg: empty or inconsistent curve '" + c.label + "'");
        xmax = std::max(xmax, c.rounds.back());
        for (std::size_t i = 0; i < c.mean.size(); ++i) ymax = std::max(ymax, c.mean[i] + c.std[i]);
    }
    if (!(ymax > 0)) ymax = 1;
    auto px = [&](double x) { return left + (x / xmax) * (W - left - right); };
    auto py = [&](double y) { return top + (1.0 - std::clamp(y / ymax, 0.0, 1.0)) * (H - top - bottom); };

    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(W) + "\" height=\"" + detail::fmt(H) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + detail::fmt(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + detail::xml_escape(title) + "</text>\n";
    s += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(H - bottom) + "\" x2=\"" + detail::fmt(W - right) + "\" y2=\"" +
         detail::fmt(H - bottom) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top) + "\" x2=\"" + detail::fmt(left) + "\" y2=\"" +
         detail::fmt(H - bottom) + "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmax * k / 4, yv = ymax * k / 4;
        s += "<text x=\"" + detail::fmt(px(xv)) + "\" y=\"" + detail::fmt(H - bottom + 18) + "\" text-anchor=\"middle\" font-size=\"11\">" +
             format_number(xv) + "</text>\n";
        s += "<text x=\"" + detail::fmt(left - 6) + "\" y=\"" + detail::fmt(py(yv) + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
             format_number(yv) + "</text>\n";
    }
    s += "<text x=\"" + detail::fmt(W / 2) + "\" y=\"" + detail::fmt(H - 10) + "\" text-anchor=\"middle\" font-size=\"12\">round</text>\n";

    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const auto& c = curves[ci];
        const auto idx = decimate(c.rounds.size());
        std::string band, line;
        for (std::size_t i : idx) band += detail::fmt(px(c.rounds[i])) + "," + detail::fmt(py(c.mean[i] + c.std[i])) + " ";
        for (auto it = idx.rbegin(); it != idx.rend(); ++it)
            band += detail::fmt(px(c.rounds[*it])) + "," + detail::fmt(py(std::max(0.0, c.mean[*it] - c.std[*it]))) + " ";
        for (std::size_t i : idx) line += detail::fmt(px(c.rounds[i])) + "," + detail::fmt(py(c.mean[i])) + " ";
        s += "<polygon class=\"band\" fill=\"" + std::string(detail::palette(ci)) + "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"" +
             band + "\"/>\n";
        s += "<polyline class=\"curve\" data-points=\"" + std::to_string(idx.size()) + "\" fill=\"none\" stroke=\"" +
             detail::palette(ci) + "\" stroke-width=\"1.5\" points=\"" + line + "\"/>\n";
        s += "<text x=\"" + detail::fmt(W - right - 180) + "\" y=\"" + detail::fmt(top + 16 + 16.0 * ci) + "\" font-size=\"12\" fill=\"" +
             detail::palette(ci) + "\">" + detail::xml_escape(c.label) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

inline void emit_regret_svg(const std::vector<RegretCurve>& curves, const std::string& path, const std::string& title = "per-step regret") {
    detail::write_file(path, regret_svg(curves, title));
}

/// One safe-set grid over a two-dimensional box; cell (i, j) is row-major with
/// the first coordinate major, matching the box grid order and coordinates.
struct SafeSetSnapshot {
    std::size_t resolution = 0;
    double lower[2] = {0, 0};
    double upper[2] = {0, 0};
    std::uint64_t round = 0;
    std::vector<char> truth;     // true safe set D₀^s
    std::vector<char> warmup;    // D^w
    std::vector<char> estimate;  // certified safe under the current region

    std::size_t cells() const noexcept { return resolution * resolution; }
    double coordinate(std::size_t axis, std::size_t k) const {
        if (resolution == 1) return 0.5 * (lower[axis] + upper[axis]);
        if (k + 1 == resolution) return upper[axis];
        return lower[axis] + static_cast<double>(k) * ((upper[axis] - lower[axis]) / static_cast<double>(resolution - 1));
    }
};

/// Layers (Figure-3 style): D₀ black, truth blue, then each snapshot's estimate,
/// the earliest in red and later ones in green. Exactly resolution² cells.
inline std::string safeset_svg(const std::vector<SafeSetSnapshot>& snaps, const std::string& title = "safe sets") {
    if (snaps.empty()) throw std::invalid_argument("safeset_svg: no snapshots");
    const std::size_t n = snaps.front().resolution;
    for (const auto& sn : snaps)
        if (sn.resolution != n || sn.truth.size() != n * n || sn.estimate.size() != n * n)
            throw std::invalid_argument("safeset_svg: snapshots must share one grid");
    const double cell = std::max(2.0, 600.0 / static_cast<double>(n));
    const double side = cell * static_cast<double>(n), top = 40;
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(side + 20) + "\" height=\"" + detail::fmt(side + top + 30) +
         "\" shape-rendering=\"crispEdges\">\n";
    s += "<text x=\"10\" y=\"24\" font-size=\"14\">" + detail::xml_escape(title);
    for (std::size_t k = 0; k < snaps.size(); ++k)
        s += std::string(k == 0 ? " | red: round " : " | green: round ") + std::to_string(snaps[k].round);
    s += "</text>\n<g>\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t idx = i * n + j;
            const char* color = "black";
            if (snaps.front().estimate[idx]) color = "red";
            else {
                bool later = false;
                for (std::size_t k = 1; k < snaps.size(); ++k) later = later || snaps[k].estimate[idx];
                if (later) color = "green";
                else if (snaps.front().truth[idx]) color = "blue";
            }
            // first coordinate to the right, second upward
            const double x = 10 + cell * static_cast<double>(i);
            const double y = top + cell * static_cast<double>(n - 1 - j);
            s += "<rect class=\"cell\" x=\"" + detail::fmt(x) + "\" y=\"" + detail::fmt(y) + "\" width=\"" + detail::fmt(cell) +
                 "\" height=\"" + detail::fmt(cell) + "\" fill=\"" + color + "\"/>\n";
        }
    }
    s += "</g>\n</svg>\n";
    return s;
}

inline void emit_safeset_svg(const std::vector<SafeSetSnapshot>& snaps, const std::string& path, const std::string& title = "safe sets") {
    detail::write_file(path, safeset_svg(snaps, title));
}

inline const std::vector<std::string>& snapshot_columns() {
    static const std::vector<std::string> cols{"x1", "x2", "d0", "truth", "warmup", "estimate"};
    return cols;
}

inline void emit_snapshot_csv(const SafeSetSnapshot& sn, const std::string& path) {
    CsvWriter w(path, snapshot_columns());
    for (std::size_t i = 0; i < sn.resolution; ++i)
        for (std::size_t j = 0; j < sn.resolution; ++j) {
            const std::size_t idx = i * sn.resolution + j;
            w.row({format_number(sn.coordinate(0, i)), format_number(sn.coordinate(1, j)), "1", sn.truth[idx] ? "1" : "0",
                   sn.warmup[idx] ? "1" : "0", sn.estimate[idx] ? "1" : "0"});
        }
    w.close();
}

/// Reads a snapshot CSV written by emit_snapshot_csv. The round is not stored in the file.
inline SafeSetSnapshot read_snapshot_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (t.header != snapshot_columns()) throw std::runtime_error("'" + path + "' is not a safe-set snapshot CSV");
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(t.rows.size()))));
    if (n * n != t.rows.size() || n == 0) throw std::runtime_error("'" + path + "' does not hold a square grid");
    SafeSetSnapshot sn;
    sn.resolution = n;
    sn.lower[0] = parse_number(t.rows.front()[0]);
    sn.lower[1] = parse_number(t.rows.front()[1]);
    sn.upper[0] = parse_number(t.rows.back()[0]);
    sn.upper[1] = parse_number(t.rows.back()[1]);
    for (const auto& r : t.rows) {
        sn.truth.push_back(r[3] == "1");
        sn.warmup.push_back(r[4] == "1");
        sn.estimate.push_back(r[5] == "1");
    }
    return sn;
}

inline RegretCurve read_aggregate_csv(const std::string& path, std::string label) {
    const CsvTable t = read_csv(path);
    const std::size_t cr = t.column("round"), cm = t.column("mean"), cs = t.column("std");
    RegretCurve c;
    c.label = std::move(label);
    for (const auto& r : t.rows) {
        c.rounds.push_back(parse_number(r[cr]));
        c.mean.push_back(parse_number(r[cm]));
        c.std.push_back(parse_number(r[cs]));
    }
    if (c.rounds.empty()) throw std::runtime_error("'" + path + "' has no data rows");
    return c;
}

}  // namespace safeban
