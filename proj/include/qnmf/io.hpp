#pragma once

/**
 * @file io.hpp
 * @brief File formats: binary PPM (P6), QSTK1 quaternion planes, CSV tables.
 *
 * QSTK1 layout, all little-endian:
 *
 *   offset 0   "QSTK1"                    5 bytes
 *   offset 5   width                      u32
 *   offset 9   height                     u32
 *   offset 13  T0, T1, T2, T3 planes      4 · width · height f64, each plane row-major
 *
 * The same container stores any quaternion matrix (height = rows, width = cols),
 * e.g. a factor W.
 */

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "qnmf/errors.hpp"
#include "qnmf/imaging.hpp"
#include "qnmf/metrics.hpp"

namespace qnmf {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// PPM ------------------------------------------------------------------------

namespace detail {

class PpmHeaderParser {
public:
    explicit PpmHeaderParser(std::string_view s) : s_(s) {}

    std::string_view token() {
        skip_space_and_comments();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '#') ++pos_;
        if (start == pos_) throw FormatError("ppm: truncated header");
        return s_.substr(start, pos_ - start);
    }

    long number() {
        const auto t = token();
        long v = 0;
        for (char c : t) {
            if (c < '0' || c > '9') throw FormatError("ppm: malformed header field '" + std::string(t) + "'");
            v = v * 10 + (c - '0');
            if (v > (1L << 30)) throw FormatError("ppm: header value too large");
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= s_.size() || !is_space(s_[pos_])) throw FormatError("ppm: missing separator before raster");
        return pos_ + 1;
    }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

    void skip_space_and_comments() {
        while (pos_ < s_.size()) {
            if (is_space(s_[pos_])) {
                ++pos_;
            } else if (s_[pos_] == '#') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view s_;
    std::size_t pos_{0};
};

}  // namespace detail

inline RgbImage decode_ppm(std::string_view bytes) {
    detail::PpmHeaderParser p(bytes);
    if (p.token() != "P6") throw FormatError("ppm: only binary P6 is supported");
    const long w = p.number();
    const long h = p.number();
    const long maxval = p.number();
    if (w < 1 || h < 1) throw FormatError("ppm: empty image");
    if (maxval != 255) throw FormatError("ppm: unsupported maxval " + std::to_string(maxval) + " (only 255)");
    const std::size_t off = p.raster_offset();
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    if (bytes.size() < off + need) throw FormatError("ppm: truncated raster");
    if (bytes.size() > off + need) throw FormatError("ppm: trailing bytes after raster");

    RgbImage img{RealMatrix(h, w), RealMatrix(h, w), RealMatrix(h, w)};
    const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + off);
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x, px += 3) {
            img.r(y, x) = px[0] / 255.0;
            img.g(y, x) = px[1] / 255.0;
            img.b(y, x) = px[2] / 255.0;
        }
    return img;
}

/// Canonical header "P6\n<w> <h>\n255\n"; channels are round-half-up of v·255 after clipping to [0,1].
inline std::string encode_ppm(const RgbImage& img) {
    if (img.g.rows() != img.height() || img.b.rows() != img.height() || img.g.cols() != img.width() ||
        img.b.cols() != img.width())
        throw DimensionError("ppm: channel planes differ in shape");
    std::string out = fmt::format("P6\n{} {}\n255\n", img.width(), img.height());
    out.reserve(out.size() + static_cast<std::size_t>(img.width() * img.height() * 3));
    auto byte = [](double v) {
        const double c = std::clamp(v, 0.0, 1.0);
        return static_cast<char>(static_cast<unsigned char>(std::floor(c * 255.0 + 0.5)));
    };
    for (Index y = 0; y < img.height(); ++y)
        for (Index x = 0; x < img.width(); ++x) {
            out.push_back(byte(img.r(y, x)));
            out.push_back(byte(img.g(y, x)));
            out.push_back(byte(img.b(y, x)));
        }
    return out;
}

inline RgbImage read_ppm(const std::string& path) { return decode_ppm(read_file(path)); }
inline void write_ppm(const std::string& path, const RgbImage& img) { write_file(path, encode_ppm(img)); }

// QSTK1 ----------------------------------------------------------------------

inline constexpr std::string_view kQstkMagic = "QSTK1";
inline constexpr std::size_t kQstkHeaderBytes = 13;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xffu));
}

inline void put_f64(std::string& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<char>((v >> s) & 0xffu));
}

inline std::uint64_t get_le(const char* p, int bytes) {
    std::uint64_t v = 0;
    for (int k = bytes - 1; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(p[k]);
    return v;
}

}  // namespace detail

inline std::string encode_qstk(const QuatMatrix& q) {
    if (q.rows() > 0xffffffffLL || q.cols() > 0xffffffffLL) throw FormatError("qstk: image too large");
    std::string out(kQstkMagic);
    detail::put_u32(out, static_cast<std::uint32_t>(q.cols()));
    detail::put_u32(out, static_cast<std::uint32_t>(q.rows()));
    out.reserve(kQstkHeaderBytes + 32 * static_cast<std::size_t>(q.size()));
    for (int l = 0; l < kComponents; ++l)
        for (Index y = 0; y < q.rows(); ++y)
            for (Index x = 0; x < q.cols(); ++x) detail::put_f64(out, q.plane(l)(y, x));
    return out;
}

/// Decodes without any feasibility repair.
inline QuatMatrix decode_qstk(std::string_view bytes) {
    if (bytes.size() < kQstkHeaderBytes || bytes.substr(0, kQstkMagic.size()) != kQstkMagic)
        throw FormatError("qstk: bad magic");
    const auto w = detail::get_le(bytes.data() + 5, 4);
    const auto h = detail::get_le(bytes.data() + 9, 4);
    const std::uint64_t payload = 32 * w * h;
    if (bytes.size() != kQstkHeaderBytes + payload)
        throw FormatError(fmt::format("qstk: {} bytes for a {}x{} image, expected {}", bytes.size(), w, h,
                                      kQstkHeaderBytes + payload));
    QuatMatrix q(static_cast<Index>(h), static_cast<Index>(w));
    const char* p = bytes.data() + kQstkHeaderBytes;
    for (int l = 0; l < kComponents; ++l)
        for (Index y = 0; y < q.rows(); ++y)
            for (Index x = 0; x < q.cols(); ++x, p += 8) {
                const double d = std::bit_cast<double>(detail::get_le(p, 8));
                if (!std::isfinite(d)) throw FormatError("qstk: non-finite value");
                q.plane(l)(y, x) = d;
            }
    return q;
}

inline void write_qstk(const std::string& path, const StokesImage& img) { write_file(path, encode_qstk(img.pixels)); }

/// Loads a Stokes image; out-of-cone pixels are projected onto H_S and counted in *repaired.
inline StokesImage read_qstk(const std::string& path, std::size_t* repaired = nullptr) {
    StokesImage img{decode_qstk(read_file(path))};
    const std::size_t n = repair_stokes(img.pixels);
    if (repaired) *repaired = n;
    return img;
}

// CSV ------------------------------------------------------------------------

struct ReportRow {
    std::string method;
    Index rank{0};
    std::optional<MetricRecord> metrics;  // empty when the run failed
    std::optional<double> time_s;
    int iterations{0};
    std::string terminated_by;
};

inline constexpr std::string_view kReportHeader =
    "method,r,Upsilon,Upsilon_0,Upsilon_1,Upsilon_2,Upsilon_3,time_s,iterations,terminated_by\n";

/// Metrics in percent with two decimals; undefined values are empty cells.
inline std::string format_report(const std::vector<ReportRow>& rows) {
    std::string out(kReportHeader);
    auto pct = [](double v) { return fmt::format("{:.2f}", 100.0 * v); };
    for (const auto& row : rows) {
        out += fmt::format("{},{},", row.method, row.rank);
        if (row.metrics) {
            out += pct(row.metrics->upsilon);
            for (const auto& ul : row.metrics->upsilon_l) out += "," + (ul ? pct(*ul) : std::string{});
        } else {
            out += ",,,,";
        }
        out += ",";
        if (row.time_s) out += fmt::format("{:.2f}", *row.time_s);
        out += fmt::format(",{},{}\n", row.iterations, row.terminated_by);
    }
    return out;
}

inline void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
    write_file(path, format_report(rows));
}

/// "iter,e" followed by one line per outer iteration (shortest round-trip decimals).
inline std::string format_trace(const std::vector<double>& errors) {
    std::string out = "iter,e\n";
    for (std::size_t k = 0; k < errors.size(); ++k) out += fmt::format("{},{}\n", k + 1, errors[k]);
    return out;
}

/// Plain numeric CSV, one matrix row per line, round-trip exact.
inline std::string format_matrix_csv(const RealMatrix& a) {
    std::string out;
    for (Index u = 0; u < a.rows(); ++u) {
        for (Index v = 0; v < a.cols(); ++v) {
            if (v) out += ',';
            out += fmt::format("{}", a(u, v));
        }
        out += '\n';
    }
    return out;
}

inline RealMatrix parse_matrix_csv(std::string_view text) {
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<double> vals;
        std::size_t p = 0;
        while (p <= line.size()) {
            std::size_t comma = line.find(',', p);
            if (comma == std::string_view::npos) comma = line.size();
            const std::string cell(line.substr(p, comma - p));
            std::size_t used = 0;
            double d = 0;
            try {
                d = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw FormatError("csv: cannot parse '" + cell + "' as a number");
            }
            if (used != cell.size()) throw FormatError("csv: cannot parse '" + cell + "' as a number");
            vals.push_back(d);
            p = comma + 1;
        }
        if (!rows.empty() && vals.size() != rows.front().size()) throw FormatError("csv: ragged rows");
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw FormatError("csv: empty matrix");
    RealMatrix a(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index u = 0; u < a.rows(); ++u)
        for (Index v = 0; v < a.cols(); ++v) a(u, v) = rows[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
    return a;
}

}  // namespace qnmf
