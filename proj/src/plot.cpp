#include "stimpute/plot.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace stimpute::plot {

Image::Image(int w, int h, Rgb bg) : w_(w), h_(h) {
    rgb_.resize(static_cast<size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) set(x, y, bg);
}

void Image::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    const size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
    rgb_[i] = c.r;
    rgb_[i + 1] = c.g;
    rgb_[i + 2] = c.b;
}

void Image::line(double x0, double y0, double x1, double y1, Rgb c) {
    const double dx = x1 - x0, dy = y1 - y0;
    const int steps = static_cast<int>(std::max(std::fabs(dx), std::fabs(dy))) + 1;
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        set(static_cast<int>(std::lround(x0 + t * dx)),
            static_cast<int>(std::lround(y0 + t * dy)), c);
    }
}

void Image::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
        for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
}

void Image::blend_rect(int x0, int y0, int x1, int y1, Rgb c, double alpha) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
        for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) {
            if (x < 0 || y < 0 || x >= w_ || y >= h_) continue;
            const size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
            rgb_[i] = static_cast<uint8_t>(rgb_[i] * (1 - alpha) + c.r * alpha);
            rgb_[i + 1] = static_cast<uint8_t>(rgb_[i + 1] * (1 - alpha) + c.g * alpha);
            rgb_[i + 2] = static_cast<uint8_t>(rgb_[i + 2] * (1 - alpha) + c.b * alpha);
        }
}

namespace {

// 4x6 glyphs for axis labels; bit 3 is the leftmost column.
const uint8_t* glyph(char ch) {
    static const uint8_t d0[6] = {0x6, 0x9, 0x9, 0x9, 0x9, 0x6};
    static const uint8_t d1[6] = {0x2, 0x6, 0x2, 0x2, 0x2, 0x7};
    static const uint8_t d2[6] = {0x6, 0x9, 0x1, 0x2, 0x4, 0xF};
    static const uint8_t d3[6] = {0xE, 0x1, 0x6, 0x1, 0x9, 0x6};
    static const uint8_t d4[6] = {0x2, 0x6, 0xA, 0xF, 0x2, 0x2};
    static const uint8_t d5[6] = {0xF, 0x8, 0xE, 0x1, 0x9, 0x6};
    static const uint8_t d6[6] = {0x6, 0x8, 0xE, 0x9, 0x9, 0x6};
    static const uint8_t d7[6] = {0xF, 0x1, 0x2, 0x2, 0x4, 0x4};
    static const uint8_t d8[6] = {0x6, 0x9, 0x6, 0x9, 0x9, 0x6};
    static const uint8_t d9[6] = {0x6, 0x9, 0x9, 0x7, 0x1, 0x6};
    static const uint8_t dot[6] = {0x0, 0x0, 0x0, 0x0, 0x0, 0x2};
    static const uint8_t minus[6] = {0x0, 0x0, 0xF, 0x0, 0x0, 0x0};
    static const uint8_t plus[6] = {0x0, 0x2, 0x7, 0x2, 0x0, 0x0};
    static const uint8_t e[6] = {0x0, 0x6, 0x9, 0xF, 0x8, 0x7};
    switch (ch) {
        case '0': return d0;
        case '1': return d1;
        case '2': return d2;
        case '3': return d3;
        case '4': return d4;
        case '5': return d5;
        case '6': return d6;
        case '7': return d7;
        case '8': return d8;
        case '9': return d9;
        case '.': return dot;
        case '-': return minus;
        case '+': return plus;
        case 'e':
        case 'E': return e;
        default: return nullptr;
    }
}

void push_be32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

void write_chunk(std::ofstream& os, const char type[4],
                 const std::vector<uint8_t>& data) {
    std::vector<uint8_t> head;
    push_be32(head, static_cast<uint32_t>(data.size()));
    os.write(reinterpret_cast<const char*>(head.data()), 4);
    os.write(type, 4);
    if (!data.empty())
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size()));
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<uint8_t> tail;
    push_be32(tail, static_cast<uint32_t>(crc));
    os.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace

void Image::text(int x, int y, const std::string& s, Rgb c) {
    int cx = x;
    for (char ch : s) {
        const uint8_t* g = glyph(ch);
        if (g) {
            for (int r = 0; r < 6; ++r)
                for (int col = 0; col < 4; ++col)
                    if ((g[r] >> (3 - col)) & 1) set(cx + col, y + r, c);
        }
        cx += 5;
    }
}

void Image::save_png(const std::string& path) const {
    // scanlines with filter byte 0, zlib-deflated
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(h_) * (static_cast<size_t>(w_) * 3 + 1));
    for (int y = 0; y < h_; ++y) {
        raw.push_back(0);
        const uint8_t* row = rgb_.data() + static_cast<size_t>(y) * w_ * 3;
        raw.insert(raw.end(), row, row + static_cast<size_t>(w_) * 3);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    compressed.resize(bound);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("png: cannot write " + path);
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    os.write(reinterpret_cast<const char*>(sig), 8);
    std::vector<uint8_t> ihdr;
    push_be32(ihdr, static_cast<uint32_t>(w_));
    push_be32(ihdr, static_cast<uint32_t>(h_));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(os, "IHDR", ihdr);
    write_chunk(os, "IDAT", compressed);
    write_chunk(os, "IEND", {});
    if (!os) throw std::runtime_error("png: write failed for " + path);
}

namespace {

struct Frame {
    int left, right, top, bottom;
    double ymin, ymax;
    int n;

    double sx(double i) const {
        return left + (right - left) * (n > 1 ? i / (n - 1) : 0.5);
    }
    double sy(double v) const {
        const double t = (v - ymin) / (ymax - ymin);
        return bottom - t * (bottom - top);
    }
};

Frame make_frame(Image& img, double ymin, double ymax, int n) {
    if (!(ymax > ymin)) {
        const double pad = std::max(1e-9, std::fabs(ymin) * 0.1 + 1e-3);
        ymin -= pad;
        ymax += pad;
    } else {
        const double pad = (ymax - ymin) * 0.05;
        ymin -= pad;
        ymax += pad;
    }
    Frame f{46, img.width() - 10, 8, img.height() - 18, ymin, ymax, n};
    const Rgb axis{120, 120, 120};
    img.line(f.left, f.top, f.left, f.bottom, axis);
    img.line(f.left, f.bottom, f.right, f.bottom, axis);
    char buf[32];
    for (int k = 0; k <= 4; ++k) {
        const double v = ymin + (ymax - ymin) * k / 4.0;
        const int y = static_cast<int>(f.sy(v));
        img.line(f.left - 3, y, f.left, y, axis);
        std::snprintf(buf, sizeof(buf), "%.3g", v);
        img.text(2, y - 3, buf, axis);
    }
    for (int k = 0; k <= 4; ++k) {
        const double i = (n - 1) * k / 4.0;
        const int x = static_cast<int>(f.sx(i));
        img.line(x, f.bottom, x, f.bottom + 3, axis);
        std::snprintf(buf, sizeof(buf), "%g", i);
        img.text(x - 6, f.bottom + 6, buf, axis);
    }
    return f;
}

void scan_range(const std::vector<double>& v, double& lo, double& hi) {
    for (double x : v)
        if (std::isfinite(x)) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
}

void draw_series(Image& img, const Frame& f, const std::vector<double>& y, Rgb c,
                 bool points_only) {
    for (size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) continue;
        const double x1 = f.sx(static_cast<double>(i));
        const double y1 = f.sy(y[i]);
        if (points_only) {
            img.fill_rect(static_cast<int>(x1) - 1, static_cast<int>(y1) - 1,
                          static_cast<int>(x1) + 1, static_cast<int>(y1) + 1, c);
            continue;
        }
        if (i > 0 && std::isfinite(y[i - 1]))
            img.line(f.sx(static_cast<double>(i - 1)), f.sy(y[i - 1]), x1, y1, c);
        else
            img.set(static_cast<int>(x1), static_cast<int>(y1), c);
    }
}

}  // namespace

void save_line_chart(const std::string& path, const std::vector<Series>& series, int w,
                     int h) {
    Image img(w, h);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    size_t n = 1;
    for (const auto& s : series) {
        scan_range(s.y, lo, hi);
        n = std::max(n, s.y.size());
    }
    if (!std::isfinite(lo)) {
        lo = 0;
        hi = 1;
    }
    Frame f = make_frame(img, lo, hi, static_cast<int>(n));
    for (const auto& s : series) draw_series(img, f, s.y, s.color, s.points_only);
    img.save_png(path);
}

void save_overlay_chart(const std::string& path, const OverlaySpec& spec, int w, int h) {
    Image img(w, h);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    scan_range(spec.truth, lo, hi);
    scan_range(spec.median, lo, hi);
    scan_range(spec.band_lo, lo, hi);
    scan_range(spec.band_hi, lo, hi);
    if (!std::isfinite(lo)) {
        lo = 0;
        hi = 1;
    }
    Frame f = make_frame(img, lo, hi, static_cast<int>(spec.truth.size()));
    const bool has_band = !spec.band_lo.empty() &&
                          spec.band_lo.size() == spec.band_hi.size();
    if (has_band) {
        const Rgb band{70, 130, 220};
        for (size_t i = 0; i < spec.band_lo.size(); ++i) {
            if (!std::isfinite(spec.band_lo[i]) || !std::isfinite(spec.band_hi[i]))
                continue;
            const int x = static_cast<int>(f.sx(static_cast<double>(i)));
            img.blend_rect(x - 1, static_cast<int>(f.sy(spec.band_hi[i])), x + 1,
                           static_cast<int>(f.sy(spec.band_lo[i])), band, 0.25);
        }
    }
    draw_series(img, f, spec.truth, {150, 150, 150}, false);
    draw_series(img, f, spec.median, {200, 60, 40}, false);
    draw_series(img, f, spec.observed, {20, 20, 20}, true);
    img.save_png(path);
}

}  // namespace stimpute::plot
