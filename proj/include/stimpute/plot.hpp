#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stimpute::plot {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

class Image {
public:
    Image(int w, int h, Rgb bg = {255, 255, 255});

    int width() const { return w_; }
    int height() const { return h_; }

    void set(int x, int y, Rgb c);
    void line(double x0, double y0, double x1, double y1, Rgb c);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
    void blend_rect(int x0, int y0, int x1, int y1, Rgb c, double alpha);
    /// 4x6 bitmap digits and numeric punctuation; numbers on axes only.
    void text(int x, int y, const std::string& s, Rgb c);

    void save_png(const std::string& path) const;

private:
    int w_, h_;
    std::vector<uint8_t> rgb_;
};

struct Series {
    std::vector<double> y;  // NaN breaks the polyline
    Rgb color;
    bool points_only = false;
};

/// Indexed line chart with axes and numeric tick labels.
void save_line_chart(const std::string& path, const std::vector<Series>& series,
                     int w = 960, int h = 360);

/// Per-node imputation overlay: truth line, observed points, median line, and
/// an ensemble band (omitted when lo/hi are empty).
struct OverlaySpec {
    std::vector<double> truth;
    std::vector<double> observed;  // NaN where unobserved
    std::vector<double> median;
    std::vector<double> band_lo;
    std::vector<double> band_hi;
};

void save_overlay_chart(const std::string& path, const OverlaySpec& spec, int w = 960,
                        int h = 300);

}  // namespace stimpute::plot
