#include "stimpute/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stimpute {

namespace {

bool is_missing_token(const std::string& s) {
    if (s.empty()) return true;
    std::string t;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (t.empty()) return true;
    std::transform(t.begin(), t.end(), t.begin(), ::tolower);
    return t == "nan" || t == "na" || t == "null";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Howard Hinnant's days-from-civil; gives a timegm without the C locale API.
int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<int64_t>(era) * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

int64_t parse_iso8601(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    const int got =
        std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec);
    if (got < 3 || mo < 1 || mo > 12 || d < 1 || d > 31)
        throw std::invalid_argument("bad ISO-8601 timestamp: " + s);
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
           h * 3600 + mi * 60 + sec;
}

std::string format_iso8601(int64_t epoch_seconds) {
    int64_t days = epoch_seconds / 86400;
    int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lld", y, m, d,
                  static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem % 3600) / 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

int64_t Window::observed_count() const {
    int64_t c = 0;
    for (int64_t i = 0; i < observed_mask.size(); ++i) c += observed_mask[i] != 0.0;
    return c;
}

int64_t Window::target_count() const {
    int64_t c = 0;
    for (int64_t i = 0; i < target_mask.size(); ++i) c += target_mask[i] != 0.0;
    return c;
}

void Window::validate() const {
    if (!values.same_shape(observed_mask) || !values.same_shape(target_mask))
        throw std::invalid_argument("window: mask shape mismatch");
    for (int64_t i = 0; i < values.size(); ++i) {
        const double o = observed_mask[i], t = target_mask[i];
        if ((o != 0.0 && o != 1.0) || (t != 0.0 && t != 1.0))
            throw std::invalid_argument("window: masks must be binary");
        if (o + t > 1.0)
            throw std::invalid_argument("window: cell both observed and target");
        if ((o == 1.0 || t == 1.0) && !std::isfinite(values[i]))
            throw std::invalid_argument("window: non-finite value at a masked-in cell");
    }
    if (static_cast<int64_t>(timestamps.size()) != length())
        throw std::invalid_argument("window: timestamp count != L");
    for (size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] - timestamps[i - 1] != static_cast<int64_t>(step_minutes) * 60)
            throw std::invalid_argument("window: non-uniform timestamp spacing");
}

void GraphSpec::validate() const {
    const int64_t n = adjacency.dim(0);
    if (adjacency.dim(1) != n) throw std::invalid_argument("graph: adjacency not square");
    for (int64_t i = 0; i < n; ++i) {
        if (adjacency.at(i, i) != 1.0)
            throw std::invalid_argument("graph: adjacency diagonal must be 1");
        for (int64_t j = 0; j < n; ++j) {
            const double a = adjacency.at(i, j);
            if (!std::isfinite(a) || a < 0.0 || a > 1.0)
                throw std::invalid_argument("graph: adjacency entries must be in [0,1]");
        }
    }
}

Tensor build_adjacency(const Tensor& distances, double kernel_width, double threshold) {
    if (kernel_width <= 0.0) throw std::invalid_argument("kernel_width must be positive");
    const int64_t n = distances.dim(0);
    if (distances.dim(1) != n) throw std::invalid_argument("distances not square");
    Tensor a({n, n});
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            const double d = distances.at(i, j);
            if (d < 0.0) throw std::invalid_argument("negative distance");
            const double v = std::exp(-(d * d) / (kernel_width * kernel_width));
            a.at(i, j) = v >= threshold ? v : 0.0;
        }
        a.at(i, i) = 1.0;
    }
    return a;
}

namespace {

std::vector<Window> slice_windows(const Tensor& values,
                                  const std::vector<int64_t>& timestamps,
                                  int step_minutes, int window_len, int stride) {
    const int64_t n = values.dim(0);
    const int64_t total = values.dim(1);
    if (window_len <= 0 || stride <= 0)
        throw std::invalid_argument("window length and stride must be positive");
    if (window_len > total)
        throw std::invalid_argument("window length exceeds series length");
    std::vector<Window> windows;
    for (int64_t start = 0; start + window_len <= total; start += stride) {
        Window w;
        w.values = Tensor({n, window_len});
        w.observed_mask = Tensor({n, window_len});
        w.target_mask = Tensor({n, window_len});
        w.step_minutes = step_minutes;
        w.timestamps.assign(timestamps.begin() + start,
                            timestamps.begin() + start + window_len);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t l = 0; l < window_len; ++l) {
                const double v = values.at(i, start + l);
                w.values.at(i, l) = v;
                w.observed_mask.at(i, l) = std::isfinite(v) ? 1.0 : 0.0;
            }
        windows.push_back(std::move(w));
    }
    return windows;
}

GraphSpec load_graph(const std::string& path, int64_t n_nodes,
                     const std::vector<std::string>& node_ids, double kernel_width,
                     double threshold) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open adjacency file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw std::runtime_error("empty adjacency file: " + path);

    GraphSpec g;
    g.node_ids = node_ids;
    auto numeric = [](const std::string& s) {
        char* end = nullptr;
        std::strtod(s.c_str(), &end);
        return end != s.c_str();
    };
    const bool header_row = !numeric(rows[0][0]);
    const bool edge_list =
        rows[0].size() == 3 && (n_nodes != 3 || header_row || rows.size() != 3);
    if (edge_list) {
        constexpr double kUnknown = 1e30;  // kernel weight underflows to exactly 0
        g.distances = Tensor::full({n_nodes, n_nodes}, kUnknown);
        for (int64_t i = 0; i < n_nodes; ++i) g.distances.at(i, i) = 0.0;
        auto node_index = [&](const std::string& tok) -> int64_t {
            for (size_t k = 0; k < node_ids.size(); ++k)
                if (node_ids[k] == tok) return static_cast<int64_t>(k);
            char* end = nullptr;
            const long v = std::strtol(tok.c_str(), &end, 10);
            if (end == tok.c_str() || v < 0 || v >= n_nodes)
                throw std::runtime_error("edge list references unknown node: " + tok);
            return v;
        };
        for (size_t r = header_row ? 1 : 0; r < rows.size(); ++r) {
            if (rows[r].size() != 3)
                throw std::runtime_error("edge list row must have 3 columns");
            const int64_t i = node_index(rows[r][0]);
            const int64_t j = node_index(rows[r][1]);
            const double d = std::stod(rows[r][2]);
            if (d < 0.0) throw std::runtime_error("negative distance in edge list");
            g.distances.at(i, j) = d;
            g.distances.at(j, i) = d;
        }
        double width = kernel_width;
        if (width <= 0.0) {
            // std of the known off-diagonal distances
            double s = 0.0, s2 = 0.0;
            int64_t cnt = 0;
            for (int64_t i = 0; i < n_nodes; ++i)
                for (int64_t j = 0; j < n_nodes; ++j) {
                    const double d = g.distances.at(i, j);
                    if (i == j || d >= kUnknown) continue;
                    s += d;
                    s2 += d * d;
                    ++cnt;
                }
            width = cnt > 0 ? std::sqrt(std::max(s2 / cnt - (s / cnt) * (s / cnt), 1e-12))
                            : 1.0;
            if (width <= 0.0) width = 1.0;
        }
        g.adjacency = build_adjacency(g.distances, width, threshold);
    } else {
        const size_t first = header_row ? 1 : 0;
        if (rows.size() - first != static_cast<size_t>(n_nodes))
            throw std::runtime_error("dense adjacency row count != node count");
        g.distances = Tensor({n_nodes, n_nodes});
        g.adjacency = Tensor({n_nodes, n_nodes});
        for (int64_t i = 0; i < n_nodes; ++i) {
            const auto& row = rows[first + static_cast<size_t>(i)];
            const size_t off = row.size() == static_cast<size_t>(n_nodes) + 1 ? 1 : 0;
            if (row.size() - off != static_cast<size_t>(n_nodes))
                throw std::runtime_error("dense adjacency column count != node count");
            for (int64_t j = 0; j < n_nodes; ++j) {
                const double v = std::stod(row[off + static_cast<size_t>(j)]);
                if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                    throw std::runtime_error("dense adjacency entries must be in [0,1]");
                g.adjacency.at(i, j) = v;
            }
            g.adjacency.at(i, i) = 1.0;
        }
    }
    g.validate();
    return g;
}

}  // namespace

Dataset load_dataset(const std::string& values_path, const std::string& adjacency_path,
                     const LoadMeta& meta) {
    std::ifstream in(values_path);
    if (!in) throw std::runtime_error("cannot open values file: " + values_path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty values file");
    auto header = split_csv_line(line);
    if (header.size() < 2) throw std::runtime_error("values header needs node columns");
    std::vector<std::string> node_ids(header.begin() + 1, header.end());
    const int64_t n = static_cast<int64_t>(node_ids.size());

    std::vector<int64_t> timestamps;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != static_cast<size_t>(n) + 1)
            throw std::runtime_error("values row has wrong column count");
        timestamps.push_back(parse_iso8601(cells[0]));
        std::vector<double> row(static_cast<size_t>(n));
        for (int64_t j = 0; j < n; ++j) {
            const std::string& tok = cells[static_cast<size_t>(j) + 1];
            row[static_cast<size_t>(j)] =
                is_missing_token(tok) ? std::nan("") : std::stod(tok);
        }
        rows.push_back(std::move(row));
    }
    const int64_t total = static_cast<int64_t>(rows.size());
    if (total < 2) throw std::runtime_error("values file needs at least 2 rows");
    const int64_t spacing = timestamps[1] - timestamps[0];
    if (spacing <= 0 || spacing % 60 != 0)
        throw std::runtime_error("timestamp spacing must be a positive whole minute");
    for (int64_t i = 1; i < total; ++i)
        if (timestamps[static_cast<size_t>(i)] - timestamps[static_cast<size_t>(i) - 1] !=
            spacing)
            throw std::runtime_error("non-uniform timestamp spacing in values file");

    Tensor values({n, total});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t t = 0; t < total; ++t)
            values.at(i, t) = rows[static_cast<size_t>(t)][static_cast<size_t>(i)];

    GraphSpec graph = load_graph(adjacency_path, n, node_ids, meta.kernel_width,
                                 meta.threshold);

    Dataset ds;
    ds.graph = std::move(graph);
    ds.step_minutes = static_cast<int>(spacing / 60);
    ds.windows = slice_windows(values, timestamps, ds.step_minutes, meta.window_len,
                               meta.stride);
    if (ds.windows.empty()) throw std::runtime_error("no complete windows in series");
    const int64_t n_train = static_cast<int64_t>(
        std::floor(static_cast<double>(ds.windows.size()) * meta.train_frac));
    if (n_train > 0) {
        std::vector<Window> head(ds.windows.begin(), ds.windows.begin() + n_train);
        ds.normalization = fit_normalization(head);
    } else {
        ds.normalization = fit_normalization(ds.windows);
    }
    return ds;
}

Dataset make_dataset(const Tensor& values, const GraphSpec& graph,
                     const std::vector<int64_t>& timestamps, int step_minutes,
                     int window_len, int stride) {
    if (values.dim(0) != graph.nodes())
        throw std::invalid_argument("values/adjacency node count mismatch");
    Dataset ds;
    ds.graph = graph;
    ds.step_minutes = step_minutes;
    ds.windows = slice_windows(values, timestamps, step_minutes, window_len, stride);
    return ds;
}

Normalization fit_normalization(const std::vector<Window>& train_windows) {
    if (train_windows.empty()) throw std::invalid_argument("no training windows");
    const int64_t n = train_windows.front().nodes();
    Normalization norm;
    norm.mean.assign(static_cast<size_t>(n), 0.0);
    norm.stddev.assign(static_cast<size_t>(n), 1.0);
    for (int64_t i = 0; i < n; ++i) {
        double s = 0.0, s2 = 0.0;
        int64_t cnt = 0;
        for (const Window& w : train_windows)
            for (int64_t l = 0; l < w.length(); ++l)
                if (w.observed_mask.at(i, l) != 0.0) {
                    const double v = w.values.at(i, l);
                    s += v;
                    s2 += v * v;
                    ++cnt;
                }
        if (cnt > 0) {
            const double mu = s / cnt;
            const double var = std::max(s2 / cnt - mu * mu, 0.0);
            norm.mean[static_cast<size_t>(i)] = mu;
            norm.stddev[static_cast<size_t>(i)] = var > 1e-12 ? std::sqrt(var) : 1.0;
        }
    }
    return norm;
}

SplitResult split_chronological(const Dataset& ds, double train_frac, double valid_frac) {
    if (train_frac <= 0.0 || valid_frac <= 0.0 || train_frac + valid_frac >= 1.0)
        throw std::invalid_argument("split fractions must be positive and sum below 1");
    const int64_t w = static_cast<int64_t>(ds.windows.size());
    const int64_t n_train = static_cast<int64_t>(std::floor(w * train_frac));
    const int64_t n_valid = static_cast<int64_t>(std::floor(w * valid_frac));
    const int64_t n_test = w - n_train - n_valid;
    if (n_train == 0 || n_valid == 0 || n_test == 0)
        throw std::runtime_error("too few windows: a split would be empty");
    SplitResult out;
    auto fill = [&](Dataset& d, int64_t lo, int64_t hi) {
        d.graph = ds.graph;
        d.step_minutes = ds.step_minutes;
        d.windows.assign(ds.windows.begin() + lo, ds.windows.begin() + hi);
    };
    fill(out.train, 0, n_train);
    fill(out.valid, n_train, n_train + n_valid);
    fill(out.test, n_train + n_valid, w);
    out.train.normalization = fit_normalization(out.train.windows);
    out.valid.normalization = out.train.normalization;
    out.test.normalization = out.train.normalization;
    return out;
}

InterpolatedConditioner linear_interpolate(const Window& w) {
    return linear_interpolate(w,
                              std::vector<double>(static_cast<size_t>(w.nodes()), 0.0));
}

InterpolatedConditioner linear_interpolate(const Window& w,
                                           const std::vector<double>& all_missing_fill) {
    const int64_t n = w.nodes();
    const int64_t L = w.length();
    InterpolatedConditioner out;
    out.values = Tensor({n, L});
    out.source_mask = w.observed_mask;
    for (int64_t i = 0; i < n; ++i) {
        std::vector<int64_t> obs;
        for (int64_t l = 0; l < L; ++l)
            if (w.observed_mask.at(i, l) != 0.0) obs.push_back(l);
        if (obs.empty()) {
            const double fill = all_missing_fill[static_cast<size_t>(i)];
            for (int64_t l = 0; l < L; ++l) out.values.at(i, l) = fill;
            continue;
        }
        size_t k = 0;
        for (int64_t l = 0; l < L; ++l) {
            if (l <= obs.front()) {
                out.values.at(i, l) = w.values.at(i, obs.front());
            } else if (l >= obs.back()) {
                out.values.at(i, l) = w.values.at(i, obs.back());
            } else {
                while (obs[k + 1] < l) ++k;
                const int64_t l0 = obs[k], l1 = obs[k + 1];
                if (l == l0) {
                    out.values.at(i, l) = w.values.at(i, l0);
                } else {
                    const double t = static_cast<double>(l - l0) /
                                     static_cast<double>(l1 - l0);
                    out.values.at(i, l) =
                        (1.0 - t) * w.values.at(i, l0) + t * w.values.at(i, l1);
                }
            }
        }
    }
    return out;
}

Window normalize_window(const Window& w, const Normalization& norm) {
    Window out = w;
    for (int64_t i = 0; i < w.nodes(); ++i)
        for (int64_t l = 0; l < w.length(); ++l)
            if (std::isfinite(w.values.at(i, l)))
                out.values.at(i, l) = norm.normalize(w.values.at(i, l), i);
    return out;
}

}  // namespace stimpute
