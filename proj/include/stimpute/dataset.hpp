#pragma once

#include <string>
#include <vector>

#include "stimpute/tensor.hpp"

namespace stimpute {

/// One N x L slice of the series: the unit of training and imputation.
/// `values` keeps ground truth even at target cells (scoring reads it there);
/// model code must only look at cells with observed_mask = 1. Cells with
/// neither mask set are truly missing and hold NaN.
struct Window {
    Tensor values;         // [N, L]
    Tensor observed_mask;  // [N, L] in {0,1}
    Tensor target_mask;    // [N, L] in {0,1}
    std::vector<int64_t> timestamps;  // epoch seconds, strictly increasing
    int step_minutes = 0;

    int64_t nodes() const { return values.dim(0); }
    int64_t length() const { return values.dim(1); }
    int64_t observed_count() const;
    int64_t target_count() const;

    /// Enforces mask disjointness, mask ranges, timestamp spacing.
    void validate() const;
};

/// Node geography: pairwise distances and the derived adjacency.
struct GraphSpec {
    std::vector<std::string> node_ids;
    Tensor distances;  // [N, N], nonnegative; zero diagonal
    Tensor adjacency;  // [N, N] in [0,1]; unit diagonal

    int64_t nodes() const { return adjacency.dim(0); }
    void validate() const;
};

/// Per-node interpolation of the observed cells; the coarse conditioner fed
/// to the conditional encoder.
struct InterpolatedConditioner {
    Tensor values;       // [N, L], finite everywhere
    Tensor source_mask;  // [N, L]; 1 where the entry was observed
};

/// Per-node z-score statistics, fitted on the training split only.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool fitted() const { return !mean.empty(); }
    double normalize(double v, int64_t node) const {
        return (v - mean[static_cast<size_t>(node)]) / stddev[static_cast<size_t>(node)];
    }
    double denormalize(double v, int64_t node) const {
        return v * stddev[static_cast<size_t>(node)] + mean[static_cast<size_t>(node)];
    }
};

struct Dataset {
    std::vector<Window> windows;
    GraphSpec graph;
    Normalization normalization;
    int step_minutes = 0;

    int64_t nodes() const { return graph.nodes(); }
};

/// Thresholded Gaussian kernel of pairwise distances:
/// a[i,j] = exp(-(d[i,j]/width)^2) when above `threshold`, else 0; a[i,i] = 1.
Tensor build_adjacency(const Tensor& distances, double kernel_width, double threshold);

struct LoadMeta {
    int window_len = 0;
    int stride = 0;
    double train_frac = 0.7;   // used to fit default normalization at load time
    double valid_frac = 0.1;
    double kernel_width = 0.0;  // 0 = std of the finite off-diagonal distances
    double threshold = 0.1;
};

/// Values file: CSV, header row of node ids, first column ISO-8601 timestamps,
/// empty cell or "NaN" = missing. Adjacency file: dense N x N weights, or a
/// 3-column edge list (src,dst,distance) run through build_adjacency.
Dataset load_dataset(const std::string& values_path, const std::string& adjacency_path,
                     const LoadMeta& meta);

/// Builds a dataset directly from in-memory series (synthetic generator path).
Dataset make_dataset(const Tensor& values /*[N, T]*/, const GraphSpec& graph,
                     const std::vector<int64_t>& timestamps, int step_minutes,
                     int window_len, int stride);

Normalization fit_normalization(const std::vector<Window>& train_windows);

struct SplitResult {
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Assigns whole windows to splits in time order and fits normalization on the
/// training windows (copied to all three splits). Errors when a split is empty.
SplitResult split_chronological(const Dataset& ds, double train_frac = 0.7,
                                double valid_frac = 0.1);

/// Per-node linear interpolation over time through the observed cells, with
/// nearest-value extension before the first / after the last observation.
/// Nodes with no observation are filled from `all_missing_fill` (defaults to
/// zero, the training mean in normalized units).
InterpolatedConditioner linear_interpolate(const Window& w);
InterpolatedConditioner linear_interpolate(const Window& w,
                                           const std::vector<double>& all_missing_fill);

/// Window with values mapped through the normalization (NaN cells preserved).
Window normalize_window(const Window& w, const Normalization& norm);

int64_t parse_iso8601(const std::string& s);
std::string format_iso8601(int64_t epoch_seconds);

}  // namespace stimpute
