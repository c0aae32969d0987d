#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "stimpute/cond_encoder.hpp"
#include "stimpute/contrastive.hpp"
#include "stimpute/dataset.hpp"
#include "stimpute/diffusion.hpp"
#include "stimpute/masking.hpp"
#include "stimpute/noise_predictor.hpp"
#include "stimpute/schedule.hpp"

namespace stimpute {

struct ModelConfig {
    int L = 0;
    int d = 64;
    int d_trend = 0;  // 0 = d/2
    int d_season = 0;
    bool use_trend = true;
    bool use_season = true;
    int layers = 4;
    int heads = 8;
    int t_embed_dim = 128;
    int gcn_order = 2;
    int adapt_dim = 10;

    int T = 50;
    double beta_1 = 1e-4;
    double beta_T = 0.2;
    ScheduleShape shape = ScheduleShape::kQuadratic;

    bool use_cl = true;
    double alpha = 0.1;
    ContrastiveConfig contrastive;

    uint64_t init_seed = 1;
};

/// Everything the training loop and sampler share: parameters, the three
/// network modules, the schedule, and the graph supports.
struct ModelSet {
    ModelConfig config;
    ParameterStore params;
    std::unique_ptr<ConditionalEncoder> encoder;
    std::unique_ptr<NoisePredictor> predictor;
    std::unique_ptr<ContrastiveHead> contrastive;  // null when use_cl = false
    NoiseSchedule schedule;
    GraphSupports supports;
};

std::unique_ptr<ModelSet> build_models(const ModelConfig& cfg, const GraphSpec& graph);

/// The fixed ingredients of one training-window loss evaluation. k_pos may be
/// pre-pinned (gradient checks) or left empty, in which case the key view is
/// computed from the current pooled features inside build_step_loss.
struct StepInputs {
    Tensor cond_values;  // [N,L] interpolated conditioner, normalized units
    Tensor x_t;          // [N,L] noisy target, zero off-target
    Tensor eps;          // [N,L] injected noise
    Tensor target_mask;  // [N,L]
    int t = 1;
    Tensor q_dropout;    // [d]
    Tensor k_dropout;    // [d]
    Tensor k_pos;        // [d_c] or empty
    Tensor queue;        // [K, d_c] snapshot
};

struct StepLossIds {
    Tape::Id total = -1;
    Tape::Id rl = -1;
    Tape::Id cl = -1;  // -1 when the contrastive path is off
};

/// Builds loss = masked noise loss + alpha * InfoNCE on one tape. The key
/// embedding (when computed here) is returned through k_out for the queue.
StepLossIds build_step_loss(Tape& t, const ModelSet& m, const StepInputs& si,
                            double alpha, Tensor* k_out = nullptr);

struct TrainSettings {
    int64_t steps = 2000;
    int batch = 16;
    double lr = 1e-3;
    double lr_min = 0.0;
    double weight_decay = 1e-5;
    int eval_every = 100;
    uint64_t seed = 1;
    double point_rate = 0.25;
    double block_point_rate = 0.05;
    double block_start_prob = 0.0015;
    double block_min_hours = 1.0;
    double block_max_hours = 4.0;
};

struct TrainLogRecord {
    int64_t step = 0;
    double loss_rl = 0.0;
    double loss_cl = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<TrainLogRecord> log;
    double best_val_loss = 0.0;
    int64_t best_step = -1;
};

/// Alg.-style training loop: mask -> interpolate -> noise -> predict -> total
/// loss -> Adam step, alternating point/block masking per batch, cosine
/// annealing, momentum + queue updates, and best-checkpoint selection on a
/// deterministic validation loss. Throws on divergence (non-finite loss).
TrainResult train_model(ModelSet& m, const Dataset& train, const Dataset& valid,
                        const TrainSettings& ts,
                        const std::function<void(const TrainLogRecord&)>& on_log = {});

/// Deterministic validation loss (fixed masks, steps, and noise per window).
double validation_loss(const ModelSet& m, const Dataset& valid, uint64_t seed,
                       double point_rate);

}  // namespace stimpute
