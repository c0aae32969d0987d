#include "stimpute/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stimpute {

std::unique_ptr<ModelSet> build_models(const ModelConfig& cfg, const GraphSpec& graph) {
    auto m = std::make_unique<ModelSet>();
    m->config = cfg;
    Rng rng = Rng::stream(cfg.init_seed, "init");

    CondEncoderConfig ec;
    ec.L = cfg.L;
    ec.d = cfg.d;
    ec.d_trend = cfg.d_trend > 0 ? cfg.d_trend : cfg.d / 2;
    ec.d_season = cfg.d_season > 0 ? cfg.d_season : cfg.d - ec.d_trend;
    ec.use_trend = cfg.use_trend;
    ec.use_season = cfg.use_season;
    ec.gcn_order = cfg.gcn_order;
    ec.adapt_dim = cfg.adapt_dim;
    m->encoder = std::make_unique<ConditionalEncoder>(m->params, ec, graph.nodes(), rng);

    NoisePredictorConfig nc;
    nc.d = cfg.d;
    nc.layers = cfg.layers;
    nc.heads = cfg.heads;
    nc.t_embed_dim = cfg.t_embed_dim;
    nc.gcn_order = cfg.gcn_order;
    nc.adapt_dim = cfg.adapt_dim;
    m->predictor = std::make_unique<NoisePredictor>(m->params, nc, graph.nodes(), rng);

    if (cfg.use_cl) {
        ContrastiveConfig cc = cfg.contrastive;
        cc.feat_dim = cfg.d;
        m->contrastive = std::make_unique<ContrastiveHead>(m->params, cc, rng);
    }

    m->schedule = NoiseSchedule(cfg.T, cfg.beta_1, cfg.beta_T, cfg.shape);
    m->supports = GraphSupports::from_graph(graph);
    return m;
}

StepLossIds build_step_loss(Tape& t, const ModelSet& m, const StepInputs& si,
                            double alpha, Tensor* k_out) {
    StepLossIds out;
    Tape::Id c_con = m.encoder->forward(t, si.cond_values, m.supports);
    Tape::Id tap = -1;
    Tape::Id eps_hat = m.predictor->forward(t, c_con, si.cond_values, si.x_t, si.t,
                                            m.supports, &tap);
    out.rl = t.masked_mse(eps_hat, si.eps, si.target_mask);
    if (!m.contrastive || alpha < 0.0) {
        out.total = out.rl;
        return out;
    }
    Tape::Id pooled = t.mean_pool_nl(tap);
    Tape::Id q = m.contrastive->query_embedding(t, pooled, si.q_dropout);
    Tensor k_pos = si.k_pos;
    if (k_pos.size() == 0) {
        k_pos = m.contrastive->key_embedding(t.val(pooled), si.k_dropout);
        if (k_out) *k_out = k_pos;
    }
    out.cl = t.info_nce(q, k_pos, si.queue, m.contrastive->config().tau);
    out.total = t.add_scaled(out.rl, out.cl, alpha);
    return out;
}

namespace {

// Window loss ingredients drawn from `rng` in a fixed order.
StepInputs draw_step_inputs(const ModelSet& m, const Dataset& ds, const Window& raw,
                            bool use_block, double point_rate,
                            const BlockMaskConfig& block_cfg, Rng& rng) {
    const int64_t N = raw.nodes();
    const int64_t L = raw.length();
    Window masked;
    for (int attempt = 0;; ++attempt) {
        masked = use_block ? apply_block_mask(raw, block_cfg, rng)
                           : apply_point_mask(raw, point_rate, rng);
        if (masked.target_count() > 0) break;
        if (attempt > 64)
            throw std::runtime_error("masking produced no target cells repeatedly");
    }
    Window norm = normalize_window(masked, ds.normalization);
    InterpolatedConditioner cond = linear_interpolate(norm);

    StepInputs si;
    si.cond_values = cond.values;
    si.target_mask = norm.target_mask;
    si.t = static_cast<int>(rng.uniform_int(1, m.schedule.steps()));
    si.eps = Tensor({N, L});
    rng.fill_normal(si.eps);
    Tensor x0({N, L});
    for (int64_t i = 0; i < x0.size(); ++i) {
        const double on = si.target_mask[i];
        x0[i] = on != 0.0 ? norm.values[i] : 0.0;
        si.eps[i] *= on;
    }
    si.x_t = forward_sample(x0, si.t, si.eps, m.schedule);
    if (m.contrastive) {
        si.q_dropout = m.contrastive->make_dropout_mask(rng);
        si.k_dropout = m.contrastive->make_dropout_mask(rng);
        si.queue = m.contrastive->queue_matrix();
    }
    return si;
}

}  // namespace

// The mask/step/noise draws here intentionally mirror draw_step_inputs but use
// window-indexed streams so the validation loss never perturbs training draws.
double validation_loss(const ModelSet& m, const Dataset& valid, uint64_t seed,
                       double point_rate) {
    double total = 0.0;
    int64_t count = 0;
    const int T = m.schedule.steps();
    const int probe_steps[3] = {std::max(1, T / 4), std::max(1, T / 2),
                                std::max(1, (3 * T) / 4)};
    for (size_t wi = 0; wi < valid.windows.size(); ++wi) {
        Rng rng = Rng::stream(seed, "valid", wi);
        Window masked = apply_point_mask(valid.windows[wi], point_rate, rng);
        if (masked.target_count() == 0) continue;
        Window norm = normalize_window(masked, valid.normalization);
        InterpolatedConditioner cond = linear_interpolate(norm);
        const int64_t N = norm.nodes(), L = norm.length();
        for (int k = 0; k < 3; ++k) {
            Tensor eps({N, L});
            rng.fill_normal(eps);
            Tensor x0({N, L});
            for (int64_t i = 0; i < x0.size(); ++i) {
                const double on = norm.target_mask[i];
                x0[i] = on != 0.0 ? norm.values[i] : 0.0;
                eps[i] *= on;
            }
            Tensor x_t = forward_sample(x0, probe_steps[k], eps, m.schedule);
            Tape t;
            Tape::Id c_con = m.encoder->forward(t, cond.values, m.supports);
            Tape::Id eps_hat = m.predictor->forward(t, c_con, cond.values, x_t,
                                                    probe_steps[k], m.supports);
            total += masked_noise_loss(eps, t.val(eps_hat), norm.target_mask);
            ++count;
        }
    }
    if (count == 0) throw std::runtime_error("validation loss: no usable windows");
    return total / static_cast<double>(count);
}

TrainResult train_model(ModelSet& m, const Dataset& train, const Dataset& valid,
                        const TrainSettings& ts,
                        const std::function<void(const TrainLogRecord&)>& on_log) {
    if (train.windows.empty()) throw std::invalid_argument("train: empty training set");
    if (train.graph.nodes() != m.supports.nodes())
        throw std::invalid_argument("train: model built for a different graph");
    Rng rng = Rng::stream(ts.seed, "train");
    AdamOptimizer opt(0.9, 0.999, 1e-8, ts.weight_decay);
    const BlockMaskConfig block_cfg = block_config_for_hours(
        ts.block_min_hours, ts.block_max_hours, train.step_minutes, ts.block_point_rate,
        ts.block_start_prob);

    std::vector<size_t> order(train.windows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    size_t cursor = order.size();  // forces a shuffle on first use
    auto next_window = [&]() -> const Window& {
        if (cursor >= order.size()) {
            for (size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1],
                          order[static_cast<size_t>(rng.uniform_int(0, i - 1))]);
            cursor = 0;
        }
        return train.windows[order[cursor++]];
    };

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_values;

    Tape tape;
    for (int64_t step = 0; step < ts.steps; ++step) {
        const bool use_block = rng.bernoulli(0.5);  // alternate strategies uniformly
        const double lr = cosine_lr(ts.lr, step, ts.steps, ts.lr_min);
        m.params.zero_grads();
        double rl_sum = 0.0, cl_sum = 0.0;
        std::vector<Tensor> new_keys;
        for (int b = 0; b < ts.batch; ++b) {
            StepInputs si = draw_step_inputs(m, train, next_window(), use_block,
                                             ts.point_rate, block_cfg, rng);
            tape.clear();
            Tensor k;
            StepLossIds ids = build_step_loss(tape, m, si, m.config.alpha, &k);
            const double total = tape.val(ids.total)[0];
            if (!std::isfinite(total)) {
                std::ostringstream os;
                os << "training diverged: non-finite loss at step " << step;
                throw std::runtime_error(os.str());
            }
            rl_sum += tape.val(ids.rl)[0];
            if (ids.cl >= 0) cl_sum += tape.val(ids.cl)[0];
            tape.backward(ids.total, 1.0 / ts.batch);
            if (k.size() > 0) new_keys.push_back(std::move(k));
        }
        opt.step(m.params, lr);
        if (m.contrastive) {
            m.contrastive->momentum_update();
            if (!new_keys.empty()) m.contrastive->push_keys(new_keys);
        }
        TrainLogRecord rec{step, rl_sum / ts.batch, cl_sum / ts.batch, lr};
        result.log.push_back(rec);
        if (on_log) on_log(rec);

        if (ts.eval_every > 0 && !valid.windows.empty() &&
            ((step + 1) % ts.eval_every == 0 || step + 1 == ts.steps)) {
            const double vl = validation_loss(m, valid, ts.seed, ts.point_rate);
            if (vl < result.best_val_loss) {
                result.best_val_loss = vl;
                result.best_step = step;
                best_values.clear();
                for (const auto& p : m.params.all()) best_values.push_back(p->value);
            }
        }
    }
    if (!best_values.empty()) {
        size_t i = 0;
        for (const auto& p : m.params.all()) p->value = best_values[i++];
    }
    return result;
}

}  // namespace stimpute
