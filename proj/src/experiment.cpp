#include "stimpute/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "stimpute/baselines.hpp"
#include "stimpute/checkpoint.hpp"
#include "stimpute/imputer.hpp"
#include "stimpute/metrics.hpp"
#include "stimpute/plot.hpp"
#include "stimpute/threading.hpp"

namespace fs = std::filesystem;

namespace stimpute {

namespace {

std::string path_join(const std::string& a, const std::string& b) {
    return (fs::path(a) / b).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

void write_matrix_csv(const std::string& path, const Tensor& m,
                      const std::vector<std::string>& node_ids,
                      const std::vector<int64_t>& timestamps) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "timestamp";
    for (const auto& id : node_ids) out << "," << id;
    out << "\n";
    out.precision(17);
    for (int64_t l = 0; l < m.dim(1); ++l) {
        out << format_iso8601(timestamps[static_cast<size_t>(l)]);
        for (int64_t i = 0; i < m.dim(0); ++i) {
            out << ",";
            if (std::isfinite(m.at(i, l))) out << m.at(i, l);
        }
        out << "\n";
    }
}

BlockMaskConfig eval_block_config(const Config& cfg, int step_minutes) {
    return block_config_for_hours(cfg.get_double("mask.block_min_hours"),
                                  cfg.get_double("mask.block_max_hours"), step_minutes,
                                  cfg.get_double("mask.block_point_rate"),
                                  cfg.get_double("mask.block_start_prob"));
}

Window mask_eval_window(const Window& w, const std::string& pattern, const Config& cfg,
                        int step_minutes, uint64_t seed, size_t window_index) {
    Rng rng = Rng::stream(seed, "eval_mask_" + pattern, window_index);
    for (int attempt = 0; attempt < 64; ++attempt) {
        Window masked =
            pattern == "point"
                ? apply_point_mask(w, cfg.get_double("mask.point_rate"), rng)
                : apply_block_mask(w, eval_block_config(cfg, step_minutes), rng);
        if (masked.target_count() > 0) return masked;
    }
    throw std::runtime_error("evaluation masking produced no target cells");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct ImputationArtifact {
    std::vector<Tensor> samples;
    Tensor point_estimate;
    Tensor target_mask;
    Tensor truth;
};

void write_window_artifact(const std::string& path, const ImputationArtifact& a) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    auto dump = [&](const Tensor& t) {
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    };
    for (const Tensor& s : a.samples) dump(s);
    dump(a.point_estimate);
    dump(a.target_mask);
    dump(a.truth);
}

ImputationArtifact read_window_artifact(const std::string& path, int n_samples,
                                        int64_t n, int64_t l) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    ImputationArtifact a;
    auto pull = [&](Tensor& t) {
        t = Tensor({n, l});
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!is) throw std::runtime_error("truncated imputation artifact " + path);
    };
    a.samples.resize(static_cast<size_t>(n_samples));
    for (auto& s : a.samples) pull(s);
    pull(a.point_estimate);
    pull(a.target_mask);
    pull(a.truth);
    return a;
}

}  // namespace

PreparedData prepare_data(const Config& cfg) {
    PreparedData out;
    out.dataset_name = cfg.get_string("data.name");
    const int window_len = static_cast<int>(cfg.get_int("data.window_len"));
    int stride = static_cast<int>(cfg.get_int("data.stride"));
    if (stride <= 0) stride = window_len;

    Dataset ds;
    if (cfg.get_string("data.source") == "synth") {
        SynthConfig sc;
        sc.nodes = cfg.get_int("synth.nodes");
        sc.length = cfg.get_int("synth.len");
        sc.step_minutes = static_cast<int>(cfg.get_int("synth.step_minutes"));
        sc.trend_slope = cfg.get_double("synth.trend_slope");
        sc.trend_slope_jitter = cfg.get_double("synth.trend_slope_jitter");
        sc.trend_offset = cfg.get_double("synth.trend_offset");
        sc.trend_offset_jitter = cfg.get_double("synth.trend_offset_jitter");
        sc.seasonal = parse_seasonal_spec(cfg.get_string("synth.seasonal"));
        sc.noise_sigma = cfg.get_double("synth.noise_sigma");
        sc.coupling = cfg.get_double("synth.coupling");
        sc.seed = static_cast<uint64_t>(cfg.get_int("synth.seed"));
        sc.kernel_width = cfg.get_double("data.kernel_width");
        sc.threshold = cfg.get_double("data.threshold");
        ds = synth_dataset(synth_generate(sc), window_len, stride);
    } else if (cfg.get_string("data.source") == "files") {
        LoadMeta meta;
        meta.window_len = window_len;
        meta.stride = stride;
        meta.train_frac = cfg.get_double("split.train_frac");
        meta.valid_frac = cfg.get_double("split.valid_frac");
        meta.kernel_width = cfg.get_double("data.kernel_width");
        meta.threshold = cfg.get_double("data.threshold");
        ds = load_dataset(cfg.get_string("data.values"), cfg.get_string("data.adjacency"),
                          meta);
    } else {
        throw std::invalid_argument("data.source must be synth or files");
    }
    out.step_minutes = ds.step_minutes;
    out.splits = split_chronological(ds, cfg.get_double("split.train_frac"),
                                     cfg.get_double("split.valid_frac"));
    return out;
}

ModelConfig model_config_from(const Config& cfg, int window_len) {
    ModelConfig mc;
    mc.L = window_len;
    mc.d = static_cast<int>(cfg.get_int("model.d"));
    mc.d_trend = static_cast<int>(cfg.get_int("model.d_trend"));
    mc.d_season = static_cast<int>(cfg.get_int("model.d_season"));
    mc.use_trend = cfg.get_bool("ablation.use_trend");
    mc.use_season = cfg.get_bool("ablation.use_season");
    mc.layers = static_cast<int>(cfg.get_int("model.layers"));
    mc.heads = static_cast<int>(cfg.get_int("model.heads"));
    mc.t_embed_dim = static_cast<int>(cfg.get_int("model.t_embed_dim"));
    mc.gcn_order = static_cast<int>(cfg.get_int("model.gcn_order"));
    mc.adapt_dim = static_cast<int>(cfg.get_int("model.adapt_dim"));
    mc.T = static_cast<int>(cfg.get_int("schedule.T"));
    mc.beta_1 = cfg.get_double("schedule.beta_1");
    mc.beta_T = cfg.get_double("schedule.beta_T");
    mc.shape = schedule_shape_from_string(cfg.get_string("schedule.shape"));
    mc.use_cl = cfg.get_bool("ablation.use_cl");
    mc.alpha = cfg.get_double("loss.alpha");
    mc.contrastive.embed_dim = static_cast<int>(cfg.get_int("contrastive.embed_dim"));
    mc.contrastive.queue_capacity = static_cast<int>(cfg.get_int("contrastive.queue"));
    mc.contrastive.tau = cfg.get_double("contrastive.tau");
    mc.contrastive.momentum = cfg.get_double("contrastive.momentum");
    mc.contrastive.dropout = cfg.get_double("contrastive.dropout");
    mc.init_seed = static_cast<uint64_t>(cfg.get_int("train.seed"));
    return mc;
}

TrainSettings train_settings_from(const Config& cfg) {
    TrainSettings ts;
    ts.steps = cfg.get_int("train.steps");
    ts.batch = static_cast<int>(cfg.get_int("train.batch"));
    ts.lr = cfg.get_double("train.lr");
    ts.lr_min = cfg.get_double("train.lr_min");
    ts.weight_decay = cfg.get_double("train.weight_decay");
    ts.eval_every = static_cast<int>(cfg.get_int("train.eval_every"));
    ts.seed = static_cast<uint64_t>(cfg.get_int("train.seed"));
    ts.point_rate = cfg.get_double("mask.point_rate");
    ts.block_point_rate = cfg.get_double("mask.block_point_rate");
    ts.block_start_prob = cfg.get_double("mask.block_start_prob");
    ts.block_min_hours = cfg.get_double("mask.block_min_hours");
    ts.block_max_hours = cfg.get_double("mask.block_max_hours");
    return ts;
}

void step_train(const Config& cfg, const std::string& run_dir) {
    fs::create_directories(run_dir);
    threading::set_threads(static_cast<int>(cfg.get_int("runtime.threads")));
    cfg.save(path_join(run_dir, "config_used.cfg"));

    PreparedData data = prepare_data(cfg);
    const int64_t n_train = static_cast<int64_t>(data.splits.train.windows.size());
    const int64_t n_valid = static_cast<int64_t>(data.splits.valid.windows.size());
    const int64_t n_test = static_cast<int64_t>(data.splits.test.windows.size());
    write_json(path_join(run_dir, "split.json"),
               {{"train", {0, n_train}},
                {"valid", {n_train, n_train + n_valid}},
                {"test", {n_train + n_valid, n_train + n_valid + n_test}}});

    auto models = build_models(
        model_config_from(cfg, static_cast<int>(cfg.get_int("data.window_len"))),
        data.splits.train.graph);

    std::ofstream log(path_join(run_dir, "train_log.ndjson"));
    if (!log) throw std::runtime_error("cannot write training log");
    TrainResult result = train_model(
        *models, data.splits.train, data.splits.valid, train_settings_from(cfg),
        [&](const TrainLogRecord& r) {
            nlohmann::json j{{"step", r.step},
                             {"loss_rl", r.loss_rl},
                             {"loss_cl", r.loss_cl},
                             {"lr", r.lr}};
            log << j.dump() << "\n";
        });
    log.close();

    save_checkpoint(path_join(run_dir, "checkpoint.stp"), *models, cfg.train_hash());

    plot::Series rl{{}, {200, 60, 40}, false}, cl{{}, {60, 120, 200}, false};
    for (const auto& r : result.log) {
        rl.y.push_back(r.loss_rl);
        cl.y.push_back(r.loss_cl);
    }
    plot::save_line_chart(path_join(run_dir, "loss_curve.png"), {rl, cl});
    write_json(path_join(run_dir, "train_summary.json"),
               {{"best_val_loss", result.best_val_loss},
                {"best_step", result.best_step},
                {"steps", static_cast<int64_t>(result.log.size())}});
}

void step_impute(const Config& cfg, const std::string& run_dir,
                 const std::string& pattern) {
    threading::set_threads(static_cast<int>(cfg.get_int("runtime.threads")));
    PreparedData data = prepare_data(cfg);
    auto models = build_models(
        model_config_from(cfg, static_cast<int>(cfg.get_int("data.window_len"))),
        data.splits.train.graph);
    load_checkpoint(path_join(run_dir, "checkpoint.stp"), *models);
    const CheckpointInfo info =
        read_checkpoint_info(path_join(run_dir, "checkpoint.stp"));
    if (info.config_hash != cfg.train_hash())
        throw std::runtime_error("checkpoint was trained under a different config");

    const std::string dir = path_join(run_dir, "imputation_" + pattern);
    fs::create_directories(dir);
    const int n_samples = static_cast<int>(cfg.get_int("impute.samples"));
    const uint64_t eval_seed = static_cast<uint64_t>(cfg.get_int("eval.seed"));
    const uint64_t impute_seed = static_cast<uint64_t>(cfg.get_int("impute.seed"));
    const Dataset& test = data.splits.test;

    nlohmann::json manifest;
    manifest["pattern"] = pattern;
    manifest["n_samples"] = n_samples;
    manifest["seed"] = impute_seed;
    manifest["n_windows"] = test.windows.size();
    manifest["nodes"] = test.nodes();
    manifest["window_len"] = cfg.get_int("data.window_len");
    for (size_t wi = 0; wi < test.windows.size(); ++wi) {
        Window masked = mask_eval_window(test.windows[wi], pattern, cfg,
                                         data.step_minutes, eval_seed, wi);
        ImputeSettings is;
        is.n_samples = n_samples;
        is.seed = impute_seed + 1000003ULL * wi;
        ImputationResult r = impute_window(*models, masked, test.normalization, is);
        ImputationArtifact a;
        a.samples = std::move(r.samples);
        a.point_estimate = std::move(r.point_estimate);
        a.target_mask = std::move(r.target_mask);
        a.truth = test.windows[wi].values;
        write_window_artifact(path_join(dir, "win" + std::to_string(wi) + ".bin"), a);
    }
    write_json(path_join(dir, "manifest.json"), manifest);
}

nlohmann::json step_eval(const Config& cfg, const std::string& run_dir,
                         const std::string& pattern) {
    PreparedData data = prepare_data(cfg);
    const Dataset& test = data.splits.test;
    const std::string dir = path_join(run_dir, "imputation_" + pattern);
    nlohmann::json manifest;
    {
        std::ifstream in(path_join(dir, "manifest.json"));
        if (!in) throw std::runtime_error("no imputation artifacts for " + pattern);
        in >> manifest;
    }
    const int n_samples = manifest.at("n_samples").get<int>();
    const QuantileGrid grid;

    double abs_sum = 0.0, sq_sum = 0.0, crps_sum = 0.0;
    double b_mean_abs = 0.0, b_mean_sq = 0.0, b_lin_abs = 0.0, b_lin_sq = 0.0;
    double crps_lin_sum = 0.0;
    int64_t cells = 0;

    for (size_t wi = 0; wi < test.windows.size(); ++wi) {
        ImputationArtifact a =
            read_window_artifact(path_join(dir, "win" + std::to_string(wi) + ".bin"),
                                 n_samples, test.nodes(),
                                 test.windows[wi].length());
        const int64_t n_cells = [&] {
            int64_t c = 0;
            for (int64_t i = 0; i < a.target_mask.size(); ++i)
                c += a.target_mask[i] != 0.0;
            return c;
        }();
        if (n_cells == 0) continue;
        abs_sum += mae(a.point_estimate, a.truth, a.target_mask) * n_cells;
        sq_sum += mse(a.point_estimate, a.truth, a.target_mask) * n_cells;
        crps_sum += crps_aggregate(a.samples, a.truth, a.target_mask, grid) * n_cells;

        // baselines run on the identically masked window
        Window masked = mask_eval_window(test.windows[wi], pattern, cfg,
                                         data.step_minutes,
                                         static_cast<uint64_t>(cfg.get_int("eval.seed")),
                                         wi);
        const Tensor bm = baseline_impute(masked, BaselineMethod::kMean);
        const Tensor bl = baseline_impute(masked, BaselineMethod::kLinear);
        b_mean_abs += mae(bm, a.truth, a.target_mask) * n_cells;
        b_mean_sq += mse(bm, a.truth, a.target_mask) * n_cells;
        b_lin_abs += mae(bl, a.truth, a.target_mask) * n_cells;
        b_lin_sq += mse(bl, a.truth, a.target_mask) * n_cells;
        // degenerate ensemble: the linear baseline replicated n_samples times
        std::vector<Tensor> degenerate(static_cast<size_t>(n_samples), bl);
        crps_lin_sum += crps_aggregate(degenerate, a.truth, a.target_mask, grid) * n_cells;
        cells += n_cells;
    }
    if (cells == 0) throw std::runtime_error("evaluation found no target cells");

    nlohmann::json metrics;
    metrics["dataset"] = data.dataset_name;
    metrics["mask_pattern"] = pattern;
    metrics["mae"] = abs_sum / cells;
    metrics["mse"] = sq_sum / cells;
    metrics["crps"] = crps_sum / cells;
    metrics["n_target_cells"] = cells;
    metrics["seed"] = cfg.get_int("train.seed");
    metrics["config_hash"] = cfg.hash();
    metrics["baselines"] = {
        {"mean", {{"mae", b_mean_abs / cells}, {"mse", b_mean_sq / cells}}},
        {"linear",
         {{"mae", b_lin_abs / cells},
          {"mse", b_lin_sq / cells},
          {"degenerate_crps", crps_lin_sum / cells}}}};
    write_json(path_join(run_dir, "metrics_" + pattern + ".json"), metrics);
    return metrics;
}

nlohmann::json step_report(const Config& cfg, const std::string& run_dir) {
    PreparedData data = prepare_data(cfg);
    const Dataset& test = data.splits.test;
    nlohmann::json report;
    report["config_hash"] = cfg.hash();
    report["dataset"] = data.dataset_name;
    report["metrics"] = nlohmann::json::array();

    for (const std::string& pattern : split_list(cfg.get_string("eval.patterns"))) {
        const std::string mpath = path_join(run_dir, "metrics_" + pattern + ".json");
        std::ifstream in(mpath);
        if (!in) continue;
        nlohmann::json m;
        in >> m;
        report["metrics"].push_back(m);

        // overlay plots for the first test window
        const std::string dir = path_join(run_dir, "imputation_" + pattern);
        std::ifstream min(path_join(dir, "manifest.json"));
        if (!min || test.windows.empty()) continue;
        nlohmann::json manifest;
        min >> manifest;
        ImputationArtifact a = read_window_artifact(
            path_join(dir, "win0.bin"), manifest.at("n_samples").get<int>(),
            test.nodes(), test.windows[0].length());
        Window masked = mask_eval_window(test.windows[0], pattern, cfg,
                                         data.step_minutes,
                                         static_cast<uint64_t>(cfg.get_int("eval.seed")),
                                         0);
        const int64_t L = test.windows[0].length();
        const size_t S = a.samples.size();
        for (int64_t node = 0; node < test.nodes(); ++node) {
            plot::OverlaySpec spec;
            std::vector<double> cell(S);
            for (int64_t l = 0; l < L; ++l) {
                spec.truth.push_back(a.truth.at(node, l));
                spec.observed.push_back(masked.observed_mask.at(node, l) != 0.0
                                            ? masked.values.at(node, l)
                                            : std::nan(""));
                spec.median.push_back(a.point_estimate.at(node, l));
                if (S > 1) {
                    for (size_t s = 0; s < S; ++s) cell[s] = a.samples[s].at(node, l);
                    std::sort(cell.begin(), cell.end());
                    spec.band_lo.push_back(empirical_quantile(cell, 0.05));
                    spec.band_hi.push_back(empirical_quantile(cell, 0.95));
                }
            }
            plot::save_overlay_chart(
                path_join(run_dir, "impute_" + pattern + "_node" +
                                       std::to_string(node) + ".png"),
                spec);
        }
    }
    write_json(path_join(run_dir, "report.json"), report);
    return report;
}

nlohmann::json run_experiment(const Config& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    try {
        step_train(cfg, out_dir);
        for (const std::string& pattern : split_list(cfg.get_string("eval.patterns"))) {
            step_impute(cfg, out_dir, pattern);
            step_eval(cfg, out_dir, pattern);
        }
        return step_report(cfg, out_dir);
    } catch (const std::exception& e) {
        write_json(path_join(out_dir, "FAILED.json"), {{"error", e.what()}});
        throw;
    }
}

bool validate_metrics_json(const nlohmann::json& j, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!j.is_object()) return fail("not an object");
    for (const char* key : {"dataset", "mask_pattern"})
        if (!j.contains(key) || !j.at(key).is_string())
            return fail(std::string("missing string field ") + key);
    for (const char* key : {"mae", "mse", "crps"})
        if (!j.contains(key) || !j.at(key).is_number())
            return fail(std::string("missing numeric field ") + key);
    for (const char* key : {"n_target_cells", "seed"})
        if (!j.contains(key) || !j.at(key).is_number_integer())
            return fail(std::string("missing integer field ") + key);
    return true;
}

std::vector<std::pair<std::string, Config>> ablation_variants(const Config& base) {
    std::vector<std::pair<std::string, Config>> out;
    Config wo_cl = base;
    wo_cl.set("ablation.use_cl", "false");
    out.emplace_back("wo_cl", wo_cl);
    Config wo_tfd = base;
    wo_tfd.set("ablation.use_trend", "false");
    out.emplace_back("wo_tfd", wo_tfd);
    Config wo_sfd = base;
    wo_sfd.set("ablation.use_season", "false");
    out.emplace_back("wo_sfd", wo_sfd);
    return out;
}

void write_synth_files(const SynthOutput& out, const std::string& dir) {
    fs::create_directories(dir);
    write_matrix_csv(path_join(dir, "values.csv"), out.values, out.graph.node_ids,
                     out.timestamps);
    write_matrix_csv(path_join(dir, "trend.csv"), out.trend, out.graph.node_ids,
                     out.timestamps);
    write_matrix_csv(path_join(dir, "seasonal.csv"), out.seasonal, out.graph.node_ids,
                     out.timestamps);
    write_matrix_csv(path_join(dir, "spatial.csv"), out.spatial, out.graph.node_ids,
                     out.timestamps);
    write_matrix_csv(path_join(dir, "noise.csv"), out.noise, out.graph.node_ids,
                     out.timestamps);
    std::ofstream adj(path_join(dir, "adjacency.csv"));
    if (!adj) throw std::runtime_error("cannot write adjacency.csv");
    adj.precision(17);
    const int64_t n = out.graph.nodes();
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < n; ++j) adj << (j ? "," : "") << out.graph.adjacency.at(i, j);
        adj << "\n";
    }
}

}  // namespace stimpute
