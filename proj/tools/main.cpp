#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>

#include "stimpute/config.hpp"
#include "stimpute/experiment.hpp"
#include "stimpute/synth.hpp"
#include "stimpute/threading.hpp"

using namespace stimpute;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    bool help_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "config file (key = value lines)");
    cmd->add_option("-s,--set", opts.overrides,
                    "override a config key, e.g. --set train.steps=500")
        ->take_all();
    cmd->add_flag("--help-config", opts.help_config,
                  "print the config schema with defaults and exit");
}

Config resolve_config(const CommonOpts& opts) {
    if (opts.help_config) {
        for (const auto& def : config_schema())
            std::printf("%-28s %-24s %s\n", def.key, def.default_value, def.doc);
        std::exit(0);
    }
    Config cfg = opts.config_path.empty() ? Config::defaults()
                                          : Config::load(opts.config_path);
    cfg.apply_overrides(opts.overrides);
    return cfg;
}

Config load_run_config(const std::string& run_dir, const CommonOpts& opts) {
    Config cfg = Config::load(run_dir + "/config_used.cfg");
    cfg.apply_overrides(opts.overrides);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatiotemporal diffusion imputation"};
    app.require_subcommand(1);

    CommonOpts synth_opts, train_opts, impute_opts, eval_opts, report_opts, ablate_opts;
    std::string synth_out, train_out, run_dir, ablate_out;
    std::string impute_pattern = "point", eval_pattern = "point";

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth, synth_opts);
    synth->add_option("-o,--out", synth_out, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
    add_common(train, train_opts);
    train->add_option("-o,--out", train_out, "run directory")->required();

    CLI::App* impute = app.add_subcommand("impute", "sample imputations on the test split");
    add_common(impute, impute_opts);
    impute->add_option("-r,--run", run_dir, "run directory with a checkpoint")->required();
    impute->add_option("-p,--pattern", impute_pattern, "point | block");

    CLI::App* eval = app.add_subcommand("eval", "score imputations against ground truth");
    add_common(eval, eval_opts);
    eval->add_option("-r,--run", run_dir, "run directory")->required();
    eval->add_option("-p,--pattern", eval_pattern, "point | block");

    CLI::App* report = app.add_subcommand("report", "emit report JSON and plots");
    add_common(report, report_opts);
    report->add_option("-r,--run", run_dir, "run directory")->required();

    CLI::App* ablate =
        app.add_subcommand("ablate", "run the three ablation variants end to end");
    add_common(ablate, ablate_opts);
    ablate->add_option("-o,--out", ablate_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "synth") {
            Config cfg = resolve_config(synth_opts);
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
            write_synth_files(synth_generate(sc), synth_out);
            std::cout << "wrote synthetic dataset to " << synth_out << "\n";
        } else if (cmd == "train") {
            Config cfg = resolve_config(train_opts);
            step_train(cfg, train_out);
            std::cout << "trained; checkpoint at " << train_out << "/checkpoint.stp\n";
        } else if (cmd == "impute") {
            Config cfg = load_run_config(run_dir, impute_opts);
            step_impute(cfg, run_dir, impute_pattern);
            std::cout << "imputations in " << run_dir << "/imputation_" << impute_pattern
                      << "\n";
        } else if (cmd == "eval") {
            Config cfg = load_run_config(run_dir, eval_opts);
            nlohmann::json m = step_eval(cfg, run_dir, eval_pattern);
            std::cout << m.dump(2) << "\n";
        } else if (cmd == "report") {
            Config cfg = load_run_config(run_dir, report_opts);
            step_report(cfg, run_dir);
            std::cout << "report written to " << run_dir << "/report.json\n";
        } else if (cmd == "ablate") {
            Config cfg = resolve_config(ablate_opts);
            nlohmann::json all = nlohmann::json::object();
            for (const auto& [name, variant] : ablation_variants(cfg)) {
                const std::string dir = ablate_out + "/" + name;
                std::cout << "running variant " << name << "...\n";
                all[name] = run_experiment(variant, dir);
            }
            std::ofstream out(ablate_out + "/ablation_summary.json");
            out << all.dump(2) << "\n";
            std::cout << "ablation summary at " << ablate_out
                      << "/ablation_summary.json\n";
        }
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}, {"subcommand", cmd}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
