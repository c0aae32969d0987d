#include "stimpute/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stimpute {

const std::vector<ConfigKeyDef>& config_schema() {
    static const std::vector<ConfigKeyDef> schema = {
        {"data.name", "synthetic", "dataset label used in reports"},
        {"data.source", "synth", "synth | files"},
        {"data.values", "", "values CSV (node columns, ISO-8601 timestamp rows)"},
        {"data.adjacency", "", "dense N x N CSV or src,dst,distance edge list"},
        {"data.window_len", "48", "window length L in steps"},
        {"data.stride", "0", "window stride; 0 = window_len (exact tiling)"},
        {"data.kernel_width", "0", "Gaussian kernel width for edge lists; 0 = auto"},
        {"data.threshold", "0.1", "kernel weights below this are dropped"},
        {"split.train_frac", "0.7", "fraction of windows for training"},
        {"split.valid_frac", "0.1", "fraction of windows for validation"},

        {"synth.nodes", "8", "generated sensor count"},
        {"synth.len", "960", "generated series length in steps"},
        {"synth.step_minutes", "30", "sampling interval"},
        {"synth.trend_slope", "0.004", "mean per-node trend slope, units/step"},
        {"synth.trend_slope_jitter", "0.5", "relative per-node slope spread"},
        {"synth.trend_offset", "10.0", "mean per-node level"},
        {"synth.trend_offset_jitter", "2.0", "absolute per-node level spread"},
        {"synth.seasonal", "16:1.0:0.0,24:0.6:0.8",
         "comma list of period_steps:amplitude:phase terms"},
        {"synth.noise_sigma", "0.1", "additive Gaussian noise stddev"},
        {"synth.coupling", "0.3", "neighbor-mixture weight in [0,1]"},
        {"synth.seed", "7", "generator seed"},

        {"model.d", "64", "hidden channel size"},
        {"model.d_trend", "0", "trend channels; 0 = d/2"},
        {"model.d_season", "0", "seasonal channels; 0 = d - d_trend"},
        {"model.layers", "4", "residual layers in the noise predictor"},
        {"model.heads", "8", "attention heads"},
        {"model.t_embed_dim", "128", "diffusion-step embedding width"},
        {"model.gcn_order", "2", "graph diffusion order"},
        {"model.adapt_dim", "10", "adaptive-adjacency embedding rank"},

        {"schedule.T", "50", "diffusion steps"},
        {"schedule.beta_1", "1e-4", "minimum noise level"},
        {"schedule.beta_T", "0.2", "maximum noise level"},
        {"schedule.shape", "quadratic", "linear | quadratic"},

        {"train.steps", "2000", "optimizer steps"},
        {"train.batch", "16", "windows per step"},
        {"train.lr", "1e-3", "learning rate (cosine annealed)"},
        {"train.lr_min", "0", "annealing floor"},
        {"train.weight_decay", "1e-5", "L2 weight decay"},
        {"train.eval_every", "100", "validation interval in steps"},
        {"train.seed", "1", "training seed"},

        {"loss.alpha", "0.1", "contrastive loss weight"},
        {"contrastive.embed_dim", "64", "projection dimension d_c"},
        {"contrastive.queue", "1024", "negative queue capacity K"},
        {"contrastive.tau", "0.07", "InfoNCE temperature"},
        {"contrastive.momentum", "0.999", "key-head momentum m"},
        {"contrastive.dropout", "0.1", "feature dropout per view"},

        {"mask.point_rate", "0.25", "point-missing rate"},
        {"mask.block_point_rate", "0.05", "extra point rate under block missing"},
        {"mask.block_start_prob", "0.0015", "per (sensor, step) block start probability"},
        {"mask.block_min_hours", "1", "minimum outage length"},
        {"mask.block_max_hours", "4", "maximum outage length"},

        {"impute.samples", "100", "ensemble size"},
        {"impute.seed", "1", "sampling seed"},
        {"eval.patterns", "point,block", "mask patterns evaluated on the test split"},
        {"eval.seed", "1", "test-split mask injection seed"},

        {"ablation.use_cl", "true", "false = drop the contrastive loss (w/o CL)"},
        {"ablation.use_trend", "true", "false = drop the trend branch (w/o TFD)"},
        {"ablation.use_season", "true", "false = drop the seasonal branch (w/o SFD)"},

        {"runtime.threads", "0", "OpenMP threads; 0 = hardware default"},
    };
    return schema;
}

Config Config::defaults() {
    Config c;
    for (const auto& def : config_schema()) c.values_[def.key] = def.default_value;
    return c;
}

namespace {
std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    Config c = defaults();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

void Config::set(const std::string& key, const std::string& value) {
    if (values_.find(key) == values_.end()) {
        bool known = false;
        for (const auto& def : config_schema()) known = known || key == def.key;
        if (!known) throw std::invalid_argument("unknown config key: " + key);
    }
    values_[key] = value;
}

void Config::apply_overrides(const std::vector<std::string>& kvs) {
    for (const std::string& kv : kvs) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override must be key=value: " + kv);
        set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
}

const std::string& Config::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::out_of_range("no config key: " + key);
    return it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string& s = raw(key);
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(key + ": not a number: " + s);
    return v;
}

int64_t Config::get_int(const std::string& key) const {
    const std::string& s = raw(key);
    size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(key + ": not an integer: " + s);
    return v;
}

bool Config::get_bool(const std::string& key) const {
    std::string s = raw(key);
    std::transform(s.begin(), s.end(), s.begin(), ::tolower);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument(key + ": not a boolean: " + s);
}

std::string Config::to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
    return os.str();
}

void Config::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config: " + path);
    out << to_text();
}

namespace {

bool has_prefix(const std::string& s, const char* prefix) {
    return s.rfind(prefix, 0) == 0;
}

std::string fnv1a_hex(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

std::string Config::hash() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_)
        if (!has_prefix(k, "runtime.")) os << k << " = " << v << "\n";
    return fnv1a_hex(os.str());
}

std::string Config::train_hash() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) {
        if (has_prefix(k, "runtime.") || has_prefix(k, "impute.") ||
            has_prefix(k, "eval.") || k == "data.name")
            continue;
        os << k << " = " << v << "\n";
    }
    return fnv1a_hex(os.str());
}

}  // namespace stimpute
