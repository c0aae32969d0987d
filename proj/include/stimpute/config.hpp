#pragma once

#include <map>
#include <string>
#include <vector>

namespace stimpute {

struct ConfigKeyDef {
    const char* key;
    const char* default_value;
    const char* doc;
};

/// The full configuration schema: every hyperparameter has a named key with
/// its default. `stimpute <cmd> --help-config` prints this table.
const std::vector<ConfigKeyDef>& config_schema();

/// Flat dotted-key/value configuration. Files are plain text: one
/// `key = value` per line, `#` comments. Unknown keys are rejected.
class Config {
public:
    static Config defaults();
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value);
    void apply_overrides(const std::vector<std::string>& key_equals_value);

    const std::string& raw(const std::string& key) const;
    std::string get_string(const std::string& key) const { return raw(key); }
    double get_double(const std::string& key) const;
    int64_t get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    /// Canonical text form, one sorted `key = value` line each.
    std::string to_text() const;
    void save(const std::string& path) const;

    /// FNV-1a over the canonical text (runtime.* excluded); stable across runs.
    std::string hash() const;

    /// Hash over the keys that determine the trained artifact (data, model,
    /// schedule, training, losses, masking). Sampling/eval/runtime keys are
    /// excluded so a checkpoint stays valid under different ensemble settings.
    std::string train_hash() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace stimpute
