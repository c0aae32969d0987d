#include "stimpute/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace stimpute {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'I', 'M', 'P', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

nlohmann::json read_header(std::istream& is, uint32_t* version_out) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    is.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw std::runtime_error("checkpoint: truncated header");
    if (version_out) *version_out = version;
    return nlohmann::json::parse(htext);
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelSet& m,
                     const std::string& config_hash) {
    nlohmann::json header;
    header["config_hash"] = config_hash;
    header["schedule"] = {{"T", m.schedule.steps()},
                          {"beta_1", m.schedule.beta_1()},
                          {"beta_T", m.schedule.beta_T()},
                          {"shape", to_string(m.schedule.shape())}};
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& p : m.params.all()) {
        for (const char* kind : {"value", "adam_m", "adam_v"}) {
            tensors.push_back({{"name", p->name},
                               {"kind", kind},
                               {"shape", p->value.shape()}});
        }
    }
    header["tensors"] = tensors;
    const std::string htext = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
    os.write(kMagic, 8);
    write_u32(os, kVersion);
    write_u64(os, htext.size());
    os.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& p : m.params.all()) {
        for (const Tensor* t : {&p->value, &p->adam_m, &p->adam_v})
            os.write(reinterpret_cast<const char*>(t->data()),
                     static_cast<std::streamsize>(t->size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    CheckpointInfo info;
    uint32_t version = 0;
    nlohmann::json header = read_header(is, &version);
    info.version = static_cast<int>(version);
    info.config_hash = header.at("config_hash").get<std::string>();
    info.T = header.at("schedule").at("T").get<int>();
    info.beta_1 = header.at("schedule").at("beta_1").get<double>();
    info.beta_T = header.at("schedule").at("beta_T").get<double>();
    info.shape = header.at("schedule").at("shape").get<std::string>();
    return info;
}

void load_checkpoint(const std::string& path, ModelSet& m) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    nlohmann::json header = read_header(is, nullptr);

    const auto& sched = header.at("schedule");
    if (sched.at("T").get<int>() != m.schedule.steps() ||
        sched.at("beta_1").get<double>() != m.schedule.beta_1() ||
        sched.at("beta_T").get<double>() != m.schedule.beta_T() ||
        sched.at("shape").get<std::string>() != to_string(m.schedule.shape()))
        throw std::runtime_error("checkpoint: schedule mismatch with model config");

    for (const auto& entry : header.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::string kind = entry.at("kind").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<int64_t>>();
        Parameter* p = m.params.find(name);
        if (!p) throw std::runtime_error("checkpoint: unexpected tensor " + name);
        Tensor* dst = kind == "value" ? &p->value
                      : kind == "adam_m" ? &p->adam_m
                                         : &p->adam_v;
        if (dst->shape() != shape)
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
        is.read(reinterpret_cast<char*>(dst->data()),
                static_cast<std::streamsize>(dst->size() * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated payload at " + name);
    }
}

}  // namespace stimpute
