#include "stf/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "stf/errors.hpp"

namespace stf {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'F', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
    return nlohmann::json{{"kind", to_string(cfg.kind)},
                          {"t_in", cfg.t_in},
                          {"t_out", cfg.t_out},
                          {"w", cfg.w},
                          {"d", cfg.d},
                          {"n_block", cfg.n_block},
                          {"n_head", cfg.n_head},
                          {"attention", to_string(cfg.attention)},
                          {"mlp_depth", cfg.mlp_depth},
                          {"mlp_hidden", cfg.mlp_hidden}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    try {
        cfg.kind = model_kind_from_string(j.at("kind").get<std::string>());
        cfg.t_in = j.at("t_in").get<std::size_t>();
        cfg.t_out = j.at("t_out").get<std::size_t>();
        cfg.w = j.at("w").get<std::size_t>();
        if (j.contains("d")) cfg.d = j.at("d").get<std::size_t>();
        if (j.contains("n_block")) cfg.n_block = j.at("n_block").get<std::size_t>();
        if (j.contains("n_head")) cfg.n_head = j.at("n_head").get<std::size_t>();
        if (j.contains("attention")) {
            cfg.attention = attention_kind_from_string(j.at("attention").get<std::string>());
        }
        if (j.contains("mlp_depth")) cfg.mlp_depth = j.at("mlp_depth").get<std::size_t>();
        if (j.contains("mlp_hidden")) cfg.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

void save_checkpoint(const std::string& path, const ModelConfig& config, const ParamSet& params) {
    // Validate against the declared layout before writing anything.
    const auto layout = param_layout(config);
    if (layout.size() != params.items.size()) {
        throw DimensionError("checkpoint parameters do not match the config layout");
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (params.items[i].name != layout[i].first ||
            params.items[i].value.shape() != layout[i].second) {
            throw DimensionError("checkpoint parameter " + params.items[i].name +
                                 " does not match the config layout");
        }
    }

    nlohmann::json tensors = nlohmann::json::array();
    for (const NamedTensor& t : params.items) {
        tensors.push_back({{"name", t.name}, {"shape", t.value.shape()}});
    }
    nlohmann::json header{
        {"format", 1}, {"config", model_config_to_json(config)}, {"tensors", tensors}};
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const NamedTensor& t : params.items) {
        out.write(reinterpret_cast<const char*>(t.value.data().data()),
                  static_cast<std::streamsize>(t.value.size() * sizeof(double)));
    }
    if (!out) throw IoError("failed while writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError(path + ": not a checkpoint file (bad magic)");
    }
    const std::uint64_t header_len = read_u64(in);
    if (!in || header_len == 0 || header_len > (1u << 26)) {
        throw DataError(path + ": corrupt checkpoint header length");
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw DataError(path + ": truncated checkpoint header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid checkpoint header: " + e.what());
    }

    Checkpoint ckpt;
    ckpt.config = model_config_from_json(header.at("config"));
    for (const auto& entry : header.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        Shape shape = entry.at("shape").get<Shape>();
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data().data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw DataError(path + ": truncated payload for tensor " + name);
        ckpt.params.items.push_back({name, std::move(t)});
    }

    // The payload must line up with the config's layout.
    const auto layout = param_layout(ckpt.config);
    if (layout.size() != ckpt.params.items.size()) {
        throw DataError(path + ": tensor count does not match the stored config");
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (ckpt.params.items[i].name != layout[i].first ||
            ckpt.params.items[i].value.shape() != layout[i].second) {
            throw DataError(path + ": tensor " + ckpt.params.items[i].name +
                            " does not match the stored config");
        }
    }
    return ckpt;
}

}  // namespace stf
