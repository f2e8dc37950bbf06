#include "spot/model/config.hpp"

namespace spot::model {

std::string scan_kind_name(ScanKind k) { return k == ScanKind::Mamba ? "mamba" : "transformer"; }

ScanKind parse_scan_kind(const std::string& s) {
    if (s == "mamba") return ScanKind::Mamba;
    if (s == "transformer") return ScanKind::Transformer;
    throw ConfigError("scan kind must be `mamba` or `transformer`, got `" + s + "`");
}

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ConfigError(std::string("model config: ") + name + " must be positive");
    };
    positive(n_nodes, "n_nodes");
    positive(D, "D");
    positive(K, "K");
    positive(M, "M");
    positive(T, "T");
    positive(T_out, "T_out");
    positive(D_in, "D_in");
    positive(D_out, "D_out");
    positive(n_layers, "n_layers");
    positive(ff_dim, "ff_dim");
    positive(steps_per_day, "steps_per_day");
    positive(n_heads, "n_heads");
    positive(d_state, "d_state");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model config: dropout must lie in [0, 1)");
    if (!(huber_delta > 0.0)) throw ConfigError("model config: huber_delta must be positive");
    if (width() % n_heads != 0) throw ConfigError("model config: 4*D must be divisible by n_heads");
    if (walk_scan == ScanKind::Transformer && D % n_heads != 0) {
        throw ConfigError("model config: D must be divisible by n_heads for the transformer walk scan");
    }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"n_nodes", c.n_nodes},
                       {"D", c.D},
                       {"K", c.K},
                       {"M", c.M},
                       {"T", c.T},
                       {"T_out", c.T_out},
                       {"D_in", c.D_in},
                       {"D_out", c.D_out},
                       {"n_layers", c.n_layers},
                       {"ff_dim", c.ff_dim},
                       {"dropout", c.dropout},
                       {"steps_per_day", c.steps_per_day},
                       {"n_heads", c.n_heads},
                       {"d_state", c.d_state},
                       {"huber_delta", c.huber_delta},
                       {"walk_scan", scan_kind_name(c.walk_scan)},
                       {"temporal_scan", scan_kind_name(c.temporal_scan)},
                       {"init_seed", c.init_seed},
                       {"walk_seed", c.walk_seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    if (!j.is_object()) throw ConfigError("model config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "n_nodes") c.n_nodes = value.get<std::size_t>();
            else if (key == "D") c.D = value.get<std::size_t>();
            else if (key == "K") c.K = value.get<std::size_t>();
            else if (key == "M") c.M = value.get<std::size_t>();
            else if (key == "T") c.T = value.get<std::size_t>();
            else if (key == "T_out") c.T_out = value.get<std::size_t>();
            else if (key == "D_in") c.D_in = value.get<std::size_t>();
            else if (key == "D_out") c.D_out = value.get<std::size_t>();
            else if (key == "n_layers") c.n_layers = value.get<std::size_t>();
            else if (key == "ff_dim") c.ff_dim = value.get<std::size_t>();
            else if (key == "dropout") c.dropout = value.get<double>();
            else if (key == "steps_per_day") c.steps_per_day = value.get<std::size_t>();
            else if (key == "n_heads") c.n_heads = value.get<std::size_t>();
            else if (key == "d_state") c.d_state = value.get<std::size_t>();
            else if (key == "huber_delta") c.huber_delta = value.get<double>();
            else if (key == "walk_scan") c.walk_scan = parse_scan_kind(value.get<std::string>());
            else if (key == "temporal_scan") c.temporal_scan = parse_scan_kind(value.get<std::string>());
            else if (key == "init_seed") c.init_seed = value.get<std::uint64_t>();
            else if (key == "walk_seed") c.walk_seed = value.get<std::uint64_t>();
            else throw ConfigError("model config: unknown key `" + key + "`");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("model config: bad value for `" + key + "`: " + e.what());
        }
    }
}

} // namespace spot::model
