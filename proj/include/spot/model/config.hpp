#pragma once

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace spot::model {

enum class ScanKind { Mamba, Transformer };
std::string scan_kind_name(ScanKind k);
ScanKind parse_scan_kind(const std::string& s);

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
    std::size_t n_nodes = 0;
    std::size_t D = 32;
    std::size_t K = 20;
    std::size_t M = 2;
    std::size_t T = 12;
    std::size_t T_out = 12;
    std::size_t D_in = 1;
    std::size_t D_out = 1;
    std::size_t n_layers = 3;
    std::size_t ff_dim = 256;
    double dropout = 0.1;
    std::size_t steps_per_day = 288;
    std::size_t n_heads = 4;
    std::size_t d_state = 16;
    double huber_delta = 1.0;
    ScanKind walk_scan = ScanKind::Mamba;
    ScanKind temporal_scan = ScanKind::Mamba;
    std::uint64_t init_seed = 0;
    std::uint64_t walk_seed = 0;

    std::size_t width() const { return 4 * D; }
    /// Throws ConfigError naming the first bad field.
    void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, ModelConfig& c);

} // namespace spot::model
