#pragma once

#include "spot/graph/walks.hpp"
#include "spot/model/config.hpp"
#include "spot/model/transformer.hpp"
#include "spot/ssm/mamba.hpp"

#include <array>
#include <filesystem>
#include <span>

namespace spot::model {

/// Scans over one set of walk sequences [S, K, D] -> [S, K, D]; either a
/// bidirectional Mamba stack or a transformer encoder (no positions).
struct WalkScanner {
    ScanKind kind = ScanKind::Mamba;
    ssm::BidirectionalMambaStack mamba;
    TransformerEncoder transformer;

    Tensor forward(const Tensor& x, const num::ForwardContext& ctx) const;
    void collect(const std::string& prefix, num::ParamList& out) const;
};

/// Learned M -> 1 combination of the pooled walk vectors, shared across
/// embedding dimensions.
struct PointwiseConv {
    Tensor weight; // [M, 1]
    Tensor bias;   // [1]

    /// [M, N, D] -> [N, D]
    Tensor forward(const Tensor& x) const;
};

/// Spatio-temporal forecaster driven by walk-based node embeddings.
///
/// Shapes: B batch, T input steps, N nodes, D embedding width.
///   embed_walks:       WalkSet            -> W [N, D]
///   assemble_features: X [B, T, N, D_in]  -> F [B, T, N, 4D]
///   temporal_scan:     [B, T, N, 4D]      -> same (per node, over T)
///   spatial_mix:       [B, T, N, 4D]      -> same (per step, over N)
///   head:              [B, T, N, 4D]      -> [B, T_out, N, D_out]
class SpoTModel {
public:
    explicit SpoTModel(const ModelConfig& cfg);

    const ModelConfig& config() const noexcept { return cfg_; }

    Tensor embed_walks(const graph::WalkSet& walks, const num::ForwardContext& ctx = {}) const;
    /// `tod` and `dow` hold B*T calendar indices in row-major [B, T] order.
    Tensor assemble_features(const Tensor& X, std::span<const std::size_t> tod, std::span<const std::size_t> dow,
                             const Tensor& W) const;
    Tensor temporal_scan(const Tensor& F, const num::ForwardContext& ctx = {}) const;
    Tensor spatial_mix(const Tensor& Z, const num::ForwardContext& ctx = {}) const;
    Tensor head(const Tensor& Z) const;

    Tensor forecast(const Tensor& X, std::span<const std::size_t> tod, std::span<const std::size_t> dow,
                    const graph::WalkSet& walks, const num::ForwardContext& ctx = {}) const;
    /// Same with node embeddings computed beforehand (inference reuse).
    Tensor forecast(const Tensor& X, std::span<const std::size_t> tod, std::span<const std::size_t> dow,
                    const Tensor& W, const num::ForwardContext& ctx = {}) const;

    /// Every learnable tensor with a stable dotted name, in a fixed order.
    num::ParamList parameters() const;
    std::size_t parameter_count() const;

    /// Directory of <name>.bin tensors, manifest.txt (name and shape per
    /// line) and config.json.
    void save(const std::filesystem::path& dir) const;
    static SpoTModel load(const std::filesystem::path& dir);

    Tensor node_table;
    std::array<WalkScanner, 3> walk_scanners;
    std::array<PointwiseConv, 3> walk_pools;
    num::Linear fusion1, fusion2;
    num::Linear input_proj;
    Tensor tod_table;
    Tensor dow_table;
    ssm::MambaStack temporal_mamba;
    TransformerEncoder temporal_transformer;
    TransformerEncoder spatial;
    num::Linear head1, head2;

private:
    ModelConfig cfg_;
};

/// Mean over elements of 0.5 e^2 for |e| <= delta, else delta (|e| - delta/2).
Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta = 1.0);

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace spot::model
