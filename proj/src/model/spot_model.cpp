#include "spot/model/spot_model.hpp"

#include "spot/numerics/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace spot::model {

using num::ForwardContext;
using num::ShapeError;

namespace {

Tensor xavier_table(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    return num::make_parameter(num::uniform_tensor({rows, cols}, bound, rng));
}

ssm::MambaConfig mamba_config(std::size_t d_model, std::size_t d_state) {
    ssm::MambaConfig m;
    m.d_model = d_model;
    m.d_state = d_state;
    return m;
}

const char* kTypeNames[3] = {"bfs", "dfs", "rw"};

} // namespace

Tensor WalkScanner::forward(const Tensor& x, const ForwardContext& ctx) const {
    return kind == ScanKind::Mamba ? mamba.forward(x) : transformer.forward(x, ctx);
}

void WalkScanner::collect(const std::string& prefix, num::ParamList& out) const {
    if (kind == ScanKind::Mamba) mamba.collect(prefix, out);
    else transformer.collect(prefix, out);
}

Tensor PointwiseConv::forward(const Tensor& x) const {
    const std::size_t M = x.dim(0), N = x.dim(1), D = x.dim(2);
    Tensor cols = num::transpose(num::reshape(x, {M, N * D}));
    return num::reshape(num::add(num::matmul(cols, weight), bias), {N, D});
}

SpoTModel::SpoTModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.init_seed);
    const std::size_t D = cfg_.D, W4 = cfg_.width();

    node_table = xavier_table(cfg_.n_nodes, D, rng);
    for (std::size_t t = 0; t < 3; ++t) {
        auto& sc = walk_scanners[t];
        sc.kind = cfg_.walk_scan;
        if (sc.kind == ScanKind::Mamba) {
            sc.mamba = ssm::BidirectionalMambaStack(mamba_config(D, cfg_.d_state), cfg_.n_layers, rng);
        } else {
            sc.transformer = TransformerEncoder(D, cfg_.n_heads, cfg_.ff_dim, cfg_.n_layers, rng);
        }
        // Start as a plain average over the M extractions.
        walk_pools[t].weight = num::make_parameter(Tensor({cfg_.M, 1}, 1.0 / static_cast<double>(cfg_.M)));
        walk_pools[t].bias = num::make_parameter(Tensor({1}, 0.0));
    }
    fusion1 = num::Linear(3 * D, D, true, rng);
    fusion2 = num::Linear(D, D, true, rng);
    input_proj = num::Linear(cfg_.D_in, D, true, rng);
    tod_table = xavier_table(cfg_.steps_per_day, D, rng);
    dow_table = xavier_table(7, D, rng);
    if (cfg_.temporal_scan == ScanKind::Mamba) {
        temporal_mamba = ssm::MambaStack(mamba_config(W4, cfg_.d_state), cfg_.n_layers, rng);
    } else {
        temporal_transformer = TransformerEncoder(W4, cfg_.n_heads, cfg_.ff_dim, cfg_.n_layers, rng);
    }
    spatial = TransformerEncoder(W4, cfg_.n_heads, cfg_.ff_dim, cfg_.n_layers, rng);
    head1 = num::Linear(cfg_.T * W4, cfg_.ff_dim, true, rng);
    head2 = num::Linear(cfg_.ff_dim, cfg_.T_out * cfg_.D_out, true, rng);
}

Tensor SpoTModel::embed_walks(const graph::WalkSet& walks, const ForwardContext& ctx) const {
    const std::size_t N = cfg_.n_nodes, M = cfg_.M, K = cfg_.K;
    if (walks.n_nodes != N) {
        throw ShapeError("embed_walks: walk set has " + std::to_string(walks.n_nodes) + " nodes, model has " +
                         std::to_string(N));
    }
    if (walks.M != M || walks.K != K) {
        throw ShapeError("embed_walks: walk set has M=" + std::to_string(walks.M) + ", K=" + std::to_string(walks.K) +
                         ", model expects M=" + std::to_string(M) + ", K=" + std::to_string(K));
    }
    std::vector<Tensor> per_type;
    for (auto type : graph::kWalkTypes) {
        const std::size_t t = static_cast<std::size_t>(type);
        const std::span<const std::size_t> idx(walks.nodes.data() + walks.offset(type, 0, 0), M * N * K);
        Tensor seq = num::embedding(node_table, idx, {M * N, K});
        Tensor scanned = walk_scanners[t].forward(seq, ctx);
        Tensor pooled = num::reshape(num::mean(scanned, 1), {M, N, cfg_.D});
        per_type.push_back(walk_pools[t].forward(pooled));
    }
    Tensor joined = num::concat(per_type, 1);
    return fusion2.forward(num::relu(fusion1.forward(joined)));
}

Tensor SpoTModel::assemble_features(const Tensor& X, std::span<const std::size_t> tod,
                                    std::span<const std::size_t> dow, const Tensor& W) const {
    if (X.rank() != 4 || X.dim(1) != cfg_.T || X.dim(2) != cfg_.n_nodes || X.dim(3) != cfg_.D_in) {
        throw ShapeError("assemble_features: expected X [B, " + std::to_string(cfg_.T) + ", " +
                         std::to_string(cfg_.n_nodes) + ", " + std::to_string(cfg_.D_in) + "], got " +
                         num::shape_str(X.shape()));
    }
    if (W.shape() != num::Shape{cfg_.n_nodes, cfg_.D}) {
        throw ShapeError("assemble_features: node embeddings have shape " + num::shape_str(W.shape()));
    }
    const std::size_t B = X.dim(0), T = cfg_.T, N = cfg_.n_nodes, D = cfg_.D;
    if (tod.size() != B * T || dow.size() != B * T) {
        throw ShapeError("assemble_features: expected " + std::to_string(B * T) + " calendar indices per table");
    }
    std::vector<std::size_t> tod_idx(B * T * N), dow_idx(B * T * N);
    for (std::size_t bt = 0; bt < B * T; ++bt) {
        if (tod[bt] >= cfg_.steps_per_day) {
            throw std::out_of_range("assemble_features: time-of-day index " + std::to_string(tod[bt]) +
                                    " outside [0, " + std::to_string(cfg_.steps_per_day) + ")");
        }
        if (dow[bt] >= 7) {
            throw std::out_of_range("assemble_features: day-of-week index " + std::to_string(dow[bt]) +
                                    " outside [0, 7)");
        }
        std::fill_n(tod_idx.begin() + static_cast<std::ptrdiff_t>(bt * N), N, tod[bt]);
        std::fill_n(dow_idx.begin() + static_cast<std::ptrdiff_t>(bt * N), N, dow[bt]);
    }
    Tensor proj = input_proj.forward(X);
    Tensor nodes = num::add(Tensor({B, T, N, D}), W);
    Tensor tod_e = num::embedding(tod_table, tod_idx, {B, T, N});
    Tensor dow_e = num::embedding(dow_table, dow_idx, {B, T, N});
    return num::concat({proj, nodes, tod_e, dow_e}, 3);
}

Tensor SpoTModel::temporal_scan(const Tensor& F, const ForwardContext& ctx) const {
    const std::size_t W4 = cfg_.width();
    if (F.rank() != 4 || F.dim(3) != W4) {
        throw ShapeError("temporal_scan: expected [B, T, N, " + std::to_string(W4) + "], got " +
                         num::shape_str(F.shape()));
    }
    const std::size_t B = F.dim(0), T = F.dim(1), N = F.dim(2);
    Tensor seq = num::reshape(num::permute(F, {0, 2, 1, 3}), {B * N, T, W4});
    Tensor out;
    if (cfg_.temporal_scan == ScanKind::Mamba) {
        out = temporal_mamba.forward(seq);
    } else {
        out = temporal_transformer.forward(num::add(seq, sinusoidal_positions(T, W4)), ctx);
    }
    return num::permute(num::reshape(out, {B, N, T, W4}), {0, 2, 1, 3});
}

Tensor SpoTModel::spatial_mix(const Tensor& Z, const ForwardContext& ctx) const {
    const std::size_t W4 = cfg_.width();
    if (Z.rank() != 4 || Z.dim(3) != W4) {
        throw ShapeError("spatial_mix: expected [B, T, N, " + std::to_string(W4) + "], got " +
                         num::shape_str(Z.shape()));
    }
    const std::size_t B = Z.dim(0), T = Z.dim(1), N = Z.dim(2);
    Tensor out = spatial.forward(num::reshape(Z, {B * T, N, W4}), ctx);
    return num::reshape(out, {B, T, N, W4});
}

Tensor SpoTModel::head(const Tensor& Z) const {
    const std::size_t B = Z.dim(0), T = Z.dim(1), N = Z.dim(2), W4 = Z.dim(3);
    if (T != cfg_.T || W4 != cfg_.width()) throw ShapeError("head: unexpected input " + num::shape_str(Z.shape()));
    Tensor flat = num::reshape(num::permute(Z, {0, 2, 1, 3}), {B * N, T * W4});
    Tensor y = head2.forward(num::relu(head1.forward(flat)));
    return num::permute(num::reshape(y, {B, N, cfg_.T_out, cfg_.D_out}), {0, 2, 1, 3});
}

Tensor SpoTModel::forecast(const Tensor& X, std::span<const std::size_t> tod, std::span<const std::size_t> dow,
                           const graph::WalkSet& walks, const ForwardContext& ctx) const {
    return forecast(X, tod, dow, embed_walks(walks, ctx), ctx);
}

Tensor SpoTModel::forecast(const Tensor& X, std::span<const std::size_t> tod, std::span<const std::size_t> dow,
                           const Tensor& W, const ForwardContext& ctx) const {
    Tensor F = assemble_features(X, tod, dow, W);
    return head(spatial_mix(temporal_scan(F, ctx), ctx));
}

num::ParamList SpoTModel::parameters() const {
    num::ParamList out;
    out.push_back({"node_table", node_table});
    for (std::size_t t = 0; t < 3; ++t) {
        const std::string p = std::string("walk.") + kTypeNames[t];
        walk_scanners[t].collect(p + ".scan", out);
        out.push_back({p + ".pool.weight", walk_pools[t].weight});
        out.push_back({p + ".pool.bias", walk_pools[t].bias});
    }
    fusion1.collect("fusion.0", out);
    fusion2.collect("fusion.1", out);
    input_proj.collect("input_proj", out);
    out.push_back({"tod_table", tod_table});
    out.push_back({"dow_table", dow_table});
    if (cfg_.temporal_scan == ScanKind::Mamba) temporal_mamba.collect("temporal", out);
    else temporal_transformer.collect("temporal", out);
    spatial.collect("spatial", out);
    head1.collect("head.0", out);
    head2.collect("head.1", out);
    return out;
}

std::size_t SpoTModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.numel();
    return n;
}

void SpoTModel::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw CheckpointError("cannot write checkpoint manifest in " + dir.string());
    for (const auto& [name, t] : parameters()) {
        num::save_tensor(dir / (name + ".bin"), t);
        manifest << name;
        for (auto e : t.shape()) manifest << ' ' << e;
        manifest << '\n';
    }
    std::ofstream cfg(dir / "config.json");
    cfg << nlohmann::json(cfg_).dump(2) << '\n';
    if (!cfg || !manifest) throw CheckpointError("failed writing checkpoint " + dir.string());
}

SpoTModel SpoTModel::load(const std::filesystem::path& dir) {
    std::ifstream cfg_in(dir / "config.json");
    if (!cfg_in) throw CheckpointError("no checkpoint at " + dir.string() + " (missing config.json)");
    ModelConfig cfg;
    try {
        cfg = nlohmann::json::parse(cfg_in).get<ModelConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("checkpoint config.json: " + std::string(e.what()));
    }
    SpoTModel model(cfg);

    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw CheckpointError("checkpoint " + dir.string() + " has no manifest.txt");
    std::map<std::string, num::Shape> listed;
    for (std::string line; std::getline(manifest, line);) {
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name)) continue;
        num::Shape shape;
        for (std::size_t e; ls >> e;) shape.push_back(e);
        listed[name] = shape;
    }
    const auto params = model.parameters();
    if (listed.size() != params.size()) {
        throw CheckpointError("checkpoint lists " + std::to_string(listed.size()) + " tensors, model has " +
                              std::to_string(params.size()));
    }
    for (const auto& [name, t] : params) {
        auto it = listed.find(name);
        if (it == listed.end()) throw CheckpointError("checkpoint is missing tensor " + name);
        Tensor stored;
        try {
            stored = num::load_tensor(dir / (name + ".bin"));
        } catch (const std::exception& e) {
            throw CheckpointError("checkpoint tensor " + name + ": " + e.what());
        }
        if (stored.shape() != t.shape() || it->second != t.shape()) {
            throw CheckpointError("checkpoint tensor " + name + " has shape " + num::shape_str(stored.shape()) +
                                  ", expected " + num::shape_str(t.shape()));
        }
        std::copy(stored.data().begin(), stored.data().end(), t.data_mut().begin());
    }
    return model;
}

Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("huber_loss: incompatible shapes " + num::shape_str(pred.shape()) + " and " +
                         num::shape_str(target.shape()));
    }
    if (!(delta > 0.0)) throw std::invalid_argument("huber_loss: delta must be positive");
    const auto p = pred.data();
    const auto y = target.data();
    const double n = static_cast<double>(p.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = std::abs(p[i] - y[i]);
        total += e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
    }
    Tensor out = Tensor::scalar(total / n);
    return num::record_op("huber_loss", {pred, target}, out, [pred, target, delta, n](const Tensor& o) {
        const double g = o.grad()[0] / n;
        const auto p = pred.data();
        const auto y = target.data();
        std::vector<double> gp(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) gp[i] = g * std::clamp(p[i] - y[i], -delta, delta);
        if (pred.requires_grad()) pred.accumulate_grad(gp);
        if (target.requires_grad()) {
            for (auto& v : gp) v = -v;
            target.accumulate_grad(gp);
        }
    });
}

} // namespace spot::model
