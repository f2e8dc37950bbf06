#include <doctest.h>

#include "spot/model/spot_model.hpp"
#include "support/model_checks.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

using namespace spot;
using model::ModelConfig;
using model::ScanKind;
using model::SpoTModel;
using num::Tensor;

namespace {

double max_abs(const Tensor& a, const Tensor& b) {
    double mx = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) mx = std::max(mx, std::abs(a.data()[i] - b.data()[i]));
    return mx;
}

} // namespace

TEST_CASE("huber loss branches and continuity") {
    auto h = [](double e) { return model::huber_loss(Tensor({1}, {e}), Tensor({1}, {0.0}), 1.0).item(); };
    CHECK(h(0.5) == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(h(2.0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(h(-2.0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(h(1.0) == doctest::Approx(0.5).epsilon(1e-12));
    // Both branch formulas agree at the knee.
    CHECK(0.5 * 1.0 * 1.0 == 1.0 * (1.0 - 0.5));
    CHECK(std::abs(h(1.0 + 1e-9) - h(1.0 - 1e-9)) < 1e-8);

    // Mean over elements and |gradient| <= delta / n.
    Tensor p({4}, {0.5, 2.0, -3.0, 0.0});
    p.set_requires_grad(true);
    Tensor y({4}, 0.0);
    num::Tape tape;
    {
        num::TapeScope s(tape);
        Tensor l = model::huber_loss(p, y, 1.0);
        CHECK(l.item() == doctest::Approx((0.125 + 1.5 + 2.5 + 0.0) / 4.0).epsilon(1e-12));
        num::backward(tape, l);
    }
    const std::vector<double> expected{0.125, 0.25, -0.25, 0.0};
    for (std::size_t i = 0; i < 4; ++i) CHECK(p.grad()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    CHECK_THROWS_AS(model::huber_loss(p, Tensor({3}), 1.0), num::ShapeError);
    CHECK_THROWS(model::huber_loss(p, y, 0.0));
}

TEST_CASE("model config validation and JSON round trip") {
    ModelConfig c;
    CHECK_THROWS_AS(c.validate(), model::ConfigError); // n_nodes unset
    c.n_nodes = 5;
    c.validate();
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), model::ConfigError);
    c.dropout = 0.2;
    c.walk_scan = ScanKind::Transformer;
    c.temporal_scan = ScanKind::Transformer;
    c.walk_seed = 1ULL << 60;
    nlohmann::json j = c;
    const auto back = j.get<ModelConfig>();
    CHECK(nlohmann::json(back) == j);
    CHECK(back.walk_seed == c.walk_seed);
    CHECK_THROWS_AS(nlohmann::json({{"Dee", 3}}).get<ModelConfig>(), model::ConfigError);
    CHECK_THROWS_AS(nlohmann::json({{"walk_scan", "lstm"}}).get<ModelConfig>(), model::ConfigError);
}

TEST_CASE("default config shapes: W is N x D, features 4D, output (T_out, N, 1)") {
    ModelConfig cfg;
    cfg.n_nodes = 4;
    cfg.n_layers = 1;
    cfg.K = 6;
    const SpoTModel m(cfg);
    const auto f = testing::make_fixture(cfg, 1, 3);
    num::NoGradScope ng;
    const Tensor W = m.embed_walks(f.walks);
    CHECK(W.shape() == num::Shape{4, 32});
    const Tensor F = m.assemble_features(f.X, f.tod, f.dow, W);
    CHECK(F.shape() == num::Shape{1, 12, 4, 128});
    const Tensor Z = m.temporal_scan(F);
    CHECK(Z.shape() == F.shape());
    CHECK(m.spatial_mix(Z).shape() == F.shape());
    const Tensor Y = m.forecast(f.X, f.tod, f.dow, f.walks);
    CHECK(Y.shape() == num::Shape{1, 12, 4, 1});
    CHECK(max_abs(Y, m.forecast(f.X, f.tod, f.dow, f.walks)) == 0.0);
}

TEST_CASE("embed_walks rejects mismatched walk sets") {
    const auto cfg = testing::tiny_model_config();
    const SpoTModel m(cfg);
    CHECK_THROWS_AS(m.embed_walks(graph::generate_walks(graph::Graph::ring(5), cfg.K, cfg.M, 1)), num::ShapeError);
    CHECK_THROWS_AS(m.embed_walks(graph::generate_walks(graph::Graph::ring(4), cfg.K + 1, cfg.M, 1)), num::ShapeError);
    CHECK_THROWS_AS(m.embed_walks(graph::generate_walks(graph::Graph::ring(4), cfg.K, cfg.M + 1, 1)), num::ShapeError);
}

TEST_CASE("nodes with identical walks and tied embeddings get identical w_i") {
    // Two isolated nodes: every walk is the node repeated. With equal table
    // rows their walk sequences are indistinguishable.
    auto cfg = testing::tiny_model_config();
    cfg.M = 1;
    const SpoTModel m(cfg);
    const graph::Graph g(4, std::vector<graph::Edge>{{0, 1}});
    const auto walks = graph::generate_walks(g, cfg.K, cfg.M, 3);
    auto tab = m.node_table.data_mut();
    for (std::size_t d = 0; d < cfg.D; ++d) tab[3 * cfg.D + d] = tab[2 * cfg.D + d];
    num::NoGradScope ng;
    const Tensor W = m.embed_walks(walks);
    for (std::size_t d = 0; d < cfg.D; ++d) CHECK(W.data()[2 * cfg.D + d] == W.data()[3 * cfg.D + d]);
    // Connected nodes with different rows do not collapse.
    CHECK(W.data()[0] != W.data()[cfg.D]);
}

TEST_CASE("assemble_features lookups") {
    const auto cfg = testing::tiny_model_config();
    const SpoTModel m(cfg);
    num::NoGradScope ng;
    for (auto& v : m.tod_table.data_mut()) v = 0.0;
    for (auto& v : m.dow_table.data_mut()) v = 0.0;
    for (auto& v : m.input_proj.weight.data_mut()) v = 0.0;
    for (auto& v : m.input_proj.bias.data_mut()) v = 0.0;
    const Tensor W0({cfg.n_nodes, cfg.D});
    std::vector<std::size_t> tod{1, 2, 3}, dow{0, 1, 2};
    const Tensor zero = m.assemble_features(Tensor({1, 3, 4, 1}), tod, dow, W0);
    for (double v : zero.data()) CHECK(v == 0.0);

    const SpoTModel m2(cfg);
    const auto f = testing::make_fixture(cfg, 1, 4);
    std::vector<std::size_t> t2{7, 9, 7}, d2{3, 5, 3};
    const Tensor F = m2.assemble_features(f.X, t2, d2, m2.embed_walks(f.walks));
    const std::size_t N = cfg.n_nodes, W4 = cfg.width(), D = cfg.D;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t c = D; c < W4; ++c) CHECK(F.data()[(0 * N + i) * W4 + c] == F.data()[(2 * N + i) * W4 + c]);
    std::vector<std::size_t> bad_tod{1, 288, 2};
    CHECK_THROWS_AS(m2.assemble_features(f.X, bad_tod, d2, m2.embed_walks(f.walks)), std::out_of_range);
    std::vector<std::size_t> bad_dow{1, 7, 2};
    CHECK_THROWS_AS(m2.assemble_features(f.X, t2, bad_dow, m2.embed_walks(f.walks)), std::out_of_range);
    std::vector<std::size_t> short_idx{1, 2};
    CHECK_THROWS_AS(m2.assemble_features(f.X, short_idx, short_idx, m2.embed_walks(f.walks)), num::ShapeError);
}

TEST_CASE("temporal scan: causal in time and independent across nodes") {
    auto cfg = testing::tiny_model_config();
    cfg.T = 6;
    const SpoTModel m(cfg);
    std::mt19937_64 rng(8);
    num::NoGradScope ng;
    const Tensor F = num::normal_tensor({1, 6, 4, cfg.width()}, 1.0, rng);
    const Tensor Z = m.temporal_scan(F);
    CHECK(Z.shape() == F.shape());

    const std::size_t W4 = cfg.width(), N = cfg.n_nodes;
    // Perturb node 2 at t = 3.
    Tensor G = F.clone();
    G.data_mut()[(3 * N + 2) * W4 + 1] += 0.5;
    const Tensor Zg = m.temporal_scan(G);
    for (std::size_t t = 0; t < 6; ++t) {
        for (std::size_t i = 0; i < N; ++i) {
            double d = 0.0;
            for (std::size_t c = 0; c < W4; ++c) d = std::max(d, std::abs(Z.data()[(t * N + i) * W4 + c] - Zg.data()[(t * N + i) * W4 + c]));
            if (i != 2 || t < 3) CHECK(d == 0.0);
            else CHECK(d > 0.0);
        }
    }
}

TEST_CASE("spatial mix: permutation equivariance, single node, per-step independence") {
    const auto cfg = testing::tiny_model_config();
    CHECK(testing::spatial_permutation_error(cfg, 1) < 1e-12);
    auto big = cfg;
    big.n_nodes = 7;
    CHECK(testing::spatial_permutation_error(big, 2) < 1e-12);

    // One node: attention weights are all 1 so the token attends to itself.
    auto one = cfg;
    one.n_nodes = 1;
    const SpoTModel m(one);
    std::mt19937_64 rng(3);
    num::NoGradScope ng;
    const Tensor Z = num::normal_tensor({1, 3, 1, one.width()}, 1.0, rng);
    const auto& layer = m.spatial.layers[0];
    const Tensor x = num::reshape(Z, {3, 1, one.width()});
    const Tensor value_path = layer.attn.out_proj.forward(num::slice(
        layer.attn.qkv.forward(layer.norm1.forward(x)), 2, 2 * one.width(), 3 * one.width()));
    CHECK(max_abs(layer.attn.forward(layer.norm1.forward(x), {}), value_path) < 1e-14);

    // Perturbing one time step changes only that step.
    const Tensor Z2 = num::normal_tensor({1, 3, cfg.n_nodes, cfg.width()}, 1.0, rng);
    const SpoTModel m4(cfg);
    Tensor P = Z2.clone();
    P.data_mut()[cfg.n_nodes * cfg.width() + 5] += 1.0; // t = 1
    const Tensor a = m4.spatial_mix(Z2), b = m4.spatial_mix(P);
    const std::size_t step = cfg.n_nodes * cfg.width();
    for (std::size_t i = 0; i < a.numel(); ++i) {
        if (i / step != 1) CHECK(a.data()[i] == b.data()[i]);
    }
}

TEST_CASE("node relabeling permutes forecasts") {
    const auto cfg = testing::tiny_model_config();
    CHECK(testing::relabel_equivariance_error(cfg, 21) < 1e-10);
    auto t = cfg;
    t.walk_scan = ScanKind::Transformer;
    t.temporal_scan = ScanKind::Transformer;
    CHECK(testing::relabel_equivariance_error(t, 22) < 1e-10);
}

TEST_CASE("end-to-end gradients match finite differences") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = testing::model_gradient_check(testing::tiny_model_config(), 31);
    double worst = 0.0;
    for (const auto& r : res) {
        INFO(r.op);
        CHECK(r.max_rel_error < 1e-4);
        worst = std::max(worst, r.max_rel_error);
    }
    MESSAGE("parameters checked: " << res.size() << ", worst rel err " << worst << ", "
                                   << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                                   << " s");
}

TEST_CASE("all four scan-kind arms run with matching shapes and gradients") {
    for (auto walk : {ScanKind::Mamba, ScanKind::Transformer}) {
        for (auto temporal : {ScanKind::Mamba, ScanKind::Transformer}) {
            auto cfg = testing::tiny_model_config();
            cfg.walk_scan = walk;
            cfg.temporal_scan = temporal;
            INFO(model::scan_kind_name(walk) << "/" << model::scan_kind_name(temporal));
            const SpoTModel m(cfg);
            const auto f = testing::make_fixture(cfg, 2, 9);
            num::Tape tape;
            Tensor y;
            {
                num::TapeScope s(tape);
                y = m.forecast(f.X, f.tod, f.dow, f.walks);
                num::backward(tape, model::huber_loss(y, f.target));
            }
            CHECK(y.shape() == num::Shape{2, 3, 4, 1});
            for (const auto& p : m.parameters()) {
                INFO(p.name);
                REQUIRE(p.tensor.has_grad());
                for (double g : p.tensor.grad()) REQUIRE(std::isfinite(g));
            }
            if (walk == ScanKind::Transformer && temporal == ScanKind::Mamba) {
                for (const auto& r : testing::model_gradient_check(cfg, 5)) {
                    INFO(r.op);
                    CHECK(r.max_rel_error < 1e-4);
                }
            }
        }
    }
}

TEST_CASE("dropout only acts in training mode") {
    const auto cfg = testing::tiny_model_config();
    const SpoTModel m(cfg);
    const auto f = testing::make_fixture(cfg, 1, 2);
    num::NoGradScope ng;
    std::mt19937_64 rng(1);
    num::ForwardContext train{true, 0.5, &rng};
    const Tensor eval1 = m.forecast(f.X, f.tod, f.dow, f.walks);
    const Tensor tr = m.forecast(f.X, f.tod, f.dow, f.walks, train);
    CHECK(max_abs(eval1, tr) > 0.0);
    CHECK(max_abs(eval1, m.forecast(f.X, f.tod, f.dow, f.walks)) == 0.0);
}

TEST_CASE("checkpoint round trip") {
    auto cfg = testing::tiny_model_config();
    cfg.temporal_scan = ScanKind::Transformer;
    const SpoTModel m(cfg);
    for (auto& v : m.head2.bias.data_mut()) v = 0.123456789012345678;
    const auto dir = std::filesystem::temp_directory_path() / "spot_ckpt_test";
    std::filesystem::remove_all(dir);
    m.save(dir);
    CHECK(std::filesystem::exists(dir / "manifest.txt"));
    CHECK(std::filesystem::exists(dir / "config.json"));
    const SpoTModel back = SpoTModel::load(dir);
    CHECK(nlohmann::json(back.config()) == nlohmann::json(cfg));
    const auto a = m.parameters(), b = back.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(max_abs(a[i].tensor, b[i].tensor) == 0.0);
    }
    std::filesystem::remove(dir / "head.1.bias.bin");
    CHECK_THROWS_AS(SpoTModel::load(dir), model::CheckpointError);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(SpoTModel::load(dir), model::CheckpointError);
}
