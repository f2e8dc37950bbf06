// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include "spot/cli/commands.hpp"
#include "support/model_checks.hpp"
#include "support/op_gradcheck.hpp"
#include "support/ssm_oracles.hpp"
#include "support/walk_checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace spot;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_s; // 0 means no runtime bound
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const cli::Invocation kInv{"acceptance"};

fs::path scratch_root() {
    static const fs::path root = fs::temp_directory_path() / ("spot_acceptance_" + std::to_string(::getpid()));
    return root;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

double metric_from_csv(const fs::path& p, const std::string& metric) {
    std::istringstream is(slurp(p));
    const std::string prefix = metric + ",avg,";
    for (std::string line; std::getline(is, line);) {
        if (line.rfind(prefix, 0) == 0) return std::stod(line.substr(prefix.size()));
    }
    throw std::runtime_error("no " + metric + " in " + p.string());
}

fs::path synthetic_dir(const std::string& name) {
    const fs::path dir = scratch_root() / name;
    std::ostringstream log;
    cli::cmd_synth({8, 2016, 7, dir}, kInv, log);
    return dir;
}

// Default architecture with a short schedule on a subset of windows; the
// harness criteria check plumbing, not accuracy.
trainer::RunConfig short_run(const data::STGDataset& ds) {
    auto rc = cli::resolve_run_config({}, {}, ds);
    rc.model.M = 2;
    rc.train.max_epochs = 2;
    rc.train.patience = 1;
    rc.train.max_train_windows = 64;
    rc.train.max_val_windows = 32;
    return rc;
}

bool close_rel(double got, double want, double rtol) {
    return std::abs(got - want) <= rtol * std::max(std::abs(want), 1e-300) || got == want;
}

Outcome lti_oracle() {
    const auto s = testing::lti_equivalence(101, 200);
    return {s.cases == 400 && s.max_rel_error < 1e-6,
            std::to_string(s.cases) + " scans, max rel err " + fmt("%.3g", s.max_rel_error)};
}

Outcome selective_reduction() {
    const auto s = testing::selective_reduction(202, 50);
    return {s.cases == 50 && s.max_rel_error < 1e-8,
            std::to_string(s.cases) + " fixtures, max rel err " + fmt("%.3g", s.max_rel_error)};
}

Outcome gradient_suite() {
    const auto ops = testing::check_all_primitives(303);
    const auto model = testing::model_gradient_check(testing::tiny_model_config(), 304);
    double worst = 0.0;
    std::string worst_name;
    for (const auto* set : {&ops, &model}) {
        for (const auto& r : *set) {
            if (!(r.max_rel_error <= worst)) {
                worst = r.max_rel_error;
                worst_name = r.op;
            }
        }
    }
    return {!ops.empty() && !model.empty() && worst < 1e-4,
            std::to_string(ops.size()) + " op checks, " + std::to_string(model.size()) +
                " model parameters, worst " + fmt("%.3g", worst) + " (" + worst_name + ")"};
}

Outcome walk_invariants() {
    const auto r = testing::walk_invariant_suite(404, 100, 50);
    std::string d = std::to_string(r.graphs) + " graphs, " + std::to_string(r.walks) + " walks";
    if (!r.failures.empty()) d += ", first failure: " + r.failures.front();
    return {r.graphs == 100 && r.failures.empty(), d};
}

Outcome structure() {
    model::ModelConfig cfg;
    cfg.n_nodes = 8;
    cfg.dropout = 0.0;
    const model::SpoTModel m(cfg);
    const auto f = testing::make_fixture(cfg, 2, 505);
    num::NoGradScope ng;
    const auto W = m.embed_walks(f.walks);
    const auto F = m.assemble_features(f.X, f.tod, f.dow, W);
    const auto Z = m.temporal_scan(F);
    const auto Y = m.forecast(f.X, f.tod, f.dow, f.walks);
    const bool width = F.dim(3) == 4 * cfg.D && Z.shape() == F.shape();
    const bool out = Y.shape() == num::Shape{2, cfg.T_out, cfg.n_nodes, 1};

    double relabel = 0.0, spatial = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
        relabel = std::max(relabel, testing::relabel_equivariance_error(cfg, 510 + s));
        spatial = std::max(spatial, testing::spatial_permutation_error(cfg, 520 + s));
    }
    auto tiny = testing::tiny_model_config();
    relabel = std::max(relabel, testing::relabel_equivariance_error(tiny, 530));
    spatial = std::max(spatial, testing::spatial_permutation_error(tiny, 531));
    return {width && out && relabel < 1e-8 && spatial < 1e-8,
            "Z width " + std::to_string(F.dim(3)) + " (4D = " + std::to_string(4 * cfg.D) + "), forecast " +
                num::shape_str(Y.shape()) + ", relabel err " + fmt("%.3g", relabel) + ", spatial err " +
                fmt("%.3g", spatial)};
}

Outcome overfit() {
    const auto ds = data::generate_synthetic(8, 2016, 7);
    auto rc = cli::resolve_run_config({}, {}, ds);
    rc.model.dropout = 0.0;
    rc.train.max_train_windows = 8;
    rc.train.max_val_windows = 8;
    rc.train.batch_size = 8;
    rc.train.max_epochs = 300;
    rc.train.early_stopping = false;
    const model::SpoTModel m(rc.model);
    const auto run = trainer::prepare_run(ds, rc.model);
    const auto res = trainer::train(m, run, rc.train);
    const double first = res.history.front().train_loss, last = res.history.back().train_loss;
    return {res.epochs_run <= 300 && last < 0.01 * first,
            std::to_string(res.epochs_run) + " epochs, loss " + fmt("%.4g", first) + " -> " + fmt("%.4g", last) +
                " (ratio " + fmt("%.4g", last / first) + ")"};
}

Outcome generalization() {
    const auto dir = synthetic_dir("gen_data");
    const auto ds = data::load_dataset_dir(dir);
    auto rc = cli::resolve_run_config({}, {}, ds);
    rc.model.M = 2;
    rc.train.max_epochs = 10;
    rc.train.patience = 5;
    std::ostringstream log;
    const auto res = cli::cmd_train({dir, rc, scratch_root() / "gen_train"}, kInv, log);
    const double mae = metric_from_csv(scratch_root() / "gen_train" / "metrics.csv", "mae");
    const double naive = metric_from_csv(scratch_root() / "gen_train" / "metrics.csv", "naive_mae");
    return {mae < 0.7 * naive, "test MAE " + fmt("%.4f", mae) + " vs naive " + fmt("%.4f", naive) + " (ratio " +
                                   fmt("%.3f", mae / naive) + ", " + std::to_string(res.epochs_run) + " epochs)"};
}

Outcome ablation() {
    const auto dir = synthetic_dir("ablate_data");
    const auto ds = data::load_dataset_dir(dir);
    const auto rc = short_run(ds);
    std::ostringstream log;
    cli::cmd_ablate({dir, rc, scratch_root() / "ablate"}, kInv, log);
    cli::cmd_train({dir, rc, scratch_root() / "ablate_ref"}, kInv, log);

    std::istringstream table(slurp(scratch_root() / "ablate" / "ablation.csv"));
    std::string line;
    std::getline(table, line);
    std::size_t rows = 0;
    bool finite = true;
    while (std::getline(table, line)) {
        ++rows;
        std::stringstream ss(line);
        std::string cell;
        for (int c = 0; std::getline(ss, cell, ','); ++c) {
            if (c >= 2) finite = finite && std::isfinite(std::stod(cell));
        }
    }
    const bool match = slurp(scratch_root() / "ablate" / "mamba_mamba" / "metrics.csv") ==
                           slurp(scratch_root() / "ablate_ref" / "metrics.csv") &&
                       slurp(scratch_root() / "ablate" / "mamba_mamba" / "history.csv") ==
                           slurp(scratch_root() / "ablate_ref" / "history.csv");
    return {rows == 4 && finite && match, std::to_string(rows) + " arms, finite " + (finite ? "yes" : "no") +
                                              ", mamba/mamba equals train " + (match ? "yes" : "no")};
}

Outcome metric_truths() {
    bool ok = true;
    std::string bad;
    auto expect = [&](const std::string& what, double got, double want) {
        if (!close_rel(got, want, 1e-12)) {
            ok = false;
            bad += " " + what + "=" + fmt("%.17g", got);
        }
    };
    const std::vector<double> p{11, 18}, y{10, 20};
    expect("mae", data::metric_mae(p, y), 1.5);
    expect("rmse", data::metric_rmse(p, y), std::sqrt(2.5));
    expect("mape", data::metric_mape(p, y), 10.0);
    expect("mae0", data::metric_mae(y, y), 0.0);
    expect("rmse0", data::metric_rmse(y, y), 0.0);
    expect("mape0", data::metric_mape(y, y), 0.0);
    expect("mape_masked", data::metric_mape(std::vector<double>{5, 11}, std::vector<double>{0, 10}), 10.0);

    auto huber = [](double e) {
        return model::huber_loss(num::Tensor({1}, {e}), num::Tensor({1}, {0.0}), 1.0).item();
    };
    expect("huber(0.5)", huber(0.5), 0.125);
    expect("huber(2)", huber(2.0), 1.5);
    expect("huber(1)", huber(1.0), 0.5);
    expect("huber knee", huber(1.0), 0.5 * 1.0 * 1.0);

    // MAE <= RMSE on random evaluations.
    std::mt19937_64 rng(909);
    std::normal_distribution<double> nd(0.0, 5.0);
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> a(1 + trial % 37), b(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = nd(rng);
            b[i] = nd(rng);
        }
        if (data::metric_mae(a, b) > data::metric_rmse(a, b) * (1 + 1e-12)) ++violations;
    }
    if (violations) {
        ok = false;
        bad += " mae>rmse in " + std::to_string(violations) + " trials";
    }
    return {ok, ok ? "7 metric and 4 Huber values exact, MAE <= RMSE on 1000 random pairs" : "mismatch:" + bad};
}

Outcome determinism() {
    std::string metrics[2], history[2];
    for (int r = 0; r < 2; ++r) {
        const auto dir = synthetic_dir("det_data_" + std::to_string(r));
        const auto ds = data::load_dataset_dir(dir);
        auto rc = short_run(ds);
        rc.train.seed = 17;
        std::ostringstream log;
        const auto out = scratch_root() / ("det_run_" + std::to_string(r));
        cli::cmd_train({dir, rc, out}, kInv, log);
        metrics[r] = slurp(out / "metrics.csv");
        history[r] = slurp(out / "history.csv");
    }
    const bool same = !metrics[0].empty() && metrics[0] == metrics[1] && history[0] == history[1];
    return {same, std::string("metrics.csv ") + (metrics[0] == metrics[1] ? "identical" : "differ") + " (" +
                      std::to_string(metrics[0].size()) + " bytes)"};
}

} // namespace

int main(int argc, char** argv) {
    // Optional: run a subset, e.g. `acceptance 1 2 9`.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

    const std::vector<Criterion> criteria{
        {1, "LTI oracle equivalence", 5, lti_oracle},
        {2, "selective-to-LTI reduction", 5, selective_reduction},
        {3, "gradient suite", 60, gradient_suite},
        {4, "walk invariants", 10, walk_invariants},
        {5, "structural shapes and equivariance", 0, structure},
        {6, "overfit 8 windows", 600, overfit},
        {7, "generalization over naive", 1800, generalization},
        {8, "ablation harness", 0, ablation},
        {9, "metric ground truths", 0, metric_truths},
        {10, "end-to-end determinism", 0, determinism},
    };

    fs::create_directories(scratch_root());
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string timing = fmt("%.1fs", secs);
        if (c.limit_s > 0) {
            timing += fmt(" (limit %.0fs)", c.limit_s);
            if (secs >= c.limit_s) {
                o.pass = false;
                o.detail += "; over time";
            }
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                    timing.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(scratch_root());
    return failed == 0 ? 0 : 1;
}
