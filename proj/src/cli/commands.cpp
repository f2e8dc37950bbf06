#include "spot/cli/commands.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace spot::cli {

using nlohmann::json;

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string now_utc() {
    const auto t = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    return data::format_timestamp(t) + "Z";
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    body(os);
    os.flush();
    if (!os) throw IoError("write failed for " + path.string());
}

struct Manifest {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::uint64_t fingerprint = 0;
    std::string started_at = now_utc();
    std::vector<std::string> outputs;

    Manifest(std::string cmd, json cfg, std::uint64_t sd, std::uint64_t fp)
        : command(std::move(cmd)), config(std::move(cfg)), seed(sd), fingerprint(fp) {}

    void write(const fs::path& dir, const Invocation& inv) const {
        json j;
        j["command"] = command;
        j["command_line"] = inv.command_line;
        j["config"] = config;
        j["seed"] = seed;
        j["dataset_fingerprint"] = hex64(fingerprint);
        j["started_at"] = started_at;
        j["finished_at"] = now_utc();
        j["outputs"] = outputs;
        write_file(dir / "manifest.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }
};

void require_data_dir(const fs::path& dir) {
    if (dir.empty()) throw UsageError("--data is required");
}

data::Range pick_split(const data::Splits& s, const std::string& name) {
    if (name == "train") return s.train;
    if (name == "val") return s.val;
    if (name == "test") return s.test;
    throw UsageError("unknown split `" + name + "` (expected train, val or test)");
}

void save_normalizer(const fs::path& ckpt, const data::STGDataset& ds, const data::Normalizer& n) {
    json j{{"fingerprint", hex64(data::fingerprint(ds))}, {"mean", n.mean}, {"std", n.std}};
    write_file(ckpt / "normalizer.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

// A checkpoint carries the training statistics; evaluating on other data
// must not refit them.
struct LoadedCheckpoint {
    model::SpoTModel model;
    std::string trained_on;
};

LoadedCheckpoint load_checkpoint(const fs::path& dir, trainer::RunData& run, const data::STGDataset& ds) {
    if (dir.empty()) throw UsageError("--checkpoint is required");
    auto m = model::SpoTModel::load(dir);
    run = trainer::prepare_run(ds, m.config());
    std::string trained_on;
    std::ifstream is(dir / "normalizer.json");
    if (is) {
        try {
            const json j = json::parse(is);
            run.normalizer.mean = j.at("mean").get<double>();
            run.normalizer.std = j.at("std").get<double>();
            trained_on = j.at("fingerprint").get<std::string>();
        } catch (const json::exception& e) {
            throw model::CheckpointError("bad normalizer.json in " + dir.string() + ": " + e.what());
        }
    }
    return {std::move(m), trained_on};
}

std::size_t parse_step(const std::string& from, const data::STGDataset& ds) {
    if (from.empty()) throw UsageError("--from is required");
    std::size_t idx = 0;
    auto [p, ec] = std::from_chars(from.data(), from.data() + from.size(), idx);
    if (ec == std::errc() && p == from.data() + from.size()) return idx;
    data::TimePoint t;
    try {
        t = data::parse_timestamp(from);
    } catch (const data::DataError&) {
        throw UsageError("--from `" + from + "` is neither a step index nor a timestamp");
    }
    const auto interval = std::chrono::seconds(60 * ds.interval_minutes);
    const auto off = t - ds.start_time;
    if (off.count() < 0 || off % interval != std::chrono::seconds(0)) {
        throw UsageError("--from `" + from + "` does not fall on a sampling step");
    }
    return static_cast<std::size_t>(off / interval);
}

trainer::TrainResult run_training(const data::STGDataset& ds, const trainer::RunConfig& rc, const fs::path& out,
                                  const std::string& command, const Invocation& inv, std::ostream& log) {
    rc.model.validate();
    rc.train.validate();
    make_dir(out);
    Manifest man{command, json(rc), rc.train.seed, data::fingerprint(ds)};

    const auto run = trainer::prepare_run(ds, rc.model);
    const model::SpoTModel m(rc.model);
    log << command << ": " << m.parameter_count() << " parameters, " << ds.n_nodes << " nodes, " << ds.n_steps
        << " steps\n";
    const auto res = trainer::train(m, run, rc.train, &log);
    log << "best epoch " << res.best_epoch << ", val MAE " << fmt(res.best_val_mae) << '\n';

    m.save(out / "checkpoint");
    save_normalizer(out / "checkpoint", ds, run.normalizer);
    const auto rep = trainer::evaluate(m, run, run.splits.test, rc.train.batch_size);
    write_file(out / "metrics.csv", [&](std::ostream& os) { trainer::write_metrics_csv(os, rep); });
    write_file(out / "history.csv", [&](std::ostream& os) { trainer::write_history_csv(os, res); });
    write_file(out / "config.json", [&](std::ostream& os) { os << json(rc).dump(2) << '\n'; });
    log << "test MAE " << fmt(rep.value("mae")) << " (naive " << fmt(rep.value("naive_mae")) << ")\n";

    man.outputs = {"checkpoint", "metrics.csv", "history.csv", "config.json"};
    man.write(out, inv);
    return res;
}

} // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const trainer::NumericError*>(&e)) return kNumeric;
    if (dynamic_cast<const data::DataError*>(&e) || dynamic_cast<const graph::GraphError*>(&e) ||
        dynamic_cast<const model::CheckpointError*>(&e) || dynamic_cast<const num::ShapeError*>(&e) ||
        dynamic_cast<const IoError*>(&e)) {
        return kData;
    }
    if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const UsageError*>(&e)) return kUsage;
    return kFailure;
}

void cmd_synth(const SynthArgs& a, const Invocation& inv, std::ostream& log) {
    if (a.nodes < 2) throw UsageError("--nodes must be at least 2");
    if (a.steps < 24) throw UsageError("--steps must be at least 24 to hold one input/target window");
    if (a.out.empty()) throw UsageError("--out is required");
    make_dir(a.out);
    const auto ds = data::generate_synthetic(a.nodes, a.steps, a.seed);
    try {
        data::save_dataset(ds, a.out);
    } catch (const data::DataError& e) {
        throw IoError(e.what());
    }
    Manifest man{"synth", json{{"nodes", a.nodes}, {"steps", a.steps}, {"seed", a.seed}}, a.seed, data::fingerprint(ds)};
    man.outputs = {"signals.csv", "edges.csv", "meta.json"};
    man.write(a.out, inv);
    log << "synth: " << a.nodes << " nodes x " << a.steps << " steps -> " << a.out.string() << '\n';
}

void cmd_walks(const WalksArgs& a, const Invocation& inv, std::ostream& log) {
    require_data_dir(a.data);
    if (a.K == 0 || a.M == 0) throw UsageError("--K and --M must be positive");
    if (a.out.empty()) throw UsageError("--out is required");
    const auto ds = data::load_dataset_dir(a.data);
    make_dir(a.out);
    const auto ws = graph::generate_walks(ds.graph, a.K, a.M, a.seed);
    write_file(a.out / "walks.csv", [&](std::ostream& os) { graph::write_walks_csv(os, ws); });
    Manifest man{"walks", json{{"K", a.K}, {"M", a.M}, {"seed", a.seed}}, a.seed, data::fingerprint(ds)};
    man.outputs = {"walks.csv"};
    man.write(a.out, inv);
    log << "walks: " << ws.n_walks() << " walks of length " << a.K << '\n';
}

trainer::RunConfig resolve_run_config(const fs::path& config_file, const std::vector<std::string>& overrides,
                                      const data::STGDataset& ds) {
    json j = json::object();
    if (!config_file.empty()) {
        std::ifstream is(config_file);
        if (!is) throw UsageError("cannot open config " + config_file.string());
        try {
            j = json::parse(is);
        } catch (const json::parse_error& e) {
            throw model::ConfigError("config " + config_file.string() + ": " + e.what());
        }
        if (!j.is_object()) throw model::ConfigError("config must be a JSON object");
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        const auto dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw UsageError("override `" + ov + "` must look like section.key=value");
        }
        const std::string section = ov.substr(0, dot), key = ov.substr(dot + 1, eq - dot - 1);
        const std::string raw = ov.substr(eq + 1);
        json v;
        try {
            v = json::parse(raw);
        } catch (const json::parse_error&) {
            v = raw;
        }
        j[section][key] = v;
    }
    if (!j.contains("model") || !j["model"].contains("n_nodes")) j["model"]["n_nodes"] = ds.n_nodes;
    if (!j["model"].contains("steps_per_day")) j["model"]["steps_per_day"] = ds.steps_per_day();
    try {
        auto rc = j.get<trainer::RunConfig>();
        rc.model.validate();
        rc.train.validate();
        return rc;
    } catch (const json::exception& e) {
        throw model::ConfigError(std::string("config: ") + e.what());
    }
}

trainer::TrainResult cmd_train(const TrainArgs& a, const Invocation& inv, std::ostream& log) {
    require_data_dir(a.data);
    if (a.out.empty()) throw UsageError("--out is required");
    const auto ds = data::load_dataset_dir(a.data);
    return run_training(ds, a.config, a.out, "train", inv, log);
}

void cmd_eval(const EvalArgs& a, const Invocation& inv, std::ostream& log) {
    require_data_dir(a.data);
    if (a.out.empty()) throw UsageError("--out is required");
    const auto ds = data::load_dataset_dir(a.data);
    trainer::RunData run;
    const auto ck = load_checkpoint(a.checkpoint, run, ds);
    const auto range = pick_split(run.splits, a.split);
    if (!ck.trained_on.empty() && ck.trained_on != hex64(data::fingerprint(ds))) {
        log << "eval: dataset differs from the training data, using the training statistics\n";
    }
    make_dir(a.out);
    const auto rep = trainer::evaluate(ck.model, run, range, a.batch_size);
    write_file(a.out / "metrics.csv", [&](std::ostream& os) { trainer::write_metrics_csv(os, rep); });
    write_file(a.out / "predictions.csv", [&](std::ostream& os) { trainer::write_predictions_csv(os, rep); });
    Manifest man{"eval",
                 json{{"checkpoint", a.checkpoint.string()}, {"split", a.split}, {"batch_size", a.batch_size},
                      {"model", ck.model.config()}},
                 ck.model.config().init_seed, data::fingerprint(ds)};
    man.outputs = {"metrics.csv", "predictions.csv"};
    man.write(a.out, inv);
    log << "eval[" << a.split << "]: " << rep.anchors.size() << " windows, MAE " << fmt(rep.value("mae"))
        << " (naive " << fmt(rep.value("naive_mae")) << ")\n";
}

void cmd_ablate(const AblateArgs& a, const Invocation& inv, std::ostream& log) {
    require_data_dir(a.data);
    if (a.out.empty()) throw UsageError("--out is required");
    const auto ds = data::load_dataset_dir(a.data);
    make_dir(a.out);
    Manifest man{"ablate", json(a.config), a.config.train.seed, data::fingerprint(ds)};

    std::ostringstream table;
    table << "walk_scan,temporal_scan,mae,rmse,mape\n";
    for (auto walk : {model::ScanKind::Mamba, model::ScanKind::Transformer}) {
        for (auto temporal : {model::ScanKind::Mamba, model::ScanKind::Transformer}) {
            auto rc = a.config;
            rc.model.walk_scan = walk;
            rc.model.temporal_scan = temporal;
            const std::string arm = model::scan_kind_name(walk) + "_" + model::scan_kind_name(temporal);
            log << "ablate: arm " << arm << '\n';
            const fs::path dir = a.out / arm;
            run_training(ds, rc, dir, "train", inv, log);

            // Read the arm's own metrics back so the table is exactly what was written.
            std::ifstream is(dir / "metrics.csv");
            std::string line;
            std::string mae, rmse, mape;
            while (std::getline(is, line)) {
                if (line.rfind("mae,avg,", 0) == 0) mae = line.substr(8);
                if (line.rfind("rmse,avg,", 0) == 0) rmse = line.substr(9);
                if (line.rfind("mape,avg,", 0) == 0) mape = line.substr(9);
            }
            if (mae.empty() || rmse.empty() || mape.empty()) throw IoError("metrics for arm " + arm + " unreadable");
            table << model::scan_kind_name(walk) << ',' << model::scan_kind_name(temporal) << ',' << mae << ','
                  << rmse << ',' << mape << '\n';
            man.outputs.push_back(arm);
        }
    }
    write_file(a.out / "ablation.csv", [&](std::ostream& os) { os << table.str(); });
    man.outputs.push_back("ablation.csv");
    man.write(a.out, inv);
}

std::vector<std::size_t> forecast_coverage(std::size_t steps, std::size_t T_out) {
    std::vector<std::size_t> cov(steps, 0);
    if (steps < T_out) return cov;
    const std::size_t n_windows = steps - T_out + 1;
    for (std::size_t j = 0; j < steps; ++j) {
        cov[j] = std::min({j + 1, T_out, steps - j, n_windows});
    }
    return cov;
}

void cmd_forecast(const ForecastArgs& a, const Invocation& inv, std::ostream& log) {
    require_data_dir(a.data);
    if (a.out.empty()) throw UsageError("--out is required");
    const auto ds = data::load_dataset_dir(a.data);
    trainer::RunData run;
    const auto ck = load_checkpoint(a.checkpoint, run, ds);
    const auto& mc = ck.model.config();
    const std::size_t from = parse_step(a.from, ds);
    const std::size_t T = mc.T, T_out = mc.T_out, N = ds.n_nodes;
    if (a.steps < T_out) {
        throw UsageError("--steps must be at least the horizon (" + std::to_string(T_out) + ")");
    }
    const auto test = run.splits.test;
    if (from < test.begin + T || from + a.steps > test.end) {
        throw UsageError("forecast range [" + std::to_string(from) + ", " + std::to_string(from + a.steps) +
                         ") must lie in the test split [" + std::to_string(test.begin + T) + ", " +
                         std::to_string(test.end) + ") leaving " + std::to_string(T) + " input steps");
    }

    // Anchor t predicts t+1..t+T_out; keep the windows whose targets lie in range.
    std::vector<std::size_t> anchors;
    for (std::size_t t = from - 1; t + T_out < from + a.steps; ++t) anchors.push_back(t);
    const auto pred = trainer::predict(ck.model, run, anchors, 32);
    const auto pv = pred.data();

    std::vector<double> sum(a.steps * N, 0.0);
    std::vector<std::size_t> count(a.steps, 0);
    for (std::size_t b = 0; b < anchors.size(); ++b) {
        const std::size_t j0 = anchors[b] + 1 - from;
        for (std::size_t h = 0; h < T_out; ++h) {
            ++count[j0 + h];
            for (std::size_t i = 0; i < N; ++i) sum[(j0 + h) * N + i] += pv[(b * T_out + h) * N + i];
        }
    }
    if (count != forecast_coverage(a.steps, T_out)) throw std::logic_error("forecast coverage mismatch");

    make_dir(a.out);
    write_file(a.out / "forecast.csv", [&](std::ostream& os) {
        os << "time,node,truth,pred\n";
        const auto interval = std::chrono::minutes(ds.interval_minutes);
        for (std::size_t j = 0; j < a.steps; ++j) {
            const std::size_t t = from + j;
            const auto stamp = data::format_timestamp(ds.start_time + static_cast<long>(t) * interval);
            for (std::size_t i = 0; i < N; ++i) {
                const double p = sum[j * N + i] / static_cast<double>(count[j]);
                if (!std::isfinite(p)) throw trainer::NumericError("non-finite forecast at step " + std::to_string(t));
                os << stamp << ',' << i << ',' << fmt(ds.at(t, i)) << ',' << fmt(p) << '\n';
            }
        }
    });
    Manifest man{"forecast",
                 json{{"checkpoint", a.checkpoint.string()}, {"from", from}, {"steps", a.steps}, {"model", mc}},
                 mc.init_seed, data::fingerprint(ds)};
    man.outputs = {"forecast.csv"};
    man.write(a.out, inv);
    log << "forecast: " << a.steps << " steps from " << from << " using " << anchors.size() << " windows\n";
}

void cmd_grid(const GridArgs& a, const Invocation& inv, std::ostream& log) {
    require_data_dir(a.data);
    if (a.out.empty()) throw UsageError("--out is required");
    const auto ds = data::load_dataset_dir(a.data);
    if (a.grid.points().empty()) throw UsageError("grid is empty");
    make_dir(a.out);
    const auto g = trainer::grid_search(ds, a.config, a.grid, &log);
    write_file(a.out / "leaderboard.csv", [&](std::ostream& os) { trainer::write_leaderboard_csv(os, g); });
    write_file(a.out / "best_config.json", [&](std::ostream& os) { os << json(g.best).dump(2) << '\n'; });
    json grid{{"lr", a.grid.lr}, {"weight_decay", a.grid.weight_decay}, {"lr_decay_rate", a.grid.lr_decay_rate},
              {"M", a.grid.M}};
    Manifest man{"grid", json{{"base", a.config}, {"grid", grid}}, a.config.train.seed, data::fingerprint(ds)};
    man.outputs = {"leaderboard.csv", "best_config.json"};
    man.write(a.out, inv);
    log << "grid: best val MAE " << fmt(g.leaderboard.front().val_mae) << '\n';
}

} // namespace spot::cli
