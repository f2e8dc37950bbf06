#include "spot/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

namespace spot::trainer {

using num::Tensor;

Adam::Adam(num::ParamList params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.numel(), 0.0);
        v_.emplace_back(p.tensor.numel(), 0.0);
    }
}

void Adam::step(double lr, double weight_decay) {
    for (const auto& p : params_) {
        if (!p.tensor.has_grad()) throw std::invalid_argument("adam: parameter `" + p.name + "` has no gradient");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto w = params_[k].tensor.data_mut();
        auto g = params_[k].tensor.grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i] + weight_decay * w[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

RunData prepare_run(const data::STGDataset& ds, const model::ModelConfig& cfg) {
    if (ds.n_nodes != cfg.n_nodes) {
        throw num::ShapeError("dataset has " + std::to_string(ds.n_nodes) + " nodes, model config expects " +
                              std::to_string(cfg.n_nodes));
    }
    if (ds.steps_per_day() != cfg.steps_per_day) {
        throw num::ShapeError("dataset has " + std::to_string(ds.steps_per_day()) +
                              " steps per day, model config expects " + std::to_string(cfg.steps_per_day));
    }
    data::require_window_fit(ds, cfg.T, cfg.T_out);
    RunData run;
    run.dataset = &ds;
    run.splits = data::split_622(ds.n_steps);
    run.normalizer = data::Normalizer::fit(ds, run.splits.train);
    run.walks = graph::generate_walks(ds.graph, cfg.K, cfg.M, cfg.walk_seed);
    return run;
}

namespace {

std::vector<std::size_t> capped_windows(data::Range r, const model::ModelConfig& mc, std::size_t cap) {
    auto w = data::make_windows(r, mc.T, mc.T_out);
    if (cap && w.size() > cap) w.resize(cap);
    return w;
}

std::vector<std::vector<double>> snapshot(const num::ParamList& params) {
    std::vector<std::vector<double>> out;
    for (const auto& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
    return out;
}

void restore(const num::ParamList& params, const std::vector<std::vector<double>>& snap) {
    for (std::size_t k = 0; k < params.size(); ++k) std::copy(snap[k].begin(), snap[k].end(), params[k].tensor.data_mut().begin());
}

double mean_abs_error(const Tensor& a, const Tensor& b) { return data::metric_mae(a.data(), b.data()); }

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint32_t stream, std::uint32_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream, index};
    return std::mt19937_64(seq);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Tensor predict(const model::SpoTModel& model, const RunData& run, std::span<const std::size_t> anchors,
               std::size_t batch_size) {
    const auto& mc = model.config();
    const std::size_t B = anchors.size(), N = mc.n_nodes, To = mc.T_out;
    if (mc.D_out != 1) throw num::ShapeError("predict: only single-channel outputs are supported");
    Tensor out({B, To, N});
    num::NoGradScope ng;
    const Tensor W = model.embed_walks(run.walks);
    auto o = out.data_mut();
    for (std::size_t b0 = 0; b0 < B; b0 += batch_size) {
        const auto chunk = anchors.subspan(b0, std::min(batch_size, B - b0));
        const auto wb = data::make_batch(*run.dataset, run.normalizer, chunk, mc.T, To);
        const Tensor y = model.forecast(wb.inputs, wb.tod, wb.dow, W);
        auto ys = y.data();
        for (std::size_t i = 0; i < ys.size(); ++i) o[b0 * To * N + i] = run.normalizer.denormalize(ys[i]);
    }
    return out;
}

TrainResult train(const model::SpoTModel& model, const RunData& run, const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    const auto& mc = model.config();
    const auto& ds = *run.dataset;
    auto train_w = capped_windows(run.splits.train, mc, cfg.max_train_windows);
    const auto val_w = capped_windows(run.splits.val, mc, cfg.max_val_windows);
    if (train_w.empty()) throw data::DataError("training split holds no complete window");
    if (val_w.empty()) throw data::DataError("validation split holds no complete window");

    Tensor val_truth({val_w.size(), mc.T_out, mc.n_nodes});
    {
        const auto wb = data::make_batch(ds, run.normalizer, val_w, mc.T, mc.T_out);
        std::copy(wb.targets_raw.data().begin(), wb.targets_raw.data().end(), val_truth.data_mut().begin());
    }

    const auto params = model.parameters();
    Adam adam(params);
    auto dropout_rng = derived_rng(cfg.seed, 1);
    RunData epoch_run = run;

    TrainResult res;
    std::vector<std::vector<double>> best;
    std::size_t since_best = 0;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = cfg.lr_at(epoch);
        auto shuffle_rng = derived_rng(cfg.seed, 2, static_cast<std::uint32_t>(epoch));
        std::shuffle(train_w.begin(), train_w.end(), shuffle_rng);
        if (cfg.resample_walks && epoch > 0) {
            epoch_run.walks = graph::generate_walks(ds.graph, mc.K, mc.M, mc.walk_seed + epoch);
        }

        double loss_sum = 0.0;
        const num::ForwardContext ctx{true, mc.dropout, &dropout_rng};
        for (std::size_t b0 = 0, batch = 0; b0 < train_w.size(); b0 += cfg.batch_size, ++batch) {
            const std::span<const std::size_t> chunk(train_w.data() + b0, std::min(cfg.batch_size, train_w.size() - b0));
            const auto wb = data::make_batch(ds, run.normalizer, chunk, mc.T, mc.T_out);
            for (const auto& p : params) p.tensor.clear_grad();
            num::Tape tape;
            {
                num::TapeScope scope(tape);
                const Tensor y = model.forecast(wb.inputs, wb.tod, wb.dow, epoch_run.walks, ctx);
                const Tensor loss = model::huber_loss(y, wb.targets, mc.huber_delta);
                if (!std::isfinite(loss.item())) {
                    throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch));
                }
                num::backward(tape, loss);
                loss_sum += loss.item() * static_cast<double>(chunk.size());
            }
            adam.step(lr, cfg.weight_decay);
        }
        for (const auto& p : params) p.tensor.clear_grad();

        const double val_mae = mean_abs_error(predict(model, epoch_run, val_w, cfg.batch_size), val_truth);
        if (!std::isfinite(val_mae)) throw NumericError("non-finite validation MAE at epoch " + std::to_string(epoch));
        const EpochRecord rec{epoch, loss_sum / static_cast<double>(train_w.size()), val_mae, lr};
        res.history.push_back(rec);
        res.epochs_run = epoch + 1;
        if (best.empty() || val_mae < res.best_val_mae) {
            res.best_val_mae = val_mae;
            res.best_epoch = epoch;
            best = snapshot(params);
            since_best = 0;
        } else {
            ++since_best;
        }
        if (log) {
            *log << "epoch " << epoch << "  train_loss " << fmt(rec.train_loss) << "  val_mae " << fmt(val_mae)
                 << "  lr " << lr << (since_best == 0 ? "  *" : "") << std::endl;
        }
        if (cfg.early_stopping && since_best >= cfg.patience) {
            res.stopped_early = true;
            break;
        }
    }
    restore(params, best);
    return res;
}

double EvalReport::value(const std::string& metric, const std::string& horizon) const {
    for (const auto& r : rows)
        if (r.metric == metric && r.horizon == horizon) return r.value;
    throw std::out_of_range("evaluation report has no " + metric + "@" + horizon);
}

EvalReport evaluate(const model::SpoTModel& model, const RunData& run, data::Range split, std::size_t batch_size) {
    const auto& mc = model.config();
    const auto& ds = *run.dataset;
    EvalReport r;
    r.anchors = data::make_windows(split, mc.T, mc.T_out);
    if (r.anchors.empty()) throw data::DataError("evaluation range holds no complete window");
    const std::size_t B = r.anchors.size(), To = mc.T_out, N = mc.n_nodes;
    r.predictions = predict(model, run, r.anchors, batch_size);
    const auto wb = data::make_batch(ds, run.normalizer, r.anchors, mc.T, To);
    r.truth = num::reshape(wb.targets_raw.detach(), {B, To, N});
    r.naive = num::reshape(data::naive_predict(ds, r.anchors, To).detach(), {B, To, N});

    auto add_rows = [&](const std::string& prefix, const Tensor& pred) {
        for (const char* kind : {"mae", "rmse", "mape"}) {
            auto metric = [&](std::span<const double> p, std::span<const double> y) {
                const std::string k = kind;
                return k == "mae" ? data::metric_mae(p, y) : k == "rmse" ? data::metric_rmse(p, y) : data::metric_mape(p, y);
            };
            for (std::size_t h = 0; h < To; ++h) {
                std::vector<double> p, y;
                p.reserve(B * N);
                y.reserve(B * N);
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t i = 0; i < N; ++i) {
                        p.push_back(pred.data()[(b * To + h) * N + i]);
                        y.push_back(r.truth.data()[(b * To + h) * N + i]);
                    }
                r.rows.push_back({prefix + kind, std::to_string(h + 1), metric(p, y)});
            }
            r.rows.push_back({prefix + kind, "avg", metric(pred.data(), r.truth.data())});
        }
    };
    add_rows("", r.predictions);
    add_rows("naive_", r.naive);

    for (const auto& row : r.rows) {
        if (!std::isfinite(row.value)) throw NumericError("non-finite " + row.metric + " at horizon " + row.horizon);
    }
    // Jensen: MAE <= RMSE for every horizon and both predictors.
    for (const std::string prefix : {"", "naive_"}) {
        for (std::size_t h = 0; h <= To; ++h) {
            const std::string hz = h == To ? "avg" : std::to_string(h + 1);
            const double mae = r.value(prefix + "mae", hz), rmse = r.value(prefix + "rmse", hz);
            if (mae > rmse * (1.0 + 1e-12)) {
                throw NumericError("MAE " + fmt(mae) + " exceeds RMSE " + fmt(rmse) + " at horizon " + hz);
            }
        }
    }
    return r;
}

void write_metrics_csv(std::ostream& os, const EvalReport& r) {
    os << "metric,horizon,value\n";
    for (const auto& row : r.rows) os << row.metric << ',' << row.horizon << ',' << fmt(row.value) << '\n';
}

void write_predictions_csv(std::ostream& os, const EvalReport& r) {
    os << "window,time,horizon,node,truth,pred\n";
    const std::size_t To = r.truth.dim(1), N = r.truth.dim(2);
    for (std::size_t b = 0; b < r.anchors.size(); ++b)
        for (std::size_t h = 0; h < To; ++h)
            for (std::size_t i = 0; i < N; ++i) {
                const std::size_t k = (b * To + h) * N + i;
                os << r.anchors[b] << ',' << r.anchors[b] + 1 + h << ',' << h + 1 << ',' << i << ','
                   << fmt(r.truth.data()[k]) << ',' << fmt(r.predictions.data()[k]) << '\n';
            }
}

void write_history_csv(std::ostream& os, const TrainResult& r) {
    os << "epoch,train_loss,val_mae,lr\n";
    for (const auto& e : r.history) os << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.val_mae) << ',' << fmt(e.lr) << '\n';
}

std::vector<GridPoint> GridSpec::points() const {
    std::vector<GridPoint> out;
    for (auto m : M)
        for (auto l : lr)
            for (auto wd : weight_decay)
                for (auto rate : lr_decay_rate) out.push_back({l, wd, rate, m});
    return out;
}

GridResult grid_search(const data::STGDataset& ds, const RunConfig& base, const GridSpec& grid, std::ostream* log) {
    GridResult g;
    const auto points = grid.points();
    for (std::size_t k = 0; k < points.size(); ++k) {
        RunConfig rc = base;
        rc.model.M = points[k].M;
        rc.train.lr = points[k].lr;
        rc.train.weight_decay = points[k].weight_decay;
        rc.train.lr_decay_rate = points[k].lr_decay_rate;
        if (log) {
            *log << "grid point " << k + 1 << "/" << points.size() << ": M=" << rc.model.M << " lr=" << rc.train.lr
                 << " wd=" << rc.train.weight_decay << " rate=" << rc.train.lr_decay_rate << std::endl;
        }
        const model::SpoTModel m(rc.model);
        const auto run = prepare_run(ds, rc.model);
        const auto res = train(m, run, rc.train, nullptr);
        g.leaderboard.push_back({k, points[k], res.best_epoch, res.epochs_run, res.best_val_mae});
    }
    std::stable_sort(g.leaderboard.begin(), g.leaderboard.end(),
                     [](const auto& a, const auto& b) { return a.val_mae < b.val_mae; });
    g.best = base;
    if (!g.leaderboard.empty()) {
        const auto& p = g.leaderboard.front().point;
        g.best.model.M = p.M;
        g.best.train.lr = p.lr;
        g.best.train.weight_decay = p.weight_decay;
        g.best.train.lr_decay_rate = p.lr_decay_rate;
    }
    return g;
}

void write_leaderboard_csv(std::ostream& os, const GridResult& g) {
    os << "rank,lr,weight_decay,lr_decay_rate,M,best_epoch,epochs_run,val_mae\n";
    for (std::size_t r = 0; r < g.leaderboard.size(); ++r) {
        const auto& e = g.leaderboard[r];
        os << r + 1 << ',' << fmt(e.point.lr) << ',' << fmt(e.point.weight_decay) << ',' << fmt(e.point.lr_decay_rate)
           << ',' << e.point.M << ',' << e.best_epoch << ',' << e.epochs_run << ',' << fmt(e.val_mae) << '\n';
    }
}

} // namespace spot::trainer
