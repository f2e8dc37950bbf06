#pragma once

#include "spot/data/dataset.hpp"
#include "spot/model/spot_model.hpp"
#include "spot/trainer/config.hpp"

#include <iosfwd>
#include <optional>

namespace spot::trainer {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bias-corrected Adam with L2 weight decay folded into the gradient.
class Adam {
public:
    explicit Adam(num::ParamList params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    /// Throws std::invalid_argument naming any parameter without a gradient.
    void step(double lr, double weight_decay);
    std::size_t steps() const noexcept { return t_; }

private:
    num::ParamList params_;
    std::vector<std::vector<double>> m_, v_;
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_mae = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_mae = 0.0;
    std::size_t epochs_run = 0;
    bool stopped_early = false;
};

/// Everything a run needs besides the model: dataset, split, statistics and
/// the walk set the model embeds.
struct RunData {
    const data::STGDataset* dataset = nullptr;
    data::Splits splits;
    data::Normalizer normalizer;
    graph::WalkSet walks;
};
RunData prepare_run(const data::STGDataset& ds, const model::ModelConfig& cfg);

/// Optional per-epoch progress sink (one line per epoch).
TrainResult train(const model::SpoTModel& model, const RunData& run, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

/// Model forecasts for a set of anchors, denormalized: [B, T_out, N].
num::Tensor predict(const model::SpoTModel& model, const RunData& run, std::span<const std::size_t> anchors,
                    std::size_t batch_size = 32);

struct MetricRow {
    std::string metric; ///< mae, rmse, mape, naive_mae, ...
    std::string horizon; ///< 1..T_out or avg
    double value = 0.0;
};

struct EvalReport {
    std::vector<std::size_t> anchors;
    num::Tensor predictions; ///< [B, T_out, N] denormalized
    num::Tensor truth;       ///< [B, T_out, N]
    num::Tensor naive;       ///< [B, T_out, N]
    std::vector<MetricRow> rows;

    double value(const std::string& metric, const std::string& horizon = "avg") const;
};

/// Denormalized metrics per horizon and averaged, for the model and the
/// naive predictor. Parameters are left untouched.
EvalReport evaluate(const model::SpoTModel& model, const RunData& run, data::Range split,
                    std::size_t batch_size = 32);

/// CSV `metric,horizon,value`.
void write_metrics_csv(std::ostream& os, const EvalReport& r);
/// CSV `window,time,horizon,node,truth,pred` where window is the anchor step.
void write_predictions_csv(std::ostream& os, const EvalReport& r);
/// CSV `epoch,train_loss,val_mae,lr`.
void write_history_csv(std::ostream& os, const TrainResult& r);

struct GridPoint {
    double lr;
    double weight_decay;
    double lr_decay_rate;
    std::size_t M;
};

struct GridSpec {
    std::vector<double> lr{0.001, 0.0005};
    std::vector<double> weight_decay{0.001, 0.0001};
    std::vector<double> lr_decay_rate{0.1, 0.5};
    std::vector<std::size_t> M{2, 4};

    std::vector<GridPoint> points() const;
};

struct LeaderboardEntry {
    std::size_t index = 0; ///< position in GridSpec::points()
    GridPoint point{};
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    double val_mae = 0.0;
};

struct GridResult {
    std::vector<LeaderboardEntry> leaderboard; ///< ascending val_mae
    RunConfig best;
};

GridResult grid_search(const data::STGDataset& ds, const RunConfig& base, const GridSpec& grid,
                       std::ostream* log = nullptr);
/// CSV `rank,lr,weight_decay,lr_decay_rate,M,best_epoch,epochs_run,val_mae`.
void write_leaderboard_csv(std::ostream& os, const GridResult& g);

} // namespace spot::trainer
