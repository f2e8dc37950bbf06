#pragma once

#include "spot/model/config.hpp"

#include <vector>

namespace spot::trainer {

struct TrainConfig {
    double lr = 0.001;
    double weight_decay = 0.0001;
    double lr_decay_rate = 0.5;
    std::vector<std::size_t> decay_epochs{20, 40, 60};
    std::size_t max_epochs = 300;
    std::size_t patience = 20;
    bool early_stopping = true;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    /// Draw a fresh walk set each epoch instead of keeping one per run.
    bool resample_walks = false;
    /// 0 keeps every window; otherwise the first n anchors of the split.
    std::size_t max_train_windows = 0;
    std::size_t max_val_windows = 0;

    void validate() const;
    /// lr0 * rate^k, k = number of decay epochs <= epoch (0-based).
    double lr_at(std::size_t epoch) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// One document {"model": {...}, "train": {...}}.
struct RunConfig {
    model::ModelConfig model;
    TrainConfig train;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

} // namespace spot::trainer
