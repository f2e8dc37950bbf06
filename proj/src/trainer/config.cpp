#include "spot/trainer/config.hpp"

#include <algorithm>
#include <cmath>

namespace spot::trainer {

using model::ConfigError;

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("train config: lr must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("train config: weight_decay must be non-negative");
    if (!(lr_decay_rate > 0.0)) throw ConfigError("train config: lr_decay_rate must be positive");
    if (max_epochs == 0) throw ConfigError("train config: max_epochs must be positive");
    if (batch_size == 0) throw ConfigError("train config: batch_size must be positive");
    if (early_stopping && (patience == 0 || patience >= max_epochs)) {
        throw ConfigError("train config: patience must lie in [1, max_epochs)");
    }
}

double TrainConfig::lr_at(std::size_t epoch) const {
    const auto k = std::count_if(decay_epochs.begin(), decay_epochs.end(), [&](std::size_t d) { return d <= epoch; });
    return lr * std::pow(lr_decay_rate, static_cast<double>(k));
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"lr", c.lr},
                       {"weight_decay", c.weight_decay},
                       {"lr_decay_rate", c.lr_decay_rate},
                       {"decay_epochs", c.decay_epochs},
                       {"max_epochs", c.max_epochs},
                       {"patience", c.patience},
                       {"early_stopping", c.early_stopping},
                       {"batch_size", c.batch_size},
                       {"seed", c.seed},
                       {"resample_walks", c.resample_walks},
                       {"max_train_windows", c.max_train_windows},
                       {"max_val_windows", c.max_val_windows}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    if (!j.is_object()) throw ConfigError("train config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "lr") c.lr = value.get<double>();
            else if (key == "weight_decay") c.weight_decay = value.get<double>();
            else if (key == "lr_decay_rate") c.lr_decay_rate = value.get<double>();
            else if (key == "decay_epochs") c.decay_epochs = value.get<std::vector<std::size_t>>();
            else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
            else if (key == "patience") c.patience = value.get<std::size_t>();
            else if (key == "early_stopping") c.early_stopping = value.get<bool>();
            else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "resample_walks") c.resample_walks = value.get<bool>();
            else if (key == "max_train_windows") c.max_train_windows = value.get<std::size_t>();
            else if (key == "max_val_windows") c.max_val_windows = value.get<std::size_t>();
            else throw ConfigError("train config: unknown key `" + key + "`");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("train config: bad value for `" + key + "`: " + e.what());
        }
    }
}

void to_json(nlohmann::json& j, const RunConfig& c) { j = nlohmann::json{{"model", c.model}, {"train", c.train}}; }

void from_json(const nlohmann::json& j, RunConfig& c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "model") from_json(value, c.model);
        else if (key == "train") from_json(value, c.train);
        else throw ConfigError("config: unknown section `" + key + "` (expected `model` and `train`)");
    }
}

} // namespace spot::trainer
