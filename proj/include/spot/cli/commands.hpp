#pragma once

#include "spot/trainer/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace spot::cli {

namespace fs = std::filesystem;

/// Bad flag values or combinations; maps to exit status 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kData = 3, kNumeric = 4 };

/// Exit status for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// What to record in manifest.json besides the command's own fields.
struct Invocation {
    std::string command_line;
};

struct SynthArgs {
    std::size_t nodes = 8;
    std::size_t steps = 2016;
    std::uint64_t seed = 0;
    fs::path out;
};
void cmd_synth(const SynthArgs& a, const Invocation& inv, std::ostream& log);

struct WalksArgs {
    fs::path data;
    std::size_t K = 20;
    std::size_t M = 2;
    std::uint64_t seed = 0;
    fs::path out;
};
void cmd_walks(const WalksArgs& a, const Invocation& inv, std::ostream& log);

/// Loads a run config file (or defaults), applies `key=value` overrides such
/// as `model.D=16` or `train.max_epochs=5` (values parsed as JSON, bare words
/// as strings) and fills n_nodes / steps_per_day from the dataset when unset.
trainer::RunConfig resolve_run_config(const fs::path& config_file, const std::vector<std::string>& overrides,
                                      const data::STGDataset& ds);

struct TrainArgs {
    fs::path data;
    trainer::RunConfig config;
    fs::path out;
};
/// Writes checkpoint/, history.csv, metrics.csv (test split), config.json.
trainer::TrainResult cmd_train(const TrainArgs& a, const Invocation& inv, std::ostream& log);

struct EvalArgs {
    fs::path checkpoint;
    fs::path data;
    std::string split = "test";
    std::size_t batch_size = 32;
    fs::path out;
};
/// Writes metrics.csv and predictions.csv for the chosen split.
void cmd_eval(const EvalArgs& a, const Invocation& inv, std::ostream& log);

struct AblateArgs {
    fs::path data;
    trainer::RunConfig config;
    fs::path out;
};
/// Trains the four (walk_scan, temporal_scan) arms under one seed. Each arm
/// gets a cmd_train-style subdirectory `<walk>_<temporal>/`; the summary is
/// ablation.csv `walk_scan,temporal_scan,mae,rmse,mape`.
void cmd_ablate(const AblateArgs& a, const Invocation& inv, std::ostream& log);

struct ForecastArgs {
    fs::path checkpoint;
    fs::path data;
    std::string from; ///< step index or "YYYY-MM-DD HH:MM[:SS]"
    std::size_t steps = 0;
    fs::path out;
};
/// Rolling forecast over [from, from + steps): every window whose T_out
/// targets fall inside the range contributes, and per-step predictions are
/// averaged. Writes forecast.csv `time,node,truth,pred`.
void cmd_forecast(const ForecastArgs& a, const Invocation& inv, std::ostream& log);

struct GridArgs {
    fs::path data;
    trainer::RunConfig config;
    trainer::GridSpec grid;
    fs::path out;
};
/// Writes leaderboard.csv and best_config.json.
void cmd_grid(const GridArgs& a, const Invocation& inv, std::ostream& log);

/// Rolling-forecast coverage: for target offset j in [0, steps), the number
/// of windows contributing.
std::vector<std::size_t> forecast_coverage(std::size_t steps, std::size_t T_out);

} // namespace spot::cli
