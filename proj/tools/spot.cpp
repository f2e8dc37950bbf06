#include "spot/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace spot;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* flag) {
    std::vector<T> out;
    for (const auto& item : split_list(s)) {
        try {
            if constexpr (std::is_same_v<T, double>) out.push_back(std::stod(item));
            else out.push_back(static_cast<T>(std::stoull(item)));
        } catch (const std::exception&) {
            throw cli::UsageError(std::string(flag) + ": bad list item `" + item + "`");
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatio-temporal walk-scan forecaster"};
    app.require_subcommand(1);

    cli::Invocation inv;
    for (int i = 0; i < argc; ++i) inv.command_line += (i ? " " : "") + std::string(argv[i]);

    cli::SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate the synthetic ring dataset");
    s->add_option("--nodes", synth.nodes, "Number of nodes")->capture_default_str();
    s->add_option("--steps", synth.steps, "Number of 5-minute steps")->capture_default_str();
    s->add_option("--seed", synth.seed, "Noise seed")->capture_default_str();
    s->add_option("--out", synth.out, "Output directory")->required();

    cli::WalksArgs walks;
    auto* w = app.add_subcommand("walks", "Dump the BFS/DFS/RW walk set as CSV");
    w->add_option("--data", walks.data, "Dataset directory")->required();
    w->add_option("--K", walks.K, "Walk length")->capture_default_str();
    w->add_option("--M", walks.M, "Walks per type and node")->capture_default_str();
    w->add_option("--seed", walks.seed, "Walk seed")->capture_default_str();
    w->add_option("--out", walks.out, "Output directory")->required();

    // train, ablate and grid share the config handling.
    struct RunFlags {
        std::string data, config, out;
        std::vector<std::string> set;
        std::optional<std::uint64_t> seed;
    };
    auto add_run_flags = [](CLI::App* sub, RunFlags& f) {
        sub->add_option("--data", f.data, "Dataset directory")->required();
        sub->add_option("--config", f.config, "Run config JSON {\"model\": {...}, \"train\": {...}}");
        sub->add_option("--set", f.set, "Override, e.g. model.D=16 or train.max_epochs=5 (repeatable)");
        sub->add_option("--seed", f.seed, "Shorthand for train.seed");
        sub->add_option("--out", f.out, "Output directory")->required();
    };
    auto resolve = [](const RunFlags& f) {
        auto sets = f.set;
        if (f.seed) sets.push_back("train.seed=" + std::to_string(*f.seed));
        return cli::resolve_run_config(f.config, sets, data::load_dataset_dir(f.data));
    };

    RunFlags train_f, ablate_f, grid_f;
    auto* t = app.add_subcommand("train", "Train on the 6:2:2 split and evaluate on test");
    add_run_flags(t, train_f);
    auto* ab = app.add_subcommand("ablate", "Train the four walk/temporal scan arms");
    add_run_flags(ab, ablate_f);
    auto* g = app.add_subcommand("grid", "Grid search over lr, weight decay, decay rate and M");
    add_run_flags(g, grid_f);
    std::string grid_lr, grid_wd, grid_rate, grid_m;
    g->add_option("--lr-grid", grid_lr, "Comma-separated learning rates");
    g->add_option("--wd-grid", grid_wd, "Comma-separated weight decays");
    g->add_option("--rate-grid", grid_rate, "Comma-separated decay rates");
    g->add_option("--M-grid", grid_m, "Comma-separated walk counts");

    cli::EvalArgs eval;
    std::string eval_ckpt, eval_data, eval_out;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
    e->add_option("--checkpoint", eval_ckpt, "Checkpoint directory")->required();
    e->add_option("--data", eval_data, "Dataset directory")->required();
    e->add_option("--split", eval.split, "train, val or test")->capture_default_str();
    e->add_option("--batch-size", eval.batch_size, "Inference batch size")->capture_default_str();
    e->add_option("--out", eval_out, "Output directory")->required();

    cli::ForecastArgs fc;
    std::string fc_ckpt, fc_data, fc_out;
    auto* f = app.add_subcommand("forecast", "Rolling forecast over a test-split range");
    f->add_option("--checkpoint", fc_ckpt, "Checkpoint directory")->required();
    f->add_option("--data", fc_data, "Dataset directory")->required();
    f->add_option("--from", fc.from, "First target step (index or YYYY-MM-DD HH:MM)")->required();
    f->add_option("--steps", fc.steps, "Number of target steps")->required();
    f->add_option("--out", fc_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? cli::kOk : cli::kUsage;
    }

    try {
        if (s->parsed()) {
            cli::cmd_synth(synth, inv, std::cout);
        } else if (w->parsed()) {
            cli::cmd_walks(walks, inv, std::cout);
        } else if (t->parsed()) {
            cli::cmd_train({train_f.data, resolve(train_f), train_f.out}, inv, std::cout);
        } else if (ab->parsed()) {
            cli::cmd_ablate({ablate_f.data, resolve(ablate_f), ablate_f.out}, inv, std::cout);
        } else if (g->parsed()) {
            cli::GridArgs ga{grid_f.data, resolve(grid_f), {}, grid_f.out};
            if (!grid_lr.empty()) ga.grid.lr = parse_list<double>(grid_lr, "--lr-grid");
            if (!grid_wd.empty()) ga.grid.weight_decay = parse_list<double>(grid_wd, "--wd-grid");
            if (!grid_rate.empty()) ga.grid.lr_decay_rate = parse_list<double>(grid_rate, "--rate-grid");
            if (!grid_m.empty()) ga.grid.M = parse_list<std::size_t>(grid_m, "--M-grid");
            cli::cmd_grid(ga, inv, std::cout);
        } else if (e->parsed()) {
            eval.checkpoint = eval_ckpt;
            eval.data = eval_data;
            eval.out = eval_out;
            cli::cmd_eval(eval, inv, std::cout);
        } else if (f->parsed()) {
            fc.checkpoint = fc_ckpt;
            fc.data = fc_data;
            fc.out = fc_out;
            cli::cmd_forecast(fc, inv, std::cout);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return cli::exit_code_for(ex);
    }
    return cli::kOk;
}
