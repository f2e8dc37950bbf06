#include "spot/data/dataset.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace spot::data {

namespace chr = std::chrono;

std::size_t STGDataset::steps_per_day() const {
    if (interval_minutes <= 0 || 1440 % interval_minutes != 0) {
        throw DataError("interval of " + std::to_string(interval_minutes) + " minutes does not divide a day");
    }
    return static_cast<std::size_t>(1440 / interval_minutes);
}

TimePoint parse_timestamp(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec);
    if (n < 6 || (sep != 'T' && sep != ' ')) throw DataError("bad timestamp `" + s + "`, expected YYYY-MM-DDTHH:MM[:SS]");
    const chr::year_month_day ymd{chr::year(y), chr::month(static_cast<unsigned>(mo)), chr::day(static_cast<unsigned>(d))};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59 || h < 0 || mi < 0 || sec < 0) {
        throw DataError("timestamp `" + s + "` is not a valid date/time");
    }
    return chr::sys_days(ymd) + chr::hours(h) + chr::minutes(mi) + chr::seconds(sec);
}

std::string format_timestamp(TimePoint t) {
    const auto day = chr::floor<chr::days>(t);
    const chr::year_month_day ymd(day);
    const chr::hh_mm_ss hms(t - day);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(std::string cell, double& out) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ' || cell.back() == '\t')) cell.pop_back();
    std::size_t b = cell.find_first_not_of(" \t");
    if (b == std::string::npos) return false;
    const char* first = cell.data() + b;
    const char* last = cell.data() + cell.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last && std::isfinite(out);
}

std::vector<double> read_signals(const std::filesystem::path& path, std::size_t& n_steps, std::size_t& n_nodes) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open signals file " + path.string());
    std::vector<double> values;
    n_steps = 0;
    n_nodes = 0;
    std::size_t lineno = 0;
    for (std::string line; std::getline(is, line);) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < cells.size() && numeric; ++c) {
            if (!parse_double(cells[c], row[c])) {
                numeric = false;
                bad_col = c + 1;
            }
        }
        if (!numeric) {
            if (n_steps == 0 && n_nodes == 0) {
                n_nodes = cells.size(); // header row fixes the column count
                continue;
            }
            throw DataError(path.string() + ": non-numeric value at row " + std::to_string(lineno) + ", column " +
                            std::to_string(bad_col) + ": `" + cells[bad_col - 1] + "`");
        }
        if (n_nodes == 0) n_nodes = row.size();
        if (row.size() != n_nodes) {
            throw DataError(path.string() + ": row " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                            " columns, expected " + std::to_string(n_nodes));
        }
        values.insert(values.end(), row.begin(), row.end());
        ++n_steps;
    }
    if (n_steps == 0) throw DataError(path.string() + ": no data rows");
    return values;
}

} // namespace

STGDataset load_dataset(const std::filesystem::path& signals, const std::filesystem::path& edges,
                        const std::filesystem::path& meta) {
    STGDataset ds;
    ds.values = read_signals(signals, ds.n_steps, ds.n_nodes);

    std::ifstream ms(meta);
    if (!ms) throw DataError("cannot open meta file " + meta.string());
    nlohmann::json mj;
    try {
        mj = nlohmann::json::parse(ms);
        ds.start_time = parse_timestamp(mj.at("start_time").get<std::string>());
        ds.interval_minutes = mj.at("interval_minutes").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(meta.string() + ": " + e.what());
    }
    (void)ds.steps_per_day();

    std::size_t declared = 0;
    if (mj.contains("n_nodes")) declared = mj["n_nodes"].get<std::size_t>();
    try {
        ds.graph = graph::load_edge_list(edges, declared);
    } catch (const graph::GraphError& e) {
        throw DataError(e.what());
    }
    if (ds.graph.n_nodes() != ds.n_nodes) {
        throw DataError("signals have " + std::to_string(ds.n_nodes) + " node columns but the edge list describes " +
                        std::to_string(ds.graph.n_nodes()) + " nodes");
    }
    return ds;
}

STGDataset load_dataset_dir(const std::filesystem::path& dir) {
    return load_dataset(dir / "signals.csv", dir / "edges.csv", dir / "meta.json");
}

void save_dataset(const STGDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "signals.csv");
        if (!os) throw DataError("cannot write " + (dir / "signals.csv").string());
        for (std::size_t i = 0; i < ds.n_nodes; ++i) os << (i ? "," : "") << 'n' << i;
        os << '\n';
        char buf[40];
        for (std::size_t t = 0; t < ds.n_steps; ++t) {
            for (std::size_t i = 0; i < ds.n_nodes; ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", ds.at(t, i));
                os << (i ? "," : "") << buf;
            }
            os << '\n';
        }
        if (!os) throw DataError("failed writing signals.csv");
    }
    {
        std::ofstream os(dir / "edges.csv");
        if (!os) throw DataError("cannot write " + (dir / "edges.csv").string());
        graph::write_edge_list(os, ds.graph);
    }
    {
        std::ofstream os(dir / "meta.json");
        if (!os) throw DataError("cannot write " + (dir / "meta.json").string());
        nlohmann::json j{{"start_time", format_timestamp(ds.start_time)},
                         {"interval_minutes", ds.interval_minutes},
                         {"n_nodes", ds.n_nodes}};
        os << j.dump(2) << '\n';
    }
}

void require_window_fit(const STGDataset& ds, std::size_t T, std::size_t T_out) {
    if (ds.n_steps < T + T_out) {
        throw DataError("dataset has " + std::to_string(ds.n_steps) + " steps, fewer than T + T_out = " +
                        std::to_string(T + T_out));
    }
}

std::uint64_t fingerprint(const STGDataset& ds) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(ds.n_steps);
    mix(ds.n_nodes);
    for (double v : ds.values) mix(std::bit_cast<std::uint64_t>(v));
    for (const auto& [u, v] : ds.graph.edges()) {
        mix(u);
        mix(v);
    }
    mix(static_cast<std::uint64_t>(ds.start_time.time_since_epoch().count()));
    mix(static_cast<std::uint64_t>(ds.interval_minutes));
    return h;
}

STGDataset generate_synthetic(std::size_t n_nodes, std::size_t n_steps, std::uint64_t seed) {
    if (n_nodes < 2) throw DataError("synthetic data needs at least 2 nodes");
    if (n_steps == 0) throw DataError("synthetic data needs at least 1 step");
    STGDataset ds;
    ds.n_nodes = n_nodes;
    ds.n_steps = n_steps;
    ds.interval_minutes = 5;
    ds.start_time = chr::sys_days(chr::year(2024) / chr::January / 1); // a Monday
    ds.graph = graph::Graph::ring(n_nodes);
    ds.values.resize(n_nodes * n_steps);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (std::size_t t = 0; t < n_steps; ++t) {
        for (std::size_t i = 0; i < n_nodes; ++i) {
            const double phase = static_cast<double>(t + 12 * i) / 288.0;
            ds.values[t * n_nodes + i] =
                50.0 + 20.0 * std::sin(two_pi * phase) + 5.0 * std::sin(2.0 * two_pi * phase) + noise(rng);
        }
    }
    return ds;
}

Splits split_622(std::size_t n) {
    const std::size_t tr = n * 6 / 10, va = n * 2 / 10;
    return {{0, tr}, {tr, tr + va}, {tr + va, n}};
}

std::vector<std::size_t> make_windows(Range r, std::size_t T, std::size_t T_out) {
    std::vector<std::size_t> out;
    if (T == 0 || r.size() < T + T_out) return out;
    for (std::size_t t = r.begin + T - 1; t + T_out < r.end; ++t) out.push_back(t);
    return out;
}

Normalizer Normalizer::fit(const STGDataset& ds, Range train) {
    if (train.size() == 0 || train.end > ds.n_steps) throw DataError("normalizer: empty or invalid training range");
    double sum = 0.0;
    const std::size_t n = train.size() * ds.n_nodes;
    for (std::size_t t = train.begin; t < train.end; ++t)
        for (std::size_t i = 0; i < ds.n_nodes; ++i) sum += ds.at(t, i);
    Normalizer z;
    z.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t t = train.begin; t < train.end; ++t)
        for (std::size_t i = 0; i < ds.n_nodes; ++i) ss += (ds.at(t, i) - z.mean) * (ds.at(t, i) - z.mean);
    z.std = std::sqrt(ss / static_cast<double>(n));
    if (!(z.std > 0.0)) throw DataError("normalizer: training signal has zero variance");
    return z;
}

Calendar calendar_indices(const STGDataset& ds, std::size_t t) {
    const std::size_t per_day = ds.steps_per_day();
    const TimePoint at = ds.start_time + chr::minutes(static_cast<long long>(t) * ds.interval_minutes);
    const auto day = chr::floor<chr::days>(at);
    const auto minutes = chr::duration_cast<chr::minutes>(at - day).count();
    Calendar c;
    c.tod = static_cast<std::size_t>(minutes / ds.interval_minutes) % per_day;
    c.dow = (chr::weekday(day).iso_encoding() + 6) % 7;
    return c;
}

WindowBatch make_batch(const STGDataset& ds, const Normalizer& norm, std::span<const std::size_t> anchors,
                       std::size_t T, std::size_t T_out) {
    const std::size_t B = anchors.size(), N = ds.n_nodes;
    if (B == 0) throw DataError("make_batch: no windows");
    WindowBatch wb;
    wb.anchors.assign(anchors.begin(), anchors.end());
    wb.inputs = num::Tensor({B, T, N, 1});
    wb.targets = num::Tensor({B, T_out, N, 1});
    wb.targets_raw = num::Tensor({B, T_out, N, 1});
    auto in = wb.inputs.data_mut();
    auto tg = wb.targets.data_mut();
    auto raw = wb.targets_raw.data_mut();
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t t = anchors[b];
        if (t + 1 < T || t + T_out >= ds.n_steps) throw DataError("make_batch: window at " + std::to_string(t) + " does not fit");
        for (std::size_t k = 0; k < T; ++k) {
            const std::size_t s = t + 1 - T + k;
            for (std::size_t i = 0; i < N; ++i) in[(b * T + k) * N + i] = norm.normalize(ds.at(s, i));
            const auto c = calendar_indices(ds, s);
            wb.tod.push_back(c.tod);
            wb.dow.push_back(c.dow);
        }
        for (std::size_t k = 0; k < T_out; ++k) {
            const std::size_t s = t + 1 + k;
            for (std::size_t i = 0; i < N; ++i) {
                raw[(b * T_out + k) * N + i] = ds.at(s, i);
                tg[(b * T_out + k) * N + i] = norm.normalize(ds.at(s, i));
            }
            const auto c = calendar_indices(ds, s);
            wb.target_tod.push_back(c.tod);
            wb.target_dow.push_back(c.dow);
        }
    }
    return wb;
}

num::Tensor naive_predict(const STGDataset& ds, std::span<const std::size_t> anchors, std::size_t T_out) {
    const std::size_t B = anchors.size(), N = ds.n_nodes;
    num::Tensor out({B, T_out, N, 1});
    auto o = out.data_mut();
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t t = anchors[b];
        if (t + 1 < T_out) throw DataError("naive_predict: window at " + std::to_string(t) + " has fewer than T_out past steps");
        for (std::size_t k = 0; k < T_out; ++k)
            for (std::size_t i = 0; i < N; ++i) o[(b * T_out + k) * N + i] = ds.at(t + 1 - T_out + k, i);
    }
    return out;
}

namespace {
void check_pair(std::span<const double> p, std::span<const double> y, const char* name) {
    if (p.size() != y.size()) throw std::invalid_argument(std::string(name) + ": prediction/truth size mismatch");
    if (p.empty()) throw std::invalid_argument(std::string(name) + ": empty input");
}
} // namespace

double metric_mae(std::span<const double> p, std::span<const double> y) {
    check_pair(p, y, "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - y[i]);
    return s / static_cast<double>(p.size());
}

double metric_rmse(std::span<const double> p, std::span<const double> y) {
    check_pair(p, y, "rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - y[i]) * (p[i] - y[i]);
    return std::sqrt(s / static_cast<double>(p.size()));
}

double metric_mape(std::span<const double> p, std::span<const double> y) {
    check_pair(p, y, "mape");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (y[i] == 0.0) continue;
        s += std::abs((p[i] - y[i]) / y[i]);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("mape: every truth value is zero");
    return 100.0 * s / static_cast<double>(n);
}

} // namespace spot::data
