#include <doctest.h>

#include "spot/data/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace spot;
using data::Range;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("spot_data_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

void write_file(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

} // namespace

TEST_CASE("split_622 floor arithmetic") {
    auto s = data::split_622(10);
    CHECK(s.train.size() == 6);
    CHECK(s.val.size() == 2);
    CHECK(s.test.size() == 2);
    s = data::split_622(16992);
    CHECK(s.train.size() == 10195);
    CHECK(s.val.size() == 3398);
    CHECK(s.test.size() == 3399);
    for (std::size_t n : {1u, 7u, 24u, 2016u, 16992u}) {
        s = data::split_622(n);
        CHECK(s.train.begin == 0);
        CHECK(s.train.end == s.val.begin);
        CHECK(s.val.end == s.test.begin);
        CHECK(s.test.end == n);
    }
}

TEST_CASE("make_windows counts and placement") {
    CHECK(data::make_windows({0, 24}, 12, 12).size() == 1);
    CHECK(data::make_windows({0, 23}, 12, 12).empty());
    CHECK(data::make_windows({100, 100 + 3398}, 12, 12).size() == 3375);
    const auto w = data::make_windows({5, 30}, 3, 2);
    CHECK(w.front() == 7);  // inputs 5..7
    CHECK(w.back() == 27);  // targets 28..29
    // No leakage: every train window's targets stay inside train.
    const auto s = data::split_622(2016);
    for (auto t : data::make_windows(s.train, 12, 12)) CHECK(t + 12 < s.val.begin);
}

TEST_CASE("metric ground truths") {
    const std::vector<double> p{11, 18}, y{10, 20};
    CHECK(data::metric_mae(p, y) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(data::metric_rmse(p, y) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
    CHECK(data::metric_mape(p, y) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(data::metric_mae(y, y) == 0.0);
    CHECK(data::metric_rmse(y, y) == 0.0);
    CHECK(data::metric_mape(y, y) == 0.0);
    const std::vector<double> p2{5, 11}, y2{0, 10};
    CHECK(data::metric_mape(p2, y2) == doctest::Approx(10.0).epsilon(1e-12));
    const std::vector<double> zeros{0, 0};
    CHECK_THROWS(data::metric_mape(p2, zeros));
    CHECK_THROWS(data::metric_mae(p, std::vector<double>{1.0}));
}

TEST_CASE("calendar indices") {
    auto ds = data::generate_synthetic(2, 10, 1);
    CHECK(ds.steps_per_day() == 288);
    auto c = data::calendar_indices(ds, 0);
    CHECK(c.tod == 0);
    CHECK(c.dow == 0);
    for (std::size_t t : {0u, 5u, 100u, 287u, 1000u}) {
        auto a = data::calendar_indices(ds, t), b = data::calendar_indices(ds, t + 288);
        CHECK(a.tod == b.tod);
        CHECK(b.dow == (a.dow + 1) % 7);
    }
    c = data::calendar_indices(ds, 288 * 6 + 13);
    CHECK(c.dow == 6); // Sunday
    CHECK(c.tod == 13);
    ds.start_time = data::parse_timestamp("2018-01-03T07:30:00"); // Wednesday
    c = data::calendar_indices(ds, 0);
    CHECK(c.dow == 2);
    CHECK(c.tod == 90);
    ds.interval_minutes = 7;
    CHECK_THROWS_AS(data::calendar_indices(ds, 0), data::DataError);
}

TEST_CASE("timestamps parse and format") {
    const auto t = data::parse_timestamp("2024-01-01T00:00:00");
    CHECK(data::format_timestamp(t) == "2024-01-01T00:00:00");
    CHECK(data::format_timestamp(data::parse_timestamp("2018-02-28 23:55")) == "2018-02-28T23:55:00");
    CHECK_THROWS_AS(data::parse_timestamp("yesterday"), data::DataError);
    CHECK_THROWS_AS(data::parse_timestamp("2018-02-30T00:00:00"), data::DataError);
}

TEST_CASE("normalizer uses training statistics and inverts exactly") {
    data::STGDataset ds;
    ds.n_steps = 2;
    ds.n_nodes = 1;
    ds.values = {0.0, 2.0};
    auto z = data::Normalizer::fit(ds, {0, 2});
    CHECK(z.mean == 1.0);
    CHECK(z.std == 1.0);
    CHECK(z.normalize(0.0) == -1.0);
    CHECK(z.normalize(2.0) == 1.0);

    auto syn = data::generate_synthetic(4, 600, 3);
    const auto s = data::split_622(syn.n_steps);
    z = data::Normalizer::fit(syn, s.train);
    for (double v : syn.values) CHECK(std::abs(z.denormalize(z.normalize(v)) - v) < 1e-12);
    // Batches from any split use the stats they are given.
    const auto wv = data::make_windows(s.val, 12, 12);
    const auto b = data::make_batch(syn, z, std::span(wv).first(2), 12, 12);
    const std::size_t t0 = wv[0] - 11;
    CHECK(b.inputs.data()[0] == z.normalize(syn.at(t0, 0)));
    CHECK(b.targets_raw.data()[0] == syn.at(wv[0] + 1, 0));

    ds.values = {3.0, 3.0};
    CHECK_THROWS_AS(data::Normalizer::fit(ds, {0, 2}), data::DataError);
}

TEST_CASE("naive predictor copies the recent window") {
    data::STGDataset ds;
    ds.n_steps = 30;
    ds.n_nodes = 2;
    for (std::size_t t = 0; t < 30; ++t) {
        ds.values.push_back(static_cast<double>(t + 1));
        ds.values.push_back(7.0);
    }
    const std::vector<std::size_t> anchor{11};
    const auto y = data::naive_predict(ds, anchor, 12);
    for (std::size_t k = 0; k < 12; ++k) {
        CHECK(y.data()[k * 2] == static_cast<double>(k + 1));
        CHECK(y.data()[k * 2 + 1] == 7.0);
    }
    // Constant node: zero error against its future.
    const auto b = data::make_batch(ds, {0.0, 1.0}, anchor, 12, 12);
    for (std::size_t k = 0; k < 12; ++k) CHECK(b.targets_raw.data()[k * 2 + 1] == y.data()[k * 2 + 1]);
}

TEST_CASE("window batches are contiguous and adjacent") {
    auto ds = data::generate_synthetic(3, 100, 2);
    const std::vector<std::size_t> anchors{20, 40};
    const auto b = data::make_batch(ds, {0.0, 1.0}, anchors, 4, 3);
    CHECK(b.inputs.shape() == num::Shape{2, 4, 3, 1});
    CHECK(b.targets.shape() == num::Shape{2, 3, 3, 1});
    for (std::size_t bi = 0; bi < 2; ++bi) {
        for (std::size_t k = 0; k < 4; ++k) CHECK(b.inputs.data()[(bi * 4 + k) * 3 + 1] == ds.at(anchors[bi] - 3 + k, 1));
        for (std::size_t k = 0; k < 3; ++k) CHECK(b.targets.data()[(bi * 3 + k) * 3 + 2] == ds.at(anchors[bi] + 1 + k, 2));
        CHECK(b.tod[bi * 4 + 3] + 1 == b.target_tod[bi * 3]);
    }
}

TEST_CASE("synthetic generator") {
    const auto a = data::generate_synthetic(8, 2016, 7);
    const auto b = data::generate_synthetic(8, 2016, 7);
    CHECK(a.values == b.values);
    CHECK(data::fingerprint(a) == data::fingerprint(b));
    CHECK(data::fingerprint(a) != data::fingerprint(data::generate_synthetic(8, 2016, 8)));
    for (std::size_t i = 0; i < 8; ++i) CHECK(a.graph.neighbors(i).size() == 2);
    CHECK_THROWS_AS(data::generate_synthetic(1, 10, 1), data::DataError);

    // Autocorrelation of node 0: the daily lag beats every other lag in
    // [144, 432] apart from its immediate neighbours.
    std::vector<double> x(a.n_steps);
    double mu = 0.0;
    for (std::size_t t = 0; t < a.n_steps; ++t) mu += x[t] = a.at(t, 0);
    mu /= static_cast<double>(x.size());
    auto acf = [&](std::size_t lag) {
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < x.size(); ++t) den += (x[t] - mu) * (x[t] - mu);
        for (std::size_t t = 0; t + lag < x.size(); ++t) num += (x[t] - mu) * (x[t + lag] - mu);
        return num / den * static_cast<double>(x.size()) / static_cast<double>(x.size() - lag);
    };
    const double peak = acf(288);
    CHECK(peak > 0.9);
    for (std::size_t lag = 144; lag <= 432; ++lag) {
        if (lag < 284 || lag > 292) CHECK(acf(lag) < peak);
    }
}

TEST_CASE("dataset save/load round trip is bit exact") {
    const auto dir = scratch("roundtrip");
    const auto ds = data::generate_synthetic(5, 300, 11);
    data::save_dataset(ds, dir);
    const auto back = data::load_dataset_dir(dir);
    CHECK(back.n_steps == 300);
    CHECK(back.n_nodes == 5);
    CHECK(back.values == ds.values);
    CHECK(back.start_time == ds.start_time);
    CHECK(back.interval_minutes == 5);
    CHECK(back.graph.edges() == ds.graph.edges());
    CHECK(data::fingerprint(back) == data::fingerprint(ds));
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_dataset validation") {
    const auto dir = scratch("bad");
    write_file(dir / "meta.json", R"({"start_time": "2018-01-01T00:00:00", "interval_minutes": 5})");
    write_file(dir / "edges.csv", "from,to\n0,1\n1,2\n");
    write_file(dir / "signals.csv", "1,2,3\n4,5,6\n");
    auto ok = data::load_dataset_dir(dir);
    CHECK(ok.n_steps == 2);
    CHECK(ok.n_nodes == 3);
    CHECK_THROWS_AS(data::require_window_fit(ok, 12, 12), data::DataError);

    write_file(dir / "signals.csv", "a,b,c\n1,2,3\n4,x,6\n");
    CHECK_THROWS_WITH_AS(data::load_dataset_dir(dir), doctest::Contains("row 3, column 2"), data::DataError);

    write_file(dir / "signals.csv", "1,2\n3,4\n");
    CHECK_THROWS_WITH_AS(data::load_dataset_dir(dir), doctest::Contains("describes 3 nodes"), data::DataError);

    write_file(dir / "signals.csv", "1,2,3,4\n3,4,5,6\n");
    CHECK_THROWS_AS(data::load_dataset_dir(dir), data::DataError);
    write_file(dir / "meta.json", R"({"start_time": "2018-01-01T00:00:00", "interval_minutes": 5, "n_nodes": 4})");
    CHECK(data::load_dataset_dir(dir).n_nodes == 4);

    write_file(dir / "meta.json", R"({"start_time": "2018-01-01T00:00:00", "interval_minutes": 7})");
    CHECK_THROWS_AS(data::load_dataset_dir(dir), data::DataError);
    write_file(dir / "meta.json", R"({"interval_minutes": 5})");
    CHECK_THROWS_AS(data::load_dataset_dir(dir), data::DataError);

    // 1-row file cannot hold a single window.
    write_file(dir / "meta.json", R"({"start_time": "2018-01-01T00:00:00", "interval_minutes": 5})");
    write_file(dir / "signals.csv", "1,2,3\n");
    CHECK_THROWS_AS(data::require_window_fit(data::load_dataset_dir(dir), 12, 12), data::DataError);
    std::filesystem::remove_all(dir);
}
