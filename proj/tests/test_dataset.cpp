#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pinn/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

using namespace pinn;
namespace fs = std::filesystem;

namespace {

ComponentModel oscillator_model() {
    Mat a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    return make_linear_model(a);
}

Mat sample_ics(int n) {
    Mat ics(n, 2);
    for (int i = 0; i < n; ++i) {
        ics(i, 0) = 0.1 * static_cast<double>(i + 1);
        ics(i, 1) = -0.05 * static_cast<double>(i);
    }
    return ics;
}

// A synthetic single-trajectory point list on an n-point grid; integration
// is irrelevant to the thinning arithmetic.
std::vector<LabeledPoint> grid_points(int n, std::int64_t id, double dt) {
    std::vector<LabeledPoint> points;
    for (int k = 0; k < n; ++k) {
        LabeledPoint p;
        p.trajectory_id = id;
        p.x0 = Vec::Ones(2);
        p.t = dt * static_cast<double>(k);
        p.x = Vec::Constant(2, static_cast<double>(k));
        points.push_back(p);
    }
    return points;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) {
        path = fs::temp_directory_path() / (std::string("pinn_dataset_") + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

bool points_equal(const std::vector<LabeledPoint>& a, const std::vector<LabeledPoint>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].trajectory_id != b[i].trajectory_id) return false;
        if (a[i].t != b[i].t) return false;
        if (!(a[i].x0.array() == b[i].x0.array()).all()) return false;
        if (!(a[i].x.array() == b[i].x.array()).all()) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("generated points follow the grid inside each trajectory") {
    const ComponentModel m = oscillator_model();
    const Mat ics = sample_ics(3);
    const GeneratedData data = generate_labeled(m, ics, 0.1, 0.01, SolveConfig{}, 1);

    REQUIRE(data.trajectories.size() == 3);
    REQUIRE(data.points.size() == 3 * 11);

    std::size_t idx = 0;
    for (int traj = 0; traj < 3; ++traj) {
        for (int k = 0; k < 11; ++k, ++idx) {
            const LabeledPoint& p = data.points[idx];
            CHECK(p.trajectory_id == traj);
            CHECK(p.t == doctest::Approx(0.01 * k).epsilon(1e-12).scale(1.0));
            CHECK(p.x0(0) == ics(traj, 0));
            CHECK(p.x0(1) == ics(traj, 1));
            CHECK(p.x(0) ==
                  data.trajectories[static_cast<std::size_t>(traj)].states(k, 0));
        }
    }
    // Row zero of every trajectory is the initial condition itself.
    for (int traj = 0; traj < 3; ++traj) {
        CHECK(data.points[static_cast<std::size_t>(traj) * 11].x(0) == ics(traj, 0));
        CHECK(data.points[static_cast<std::size_t>(traj) * 11].x(1) == ics(traj, 1));
    }
}

TEST_CASE("multi-threaded generation matches single-threaded bitwise") {
    const ComponentModel m = oscillator_model();
    const Mat ics = sample_ics(5);
    const GeneratedData one = generate_labeled(m, ics, 0.2, 0.01, SolveConfig{}, 1);
    const GeneratedData four = generate_labeled(m, ics, 0.2, 0.01, SolveConfig{}, 4);
    REQUIRE(points_equal(one.points, four.points));
}

TEST_CASE("thinning keeps every strided grid position") {
    const std::vector<LabeledPoint> points = grid_points(1001, 0, 1e-3);

    const std::vector<LabeledPoint> by23 = thin(points, 23, 0);
    CHECK(by23.size() == 44);
    for (std::size_t i = 0; i < by23.size(); ++i) {
        CHECK(by23[i].t == doctest::Approx(1e-3 * 23.0 * static_cast<double>(i)).epsilon(1e-12).scale(1.0));
    }

    const std::vector<LabeledPoint> by19 = thin(points, 19, 0);
    CHECK(by19.size() == 53);

    // Stride 1 is the identity.
    CHECK(thin(points, 1, 0).size() == points.size());
}

TEST_CASE("thinning applies per trajectory, not across the concatenation") {
    std::vector<LabeledPoint> points = grid_points(11, 0, 0.1);
    const std::vector<LabeledPoint> second = grid_points(11, 1, 0.1);
    points.insert(points.end(), second.begin(), second.end());

    const std::vector<LabeledPoint> thinned = thin(points, 4, 0);
    REQUIRE(thinned.size() == 6);  // grid slots 0, 4, 8 in each trajectory
    CHECK(thinned[0].trajectory_id == 0);
    CHECK(thinned[3].trajectory_id == 1);
    CHECK(thinned[3].t == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    CHECK(thinned[5].t == doctest::Approx(0.8).epsilon(1e-12).scale(1.0));
}

TEST_CASE("a nonzero thinning offset shifts the kept slots") {
    const std::vector<LabeledPoint> points = grid_points(11, 0, 0.1);
    const std::vector<LabeledPoint> shifted = thin(points, 4, 1);
    REQUIRE(shifted.size() == 3);  // slots 1, 5, 9
    CHECK(shifted[0].t == doctest::Approx(0.1).epsilon(1e-12).scale(1.0));
    CHECK(shifted[2].t == doctest::Approx(0.9).epsilon(1e-12).scale(1.0));
}

TEST_CASE("collocation pairing walks the strided grid for every initial condition") {
    const Mat ics = sample_ics(4);
    Vec grid(1001);
    for (int k = 0; k < 1001; ++k) grid(k) = 1e-3 * static_cast<double>(k);

    const std::vector<CollocationPoint> col = build_collocation(ics, grid, 19);
    REQUIRE(col.size() == 4 * 53);
    for (std::size_t i = 0; i < col.size(); ++i) {
        const auto traj = static_cast<std::int64_t>(i / 53);
        const auto slot = static_cast<int>(i % 53);
        CHECK(col[i].trajectory_id == traj);
        CHECK(col[i].x0(0) == ics(static_cast<Eigen::Index>(traj), 0));
        CHECK(col[i].t == grid(19 * slot));
    }
}

TEST_CASE("splitting assigns whole trajectories") {
    std::vector<LabeledPoint> points;
    for (int traj = 0; traj < 10; ++traj) {
        const auto chunk = grid_points(11, traj, 0.1);
        points.insert(points.end(), chunk.begin(), chunk.end());
    }
    const SplitDataset split = split_by_trajectory(points, {0.8, 0.1, 0.1}, 99);

    auto ids = [](const std::vector<LabeledPoint>& pts) {
        std::set<std::int64_t> out;
        for (const auto& p : pts) out.insert(p.trajectory_id);
        return out;
    };
    const auto train_ids = ids(split.train);
    const auto val_ids = ids(split.validation);
    const auto test_ids = ids(split.test);

    CHECK(train_ids.size() == 8);
    CHECK(val_ids.size() == 1);
    CHECK(test_ids.size() == 1);
    CHECK(split.train.size() == 8 * 11);
    CHECK(split.validation.size() == 11);
    CHECK(split.test.size() == 11);

    std::set<std::int64_t> all = train_ids;
    all.insert(val_ids.begin(), val_ids.end());
    all.insert(test_ids.begin(), test_ids.end());
    CHECK(all.size() == 10);
}

TEST_CASE("split counts follow largest-remainder rounding") {
    std::vector<LabeledPoint> points;
    for (int traj = 0; traj < 7; ++traj) {
        const auto chunk = grid_points(2, traj, 0.1);
        points.insert(points.end(), chunk.begin(), chunk.end());
    }
    // 7 * (0.5, 0.3, 0.2) = (3.5, 2.1, 1.4): floors 3/2/1, leftover goes to
    // the largest remainder.
    const SplitDataset split = split_by_trajectory(points, {0.5, 0.3, 0.2}, 1);
    CHECK(split.train.size() == 4 * 2);
    CHECK(split.validation.size() == 2 * 2);
    CHECK(split.test.size() == 1 * 2);
}

TEST_CASE("splits are deterministic in the seed") {
    std::vector<LabeledPoint> points;
    for (int traj = 0; traj < 12; ++traj) {
        const auto chunk = grid_points(3, traj, 0.1);
        points.insert(points.end(), chunk.begin(), chunk.end());
    }
    const SplitDataset a = split_by_trajectory(points, {0.8, 0.1, 0.1}, 5);
    const SplitDataset b = split_by_trajectory(points, {0.8, 0.1, 0.1}, 5);
    CHECK(points_equal(a.train, b.train));
    CHECK(points_equal(a.test, b.test));
}

TEST_CASE("degenerate splits are rejected") {
    const std::vector<LabeledPoint> two = [] {
        std::vector<LabeledPoint> pts = grid_points(2, 0, 0.1);
        const auto more = grid_points(2, 1, 0.1);
        pts.insert(pts.end(), more.begin(), more.end());
        return pts;
    }();
    CHECK_THROWS_AS(split_by_trajectory(two, {0.8, 0.1, 0.1}, 0), TooFewTrajectories);
    CHECK_THROWS_AS(split_by_trajectory(two, {0.8, 0.3, 0.1}, 0), ConfigError);
    CHECK_THROWS_AS(split_by_trajectory(two, {1.0, 0.0, 0.0}, 0), ConfigError);
}

TEST_CASE("the dataset container round-trips bitwise") {
    const ComponentModel m = oscillator_model();
    const Mat ics = sample_ics(5);
    const GeneratedData data = generate_labeled(m, ics, 0.1, 0.01, SolveConfig{}, 1);
    SplitDataset dataset = split_by_trajectory(data.points, {0.6, 0.2, 0.2}, 3);
    Vec grid(11);
    for (int k = 0; k < 11; ++k) grid(k) = 0.01 * k;
    dataset.collocation = build_collocation(ics, grid, 3);

    DatasetMeta meta;
    meta.state_dim = 2;
    meta.domain = {{0.0, 1.0}, {-1.0, 1.0}};
    meta.horizon_s = 0.1;
    meta.dt_s = 0.01;
    meta.data_stride = 1;
    meta.collocation_stride = 3;
    meta.seed_data = 11;
    meta.seed_collocation = 22;
    meta.seed_split = 3;

    TempDir dir("roundtrip");
    save_dataset(dataset, dir.path, meta);
    CHECK(fs::exists(dir.path / "dataset.pnnd"));
    CHECK(fs::exists(dir.path / "train.csv"));
    CHECK(fs::exists(dir.path / "dataset.meta"));

    const SplitDataset back = load_dataset(dir.path);
    CHECK(points_equal(back.train, dataset.train));
    CHECK(points_equal(back.validation, dataset.validation));
    CHECK(points_equal(back.test, dataset.test));
    REQUIRE(back.collocation.size() == dataset.collocation.size());
    for (std::size_t i = 0; i < back.collocation.size(); ++i) {
        CHECK(back.collocation[i].trajectory_id == dataset.collocation[i].trajectory_id);
        CHECK(back.collocation[i].t == dataset.collocation[i].t);
        CHECK((back.collocation[i].x0.array() == dataset.collocation[i].x0.array()).all());
    }
    CHECK(back.split_ratios == dataset.split_ratios);
    CHECK(back.seed == dataset.seed);

    const DatasetMeta meta_back = load_dataset_meta(dir.path);
    CHECK(meta_back.state_dim == 2);
    CHECK(meta_back.domain == meta.domain);
    CHECK(meta_back.dt_s == meta.dt_s);
    CHECK(meta_back.seed_collocation == 22);
    CHECK(meta_back.rtol == meta.rtol);
}

TEST_CASE("container corruption is detected") {
    const ComponentModel m = oscillator_model();
    const GeneratedData data = generate_labeled(m, sample_ics(3), 0.05, 0.01, SolveConfig{}, 1);
    const SplitDataset dataset = split_by_trajectory(data.points, {0.4, 0.3, 0.3}, 0);

    TempDir dir("corrupt");
    save_dataset(dataset, dir.path, DatasetMeta{});

    const fs::path file = dir.path / "dataset.pnnd";
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    char byte = 0;
    f.read(&byte, 1);
    f.seekp(40);
    byte = static_cast<char>(byte ^ 0x5a);
    f.write(&byte, 1);
    f.close();

    CHECK_THROWS_AS(load_dataset(dir.path), ChecksumMismatch);
}
