#include "pinn/dataset.hpp"

#include "pinn/errors.hpp"
#include "pinn/io.hpp"
#include "pinn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <utility>

namespace pinn {

namespace {

constexpr char kDatasetMagic[4] = {'P', 'N', 'N', 'D'};
constexpr std::uint8_t kDatasetVersion = 1;

[[nodiscard]] Trajectory solve_one(const ComponentModel& model, const Vec& x0, double T, double dt,
                                   SolveConfig cfg, std::int64_t id) {
    cfg.t_span = {0.0, T};
    const auto prefix = "trajectory " + std::to_string(id) + ": ";
    try {
        Trajectory traj = sample_on_grid(integrate_adaptive(model, x0, cfg), dt);
        traj.trajectory_id = id;
        return traj;
    } catch (const StepSizeUnderflow& e) {
        throw StepSizeUnderflow(prefix + e.what());
    } catch (const NonFiniteState& e) {
        throw NonFiniteState(prefix + e.what());
    } catch (const SingularNetworkMatrix& e) {
        throw SingularNetworkMatrix(prefix + e.what());
    }
}

void write_labeled(io::Writer& w, const std::vector<LabeledPoint>& points) {
    w.u64(points.size());
    for (const auto& p : points) {
        w.i64(p.trajectory_id);
        for (Eigen::Index j = 0; j < p.x0.size(); ++j) w.f64(p.x0[j]);
        w.f64(p.t);
        for (Eigen::Index j = 0; j < p.x.size(); ++j) w.f64(p.x[j]);
    }
}

[[nodiscard]] std::vector<LabeledPoint> read_labeled(io::Reader& r, int dim) {
    std::vector<LabeledPoint> points(r.u64());
    for (auto& p : points) {
        p.trajectory_id = r.i64();
        p.x0 = Vec(dim);
        for (int j = 0; j < dim; ++j) p.x0[j] = r.f64();
        p.t = r.f64();
        p.x = Vec(dim);
        for (int j = 0; j < dim; ++j) p.x[j] = r.f64();
    }
    return points;
}

[[nodiscard]] std::string labeled_csv(const std::vector<LabeledPoint>& points, int dim) {
    std::string out = "trajectory_id";
    for (int j = 1; j <= dim; ++j) out += ",x0_" + std::to_string(j);
    out += ",t";
    for (int j = 1; j <= dim; ++j) out += ",x_" + std::to_string(j);
    out += '\n';
    for (const auto& p : points) {
        out += std::to_string(p.trajectory_id);
        for (Eigen::Index j = 0; j < p.x0.size(); ++j) out += ',' + io::format_double(p.x0[j]);
        out += ',' + io::format_double(p.t);
        for (Eigen::Index j = 0; j < p.x.size(); ++j) out += ',' + io::format_double(p.x[j]);
        out += '\n';
    }
    return out;
}

[[nodiscard]] int dataset_dim(const SplitDataset& d) {
    if (!d.train.empty()) return static_cast<int>(d.train.front().x0.size());
    if (!d.validation.empty()) return static_cast<int>(d.validation.front().x0.size());
    if (!d.test.empty()) return static_cast<int>(d.test.front().x0.size());
    if (!d.collocation.empty()) return static_cast<int>(d.collocation.front().x0.size());
    return 0;
}

}  // namespace

GeneratedData generate_labeled(const ComponentModel& model, const Mat& ics, double T, double dt,
                               const SolveConfig& solver, int threads) {
    if (ics.cols() != model.state_dim) {
        throw DimensionMismatch("generate_labeled: initial conditions have " +
                                std::to_string(ics.cols()) + " columns, model expects " +
                                std::to_string(model.state_dim));
    }
    const auto n = static_cast<int>(ics.rows());
    GeneratedData out;
    out.trajectories.resize(n);

    const int workers = std::clamp(threads, 1, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) {
            out.trajectories[i] = solve_one(model, ics.row(i).transpose(), T, dt, solver, i);
        }
    } else {
        std::vector<std::exception_ptr> failures(n);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int i = w; i < n; i += workers) {
                    try {
                        out.trajectories[i] =
                            solve_one(model, ics.row(i).transpose(), T, dt, solver, i);
                    } catch (...) {
                        failures[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        for (int i = 0; i < n; ++i) {
            if (failures[i]) std::rethrow_exception(failures[i]);
        }
    }

    const auto grid = out.trajectories.empty() ? 0 : out.trajectories.front().times.size();
    out.points.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(grid));
    for (const auto& traj : out.trajectories) {
        for (Eigen::Index j = 0; j < traj.times.size(); ++j) {
            out.points.push_back({traj.trajectory_id, traj.x0, traj.times[j],
                                  traj.states.row(j).transpose()});
        }
    }
    return out;
}

std::vector<LabeledPoint> thin(const std::vector<LabeledPoint>& points, int stride, int offset) {
    if (stride < 1) throw ConfigError("thin: stride must be at least 1");
    if (offset < 0 || offset >= stride) throw ConfigError("thin: offset must lie in [0, stride)");

    std::vector<LabeledPoint> out;
    out.reserve(points.size() / static_cast<std::size_t>(stride) + 1);
    std::int64_t run_id = std::numeric_limits<std::int64_t>::min();
    int pos = 0;
    for (const auto& p : points) {
        if (p.trajectory_id != run_id) {
            run_id = p.trajectory_id;
            pos = 0;
        }
        if (pos >= offset && (pos - offset) % stride == 0) out.push_back(p);
        ++pos;
    }
    return out;
}

std::vector<CollocationPoint> build_collocation(const Mat& ics, const Vec& time_grid, int stride) {
    if (stride < 1) throw ConfigError("build_collocation: stride must be at least 1");

    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < time_grid.size(); j += stride) kept.push_back(j);

    std::vector<CollocationPoint> out;
    out.reserve(static_cast<std::size_t>(ics.rows()) * kept.size());
    for (Eigen::Index i = 0; i < ics.rows(); ++i) {
        const Vec x0 = ics.row(i).transpose();
        for (const auto j : kept) out.push_back({i, x0, time_grid[j]});
    }
    return out;
}

SplitDataset split_by_trajectory(const std::vector<LabeledPoint>& points,
                                 const std::array<double, 3>& ratios, std::uint64_t seed) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (!(ratios[0] > 0.0) || !(ratios[1] > 0.0) || !(ratios[2] > 0.0) ||
        std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split_by_trajectory: ratios must be positive and sum to 1");
    }

    std::set<std::int64_t> id_set;
    for (const auto& p : points) id_set.insert(p.trajectory_id);
    std::vector<std::int64_t> ids(id_set.begin(), id_set.end());
    const auto n = static_cast<double>(ids.size());

    // Largest-remainder apportionment of whole trajectories.
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
        const double exact = n * ratios[s];
        counts[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        remainders[s] = exact - static_cast<double>(counts[s]);
        assigned += counts[s];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (std::size_t k = 0; assigned < ids.size(); ++k, ++assigned) ++counts[order[k % 3]];
    if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0) {
        throw TooFewTrajectories("split_by_trajectory: a split would receive no trajectories");
    }

    rng::CounterRng shuffle_rng(seed, 0);
    shuffle_rng.shuffle(ids);

    std::map<std::int64_t, int> split_of;
    std::size_t cursor = 0;
    for (int s = 0; s < 3; ++s) {
        for (std::size_t k = 0; k < counts[s]; ++k) split_of[ids[cursor++]] = s;
    }

    SplitDataset out;
    out.split_ratios = ratios;
    out.seed = seed;
    for (const auto& p : points) {
        switch (split_of.at(p.trajectory_id)) {
            case 0: out.train.push_back(p); break;
            case 1: out.validation.push_back(p); break;
            default: out.test.push_back(p); break;
        }
    }
    return out;
}

void save_dataset(const SplitDataset& dataset, const std::filesystem::path& dir,
                  const DatasetMeta& meta) {
    const int dim = dataset_dim(dataset);

    io::Writer w;
    w.raw(kDatasetMagic, sizeof kDatasetMagic);
    w.u8(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(dim));
    for (const double r : dataset.split_ratios) w.f64(r);
    w.u64(dataset.seed);
    write_labeled(w, dataset.train);
    write_labeled(w, dataset.validation);
    write_labeled(w, dataset.test);
    w.u64(dataset.collocation.size());
    for (const auto& p : dataset.collocation) {
        w.i64(p.trajectory_id);
        for (Eigen::Index j = 0; j < p.x0.size(); ++j) w.f64(p.x0[j]);
        w.f64(p.t);
    }
    w.seal();
    io::write_file(dir / "dataset.pnnd", w.buffer);

    io::write_file(dir / "train.csv", labeled_csv(dataset.train, dim));
    io::write_file(dir / "validation.csv", labeled_csv(dataset.validation, dim));
    io::write_file(dir / "test.csv", labeled_csv(dataset.test, dim));
    {
        std::string csv = "trajectory_id";
        for (int j = 1; j <= dim; ++j) csv += ",x0_" + std::to_string(j);
        csv += ",t\n";
        for (const auto& p : dataset.collocation) {
            csv += std::to_string(p.trajectory_id);
            for (Eigen::Index j = 0; j < p.x0.size(); ++j) csv += ',' + io::format_double(p.x0[j]);
            csv += ',' + io::format_double(p.t) + '\n';
        }
        io::write_file(dir / "collocation.csv", csv);
    }

    std::string m;
    m += "state_dim = " + std::to_string(meta.state_dim) + '\n';
    m += "domain_low =";
    for (const auto& b : meta.domain) m += ' ' + io::format_double(b[0]);
    m += "\ndomain_high =";
    for (const auto& b : meta.domain) m += ' ' + io::format_double(b[1]);
    m += '\n';
    m += "horizon_s = " + io::format_double(meta.horizon_s) + '\n';
    m += "dt_s = " + io::format_double(meta.dt_s) + '\n';
    m += "data_stride = " + std::to_string(meta.data_stride) + '\n';
    m += "collocation_stride = " + std::to_string(meta.collocation_stride) + '\n';
    m += "seed_data = " + std::to_string(meta.seed_data) + '\n';
    m += "seed_collocation = " + std::to_string(meta.seed_collocation) + '\n';
    m += "seed_split = " + std::to_string(meta.seed_split) + '\n';
    m += "rtol = " + io::format_double(meta.rtol) + '\n';
    m += "atol = " + io::format_double(meta.atol) + '\n';
    io::write_file(dir / "dataset.meta", m);
}

SplitDataset load_dataset(const std::filesystem::path& dir) {
    const std::string blob = io::read_file(dir / "dataset.pnnd");
    io::Reader r{blob};
    r.verify_checksum();

    char magic[4];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kDatasetMagic, sizeof magic) != 0) {
        throw FormatVersionMismatch("not a dataset file (bad magic)");
    }
    if (const auto version = r.u8(); version != kDatasetVersion) {
        throw FormatVersionMismatch("unsupported dataset version " + std::to_string(version));
    }
    const auto dim = static_cast<int>(r.u32());

    SplitDataset out;
    for (double& ratio : out.split_ratios) ratio = r.f64();
    out.seed = r.u64();
    out.train = read_labeled(r, dim);
    out.validation = read_labeled(r, dim);
    out.test = read_labeled(r, dim);
    out.collocation.resize(r.u64());
    for (auto& p : out.collocation) {
        p.trajectory_id = r.i64();
        p.x0 = Vec(dim);
        for (int j = 0; j < dim; ++j) p.x0[j] = r.f64();
        p.t = r.f64();
    }
    if (r.pos != r.data.size()) {
        throw FormatVersionMismatch("dataset file has trailing bytes (layout mismatch)");
    }
    return out;
}

DatasetMeta load_dataset_meta(const std::filesystem::path& dir) {
    const std::string text = io::read_file(dir / "dataset.meta");
    DatasetMeta meta;
    std::vector<double> lows, highs;

    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string_view line(text.data() + start, end - start);
        start = end + 1;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) continue;
        auto trim = [](std::string_view s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
                s.remove_suffix(1);
            }
            return s;
        };
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        auto parse_list = [&](std::vector<double>& into) {
            std::size_t p = 0;
            while (p < value.size()) {
                while (p < value.size() && value[p] == ' ') ++p;
                auto q = value.find(' ', p);
                if (q == std::string_view::npos) q = value.size();
                if (q > p) into.push_back(io::parse_double(value.substr(p, q - p)));
                p = q + 1;
            }
        };

        if (key == "state_dim") meta.state_dim = static_cast<int>(io::parse_double(value));
        else if (key == "domain_low") parse_list(lows);
        else if (key == "domain_high") parse_list(highs);
        else if (key == "horizon_s") meta.horizon_s = io::parse_double(value);
        else if (key == "dt_s") meta.dt_s = io::parse_double(value);
        else if (key == "data_stride") meta.data_stride = static_cast<int>(io::parse_double(value));
        else if (key == "collocation_stride") meta.collocation_stride = static_cast<int>(io::parse_double(value));
        else if (key == "seed_data") meta.seed_data = static_cast<std::uint64_t>(std::stoull(std::string(value)));
        else if (key == "seed_collocation") meta.seed_collocation = static_cast<std::uint64_t>(std::stoull(std::string(value)));
        else if (key == "seed_split") meta.seed_split = static_cast<std::uint64_t>(std::stoull(std::string(value)));
        else if (key == "rtol") meta.rtol = io::parse_double(value);
        else if (key == "atol") meta.atol = io::parse_double(value);
    }

    if (lows.size() != highs.size()) {
        throw FormatVersionMismatch("dataset.meta domain bounds have mismatched lengths");
    }
    meta.domain.reserve(lows.size());
    for (std::size_t j = 0; j < lows.size(); ++j) meta.domain.push_back({lows[j], highs[j]});
    return meta;
}

}  // namespace pinn
