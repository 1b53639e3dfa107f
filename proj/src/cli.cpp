#include "pinn/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pinn/dataset.hpp"
#include "pinn/errors.hpp"
#include "pinn/evaluate.hpp"
#include "pinn/io.hpp"
#include "pinn/loss.hpp"
#include "pinn/mlp.hpp"
#include "pinn/train.hpp"

namespace pinn {

namespace {

namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t content_hash(const std::string& bytes) {
    io::Fnv1a hash;
    hash.update(bytes.data(), bytes.size());
    return hash.digest();
}

// Every stage records what it ran from: the resolved config and a hash per
// consumed input file.
void write_stage_metadata(const RunConfig& config, const fs::path& dir,
                          const std::vector<std::pair<std::string, std::string>>& inputs) {
    const std::string resolved = render_config(config);
    io::write_file(dir / "config.resolved", resolved);
    std::string hashes = "config " + hex64(content_hash(resolved)) + "\n";
    for (const auto& [name, bytes] : inputs) {
        hashes += name + " " + hex64(content_hash(bytes)) + "\n";
    }
    io::write_file(dir / "inputs.hash", hashes);
}

Mat sample_ics(const RunConfig& config, std::uint64_t seed, int count) {
    if (config.sampling == "lhs") {
        return lhs_sample(config.domain, count, seed, config.placement);
    }
    if (config.sampling == "random") {
        return random_sample(config.domain, count, seed);
    }
    // grid: count is points per varying dimension
    return grid_sample(config.domain, count);
}

fs::path require_artifact(const RunConfig& config, const char* stage, const char* file) {
    const fs::path path = config.out_dir / stage / file;
    if (!fs::exists(path)) {
        throw MissingArtifact(std::string(file) + " not found under " +
                              (config.out_dir / stage).string() + "; run the " + stage +
                              " stage first");
    }
    return path;
}

std::vector<Trajectory> group_test_trajectories(const std::vector<LabeledPoint>& points) {
    std::map<std::int64_t, std::vector<const LabeledPoint*>> by_id;
    for (const LabeledPoint& p : points) by_id[p.trajectory_id].push_back(&p);
    std::vector<Trajectory> out;
    for (auto& [id, rows] : by_id) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const LabeledPoint* a, const LabeledPoint* b) { return a->t < b->t; });
        Trajectory traj;
        traj.trajectory_id = id;
        traj.x0 = rows.front()->x0;
        traj.times.resize(static_cast<Eigen::Index>(rows.size()));
        traj.states.resize(static_cast<Eigen::Index>(rows.size()), rows.front()->x.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            traj.times(static_cast<Eigen::Index>(k)) = rows[k]->t;
            traj.states.row(static_cast<Eigen::Index>(k)) = rows[k]->x.transpose();
        }
        out.push_back(std::move(traj));
    }
    return out;
}

std::vector<int> net_dims(const RunConfig& config, int state_dim) {
    std::vector<int> dims;
    dims.push_back(state_dim + 1);
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(state_dim);
    return dims;
}

}  // namespace

void cmd_generate(const RunConfig& config) {
    const ComponentModel component = make_component(config);
    const Mat ics = sample_ics(config, config.seed_data, config.n_trajectories);
    const GeneratedData generated = generate_labeled(component, ics, config.horizon_s,
                                                     config.dt_s, config.solver, config.threads);

    SplitDataset dataset =
        split_by_trajectory(generated.points, config.split_ratios, config.seed_split);
    dataset.train = thin(dataset.train, config.data_stride, 0);

    const Vec& grid = generated.trajectories.front().times;
    Mat col_ics = ics;
    if (config.sampling != "grid") {
        col_ics = sample_ics(config, config.seed_collocation, config.n_trajectories);
    }
    dataset.collocation = build_collocation(col_ics, grid, config.collocation_stride);

    DatasetMeta meta;
    meta.state_dim = component.state_dim;
    meta.domain = config.domain.bounds;
    meta.horizon_s = config.horizon_s;
    meta.dt_s = config.dt_s;
    meta.data_stride = config.data_stride;
    meta.collocation_stride = config.collocation_stride;
    meta.seed_data = config.seed_data;
    meta.seed_collocation = config.seed_collocation;
    meta.seed_split = config.seed_split;
    meta.rtol = config.solver.rtol;
    meta.atol = config.solver.atol;

    const fs::path dir = config.out_dir / "generate";
    save_dataset(dataset, dir, meta);
    write_stage_metadata(config, dir, {});
}

void cmd_train(const RunConfig& config) {
    const fs::path dataset_file = require_artifact(config, "generate", "dataset.pnnd");
    const SplitDataset dataset = load_dataset(dataset_file.parent_path());
    const ComponentModel component = make_component(config);

    MlpModel net = init_mlp(net_dims(config, component.state_dim), config.seed_net);
    set_input_norm(net, config.domain, config.horizon_s);
    net.provenance = config.component_type + " surrogate";

    TrainConfig tc = config.train;
    if (config.calibrate) {
        TrainConfig pilot = tc;
        pilot.epochs = config.pilot_epochs;
        tc.weights = calibrate_loss_weights(pilot, dataset, component, net);
    }
    const TrainResult result = train(tc, dataset, component, std::move(net));

    const fs::path dir = config.out_dir / "train";
    save_model(result.model, dir / "model.pnnm");

    std::string history = "epoch,l_data,l_physics_data,l_physics_col,l_ic,total,val_mse,wall_ms\n";
    for (const EpochRecord& rec : result.history) {
        history += std::to_string(rec.epoch) + "," + io::format_double(rec.train.l_data) + "," +
                   io::format_double(rec.train.l_physics_data) + "," +
                   io::format_double(rec.train.l_physics_col) + "," +
                   io::format_double(rec.train.l_ic) + "," + io::format_double(rec.train.total) + "," +
                   io::format_double(rec.val_mse) + "," + io::format_double(rec.wall_ms) + "\n";
    }
    io::write_file(dir / "history.csv", history);

    std::string weights = "lambda_data = " + io::format_double(tc.weights.lambda_d) +
                          "\nlambda_physics_data = " + io::format_double(tc.weights.lambda_dp) +
                          "\nlambda_physics_col = " + io::format_double(tc.weights.lambda_cp) +
                          "\nlambda_ic = " + io::format_double(tc.weights.lambda_ic) +
                          "\nbest_epoch = " + std::to_string(result.best_epoch) +
                          "\nstopped_early = " + (result.stopped_early ? "true" : "false") + "\n";
    io::write_file(dir / "train_summary.txt", weights);

    write_stage_metadata(config, dir, {{"dataset.pnnd", io::read_file(dataset_file)}});
}

void cmd_eval(const RunConfig& config) {
    const fs::path model_file = require_artifact(config, "train", "model.pnnm");
    const fs::path dataset_file = require_artifact(config, "generate", "dataset.pnnd");
    const MlpModel net = load_model(model_file);
    const SplitDataset dataset = load_dataset(dataset_file.parent_path());
    const ComponentModel component = make_component(config);

    const std::vector<Trajectory> tests = group_test_trajectories(dataset.test);
    if (tests.empty()) throw ConfigError("cmd_eval: the dataset has no test trajectories");
    const Metrics metrics = evaluate(net, tests);

    const std::vector<std::string>& names = component.state_names;
    const Eigen::Index d = metrics.per_state_mae.size();

    std::string txt;
    txt += "surrogate accuracy on " + std::to_string(tests.size()) + " test trajectories, " +
           std::to_string(tests.front().times.size()) + " grid points each\n";
    txt += "pooled mae " + io::format_double(metrics.mae) + "\n";
    txt += "pooled mse " + io::format_double(metrics.mse) + "\n";
    txt += "pooled max_ae " + io::format_double(metrics.max_ae) + "\n";
    for (Eigen::Index s = 0; s < d; ++s) {
        const std::string name =
            s < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(s)]
                                                        : "x_" + std::to_string(s + 1);
        txt += name + " mae " + io::format_double(metrics.per_state_mae(s)) + " mse " +
               io::format_double(metrics.per_state_mse(s)) + " max_ae " +
               io::format_double(metrics.per_state_max_ae(s)) + "\n";
    }
    const fs::path dir = config.out_dir / "eval";
    io::write_file(dir / "metrics.txt", txt);

    std::string csv = "scope,name,mae,mse,max_ae\n";
    csv += "pooled,all," + io::format_double(metrics.mae) + "," + io::format_double(metrics.mse) + "," +
           io::format_double(metrics.max_ae) + "\n";
    for (Eigen::Index s = 0; s < d; ++s) {
        const std::string name =
            s < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(s)]
                                                        : "x_" + std::to_string(s + 1);
        csv += "state," + name + "," + io::format_double(metrics.per_state_mae(s)) + "," +
               io::format_double(metrics.per_state_mse(s)) + "," +
               io::format_double(metrics.per_state_max_ae(s)) + "\n";
    }
    io::write_file(dir / "metrics.csv", csv);

    std::string curve = "t,mae,mse,max_ae\n";
    for (Eigen::Index k = 0; k < metrics.timestep_times.size(); ++k) {
        curve += io::format_double(metrics.timestep_times(k)) + "," +
                 io::format_double(metrics.per_timestep_mae(k)) + "," +
                 io::format_double(metrics.per_timestep_mse(k)) + "," +
                 io::format_double(metrics.per_timestep_max_ae(k)) + "\n";
    }
    io::write_file(dir / "error_curve.csv", curve);

    const int overlays = std::min<int>(config.overlay_count, static_cast<int>(tests.size()));
    std::vector<Vec> overlay_ics;
    for (int i = 0; i < overlays; ++i) overlay_ics.push_back(tests[static_cast<std::size_t>(i)].x0);
    export_overlays(net, component, overlay_ics, dir, config.horizon_s, config.dt_s,
                    config.solver);

    write_stage_metadata(config, dir,
                         {{"model.pnnm", io::read_file(model_file)},
                          {"dataset.pnnd", io::read_file(dataset_file)}});
}

void cmd_bench(const RunConfig& config) {
    const fs::path model_file = require_artifact(config, "train", "model.pnnm");
    const MlpModel net = load_model(model_file);
    const ComponentModel component = make_component(config);

    const int max_size = *std::max_element(config.bench_sizes.begin(), config.bench_sizes.end());
    const Mat ic_rows = sample_ics(config, config.seed_bench, max_size);
    std::vector<Vec> ics;
    for (Eigen::Index i = 0; i < ic_rows.rows(); ++i) ics.push_back(ic_rows.row(i).transpose());

    const TimingTable table =
        bench_inference(net, component, ics, config.horizon_s, config.dt_s, config.solver,
                        config.bench_sizes, config.bench_repeats);

    std::string csv = "method,n_trajectories,wall_ms,repeats,min_ms,max_ms\n";
    std::string txt = "inference wall time, median of " + std::to_string(config.bench_repeats) +
                      " repeats after warm-up (ms)\n";
    for (const TimingRow& row : table.rows) {
        csv += row.method + "," + std::to_string(row.n_trajectories) + "," +
               io::format_double(row.wall_ms) + "," + std::to_string(row.repeats) + "," +
               io::format_double(row.min_ms) + "," + io::format_double(row.max_ms) + "\n";
        txt += row.method + " n=" + std::to_string(row.n_trajectories) + " median " +
               io::format_double(row.wall_ms) + " spread [" + io::format_double(row.min_ms) + ", " +
               io::format_double(row.max_ms) + "]\n";
    }
    const fs::path dir = config.out_dir / "bench";
    io::write_file(dir / "timing.csv", csv);
    io::write_file(dir / "timing.txt", txt);
    write_stage_metadata(config, dir, {{"model.pnnm", io::read_file(model_file)}});
}

void cmd_simulate(const RunConfig& config, const Vec& x0) {
    const ComponentModel component = make_component(config);
    if (x0.size() != component.state_dim) {
        throw ConfigError("cmd_simulate: x0 must have " + std::to_string(component.state_dim) +
                          " entries");
    }
    const DenseSolution solution = integrate_adaptive(component, x0, config.solver);
    const Trajectory traj = sample_on_grid(solution, config.dt_s);

    std::string csv = "t";
    for (Eigen::Index s = 0; s < component.state_dim; ++s) {
        csv += ",x_" + std::to_string(s + 1);
    }
    csv += "\n";
    for (Eigen::Index k = 0; k < traj.states.rows(); ++k) {
        csv += io::format_double(traj.times(k));
        for (Eigen::Index s = 0; s < traj.states.cols(); ++s) {
            csv += "," + io::format_double(traj.states(k, s));
        }
        csv += "\n";
    }
    const fs::path dir = config.out_dir / "simulate";
    io::write_file(dir / "trajectory.csv", csv);
    write_stage_metadata(config, dir, {});
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Physics-informed neural surrogates for power-system component dynamics"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir;
    std::string seed_text;
    int threads = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Config file (structured text)");
    app.add_option("--out", out_dir, "Output directory for run artifacts");
    app.add_option("--seed", seed_text, "Global seed override");
    app.add_option("--threads", threads, "Worker threads (1 = bitwise deterministic)");
    app.add_option("--set", overrides, "Override a key as section.key=value (repeatable)");

    CLI::App* generate = app.add_subcommand("generate", "Sample ICs, integrate, write dataset");
    CLI::App* train_cmd = app.add_subcommand("train", "Train the surrogate on the dataset");
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score the model against solver truth");
    CLI::App* bench = app.add_subcommand("bench", "Time solver vs batched surrogate inference");
    CLI::App* simulate = app.add_subcommand("simulate", "Integrate one trajectory and save it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        IniMap ini;
        if (!config_path.empty()) {
            std::string text;
            try {
                text = io::read_file(config_path);
            } catch (const IoFailure& e) {
                throw ConfigError(std::string("cannot read --config file: ") + e.what());
            }
            ini = parse_ini(text);
        }
        for (const std::string& kv : overrides) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects section.key=value, got \"" + kv + "\"");
            }
            apply_override(ini, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!seed_text.empty()) ini["run"]["seed"] = seed_text;
        if (threads > 0) ini["run"]["threads"] = std::to_string(threads);
        if (!out_dir.empty()) ini["run"]["out"] = out_dir;

        const RunConfig config = build_run_config(ini);

        if (generate->parsed()) {
            cmd_generate(config);
        } else if (train_cmd->parsed()) {
            cmd_train(config);
        } else if (eval_cmd->parsed()) {
            cmd_eval(config);
        } else if (bench->parsed()) {
            cmd_bench(config);
        } else if (simulate->parsed()) {
            Vec x0 = config.sim_x0;
            if (x0.size() == 0) {
                x0.resize(config.domain.dim());
                for (int j = 0; j < config.domain.dim(); ++j) {
                    x0(j) = 0.5 * (config.domain.bounds[static_cast<std::size_t>(j)][0] +
                                   config.domain.bounds[static_cast<std::size_t>(j)][1]);
                }
            }
            cmd_simulate(config, x0);
        }
        return 0;
    } catch (const Error& e) {
        const char* category = "internal";
        int code = 1;
        if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidDomain*>(&e) ||
            dynamic_cast<const InvalidDims*>(&e) || dynamic_cast<const TooFewTrajectories*>(&e) ||
            dynamic_cast<const GridTooLarge*>(&e)) {
            category = "config";
            code = 2;
        } else if (dynamic_cast<const MissingArtifact*>(&e)) {
            category = "missing-artifact";
            code = 3;
        } else if (dynamic_cast<const NonFiniteState*>(&e) ||
                   dynamic_cast<const NonFiniteInput*>(&e) ||
                   dynamic_cast<const NonFiniteLoss*>(&e) ||
                   dynamic_cast<const StepSizeUnderflow*>(&e) ||
                   dynamic_cast<const SingularNetworkMatrix*>(&e) ||
                   dynamic_cast<const OptimizerDiverged*>(&e) ||
                   dynamic_cast<const LineSearchFailed*>(&e) ||
                   dynamic_cast<const EmptySolution*>(&e)) {
            category = "numerical";
            code = 4;
        }
        std::fprintf(stderr, "pinn: error: %s: %s\n", category, e.what());
        return code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pinn: error: internal: %s\n", e.what());
        return 1;
    }
}

}  // namespace pinn
