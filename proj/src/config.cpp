#include "pinn/config.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <utility>

#include "pinn/errors.hpp"
#include "pinn/io.hpp"
#include "pinn/rng.hpp"

namespace pinn {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

struct Reader {
    const IniMap& ini;
    std::set<std::string> consumed;

    explicit Reader(const IniMap& m) : ini(m) {}

    const std::string* find(const std::string& section, const std::string& key) {
        const auto sec = ini.find(section);
        if (sec == ini.end()) return nullptr;
        const auto it = sec->second.find(key);
        if (it == sec->second.end()) return nullptr;
        consumed.insert(section + "." + key);
        return &it->second;
    }

    [[noreturn]] static void bad(const std::string& section, const std::string& key,
                                 const std::string& why) {
        throw ConfigError(section + "." + key + ": " + why);
    }

    std::string str(const std::string& section, const std::string& key, std::string def) {
        const std::string* raw = find(section, key);
        return raw ? *raw : std::move(def);
    }

    double number(const std::string& section, const std::string& key, double def) {
        const std::string* raw = find(section, key);
        if (!raw) return def;
        try {
            return io::parse_double(*raw);
        } catch (const Error&) {
            bad(section, key, "expected a number, got \"" + *raw + "\"");
        }
    }

    int integer(const std::string& section, const std::string& key, int def) {
        const double v = number(section, key, static_cast<double>(def));
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) bad(section, key, "expected an integer");
        return i;
    }

    std::uint64_t seed_value(const std::string& section, const std::string& key,
                             std::uint64_t def) {
        const std::string* raw = find(section, key);
        if (!raw) return def;
        try {
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(*raw, &pos);
            if (pos != raw->size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            bad(section, key, "expected an unsigned integer, got \"" + *raw + "\"");
        }
    }

    bool boolean(const std::string& section, const std::string& key, bool def) {
        const std::string* raw = find(section, key);
        if (!raw) return def;
        if (*raw == "true" || *raw == "1") return true;
        if (*raw == "false" || *raw == "0") return false;
        bad(section, key, "expected true or false, got \"" + *raw + "\"");
    }

    std::vector<double> numbers(const std::string& section, const std::string& key,
                                std::vector<double> def) {
        const std::string* raw = find(section, key);
        if (!raw) return def;
        std::vector<double> out;
        for (const std::string& tok : split_ws(*raw)) {
            try {
                out.push_back(io::parse_double(tok));
            } catch (const Error&) {
                bad(section, key, "expected numbers, got \"" + tok + "\"");
            }
        }
        return out;
    }

    std::vector<int> integers(const std::string& section, const std::string& key,
                              std::vector<int> def) {
        const std::string* raw = find(section, key);
        if (!raw) return def;
        std::vector<int> out;
        for (const double v : numbers(section, key, {})) {
            const int i = static_cast<int>(v);
            if (static_cast<double>(i) != v) bad(section, key, "expected integers");
            out.push_back(i);
        }
        return out;
    }

    void finish() const {
        for (const auto& [section, keys] : ini) {
            for (const auto& [key, value] : keys) {
                (void)value;
                if (consumed.count(section + "." + key) == 0) {
                    throw ConfigError("unrecognized key " + section + "." + key);
                }
            }
        }
    }
};

struct SmField {
    const char* key;
    double SmParams::*member;
};

constexpr SmField kSmFields[] = {
    {"d", &SmParams::D},
    {"h", &SmParams::H},
    {"r_s", &SmParams::R_s},
    {"t_d0_prime", &SmParams::T_d0_prime},
    {"t_q0_prime", &SmParams::T_q0_prime},
    {"x_d", &SmParams::X_d},
    {"x_d_prime", &SmParams::X_d_prime},
    {"x_q", &SmParams::X_q},
    {"x_q_prime", &SmParams::X_q_prime},
    {"x_ep", &SmParams::X_ep},
    {"r_e", &SmParams::R_e},
    {"omega_b", &SmParams::Omega_B},
    {"v_s", &SmParams::V_s},
    {"theta_vs", &SmParams::theta_vs},
    {"k_a", &SmParams::K_A},
    {"t_a", &SmParams::T_A},
    {"k_f", &SmParams::K_F},
    {"t_f", &SmParams::T_F},
    {"k_e", &SmParams::K_E},
    {"t_e", &SmParams::T_E},
    {"v_ref", &SmParams::V_ref},
    {"v_r_min", &SmParams::V_R_min},
    {"v_r_max", &SmParams::V_R_max},
    {"p_c", &SmParams::P_c},
    {"r_d", &SmParams::R_D},
    {"t_ch", &SmParams::T_CH},
    {"t_sv", &SmParams::T_SV},
    {"p_sv_max", &SmParams::P_SV_max},
    {"sat_a", &SmParams::sat_a},
    {"sat_b", &SmParams::sat_b},
};

// Study domain for the 9th-order machine: rotor angle, speed deviation, and
// q-axis transient EMF vary; the remaining states start from their operating
// point.
const std::vector<std::array<double, 2>> kSm9Domain = {
    {-2.0, 2.0},       // delta
    {-1.0, 1.0},       // omega
    {0.9, 1.1},        // e_q_prime
    {0.0, 0.0},        // e_d_prime
    {1.08, 1.08},      // e_fd
    {1.0, 1.0},        // r_f
    {1.105, 1.105},    // v_r
    {0.7048, 0.7048},  // p_m
    {0.7048, 0.7048},  // p_sv
};

Mat parse_matrix(const std::string& raw, const std::string& where) {
    std::vector<std::vector<double>> rows;
    std::string row_text;
    std::istringstream in(raw);
    while (std::getline(in, row_text, ';')) {
        std::vector<double> row;
        for (const std::string& tok : split_ws(row_text)) {
            try {
                row.push_back(io::parse_double(tok));
            } catch (const Error&) {
                throw ConfigError(where + ": expected numbers, got \"" + tok + "\"");
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError(where + ": empty matrix");
    const std::size_t cols = rows.front().size();
    Mat a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw ConfigError(where + ": ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return a;
}

std::vector<std::string> component_state_names(const RunConfig& config) {
    if (config.component_type == "sm9") return sm::state_names();
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < config.linear_a.rows(); ++i) {
        names.push_back("x_" + std::to_string(i + 1));
    }
    return names;
}

std::string join_numbers(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += " ";
        out += io::format_double(values[i]);
    }
    return out;
}

}  // namespace

IniMap parse_ini(const std::string& text) {
    IniMap out;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // '#' starts a comment; ';' stays significant because matrix values
        // use it as the row separator.
        const std::size_t comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            out[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty() || section.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside a [section] or empty key");
        }
        out[section][key] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_override(IniMap& ini, const std::string& dotted_key, const std::string& value) {
    const std::size_t dot = dotted_key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
        throw ConfigError("override key \"" + dotted_key + "\" must look like section.key");
    }
    ini[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = value;
}

RunConfig build_run_config(const IniMap& ini) {
    Reader r(ini);
    RunConfig c;

    c.component_type = r.str("component", "type", "sm9");
    if (c.component_type != "sm9" && c.component_type != "linear") {
        Reader::bad("component", "type", "must be sm9 or linear");
    }
    if (c.component_type == "sm9") {
        for (const SmField& f : kSmFields) {
            c.sm.*f.member = r.number("component", f.key, c.sm.*f.member);
        }
        const std::string vq = r.str("component", "vq_sign_convention", "paper");
        if (vq == "paper") {
            c.sm.vq_sign_convention = VqSignConvention::paper;
        } else if (vq == "standard") {
            c.sm.vq_sign_convention = VqSignConvention::standard;
        } else {
            Reader::bad("component", "vq_sign_convention", "must be paper or standard");
        }
    } else {
        const std::string* raw = r.find("component", "a");
        if (!raw) Reader::bad("component", "a", "required for the linear component");
        c.linear_a = parse_matrix(*raw, "component.a");
        if (c.linear_a.rows() != c.linear_a.cols()) {
            Reader::bad("component", "a", "matrix must be square");
        }
    }

    const std::vector<std::string> names = component_state_names(c);
    c.domain.bounds.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<double> def;
        if (c.component_type == "sm9") {
            def = {kSm9Domain[i][0], kSm9Domain[i][1]};
        }
        const std::vector<double> b = r.numbers("domain", names[i], def);
        if (b.size() != 2) {
            Reader::bad("domain", names[i], "expected \"low high\"");
        }
        c.domain.bounds.push_back({b[0], b[1]});
    }

    c.n_trajectories = r.integer("dataset", "n_trajectories", c.n_trajectories);
    c.horizon_s = r.number("dataset", "horizon_s", c.horizon_s);
    c.dt_s = r.number("dataset", "dt_s", c.dt_s);
    c.data_stride = r.integer("dataset", "data_stride", c.data_stride);
    c.collocation_stride = r.integer("dataset", "collocation_stride", c.collocation_stride);
    const std::vector<double> ratios =
        r.numbers("dataset", "split_ratios", {c.split_ratios[0], c.split_ratios[1], c.split_ratios[2]});
    if (ratios.size() != 3) Reader::bad("dataset", "split_ratios", "expected three numbers");
    c.split_ratios = {ratios[0], ratios[1], ratios[2]};
    c.sampling = r.str("dataset", "sampling", c.sampling);
    if (c.sampling != "lhs" && c.sampling != "random" && c.sampling != "grid") {
        Reader::bad("dataset", "sampling", "must be lhs, random, or grid");
    }
    const std::string placement = r.str("dataset", "placement", "uniform");
    if (placement == "uniform") {
        c.placement = LhsPlacement::uniform;
    } else if (placement == "midpoint") {
        c.placement = LhsPlacement::midpoint;
    } else {
        Reader::bad("dataset", "placement", "must be uniform or midpoint");
    }
    if (c.n_trajectories < 1) Reader::bad("dataset", "n_trajectories", "must be >= 1");
    if (!(c.horizon_s > 0.0)) Reader::bad("dataset", "horizon_s", "must be > 0");
    if (!(c.dt_s > 0.0) || c.dt_s > c.horizon_s) {
        Reader::bad("dataset", "dt_s", "must satisfy 0 < dt_s <= horizon_s");
    }
    if (c.data_stride < 1) Reader::bad("dataset", "data_stride", "must be >= 1");
    if (c.collocation_stride < 1) Reader::bad("dataset", "collocation_stride", "must be >= 1");

    c.solver.rtol = r.number("solver", "rtol", c.solver.rtol);
    c.solver.atol = r.number("solver", "atol", c.solver.atol);
    c.solver.max_step = r.number("solver", "max_step", c.solver.max_step);
    c.solver.initial_step = r.number("solver", "initial_step", c.solver.initial_step);
    c.solver.t_span = {0.0, c.horizon_s};
    if (!(c.solver.rtol > 0.0)) Reader::bad("solver", "rtol", "must be > 0");
    if (!(c.solver.atol > 0.0)) Reader::bad("solver", "atol", "must be > 0");
    if (!(c.solver.max_step > 0.0)) Reader::bad("solver", "max_step", "must be > 0");
    if (c.solver.initial_step < 0.0) Reader::bad("solver", "initial_step", "must be >= 0");

    c.hidden = r.integers("net", "hidden", c.hidden);
    if (c.hidden.empty()) Reader::bad("net", "hidden", "need at least one hidden layer");
    for (const int h : c.hidden) {
        if (h < 1) Reader::bad("net", "hidden", "layer widths must be >= 1");
    }

    c.train.epochs = r.integer("train", "epochs", c.train.epochs);
    const std::string opt = r.str("train", "optimizer", "adam");
    if (opt == "adam") {
        c.train.optimizer = Optimizer::adam;
    } else if (opt == "lbfgs") {
        c.train.optimizer = Optimizer::lbfgs;
    } else {
        Reader::bad("train", "optimizer", "must be adam or lbfgs");
    }
    c.train.learning_rate = r.number("train", "learning_rate", c.train.learning_rate);
    c.train.batches = r.integer("train", "batches", c.train.batches);
    c.train.early_stopping = r.boolean("train", "early_stopping", c.train.early_stopping);
    c.train.patience = r.integer("train", "patience", c.train.patience);
    c.train.min_delta = r.number("train", "min_delta", c.train.min_delta);
    c.train.weights.lambda_d = r.number("train", "lambda_data", c.train.weights.lambda_d);
    c.train.weights.lambda_dp =
        r.number("train", "lambda_physics_data", c.train.weights.lambda_dp);
    c.train.weights.lambda_cp =
        r.number("train", "lambda_physics_col", c.train.weights.lambda_cp);
    c.train.weights.lambda_ic = r.number("train", "lambda_ic", c.train.weights.lambda_ic);
    c.calibrate = r.boolean("train", "calibrate", c.calibrate);
    c.pilot_epochs = r.integer("train", "pilot_epochs", c.pilot_epochs);
    if (c.train.epochs < 1) Reader::bad("train", "epochs", "must be >= 1");
    if (c.train.batches < 1) Reader::bad("train", "batches", "must be >= 1");
    if (!(c.train.learning_rate > 0.0)) Reader::bad("train", "learning_rate", "must be > 0");
    if (c.train.patience < 0) Reader::bad("train", "patience", "must be >= 0");
    if (c.pilot_epochs < 1) Reader::bad("train", "pilot_epochs", "must be >= 1");
    if (c.train.weights.lambda_d < 0.0 || c.train.weights.lambda_dp < 0.0 ||
        c.train.weights.lambda_cp < 0.0 || c.train.weights.lambda_ic < 0.0) {
        Reader::bad("train", "lambda_data", "loss weights must be >= 0");
    }

    c.bench_sizes = r.integers("bench", "sizes", c.bench_sizes);
    c.bench_repeats = r.integer("bench", "repeats", c.bench_repeats);
    if (c.bench_sizes.empty()) Reader::bad("bench", "sizes", "need at least one size");
    for (const int s : c.bench_sizes) {
        if (s < 1) Reader::bad("bench", "sizes", "sizes must be >= 1");
    }
    if (c.bench_repeats < 3) Reader::bad("bench", "repeats", "must be >= 3");

    c.overlay_count = r.integer("eval", "overlay_count", c.overlay_count);
    if (c.overlay_count < 1) Reader::bad("eval", "overlay_count", "must be >= 1");

    const std::vector<double> x0 = r.numbers("simulate", "x0", {});
    if (!x0.empty()) {
        if (x0.size() != names.size()) {
            Reader::bad("simulate", "x0", "expected " + std::to_string(names.size()) + " numbers");
        }
        c.sim_x0 = Eigen::Map<const Vec>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    }

    c.seed = r.seed_value("run", "seed", c.seed);
    c.threads = r.integer("run", "threads", c.threads);
    if (c.threads < 1) Reader::bad("run", "threads", "must be >= 1");
    c.out_dir = r.str("run", "out", c.out_dir.string());

    c.seed_data = r.seed_value("dataset", "seed_data", rng::derive(c.seed, 1));
    c.seed_collocation = r.seed_value("dataset", "seed_collocation", rng::derive(c.seed, 2));
    c.seed_split = r.seed_value("dataset", "seed_split", rng::derive(c.seed, 3));
    c.seed_net = r.seed_value("net", "seed_net", rng::derive(c.seed, 4));
    c.seed_shuffle = r.seed_value("train", "seed_shuffle", rng::derive(c.seed, 5));
    c.seed_bench = r.seed_value("bench", "seed_bench", rng::derive(c.seed, 6));
    c.train.shuffle_seed = c.seed_shuffle;

    r.finish();
    validate_domain(c.domain);
    return c;
}

std::string render_config(const RunConfig& c) {
    std::string out;
    auto line = [&out](const std::string& key, const std::string& value) {
        out += key + " = " + value + "\n";
    };

    out += "[component]\n";
    line("type", c.component_type);
    if (c.component_type == "sm9") {
        for (const SmField& f : kSmFields) line(f.key, io::format_double(c.sm.*f.member));
        line("vq_sign_convention",
             c.sm.vq_sign_convention == VqSignConvention::paper ? "paper" : "standard");
    } else {
        std::string a;
        for (Eigen::Index i = 0; i < c.linear_a.rows(); ++i) {
            if (i > 0) a += "; ";
            for (Eigen::Index j = 0; j < c.linear_a.cols(); ++j) {
                if (j > 0) a += " ";
                a += io::format_double(c.linear_a(i, j));
            }
        }
        line("a", a);
    }

    out += "[domain]\n";
    const std::vector<std::string> names = component_state_names(c);
    for (std::size_t i = 0; i < names.size(); ++i) {
        line(names[i], io::format_double(c.domain.bounds[i][0]) + " " +
                           io::format_double(c.domain.bounds[i][1]));
    }

    out += "[dataset]\n";
    line("n_trajectories", std::to_string(c.n_trajectories));
    line("horizon_s", io::format_double(c.horizon_s));
    line("dt_s", io::format_double(c.dt_s));
    line("data_stride", std::to_string(c.data_stride));
    line("collocation_stride", std::to_string(c.collocation_stride));
    line("split_ratios", join_numbers({c.split_ratios[0], c.split_ratios[1], c.split_ratios[2]}));
    line("sampling", c.sampling);
    line("placement", c.placement == LhsPlacement::uniform ? "uniform" : "midpoint");
    line("seed_data", std::to_string(c.seed_data));
    line("seed_collocation", std::to_string(c.seed_collocation));
    line("seed_split", std::to_string(c.seed_split));

    out += "[solver]\n";
    line("rtol", io::format_double(c.solver.rtol));
    line("atol", io::format_double(c.solver.atol));
    line("max_step", io::format_double(c.solver.max_step));
    line("initial_step", io::format_double(c.solver.initial_step));

    out += "[net]\n";
    std::string hidden;
    for (std::size_t i = 0; i < c.hidden.size(); ++i) {
        if (i > 0) hidden += " ";
        hidden += std::to_string(c.hidden[i]);
    }
    line("hidden", hidden);
    line("seed_net", std::to_string(c.seed_net));

    out += "[train]\n";
    line("epochs", std::to_string(c.train.epochs));
    line("optimizer", c.train.optimizer == Optimizer::adam ? "adam" : "lbfgs");
    line("learning_rate", io::format_double(c.train.learning_rate));
    line("batches", std::to_string(c.train.batches));
    line("early_stopping", c.train.early_stopping ? "true" : "false");
    line("patience", std::to_string(c.train.patience));
    line("min_delta", io::format_double(c.train.min_delta));
    line("lambda_data", io::format_double(c.train.weights.lambda_d));
    line("lambda_physics_data", io::format_double(c.train.weights.lambda_dp));
    line("lambda_physics_col", io::format_double(c.train.weights.lambda_cp));
    line("lambda_ic", io::format_double(c.train.weights.lambda_ic));
    line("calibrate", c.calibrate ? "true" : "false");
    line("pilot_epochs", std::to_string(c.pilot_epochs));
    line("seed_shuffle", std::to_string(c.seed_shuffle));

    out += "[bench]\n";
    std::string sizes;
    for (std::size_t i = 0; i < c.bench_sizes.size(); ++i) {
        if (i > 0) sizes += " ";
        sizes += std::to_string(c.bench_sizes[i]);
    }
    line("sizes", sizes);
    line("repeats", std::to_string(c.bench_repeats));
    line("seed_bench", std::to_string(c.seed_bench));

    out += "[eval]\n";
    line("overlay_count", std::to_string(c.overlay_count));

    if (c.sim_x0.size() > 0) {
        out += "[simulate]\n";
        std::vector<double> x0(c.sim_x0.data(), c.sim_x0.data() + c.sim_x0.size());
        line("x0", join_numbers(x0));
    }

    out += "[run]\n";
    line("seed", std::to_string(c.seed));
    line("threads", std::to_string(c.threads));
    line("out", c.out_dir.string());
    return out;
}

ComponentModel make_component(const RunConfig& config) {
    if (config.component_type == "sm9") return make_sm9_model(config.sm);
    return make_linear_model(config.linear_a);
}

}  // namespace pinn
