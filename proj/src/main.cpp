#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sourcesink/checks.hpp"
#include "sourcesink/errors.hpp"
#include "sourcesink/io.hpp"
#include "sourcesink/pipeline.hpp"

namespace {

using namespace sourcesink;

struct UtilityFlags {
    std::vector<double> mu1{-1.5, 0.0};
    std::vector<double> mu2{1.5, 0.0};
    double a = 2.1;
    double b = 2.1;
};

void add_utility_flags(CLI::App* cmd, UtilityFlags& u) {
    cmd->add_option("--mu1", u.mu1, "First component mean (x y)")->expected(2);
    cmd->add_option("--mu2", u.mu2, "Second component mean (x y)")->expected(2);
    cmd->add_option("--a", u.a, "Variance offset of the first component (> 1)");
    cmd->add_option("--b", u.b, "Variance offset of the second component (> 1)");
}

UtilityParams to_utility(const UtilityFlags& u) {
    UtilityParams p;
    p.mu1 = Eigen::Vector2d(u.mu1[0], u.mu1[1]);
    p.mu2 = Eigen::Vector2d(u.mu2[0], u.mu2[1]);
    p.a = u.a;
    p.b = u.b;
    p.validate();
    return p;
}

struct SimFlags {
    double eta = 0.1;
    double noise_std = 0.01;
    int steps = 200;
    std::uint64_t seed = 0;
    std::vector<double> inits{2.0, 1.0, 2.0, -1.0, -2.0, 1.0, -2.0, -1.0};
};

void add_sim_flags(CLI::App* cmd, SimFlags& s) {
    cmd->add_option("--eta", s.eta, "Integrator step");
    cmd->add_option("--noise-std", s.noise_std, "Acceleration noise standard deviation");
    cmd->add_option("--steps", s.steps, "Samples per agent (including the initial state)");
    cmd->add_option("--seed", s.seed, "Simulation seed");
    cmd->add_option("--init", s.inits,
                    "Agent initial positions as a flat x1 y1 x2 y2 ... list");
}

SimConfig to_sim(const SimFlags& s) {
    if (s.inits.empty() || s.inits.size() % 2 != 0)
        throw InputError("--init needs an even number of values (x y pairs)");
    SimConfig cfg;
    cfg.eta = s.eta;
    cfg.noise_std = s.noise_std;
    cfg.steps = s.steps;
    cfg.seed = s.seed;
    for (size_t i = 0; i + 1 < s.inits.size(); i += 2)
        cfg.initial_positions.emplace_back(s.inits[i], s.inits[i + 1]);
    cfg.validate();
    return cfg;
}

struct GridFlags {
    double xmin = -4.0, xmax = 4.0, ymin = -4.0, ymax = 4.0;
    int nx = 40, ny = 40;
    std::vector<double> times;
};

void add_grid_flags(CLI::App* cmd, GridFlags& g, const std::string& times_default) {
    cmd->add_option("--xmin", g.xmin, "Grid lower x bound");
    cmd->add_option("--xmax", g.xmax, "Grid upper x bound");
    cmd->add_option("--ymin", g.ymin, "Grid lower y bound");
    cmd->add_option("--ymax", g.ymax, "Grid upper y bound");
    cmd->add_option("--nx", g.nx, "Grid columns");
    cmd->add_option("--ny", g.ny, "Grid rows");
    cmd->add_option("--times", g.times, "Evaluation times (default: " + times_default + ")");
}

GridSpec to_grid(const GridFlags& g) {
    GridSpec spec;
    spec.x_bounds = {g.xmin, g.xmax};
    spec.y_bounds = {g.ymin, g.ymax};
    spec.nx = g.nx;
    spec.ny = g.ny;
    spec.times = g.times;
    return spec;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int run_simulate(const UtilityFlags& uf, const SimFlags& sf, const std::string& out) {
    auto trajs = simulate(to_utility(uf), to_sim(sf));
    save_trajectories(trajs, out);
    std::cout << "wrote " << trajs.size() << " trajectories to " << out << "\n";
    return 0;
}

int run_oracle(const UtilityFlags& uf, const GridFlags& gf, const std::string& out) {
    UtilityParams params = to_utility(uf);
    GridSpec spec = to_grid(gf);
    if (spec.times.empty()) spec.times = {0.0};
    spec.validate();
    std::ofstream f(out, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + out);
    f << "t,x,y,utility,grad_x,grad_y,laplacian\n";
    for (double t : spec.times)
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) {
                Eigen::Vector2d x(spec.x_at(i), spec.y_at(j));
                Eigen::Vector2d g = utility_grad(params, x, t);
                f << g17(t) << ',' << g17(x.x()) << ',' << g17(x.y()) << ','
                  << g17(utility(params, x, t)) << ',' << g17(g.x()) << ',' << g17(g.y()) << ','
                  << g17(utility_laplacian(params, x, t)) << '\n';
            }
    f.flush();
    if (!f) throw IoError("write failed: " + out);
    std::cout << "wrote oracle grid to " << out << "\n";
    return 0;
}

int run_check(std::uint64_t seed) {
    auto results = run_all_checks(seed);
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << r.name << ": " << (r.pass ? "PASS" : "FAIL") << " (" << r.detail << ")\n";
        all_pass = all_pass && r.pass;
    }
    if (!all_pass) {
        std::cerr << "numerical error: oracle checks failed\n";
        return 2;
    }
    return 0;
}

int run_grid_cmd(const std::string& model_path, const GridFlags& gf, const std::string& out_dir,
                 int workers, int image_scale, bool frame_images) {
    LoadedFieldModel loaded = load_field_model(model_path);
    GridSpec spec = to_grid(gf);
    if (spec.times.empty()) {
        std::set<double> times;
        const auto& X = loaded.model.gp_vx.inputs();
        for (Eigen::Index i = 0; i < X.rows(); ++i) times.insert(X(i, 2));
        spec.times.assign(times.begin(), times.end());
    }
    spec.validate();

    GridSpec eval = spec;
    eval.x_bounds = {spec.x_bounds[0] - loaded.norm.x_offset,
                     spec.x_bounds[1] - loaded.norm.x_offset};
    eval.y_bounds = {spec.y_bounds[0] - loaded.norm.y_offset,
                     spec.y_bounds[1] - loaded.norm.y_offset};
    InfluenceGrid grid = build_grid(loaded.model, eval, workers);
    grid.x_bounds = spec.x_bounds;
    grid.y_bounds = spec.y_bounds;
    Eigen::MatrixXd mean_map = mean_over_time(grid);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir);
    export_grid(grid, out_dir + "/grid.csv");
    export_mean_map(mean_map, grid.x_bounds, grid.y_bounds, out_dir + "/mean_map.csv");
    render_heatmap(mean_map, out_dir + "/mean_map.ppm", image_scale);
    if (frame_images) {
        std::filesystem::create_directories(out_dir + "/frames", ec);
        if (ec) throw IoError("cannot create frames directory");
        for (size_t k = 0; k < grid.times.size(); ++k) {
            Eigen::MatrixXd m(grid.ny, grid.nx);
            for (int j = 0; j < grid.ny; ++j)
                for (int i = 0; i < grid.nx; ++i)
                    m(j, i) = grid.signed_kl[grid.index(static_cast<int>(k), j, i)];
            char name[32];
            std::snprintf(name, sizeof(name), "/frames/frame_%05zu.ppm", k);
            render_heatmap(m, out_dir + name, image_scale);
        }
    }
    std::cout << "wrote grid (" << grid.times.size() << " frames) to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-varying attractor/repeller inference from agent trajectories"};
    app.set_version_flag("--version", "0.1.0");
    app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
    app.require_subcommand(1);

    // simulate
    auto* cmd_sim = app.add_subcommand("simulate", "Generate synthetic trajectories");
    UtilityFlags sim_uf;
    SimFlags sim_sf;
    std::string sim_out;
    add_utility_flags(cmd_sim, sim_uf);
    add_sim_flags(cmd_sim, sim_sf);
    cmd_sim->add_option("--out", sim_out, "Output trajectory file")->required();

    // infer
    auto* cmd_infer = app.add_subcommand("infer", "Infer the influence grid from trajectories");
    std::string infer_input, infer_out;
    bool infer_synth = false;
    UtilityFlags infer_uf;
    SimFlags infer_sf;
    GridFlags infer_gf;
    int infer_trim = 2, infer_workers = 0, infer_scale = 8;
    int traj_restarts = 2, field_restarts = 5;
    std::uint64_t opt_seed = 12345;
    bool no_opt_traj = false, no_opt_field = false, infer_frames = false;
    cmd_infer->add_option("--input", infer_input, "Trajectory file (agent_id,t,x,y)");
    cmd_infer->add_flag("--synthetic", infer_synth, "Simulate the input instead of reading it");
    add_utility_flags(cmd_infer, infer_uf);
    add_sim_flags(cmd_infer, infer_sf);
    add_grid_flags(cmd_infer, infer_gf, "observed sample times");
    cmd_infer->add_option("--out", infer_out, "Output directory")->required();
    cmd_infer->add_option("--trim", infer_trim, "Samples trimmed from each trajectory end");
    cmd_infer->add_option("--workers", infer_workers,
                          "Worker threads (0: SOURCESINK_WORKERS or hardware)");
    cmd_infer->add_option("--image-scale", infer_scale, "Heatmap pixel block size");
    cmd_infer->add_flag("--frame-images", infer_frames, "Write one heatmap per frame");
    cmd_infer->add_flag("--no-optimize-trajectory", no_opt_traj,
                        "Keep the initial trajectory-layer hyperparameters");
    cmd_infer->add_flag("--no-optimize-field", no_opt_field,
                        "Keep the initial field-layer hyperparameters");
    cmd_infer->add_option("--trajectory-restarts", traj_restarts,
                          "Perturbed optimizer restarts per trajectory axis");
    cmd_infer->add_option("--field-restarts", field_restarts,
                          "Perturbed optimizer restarts per field axis");
    cmd_infer->add_option("--opt-seed", opt_seed, "Optimizer restart seed");

    // grid
    auto* cmd_grid = app.add_subcommand("grid", "Re-grid a saved field model");
    std::string grid_model, grid_out;
    GridFlags grid_gf;
    int grid_workers = 0, grid_scale = 8;
    bool grid_frames = false;
    cmd_grid->add_option("--model", grid_model, "field_model.json from a previous run")
        ->required();
    add_grid_flags(cmd_grid, grid_gf, "the model's training times");
    cmd_grid->add_option("--out", grid_out, "Output directory")->required();
    cmd_grid->add_option("--workers", grid_workers,
                         "Worker threads (0: SOURCESINK_WORKERS or hardware)");
    cmd_grid->add_option("--image-scale", grid_scale, "Heatmap pixel block size");
    cmd_grid->add_flag("--frame-images", grid_frames, "Write one heatmap per frame");

    // oracle
    auto* cmd_oracle =
        app.add_subcommand("oracle", "Emit the true utility and Laplacian on a grid");
    UtilityFlags oracle_uf;
    GridFlags oracle_gf;
    std::string oracle_out;
    add_utility_flags(cmd_oracle, oracle_uf);
    add_grid_flags(cmd_oracle, oracle_gf, "t = 0");
    cmd_oracle->add_option("--out", oracle_out, "Output file")->required();

    // check
    auto* cmd_check = app.add_subcommand("check", "Run the finite-difference and Monte-Carlo "
                                                  "oracle suites");
    std::uint64_t check_seed = 2024;
    cmd_check->add_option("--seed", check_seed, "Seed for the randomized checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // bad flags are input errors
    }

    try {
        if (*cmd_sim) return run_simulate(sim_uf, sim_sf, sim_out);
        if (*cmd_infer) {
            if (infer_synth == !infer_input.empty())
                throw InputError("infer needs exactly one of --input or --synthetic");
            PipelineConfig cfg;
            cfg.input_path = infer_input;
            if (infer_synth) {
                cfg.utility = to_utility(infer_uf);
                cfg.sim = to_sim(infer_sf);
            }
            cfg.grid = to_grid(infer_gf);
            cfg.trim = infer_trim;
            cfg.workers = infer_workers;
            cfg.out_dir = infer_out;
            cfg.image_scale = infer_scale;
            cfg.frame_images = infer_frames;
            cfg.optimize_trajectory = !no_opt_traj;
            cfg.optimize_field = !no_opt_field;
            cfg.trajectory_restarts = traj_restarts;
            cfg.field_restarts = field_restarts;
            cfg.optimizer_seed = opt_seed;
            PipelineResult res = run_pipeline(cfg);
            std::cout << "inferred " << res.agents.size() << " agents, "
                      << res.field.gp_vx.size() << " pooled samples, "
                      << res.grid.times.size() << " frames in " << res.seconds_total
                      << " s; outputs in " << infer_out << "\n";
            return 0;
        }
        if (*cmd_grid)
            return run_grid_cmd(grid_model, grid_gf, grid_out, grid_workers, grid_scale,
                                grid_frames);
        if (*cmd_oracle) return run_oracle(oracle_uf, oracle_gf, oracle_out);
        if (*cmd_check) return run_check(check_seed);
        throw InputError("no subcommand given");
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
