#include "sourcesink/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "sourcesink/errors.hpp"
#include "sourcesink/parallel.hpp"

namespace sourcesink {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const InputError& e) {
        throw InputError(std::string("stage ") + name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("stage ") + name + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(std::string("stage ") + name + ": " + e.what());
    }
}

// Frozen starting points: output scale from the data spread, mid-range input
// scales, small noise; box bounds keep the ascent in the regime where the
// layered model stays identifiable.
KernelHyperparams trajectory_init(const Eigen::VectorXd& centered) {
    KernelHyperparams hp;
    const double sd = std::sqrt(centered.array().square().mean());
    hp.output_scale = std::max(sd, 1e-3);
    hp.length_scales = Eigen::VectorXd::Constant(1, 3.0);
    hp.noise_std = 0.01;
    return hp;
}

OptimizeConfig trajectory_opt_config(const PipelineConfig& cfg) {
    OptimizeConfig oc;
    oc.restarts = cfg.trajectory_restarts;
    oc.seed = cfg.optimizer_seed;
    oc.lower = {std::exp(-7.0), 0.5, std::exp(-9.0)};
    oc.upper = {std::exp(3.0), 8.0, 1.0};
    return oc;
}

KernelHyperparams field_init(double rms) {
    KernelHyperparams hp;
    hp.output_scale = 2.0 * rms;
    hp.length_scales = Eigen::VectorXd(3);
    hp.length_scales << 1.0, 1.0, 1.2;
    hp.noise_std = 0.3 * rms;
    return hp;
}

OptimizeConfig field_opt_config(const PipelineConfig& cfg, double rms) {
    OptimizeConfig oc;
    oc.restarts = cfg.field_restarts;
    oc.seed = cfg.optimizer_seed;
    oc.lower = {0.25 * rms, 0.7, 0.7, 0.7, 0.15 * rms};
    oc.upper = {20.0 * rms, 8.0, 8.0, 8.0, 2.0 * rms};
    return oc;
}

nlohmann::json hp_json(const KernelHyperparams& hp) {
    return {{"output_scale", hp.output_scale},
            {"length_scales",
             std::vector<double>(hp.length_scales.begin(), hp.length_scales.end())},
            {"noise_std", hp.noise_std}};
}

Eigen::MatrixXd frame_slice(const InfluenceGrid& grid, int k) {
    Eigen::MatrixXd m(grid.ny, grid.nx);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) m(j, i) = grid.signed_kl[grid.index(k, j, i)];
    return m;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    const auto t_start = Clock::now();
    PipelineResult res;

    // --- input ---
    const bool synthetic = cfg.input_path.empty();
    res.trajectories = stage("input", [&] {
        if (synthetic) return simulate(cfg.utility, cfg.sim);
        return load_trajectories(cfg.input_path);
    });
    const double t_input = seconds_since(t_start);

    // --- normalize ---
    std::vector<Trajectory> normed;
    stage("normalize", [&] {
        auto [trajs, norm] = normalize(res.trajectories);
        normed = std::move(trajs);
        res.norm = norm;
        return 0;
    });

    // --- trajectory layer ---
    const auto t_traj0 = Clock::now();
    stage("trajectory_layer", [&] {
        const int n_agents = static_cast<int>(normed.size());
        res.agents.resize(n_agents);
        OptimizeConfig oc = trajectory_opt_config(cfg);
        parallel_for(n_agents, resolve_workers(cfg.workers), [&](int a) {
            const Trajectory& tr = normed[a];
            KernelHyperparams ix = trajectory_init(tr.x.array() - tr.x.mean());
            KernelHyperparams iy = trajectory_init(tr.y.array() - tr.y.mean());
            res.agents[a] = fit_trajectory(tr, ix, iy, cfg.optimize_trajectory, oc);
        });
        return 0;
    });

    // --- acceleration posteriors ---
    std::vector<AccelerationSample> pooled;
    stage("accelerations", [&] {
        if (cfg.trim < 0) throw InputError("trim must be non-negative");
        for (const auto& agent : res.agents) {
            auto samples = infer_accelerations(agent);
            const int n = static_cast<int>(samples.size());
            if (n <= 2 * cfg.trim)
                throw InputError("agent '" + agent.agent_id + "' has " + std::to_string(n) +
                                 " samples, all trimmed away");
            pooled.insert(pooled.end(), samples.begin() + cfg.trim, samples.end() - cfg.trim);
        }
        return 0;
    });
    const double t_traj = seconds_since(t_traj0);

    // --- field layer ---
    const auto t_field0 = Clock::now();
    stage("field_layer", [&] {
        Eigen::VectorXd ax(pooled.size()), ay(pooled.size());
        for (size_t i = 0; i < pooled.size(); ++i) {
            ax[i] = pooled[i].ax.mean;
            ay[i] = pooled[i].ay.mean;
        }
        const double rms_x = std::max(std::sqrt(ax.array().square().mean()), 1e-6);
        const double rms_y = std::max(std::sqrt(ay.array().square().mean()), 1e-6);
        auto fitted = fit_field(pooled, field_init(rms_x), field_init(rms_y), cfg.optimize_field,
                                field_opt_config(cfg, rms_x), field_opt_config(cfg, rms_y));
        res.field = std::move(fitted.model);
        res.deduplicated = fitted.deduplicated;
        return 0;
    });
    const double t_field = seconds_since(t_field0);

    // --- influence grid ---
    const auto t_grid0 = Clock::now();
    stage("grid", [&] {
        GridSpec spec = cfg.grid;
        if (spec.times.empty()) {
            std::set<double> times;
            for (const auto& tr : res.trajectories)
                for (Eigen::Index i = 0; i < tr.size(); ++i) times.insert(tr.t[i]);
            spec.times.assign(times.begin(), times.end());
        }
        // The model lives in normalized coordinates; shift the requested
        // bounds, evaluate, then report the grid on the original axes.
        GridSpec eval = spec;
        eval.x_bounds = {spec.x_bounds[0] - res.norm.x_offset,
                         spec.x_bounds[1] - res.norm.x_offset};
        eval.y_bounds = {spec.y_bounds[0] - res.norm.y_offset,
                         spec.y_bounds[1] - res.norm.y_offset};
        res.grid = build_grid(res.field, eval, cfg.workers);
        res.grid.x_bounds = spec.x_bounds;
        res.grid.y_bounds = spec.y_bounds;
        res.mean_map = mean_over_time(res.grid);
        return 0;
    });
    const double t_grid = seconds_since(t_grid0);

    res.seconds_total = seconds_since(t_start);

    // --- outputs (single writer; roll back partial files on failure) ---
    if (!cfg.out_dir.empty()) {
        std::vector<std::string> written;
        auto track = [&](const std::string& p) {
            written.push_back(p);
            return p;
        };
        try {
            stage("write_outputs", [&] {
                std::error_code ec;
                fs::create_directories(cfg.out_dir, ec);
                if (ec) throw IoError("cannot create output directory " + cfg.out_dir);
                const std::string base = cfg.out_dir + "/";

                save_trajectories(res.trajectories, track(base + "trajectories.csv"));
                export_grid(res.grid, track(base + "grid.csv"));
                export_mean_map(res.mean_map, res.grid.x_bounds, res.grid.y_bounds,
                                track(base + "mean_map.csv"));
                render_heatmap(res.mean_map, track(base + "mean_map.ppm"), cfg.image_scale);
                save_field_model(res.field, res.norm, track(base + "field_model.json"));

                if (cfg.frame_images) {
                    fs::create_directories(base + "frames", ec);
                    if (ec) throw IoError("cannot create frames directory");
                    char name[32];
                    for (size_t k = 0; k < res.grid.times.size(); ++k) {
                        std::snprintf(name, sizeof(name), "frames/frame_%05zu.ppm", k);
                        render_heatmap(frame_slice(res.grid, static_cast<int>(k)),
                                       track(base + name), cfg.image_scale);
                    }
                }

                nlohmann::json manifest;
                manifest["input"] = synthetic ? "synthetic" : cfg.input_path;
                if (synthetic) {
                    manifest["sim"] = {{"eta", cfg.sim.eta},
                                       {"noise_std", cfg.sim.noise_std},
                                       {"steps", cfg.sim.steps},
                                       {"seed", cfg.sim.seed},
                                       {"agents", cfg.sim.initial_positions.size()},
                                       {"mu1", {cfg.utility.mu1.x(), cfg.utility.mu1.y()}},
                                       {"mu2", {cfg.utility.mu2.x(), cfg.utility.mu2.y()}},
                                       {"a", cfg.utility.a},
                                       {"b", cfg.utility.b}};
                }
                manifest["normalization"] = {{"x_offset", res.norm.x_offset},
                                             {"y_offset", res.norm.y_offset},
                                             {"scale", res.norm.scale}};
                manifest["trim"] = cfg.trim;
                manifest["seeds"] = {{"simulation", cfg.sim.seed},
                                     {"optimizer", cfg.optimizer_seed}};
                manifest["workers"] = resolve_workers(cfg.workers);
                nlohmann::json agents = nlohmann::json::array();
                for (const auto& a : res.agents)
                    agents.push_back({{"agent_id", a.agent_id},
                                      {"samples", a.gp_x.size()},
                                      {"hyperparams_x", hp_json(a.gp_x.hyperparams())},
                                      {"hyperparams_y", hp_json(a.gp_y.hyperparams())},
                                      {"lml_x", log_marginal_likelihood(a.gp_x)},
                                      {"lml_y", log_marginal_likelihood(a.gp_y)}});
                manifest["agents"] = agents;
                manifest["field"] = {
                    {"pooled_points", res.field.gp_vx.size()},
                    {"deduplicated", res.deduplicated},
                    {"hyperparams_x", hp_json(res.field.gp_vx.hyperparams())},
                    {"hyperparams_y", hp_json(res.field.gp_vy.hyperparams())},
                    {"lml_x", log_marginal_likelihood(res.field.gp_vx)},
                    {"lml_y", log_marginal_likelihood(res.field.gp_vy)},
                    {"prior_laplacian_variance", prior_laplacian_variance(res.field)}};
                manifest["grid"] = {{"x_bounds", res.grid.x_bounds},
                                    {"y_bounds", res.grid.y_bounds},
                                    {"nx", res.grid.nx},
                                    {"ny", res.grid.ny},
                                    {"frames", res.grid.times.size()}};
                manifest["timings_s"] = {{"input", t_input},
                                         {"trajectory_layer", t_traj},
                                         {"field_layer", t_field},
                                         {"grid", t_grid},
                                         {"total", res.seconds_total}};
                const std::string mpath = track(base + "manifest.json");
                std::ofstream mf(mpath, std::ios::binary);
                if (!mf) throw IoError("cannot open for writing: " + mpath);
                mf << manifest.dump(2) << '\n';
                mf.flush();
                if (!mf) throw IoError("write failed: " + mpath);
                return 0;
            });
        } catch (...) {
            for (const auto& p : written) {
                std::error_code ec;
                fs::remove(p, ec);
            }
            throw;
        }
        res.seconds_total = seconds_since(t_start);
    }
    return res;
}

}  // namespace sourcesink
