#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "io.hpp"
#include "synthetic.hpp"

namespace sourcesink {

struct PipelineConfig {
    // Input: a trajectory file, or a synthetic run when input_path is empty.
    std::string input_path;
    UtilityParams utility;
    SimConfig sim;

    bool optimize_trajectory = true;
    bool optimize_field = true;
    int trajectory_restarts = 2;
    int field_restarts = 5;
    std::uint64_t optimizer_seed = 12345;

    // Acceleration samples dropped from each end of every trajectory before
    // pooling (endpoint second derivatives are the least certain).
    int trim = 2;

    // Bounds in original (un-normalized) coordinates; empty times means one
    // frame per observed sample time.
    GridSpec grid;

    int workers = 0;  // 0 -> SOURCESINK_WORKERS, then hardware
    std::string out_dir;  // empty -> compute only, write nothing
    int image_scale = 8;
    bool frame_images = false;
};

struct PipelineResult {
    std::vector<Trajectory> trajectories;  // original coordinates
    Normalization norm;
    std::vector<TrajectoryModel> agents;  // fitted in normalized coordinates
    FieldModel field;
    int deduplicated = 0;
    InfluenceGrid grid;  // bounds/coordinates reported in original axes
    Eigen::MatrixXd mean_map;
    double seconds_total = 0.0;
};

// load/simulate -> normalize -> per-agent trajectory GPs -> acceleration
// posteriors -> pooled field GPs -> influence grid -> time-mean map; writes
// grid, maps, model snapshot, and manifest under cfg.out_dir. A failing stage
// aborts with a stage-tagged error and removes partial outputs.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace sourcesink
