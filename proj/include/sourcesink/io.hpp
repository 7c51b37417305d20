#pragma once

#include <string>
#include <utility>
#include <vector>

#include "influence.hpp"
#include "trajectory.hpp"

namespace sourcesink {

// Pooled zero-mean shift applied before fitting; invertible (scale != 0).
struct Normalization {
    double x_offset = 0.0;
    double y_offset = 0.0;
    double scale = 1.0;
    void validate() const;
};

// Plain-text rows `agent_id,t,x,y`; agents grouped by first appearance,
// samples sorted by t. Malformed rows raise an input error carrying the line
// number; agents with fewer than 4 samples are skipped with a warning on
// stderr.
std::vector<Trajectory> load_trajectories(const std::string& path);
void save_trajectories(const std::vector<Trajectory>& trajs, const std::string& path);

// Subtracts the pooled mean of x and y across all samples.
std::pair<std::vector<Trajectory>, Normalization> normalize(const std::vector<Trajectory>& trajs);
std::vector<Trajectory> denormalize(const std::vector<Trajectory>& trajs, const Normalization& n);

// Rows `t,x,y,lap_mean,lap_var,signed_kl`, time-major then y then x, 17
// significant digits.
void export_grid(const InfluenceGrid& grid, const std::string& path);
InfluenceGrid load_grid(const std::string& path);

// Rows `x,y,mean_signed_kl`, y-major then x.
void export_mean_map(const Eigen::MatrixXd& map, const std::array<double, 2>& x_bounds,
                     const std::array<double, 2>& y_bounds, const std::string& path);

// Binary PPM (P6) with a diverging blue/white/red mapping symmetric about 0
// (limits are +/- the max absolute value); row 0 of the image is the top
// (largest y). scale repeats each cell as a scale x scale pixel block.
void render_heatmap(const Eigen::MatrixXd& map, const std::string& path, int scale = 1);

// JSON snapshot of a fitted field model (hyperparameters + training data +
// normalization); loading refits, which reproduces the model exactly.
void save_field_model(const FieldModel& model, const Normalization& norm,
                      const std::string& path);
struct LoadedFieldModel {
    FieldModel model;
    Normalization norm;
};
LoadedFieldModel load_field_model(const std::string& path);

}  // namespace sourcesink
