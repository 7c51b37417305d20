#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gp.hpp"

namespace sourcesink {

// An agent's ordered timestamped planar samples.
struct Trajectory {
    std::string agent_id;
    Eigen::VectorXd t;
    Eigen::VectorXd x;
    Eigen::VectorXd y;

    Eigen::Index size() const { return t.size(); }

    void validate() const {
        if (t.size() != x.size() || t.size() != y.size())
            throw InputError("trajectory: t, x, y must have equal length");
        if (t.size() < 4)
            throw InputError("trajectory: at least 4 samples required for agent " + agent_id);
        for (Eigen::Index i = 1; i < t.size(); ++i)
            if (!(t[i] > t[i - 1]))
                throw InputError("trajectory: times must be strictly increasing for agent " +
                                 agent_id);
    }
};

// One GP per axis over time. Targets are centered per axis before fitting
// (the GP prior mean is zero); the offsets only matter for position
// prediction, not for derivatives.
struct TrajectoryModel {
    std::string agent_id;
    GpModel gp_x;
    GpModel gp_y;
    double x_mean = 0.0;
    double y_mean = 0.0;
};

struct AccelerationSample {
    double t = 0.0;
    double x = 0.0;  // observed position at t
    double y = 0.0;
    GaussianScalar ax;  // posterior of the second time-derivative
    GaussianScalar ay;
};

TrajectoryModel fit_trajectory(const Trajectory& traj, const KernelHyperparams& init,
                               bool optimize, const OptimizeConfig& cfg = {});

// Per-axis starting points (e.g. output scale seeded from each axis' spread).
TrajectoryModel fit_trajectory(const Trajectory& traj, const KernelHyperparams& init_x,
                               const KernelHyperparams& init_y, bool optimize,
                               const OptimizeConfig& cfg = {});

// Position posterior at time t (offsets restored).
std::pair<GaussianScalar, GaussianScalar> predict_position(const TrajectoryModel& model, double t);

// Second-derivative posterior at every training time stamp.
std::vector<AccelerationSample> infer_accelerations(const TrajectoryModel& model);

}  // namespace sourcesink
