#include "sourcesink/trajectory.hpp"

namespace sourcesink {

TrajectoryModel fit_trajectory(const Trajectory& traj, const KernelHyperparams& init,
                               bool optimize, const OptimizeConfig& cfg) {
    return fit_trajectory(traj, init, init, optimize, cfg);
}

TrajectoryModel fit_trajectory(const Trajectory& traj, const KernelHyperparams& init_x,
                               const KernelHyperparams& init_y, bool optimize,
                               const OptimizeConfig& cfg) {
    traj.validate();
    Eigen::MatrixXd T(traj.size(), 1);
    T.col(0) = traj.t;

    TrajectoryModel model;
    model.agent_id = traj.agent_id;
    model.x_mean = traj.x.mean();
    model.y_mean = traj.y.mean();
    Eigen::VectorXd cx = traj.x.array() - model.x_mean;
    Eigen::VectorXd cy = traj.y.array() - model.y_mean;

    KernelHyperparams hpx = init_x, hpy = init_y;
    if (optimize) {
        hpx = optimize_hyperparameters(T, cx, init_x, cfg).hp;
        hpy = optimize_hyperparameters(T, cy, init_y, cfg).hp;
    }
    model.gp_x = fit(T, cx, hpx);
    model.gp_y = fit(T, cy, hpy);
    return model;
}

std::pair<GaussianScalar, GaussianScalar> predict_position(const TrajectoryModel& model,
                                                           double t) {
    Eigen::VectorXd q(1);
    q[0] = t;
    GaussianScalar px = predict(model.gp_x, q);
    GaussianScalar py = predict(model.gp_y, q);
    px.mean += model.x_mean;
    py.mean += model.y_mean;
    return {px, py};
}

std::vector<AccelerationSample> infer_accelerations(const TrajectoryModel& model) {
    const Eigen::MatrixXd& T = model.gp_x.inputs();
    std::vector<AccelerationSample> out;
    out.reserve(T.rows());
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
        AccelerationSample s;
        s.t = T(i, 0);
        s.x = model.gp_x.targets()[i] + model.x_mean;
        s.y = model.gp_y.targets()[i] + model.y_mean;
        s.ax = predict_derivative(model.gp_x, T.row(i), 2, 0);
        s.ay = predict_derivative(model.gp_y, T.row(i), 2, 0);
        out.push_back(s);
    }
    return out;
}

}  // namespace sourcesink
