#include "sourcesink/field.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sourcesink/errors.hpp"

namespace sourcesink {

namespace {

struct PooledData {
    Eigen::MatrixXd X;   // rows = (x, y, t)
    Eigen::VectorXd yx;  // acceleration means, x axis
    Eigen::VectorXd yy;
    int deduplicated = 0;
};

PooledData pool_samples(const std::vector<AccelerationSample>& samples) {
    if (samples.size() < 4)
        throw InputError("fit_field: need at least 4 pooled samples, got " +
                         std::to_string(samples.size()));
    struct Acc {
        double x = 0, y = 0;
        int n = 0;
    };
    // Exact-duplicate inputs are merged by averaging their targets so the Gram
    // matrix stays nonsingular; ordering follows first appearance.
    std::map<std::array<double, 3>, int> index;
    std::vector<std::array<double, 3>> keys;
    std::vector<Acc> acc;
    for (const auto& s : samples) {
        if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.t) ||
            !std::isfinite(s.ax.mean) || !std::isfinite(s.ay.mean))
            throw InputError("fit_field: non-finite sample");
        std::array<double, 3> key{s.x, s.y, s.t};
        auto [it, inserted] = index.try_emplace(key, static_cast<int>(keys.size()));
        if (inserted) {
            keys.push_back(key);
            acc.push_back({});
        }
        auto& a = acc[it->second];
        a.x += s.ax.mean;
        a.y += s.ay.mean;
        a.n += 1;
    }
    PooledData out;
    const int n = static_cast<int>(keys.size());
    out.X.resize(n, 3);
    out.yx.resize(n);
    out.yy.resize(n);
    for (int i = 0; i < n; ++i) {
        out.X(i, 0) = keys[i][0];
        out.X(i, 1) = keys[i][1];
        out.X(i, 2) = keys[i][2];
        out.yx[i] = acc[i].x / acc[i].n;
        out.yy[i] = acc[i].y / acc[i].n;
    }
    out.deduplicated = static_cast<int>(samples.size()) - n;
    return out;
}

}  // namespace

FieldFitResult fit_field(const std::vector<AccelerationSample>& samples,
                         const KernelHyperparams& init_x, const KernelHyperparams& init_y,
                         bool optimize, const OptimizeConfig& cfg_x, const OptimizeConfig& cfg_y) {
    if (init_x.dim() != 3 || init_y.dim() != 3)
        throw InputError("fit_field: hyperparameters must have 3 length scales (x, y, t)");
    PooledData data = pool_samples(samples);

    KernelHyperparams hx = init_x;
    KernelHyperparams hy = init_y;
    if (optimize) {
        hx = optimize_hyperparameters(data.X, data.yx, init_x, cfg_x).hp;
        hy = optimize_hyperparameters(data.X, data.yy, init_y, cfg_y).hp;
    }
    FieldFitResult out;
    out.model.gp_vx = fit(data.X, data.yx, hx);
    out.model.gp_vy = fit(data.X, data.yy, hy);
    out.deduplicated = data.deduplicated;
    return out;
}

std::pair<GaussianScalar, GaussianScalar> predict_vector(const FieldModel& model, double x,
                                                         double y, double t) {
    Eigen::Vector3d p(x, y, t);
    return {predict(model.gp_vx, p), predict(model.gp_vy, p)};
}

DerivativeTuple predict_derivatives(const FieldModel& model, double x, double y, double t) {
    Eigen::Vector3d p(x, y, t);
    DerivativeTuple out;
    out.vx = predict(model.gp_vx, p);
    out.vy = predict(model.gp_vy, p);
    out.dvx_dx = predict_derivative(model.gp_vx, p, 1, 0);
    out.dvy_dy = predict_derivative(model.gp_vy, p, 1, 1);
    out.dvx_dy = predict_derivative(model.gp_vx, p, 1, 1);
    out.dvy_dx = predict_derivative(model.gp_vy, p, 1, 0);
    return out;
}

GaussianScalar divergence(const FieldModel& model, double x, double y, double t) {
    Eigen::Vector3d p(x, y, t);
    GaussianScalar gx = predict_derivative(model.gp_vx, p, 1, 0);
    GaussianScalar gy = predict_derivative(model.gp_vy, p, 1, 1);
    return {gx.mean + gy.mean, gx.variance + gy.variance};
}

GaussianScalar curl_z(const FieldModel& model, double x, double y, double t) {
    Eigen::Vector3d p(x, y, t);
    GaussianScalar gyx = predict_derivative(model.gp_vy, p, 1, 0);
    GaussianScalar gxy = predict_derivative(model.gp_vx, p, 1, 1);
    return {gyx.mean - gxy.mean, gyx.variance + gxy.variance};
}

GaussianScalar laplacian_posterior(const FieldModel& model, double x, double y, double t) {
    return divergence(model, x, y, t);
}

double prior_laplacian_variance(const FieldModel& model) {
    const auto& hx = model.gp_vx.hyperparams();
    const auto& hy = model.gp_vy.hyperparams();
    const double lx = hx.output_scale, lax = hx.length_scales[0];
    const double ly = hy.output_scale, lay = hy.length_scales[1];
    return (lx * lx) / (lax * lax) + (ly * ly) / (lay * lay);
}

}  // namespace sourcesink
