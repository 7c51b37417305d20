#include "sourcesink/influence.hpp"

#include <cmath>
#include <limits>

#include "sourcesink/errors.hpp"
#include "sourcesink/parallel.hpp"

namespace sourcesink {

double kl_gaussian(const GaussianScalar& prior, const GaussianScalar& posterior) {
    if (!(prior.variance > 0.0) || !(posterior.variance > 0.0))
        throw InputError("kl_gaussian: variances must be positive");
    if (prior.mean == posterior.mean && prior.variance == posterior.variance) return 0.0;
    const double ratio = prior.variance / posterior.variance;
    const double diff = posterior.mean - prior.mean;
    return 0.5 * (ratio + diff * diff / posterior.variance - 1.0 - std::log(ratio));
}

namespace {

double signed_kl_of(const GaussianScalar& lap, double prior_var) {
    if (lap.mean == 0.0) return 0.0;
    // Posterior variance is clamped at 0 upstream; keep KL finite-by-floor so
    // a collapsed posterior reads as a huge (honest) divergence, not a throw.
    GaussianScalar post{lap.mean, std::max(lap.variance, std::numeric_limits<double>::min())};
    const double kl = kl_gaussian({0.0, prior_var}, post);
    return lap.mean < 0.0 ? -kl : kl;
}

}  // namespace

double signed_kl(const FieldModel& model, double x, double y, double t, double prior_var) {
    return signed_kl_of(laplacian_posterior(model, x, y, t), prior_var);
}

void GridSpec::validate() const {
    if (nx < 2 || ny < 2) throw InputError("GridSpec: nx and ny must be >= 2");
    if (!(x_bounds[0] < x_bounds[1]) || !(y_bounds[0] < y_bounds[1]))
        throw InputError("GridSpec: bounds must be increasing intervals");
    if (times.empty()) throw InputError("GridSpec: times must be non-empty");
    for (double t : times)
        if (!std::isfinite(t)) throw InputError("GridSpec: non-finite time");
}

double GridSpec::x_at(int i) const {
    return x_bounds[0] + (x_bounds[1] - x_bounds[0]) * i / (nx - 1);
}

double GridSpec::y_at(int j) const {
    return y_bounds[0] + (y_bounds[1] - y_bounds[0]) * j / (ny - 1);
}

InfluenceGrid build_grid(const FieldModel& model, const GridSpec& spec, int workers) {
    spec.validate();
    InfluenceGrid grid;
    grid.x_bounds = spec.x_bounds;
    grid.y_bounds = spec.y_bounds;
    grid.nx = spec.nx;
    grid.ny = spec.ny;
    grid.times = spec.times;
    const int total = static_cast<int>(spec.times.size()) * spec.ny * spec.nx;
    grid.lap_mean.resize(total);
    grid.lap_var.resize(total);
    grid.signed_kl.resize(total);

    const double prior_var = prior_laplacian_variance(model);
    const int frame = spec.nx * spec.ny;
    // One batched evaluation per frame: all frame rows write fixed slots, so
    // the result is identical for any worker count.
    parallel_for(static_cast<int>(spec.times.size()), resolve_workers(workers), [&](int k) {
        Eigen::MatrixXd P(frame, 3);
        int row = 0;
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i, ++row) {
                P(row, 0) = spec.x_at(i);
                P(row, 1) = spec.y_at(j);
                P(row, 2) = spec.times[k];
            }
        auto [mx, vx] = predict_derivative_batch(model.gp_vx, P, 1, 0);
        auto [my, vy] = predict_derivative_batch(model.gp_vy, P, 1, 1);
        for (int r = 0; r < frame; ++r) {
            const int idx = k * frame + r;
            const GaussianScalar lap{mx[r] + my[r], vx[r] + vy[r]};
            grid.lap_mean[idx] = lap.mean;
            grid.lap_var[idx] = lap.variance;
            grid.signed_kl[idx] = signed_kl_of(lap, prior_var);
        }
    });
    return grid;
}

Eigen::MatrixXd mean_over_time(const InfluenceGrid& grid) {
    if (grid.times.empty()) throw InputError("mean_over_time: grid has no time slices");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid.ny, grid.nx);
    for (int k = 0; k < static_cast<int>(grid.times.size()); ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) out(j, i) += grid.signed_kl[grid.index(k, j, i)];
    out /= static_cast<double>(grid.times.size());
    return out;
}

}  // namespace sourcesink
