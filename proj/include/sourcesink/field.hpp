#pragma once

#include <Eigen/Dense>
#include <vector>

#include "trajectory.hpp"

namespace sourcesink {

// Spatio-temporal vector-field model: one GP per axis over (x, y, t) inputs,
// trained on the pooled acceleration means of all agents. The axis GPs are
// independent (zero cross-covariance), so variances of derived quantities add.
struct FieldModel {
    GpModel gp_vx;
    GpModel gp_vy;
};

struct DerivativeTuple {
    GaussianScalar vx, vy;
    GaussianScalar dvx_dx, dvy_dy, dvx_dy, dvy_dx;
};

struct FieldFitResult {
    FieldModel model;
    int deduplicated = 0;  // duplicate pooled inputs merged by averaging
};

FieldFitResult fit_field(const std::vector<AccelerationSample>& samples,
                         const KernelHyperparams& init_x, const KernelHyperparams& init_y,
                         bool optimize, const OptimizeConfig& cfg_x = {},
                         const OptimizeConfig& cfg_y = {});

std::pair<GaussianScalar, GaussianScalar> predict_vector(const FieldModel& model, double x,
                                                         double y, double t);

// Components plus the four spatial partials in one call.
DerivativeTuple predict_derivatives(const FieldModel& model, double x, double y, double t);

GaussianScalar divergence(const FieldModel& model, double x, double y, double t);
GaussianScalar curl_z(const FieldModel& model, double x, double y, double t);

// Identical to divergence: the Laplacian of the potential is identified with
// the divergence of the inferred acceleration field (unit influence mass).
GaussianScalar laplacian_posterior(const FieldModel& model, double x, double y, double t);

// h_x^2/lambda_x^2 + h_y^2/lambda_y^2 from the fitted hyperparameters: the
// no-data variance of the Laplacian.
double prior_laplacian_variance(const FieldModel& model);

}  // namespace sourcesink
