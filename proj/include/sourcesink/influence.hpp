#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "field.hpp"

namespace sourcesink {

// KL(prior || posterior) between univariate Gaussians; both variances must be
// positive.
double kl_gaussian(const GaussianScalar& prior, const GaussianScalar& posterior);

// Signed influence at one point: KL from the no-data Laplacian belief
// N(0, prior_var) to the posterior Laplacian, carrying the posterior-mean
// sign. Negative marks attraction, positive repulsion, zero maps to zero.
double signed_kl(const FieldModel& model, double x, double y, double t, double prior_var);

struct GridSpec {
    std::array<double, 2> x_bounds{-4.0, 4.0};
    std::array<double, 2> y_bounds{-4.0, 4.0};
    int nx = 40;
    int ny = 40;
    std::vector<double> times;
    void validate() const;
    double x_at(int i) const;  // i in [0, nx)
    double y_at(int j) const;  // j in [0, ny)
};

// Flattened frame-major layout: index = (k*ny + j)*nx + i for time k, row j
// (y), column i (x).
struct InfluenceGrid {
    std::array<double, 2> x_bounds{};
    std::array<double, 2> y_bounds{};
    int nx = 0;
    int ny = 0;
    std::vector<double> times;
    Eigen::VectorXd lap_mean;
    Eigen::VectorXd lap_var;
    Eigen::VectorXd signed_kl;
    int frame_size() const { return nx * ny; }
    int index(int k, int j, int i) const { return (k * ny + j) * nx + i; }
};

InfluenceGrid build_grid(const FieldModel& model, const GridSpec& spec, int workers = 0);

// Arithmetic mean of signed_kl over the time axis; entry (j, i) is row j (y),
// column i (x).
Eigen::MatrixXd mean_over_time(const InfluenceGrid& grid);

}  // namespace sourcesink
