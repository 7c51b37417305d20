#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "errors.hpp"
#include "trajectory.hpp"

namespace sourcesink {

// Two-component time-varying Gaussian utility: unnormalized sum of densities
// N(mu1, (sin t + a) I) + N(mu2, (cos t + b) I). a, b > 1 keeps both variances
// positive for all t.
struct UtilityParams {
    Eigen::Vector2d mu1{-1.5, 0.0};
    Eigen::Vector2d mu2{1.5, 0.0};
    double a = 2.1;
    double b = 2.1;

    void validate() const {
        if (!(a > 1.0) || !(b > 1.0))
            throw InputError("synthetic: a and b must exceed 1 to keep covariances positive");
    }
};

struct SimConfig {
    double eta = 0.1;        // update increment
    double noise_std = 0.01; // per-axis acceleration noise
    int steps = 200;         // samples per agent, including the initial state
    std::uint64_t seed = 0;
    std::vector<Eigen::Vector2d> initial_positions;

    void validate() const {
        if (!(eta > 0.0)) throw InputError("synthetic: eta must be positive");
        if (steps < 1) throw InputError("synthetic: steps must be >= 1");
        if (noise_std < 0.0) throw InputError("synthetic: noise_std must be non-negative");
        if (initial_positions.empty())
            throw InputError("synthetic: at least one initial position required");
    }
};

double utility(const UtilityParams& p, const Eigen::Vector2d& x, double t);
Eigen::Vector2d utility_grad(const UtilityParams& p, const Eigen::Vector2d& x, double t);
double utility_laplacian(const UtilityParams& p, const Eigen::Vector2d& x, double t);

// Second-order integrator: acc = grad(x_t, t) + noise; vel += eta*acc;
// pos += eta*vel. Sample i carries t = i*eta; sample 0 is the initial state.
// Exposed with an arbitrary gradient callable so the one-step contract can be
// checked against the hand-unrolled update exactly.
using GradientFn = std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)>;
std::vector<Trajectory> simulate_with_gradient(const GradientFn& grad, const SimConfig& cfg);

std::vector<Trajectory> simulate(const UtilityParams& p, const SimConfig& cfg);

// Argmin of the analytic Laplacian over a lattice: the dominant attractor.
Eigen::Vector2d dominant_attractor(const UtilityParams& p, double t, double x0, double x1,
                                   double y0, double y1, int nx, int ny);

}  // namespace sourcesink
