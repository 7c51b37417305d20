#include "sourcesink/synthetic.hpp"

#include <cmath>
#include <random>

namespace sourcesink {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Distinct, well-mixed per-agent seed streams from one base seed.
std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4a4a2d9ae211fULL;
    return z ^ (z >> 31);
}

}  // namespace

double utility(const UtilityParams& p, const Eigen::Vector2d& x, double t) {
    p.validate();
    double v1 = std::sin(t) + p.a;
    double v2 = std::cos(t) + p.b;
    double q1 = (x - p.mu1).squaredNorm();
    double q2 = (x - p.mu2).squaredNorm();
    return std::exp(-0.5 * q1 / v1) / (kTwoPi * v1) + std::exp(-0.5 * q2 / v2) / (kTwoPi * v2);
}

Eigen::Vector2d utility_grad(const UtilityParams& p, const Eigen::Vector2d& x, double t) {
    p.validate();
    double v1 = std::sin(t) + p.a;
    double v2 = std::cos(t) + p.b;
    Eigen::Vector2d d1 = x - p.mu1;
    Eigen::Vector2d d2 = x - p.mu2;
    double p1 = std::exp(-0.5 * d1.squaredNorm() / v1) / (kTwoPi * v1);
    double p2 = std::exp(-0.5 * d2.squaredNorm() / v2) / (kTwoPi * v2);
    return -p1 / v1 * d1 - p2 / v2 * d2;
}

double utility_laplacian(const UtilityParams& p, const Eigen::Vector2d& x, double t) {
    p.validate();
    double v1 = std::sin(t) + p.a;
    double v2 = std::cos(t) + p.b;
    double q1 = (x - p.mu1).squaredNorm();
    double q2 = (x - p.mu2).squaredNorm();
    double p1 = std::exp(-0.5 * q1 / v1) / (kTwoPi * v1);
    double p2 = std::exp(-0.5 * q2 / v2) / (kTwoPi * v2);
    return p1 * (q1 / (v1 * v1) - 2.0 / v1) + p2 * (q2 / (v2 * v2) - 2.0 / v2);
}

std::vector<Trajectory> simulate_with_gradient(const GradientFn& grad, const SimConfig& cfg) {
    cfg.validate();
    std::vector<Trajectory> out;
    out.reserve(cfg.initial_positions.size());
    for (std::size_t agent = 0; agent < cfg.initial_positions.size(); ++agent) {
        std::mt19937_64 rng(splitmix64(cfg.seed ^ static_cast<std::uint64_t>(agent)));
        std::normal_distribution<double> noise(0.0, cfg.noise_std);

        Trajectory traj;
        traj.agent_id = std::to_string(agent);
        traj.t.resize(cfg.steps);
        traj.x.resize(cfg.steps);
        traj.y.resize(cfg.steps);

        Eigen::Vector2d pos = cfg.initial_positions[agent];
        Eigen::Vector2d vel = Eigen::Vector2d::Zero();
        traj.t[0] = 0.0;
        traj.x[0] = pos[0];
        traj.y[0] = pos[1];
        for (int i = 1; i < cfg.steps; ++i) {
            double t_prev = (i - 1) * cfg.eta;
            Eigen::Vector2d acc = grad(pos, t_prev);
            if (cfg.noise_std > 0.0) {
                acc[0] += noise(rng);
                acc[1] += noise(rng);
            }
            vel += cfg.eta * acc;
            pos += cfg.eta * vel;
            traj.t[i] = i * cfg.eta;
            traj.x[i] = pos[0];
            traj.y[i] = pos[1];
        }
        out.push_back(std::move(traj));
    }
    return out;
}

std::vector<Trajectory> simulate(const UtilityParams& p, const SimConfig& cfg) {
    p.validate();
    return simulate_with_gradient(
        [&p](const Eigen::Vector2d& x, double t) { return utility_grad(p, x, t); }, cfg);
}

Eigen::Vector2d dominant_attractor(const UtilityParams& p, double t, double x0, double x1,
                                   double y0, double y1, int nx, int ny) {
    if (nx < 2 || ny < 2) throw InputError("synthetic: grid needs nx, ny >= 2");
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector2d arg(x0, y0);
    for (int iy = 0; iy < ny; ++iy) {
        double y = y0 + (y1 - y0) * iy / (ny - 1);
        for (int ix = 0; ix < nx; ++ix) {
            double x = x0 + (x1 - x0) * ix / (nx - 1);
            double v = utility_laplacian(p, {x, y}, t);
            if (v < best) {
                best = v;
                arg = {x, y};
            }
        }
    }
    return arg;
}

}  // namespace sourcesink
