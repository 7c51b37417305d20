#include "sourcesink/gp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sourcesink {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Same arithmetic as se_kernel on row pairs, without per-entry temporaries.
Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const KernelHyperparams& hp) {
    const Eigen::Index n = X.rows();
    const int dim = static_cast<int>(X.cols());
    const double l2 = hp.output_scale * hp.output_scale;
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = l2;
        for (Eigen::Index j = 0; j < i; ++j) {
            double q = 0.0;
            for (int d = 0; d < dim; ++d) {
                double r = (X(i, d) - X(j, d)) / hp.length_scales[d];
                q += r * r;
            }
            double k = l2 * std::exp(-0.5 * q);
            K(i, j) = k;
            K(j, i) = k;
        }
    }
    return K;
}

bool has_duplicate_rows(const Eigen::MatrixXd& X) {
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = i + 1; j < X.rows(); ++j)
            if ((X.row(i) - X.row(j)).cwiseAbs().maxCoeff() == 0.0) return true;
    return false;
}

}  // namespace

GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
            const KernelHyperparams& hp) {
    hp.validate();
    if (inputs.rows() < 1) throw InputError("gp: at least one training point required");
    if (inputs.rows() != targets.size())
        throw InputError("gp: inputs and targets must have equal length");
    if (inputs.cols() != hp.length_scales.size())
        throw InputError("gp: input dimension does not match length scales");
    if (!inputs.allFinite() || !targets.allFinite())
        throw InputError("gp: non-finite training data");
    if (hp.noise_std == 0.0 && has_duplicate_rows(inputs))
        throw NumericalError("gp: singular Gram matrix (duplicate inputs with zero noise)");

    GpModel m;
    m.X_ = inputs;
    m.y_ = targets;
    m.hp_ = hp;

    Eigen::MatrixXd K = gram(inputs, hp);
    K.diagonal().array() += hp.noise_std * hp.noise_std;
    const double n = static_cast<double>(inputs.rows());
    const double trace_scale = K.trace() / n;

    // Try the exact matrix first (keeps likelihood gradients consistent with
    // finite differences), then escalate jitter 1e-10 -> 1e-4 times trace/N.
    double jitter = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
        Eigen::MatrixXd Kj = K;
        if (jitter > 0.0) Kj.diagonal().array() += jitter;
        llt.compute(Kj);
        if (llt.info() == Eigen::Success) break;
        if (jitter == 0.0)
            jitter = 1e-10 * trace_scale;
        else if (jitter < 1e-4 * trace_scale)
            jitter = std::min(jitter * 10.0, 1e-4 * trace_scale);
        else
            throw NumericalError(
                "gp: covariance not positive definite even at maximum jitter "
                "(trace/N scale " +
                std::to_string(trace_scale) + ")");
    }

    m.jitter_ = jitter;
    m.L_ = llt.matrixL();
    m.log_det_half_ = m.L_.diagonal().array().log().sum();
    m.alpha_ = llt.solve(targets);
    m.Kinv_ = llt.solve(Eigen::MatrixXd::Identity(inputs.rows(), inputs.rows()));
    return m;
}

GpModel no_data_model(const KernelHyperparams& hp) {
    hp.validate();
    GpModel m;
    m.hp_ = hp;
    m.X_.resize(0, hp.dim());
    m.y_.resize(0);
    return m;
}

GaussianScalar predict(const GpModel& model, const Eigen::VectorXd& x) {
    const KernelHyperparams& hp = model.hyperparams();
    double prior = hp.output_scale * hp.output_scale;
    if (model.empty()) return {0.0, prior};
    if (x.size() != model.dim()) throw InputError("gp: query dimension mismatch");

    Eigen::VectorXd k(model.size());
    for (Eigen::Index i = 0; i < model.size(); ++i)
        k[i] = se_kernel(x, model.inputs().row(i), hp);
    double mean = k.dot(model.alpha());
    double variance = prior - k.dot(model.kinv() * k);
    if (variance < 0.0) variance = 0.0;
    return {mean, variance};
}

GaussianScalar predict_derivative(const GpModel& model, const Eigen::VectorXd& x, int order,
                                  int dim) {
    if (order != 1 && order != 2) throw InputError("gp: derivative order must be 1 or 2");
    const KernelHyperparams& hp = model.hyperparams();
    if (dim < 0 || dim >= hp.dim()) throw InputError("gp: derivative dimension out of range");

    MultiIndex da = unit_index(hp.dim(), dim, order);
    MultiIndex db = zero_index(hp.dim());
    double prior = se_kernel_cross(x, x, hp, da, da);
    if (model.empty()) return {0.0, prior};
    if (x.size() != model.dim()) throw InputError("gp: query dimension mismatch");

    Eigen::VectorXd r(model.size());
    for (Eigen::Index i = 0; i < model.size(); ++i)
        r[i] = se_kernel_cross(x, model.inputs().row(i), hp, da, db);
    double mean = r.dot(model.alpha());
    double variance = prior - r.dot(model.kinv() * r);
    if (variance < 0.0) variance = 0.0;  // floating-point cancellation guard
    return {mean, variance};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_derivative_batch(
    const GpModel& model, const Eigen::MatrixXd& points, int order, int dim) {
    if (order != 1 && order != 2) throw InputError("gp: derivative order must be 1 or 2");
    const KernelHyperparams& hp = model.hyperparams();
    if (dim < 0 || dim >= hp.dim()) throw InputError("gp: derivative dimension out of range");
    if (points.cols() != hp.dim()) throw InputError("gp: query dimension mismatch");

    const Eigen::Index m = points.rows();
    MultiIndex da = unit_index(hp.dim(), dim, order);
    MultiIndex db = zero_index(hp.dim());
    const double prior = se_kernel_cross(points.row(0), points.row(0), hp, da, da);
    if (model.empty())
        return {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Constant(m, prior)};

    Eigen::MatrixXd C = kernel_matrix(points, model.inputs(), hp, da, db);
    Eigen::VectorXd mean = C * model.alpha();
    Eigen::VectorXd variance =
        (Eigen::VectorXd::Constant(m, prior) - ((C * model.kinv()).array() * C.array())
                                                   .rowwise()
                                                   .sum()
                                                   .matrix())
            .cwiseMax(0.0);
    return {std::move(mean), std::move(variance)};
}

double log_marginal_likelihood(const GpModel& model) {
    if (model.empty()) throw InputError("gp: marginal likelihood needs a fitted model");
    const double n = static_cast<double>(model.size());
    return -0.5 * model.targets().dot(model.alpha()) - model.log_det_half() -
           0.5 * n * std::log(kTwoPi);
}

std::pair<double, Eigen::VectorXd> lml_with_gradient(const Eigen::MatrixXd& inputs,
                                                     const Eigen::VectorXd& targets,
                                                     const KernelHyperparams& hp) {
    hp.validate();
    const Eigen::Index n = inputs.rows();
    if (n < 1) throw InputError("gp: at least one training point required");
    if (inputs.rows() != targets.size())
        throw InputError("gp: inputs and targets must have equal length");
    if (inputs.cols() != hp.length_scales.size())
        throw InputError("gp: input dimension does not match length scales");
    const int d = hp.dim();

    Eigen::MatrixXd Kse = gram(inputs, hp);
    Eigen::MatrixXd K = Kse;
    K.diagonal().array() += hp.noise_std * hp.noise_std;

    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
        throw NumericalError("gp: covariance not positive definite in likelihood evaluation");
    Eigen::VectorXd alpha = llt.solve(targets);
    Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd L = llt.matrixL();

    double lml = -0.5 * targets.dot(alpha) - L.diagonal().array().log().sum() -
                 0.5 * static_cast<double>(n) * std::log(kTwoPi);

    // d lml / d theta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta) in log-space.
    Eigen::MatrixXd A = alpha * alpha.transpose() - Kinv;
    Eigen::VectorXd grad(d + 2);
    grad[0] = 0.5 * (A.array() * (2.0 * Kse).array()).sum();  // d/d log l
    for (int k = 0; k < d; ++k) {
        double lam2 = hp.length_scales[k] * hp.length_scales[k];
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                double r = inputs(i, k) - inputs(j, k);
                acc += A(i, j) * Kse(i, j) * (r * r / lam2);
            }
        grad[1 + k] = 0.5 * acc;  // d/d log lambda_k
    }
    grad[d + 1] = 0.5 * A.trace() * 2.0 * hp.noise_std * hp.noise_std;  // d/d log sigma
    return {lml, grad};
}

namespace {

KernelHyperparams theta_to_hp(const Eigen::VectorXd& theta, int d) {
    KernelHyperparams hp;
    hp.output_scale = std::exp(theta[0]);
    hp.length_scales = theta.segment(1, d).array().exp();
    hp.noise_std = std::exp(theta[d + 1]);
    return hp;
}

// Negative lml and gradient in log space; +inf on any evaluation failure
// (factorization breakdown, exp underflow to zero, non-finite step) so the
// line search simply backs off.
std::pair<double, Eigen::VectorXd> objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                             const Eigen::VectorXd& theta) {
    const int d = static_cast<int>(X.cols());
    if (!theta.allFinite())
        return {std::numeric_limits<double>::infinity(), Eigen::VectorXd::Zero(theta.size())};
    try {
        auto [lml, grad] = lml_with_gradient(X, y, theta_to_hp(theta, d));
        if (!std::isfinite(lml)) throw NumericalError("non-finite likelihood");
        return {-lml, -grad};
    } catch (const std::runtime_error&) {
        return {std::numeric_limits<double>::infinity(), Eigen::VectorXd::Zero(theta.size())};
    }
}

Eigen::VectorXd clamp_box(Eigen::VectorXd v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (lo.size() > 0) v = v.cwiseMax(lo);
    if (hi.size() > 0) v = v.cwiseMin(hi);
    return v;
}

// L-BFGS with two-loop recursion, Armijo backtracking, and optional box
// projection. Returns the best point visited (so the result never scores
// worse than the start).
std::pair<Eigen::VectorXd, double> lbfgs_minimize(const Eigen::MatrixXd& X,
                                                  const Eigen::VectorXd& y, Eigen::VectorXd theta,
                                                  const Eigen::VectorXd& lo,
                                                  const Eigen::VectorXd& hi, int max_iters) {
    constexpr int kMemory = 10;
    constexpr double kArmijo = 1e-4;
    theta = clamp_box(theta, lo, hi);
    auto [f, g] = objective(X, y, theta);
    Eigen::VectorXd best_x = theta;
    double best_f = f;

    std::vector<Eigen::VectorXd> s_hist, y_hist;
    std::vector<double> rho_hist;

    for (int iter = 0; iter < max_iters; ++iter) {
        if (!std::isfinite(f)) break;
        if (g.norm() < 1e-8) break;

        // Two-loop recursion for the search direction.
        Eigen::VectorXd q = g;
        std::vector<double> alpha_coef(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha_coef[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha_coef[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const auto& s = s_hist.back();
            const auto& yv = y_hist.back();
            q *= s.dot(yv) / yv.dot(yv);
        }
        for (size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha_coef[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd p = -q;
        if (p.dot(g) >= 0.0) p = -g;  // safeguard: fall back to steepest descent

        double step = 1.0;
        Eigen::VectorXd x_new;
        double f_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd g_new;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = clamp_box(theta + step * p, lo, hi);
            Eigen::VectorXd dx = x_new - theta;
            if (dx.norm() < 1e-14) break;
            auto [fv, gv] = objective(X, y, x_new);
            if (std::isfinite(fv) && fv <= f + kArmijo * g.dot(dx)) {
                f_new = fv;
                g_new = gv;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        Eigen::VectorXd s = x_new - theta;
        Eigen::VectorXd yv = g_new - g;
        double sy = s.dot(yv);
        if (sy > 1e-12) {
            s_hist.push_back(s);
            y_hist.push_back(yv);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > kMemory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        const double drop = f - f_new;
        theta = x_new;
        f = f_new;
        g = g_new;
        if (f < best_f) {
            best_f = f;
            best_x = theta;
        }
        if (drop <= 1e-9 * std::max(1.0, std::abs(f))) break;  // converged in value
    }
    return {best_x, best_f};
}

}  // namespace

OptimizeResult optimize_hyperparameters(const Eigen::MatrixXd& inputs,
                                        const Eigen::VectorXd& targets,
                                        const KernelHyperparams& init, const OptimizeConfig& cfg) {
    init.validate();
    if (inputs.rows() < 2) throw InputError("gp: optimization needs at least two points");
    const int d = static_cast<int>(inputs.cols());
    const int nparam = d + 2;

    Eigen::VectorXd theta0(nparam);
    theta0[0] = std::log(init.output_scale);
    for (int k = 0; k < d; ++k) theta0[1 + k] = std::log(init.length_scales[k]);
    theta0[d + 1] = std::log(std::max(init.noise_std, 1e-12));

    Eigen::VectorXd lo, hi;
    if (!cfg.lower.empty()) {
        if (static_cast<int>(cfg.lower.size()) != nparam)
            throw InputError("gp: bound vector length must be dim+2");
        lo.resize(nparam);
        for (int i = 0; i < nparam; ++i) lo[i] = std::log(cfg.lower[i]);
    }
    if (!cfg.upper.empty()) {
        if (static_cast<int>(cfg.upper.size()) != nparam)
            throw InputError("gp: bound vector length must be dim+2");
        hi.resize(nparam);
        for (int i = 0; i < nparam; ++i) hi[i] = std::log(cfg.upper[i]);
    }

    double f_init = objective(inputs, targets, clamp_box(theta0, lo, hi)).first;
    Eigen::VectorXd best_theta = clamp_box(theta0, lo, hi);
    double best_f = f_init;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> perturb(0.0, cfg.restart_sigma);
    for (int r = 0; r <= cfg.restarts; ++r) {
        Eigen::VectorXd start = theta0;
        if (r > 0)
            for (int i = 0; i < nparam; ++i) start[i] += perturb(rng);
        auto [theta, f] = lbfgs_minimize(inputs, targets, start, lo, hi, cfg.max_iters);
        if (f < best_f) {
            best_f = f;
            best_theta = theta;
        }
    }

    OptimizeResult result;
    result.hp = theta_to_hp(best_theta, d);
    result.lml = -best_f;
    result.improved = best_f < f_init;
    if (!result.improved) {
        result.hp = init;  // objective never decreases relative to the init
        result.lml = -f_init;
    }
    return result;
}

}  // namespace sourcesink
