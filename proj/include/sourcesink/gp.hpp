#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "kernel.hpp"

namespace sourcesink {

struct GaussianScalar {
    double mean = 0.0;
    double variance = 0.0;
};

// Single-output GP with zero prior mean. Immutable after fit; predictions are
// read-only and safe to call concurrently.
class GpModel {
  public:
    GpModel() = default;

    const Eigen::MatrixXd& inputs() const { return X_; }
    const Eigen::VectorXd& targets() const { return y_; }
    const KernelHyperparams& hyperparams() const { return hp_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Eigen::MatrixXd& kinv() const { return Kinv_; }
    double jitter() const { return jitter_; }
    double log_det_half() const { return log_det_half_; }
    int dim() const { return static_cast<int>(X_.cols()); }
    Eigen::Index size() const { return X_.rows(); }
    bool empty() const { return X_.rows() == 0; }

    friend GpModel fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const KernelHyperparams&);
    friend GpModel no_data_model(const KernelHyperparams& hp);

  private:
    Eigen::MatrixXd X_;   // N x d
    Eigen::VectorXd y_;
    KernelHyperparams hp_;
    Eigen::MatrixXd L_;      // lower Cholesky factor of K + sigma^2 I + jitter I
    Eigen::VectorXd alpha_;  // (K + sigma^2 I)^-1 y
    Eigen::MatrixXd Kinv_;   // explicit inverse, reused by derivative-variance rows
    double jitter_ = 0.0;
    double log_det_half_ = 0.0;  // sum log L_ii
};

// Fits the GP, caching the factorization, alpha, and the explicit inverse.
// Adaptive jitter: none, then 1e-10*trace/N escalating x10 up to 1e-4*trace/N.
// Exact duplicate inputs with sigma = 0 are a singular Gram matrix and fail fast.
GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
            const KernelHyperparams& hp);

// A model with no observations: predictions are the prior.
GpModel no_data_model(const KernelHyperparams& hp);

GaussianScalar predict(const GpModel& model, const Eigen::VectorXd& x);

// Posterior of d^order f / dx_dim^order at x. Mean uses the differentiated
// cross-covariance row against alpha; variance subtracts the row-weighted
// inverse from the derivative's prior variance.
GaussianScalar predict_derivative(const GpModel& model, const Eigen::VectorXd& x, int order,
                                  int dim);

// Batched derivative posterior over many query points (rows). Reuses the
// cached inverse in one matrix product per batch, which is what makes dense
// space-time grids affordable; agrees with predict_derivative pointwise.
std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_derivative_batch(const GpModel& model,
                                                                     const Eigen::MatrixXd& points,
                                                                     int order, int dim);

double log_marginal_likelihood(const GpModel& model);

// Value and gradient of the log marginal likelihood with respect to
// (log l, log lambda_1..d, log sigma), computed fresh from (inputs, targets, hp).
std::pair<double, Eigen::VectorXd> lml_with_gradient(const Eigen::MatrixXd& inputs,
                                                     const Eigen::VectorXd& targets,
                                                     const KernelHyperparams& hp);

struct OptimizeConfig {
    int restarts = 5;            // perturbed restarts in addition to the init start
    int max_iters = 80;
    double restart_sigma = 0.4;  // stddev of log-space perturbations
    std::uint64_t seed = 12345;
    // Optional box bounds on (l, lambda_1..d, sigma); empty = unbounded.
    std::vector<double> lower;
    std::vector<double> upper;
};

struct OptimizeResult {
    KernelHyperparams hp;
    double lml = 0.0;
    bool improved = false;  // false means no restart beat the init (init returned)
};

// Deterministic multi-start quasi-Newton ascent of the marginal likelihood in
// log-hyperparameter space. The returned point never scores below the init.
OptimizeResult optimize_hyperparameters(const Eigen::MatrixXd& inputs,
                                        const Eigen::VectorXd& targets,
                                        const KernelHyperparams& init, const OptimizeConfig& cfg);

}  // namespace sourcesink
