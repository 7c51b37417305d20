#pragma once

#include <Eigen/Dense>
#include <array>

#include "errors.hpp"

namespace sourcesink {

// Squared-exponential kernel hyperparameters: k(a,b) = l^2 exp(-1/2 (a-b)^T Lambda^-1 (a-b))
// with Lambda = diag(length_scales^2), so the prior variance of df/dx_d is l^2/lambda_d^2.
struct KernelHyperparams {
    double output_scale = 1.0;        // l
    Eigen::VectorXd length_scales;    // lambda_d, one per input dimension
    double noise_std = 0.0;           // sigma

    int dim() const { return static_cast<int>(length_scales.size()); }

    void validate() const {
        if (!(output_scale > 0.0))
            throw InputError("kernel: output_scale must be strictly positive");
        if (length_scales.size() == 0)
            throw InputError("kernel: at least one length scale required");
        for (int d = 0; d < length_scales.size(); ++d)
            if (!(length_scales[d] > 0.0))
                throw InputError("kernel: length scales must be strictly positive");
        if (noise_std < 0.0)
            throw InputError("kernel: noise_std must be non-negative");
    }
};

// Per-argument derivative multi-index (entry d = order of d/dx_d), total order <= 2.
using MultiIndex = Eigen::VectorXi;

inline MultiIndex zero_index(int dim) { return MultiIndex::Zero(dim); }
inline MultiIndex unit_index(int dim, int d, int order = 1) {
    MultiIndex m = MultiIndex::Zero(dim);
    m[d] = order;
    return m;
}

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelHyperparams& hp);

// Gradient with respect to a: -Lambda^-1 (a-b) k(a,b).
Eigen::VectorXd se_kernel_grad(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                               const KernelHyperparams& hp);

// Second derivative with respect to a: Lambda^-1 ((a-b)(a-b)^T Lambda^-1 - I) k(a,b).
Eigen::MatrixXd se_kernel_hess(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                               const KernelHyperparams& hp);

// Exact mixed partial d^|da|/da d^|db|/db of the kernel; per-argument order <= 2.
double se_kernel_cross(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const KernelHyperparams& hp, const MultiIndex& da, const MultiIndex& db);

// Element (i,j) = se_kernel_cross(points_a.row(i), points_b.row(j), hp, da, db).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b,
                              const KernelHyperparams& hp, const MultiIndex& da,
                              const MultiIndex& db);

}  // namespace sourcesink
