#include "sourcesink/kernel.hpp"

#include <cmath>

namespace sourcesink {

namespace {

void check_dims(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelHyperparams& hp) {
    hp.validate();
    if (a.size() != b.size() || a.size() != hp.length_scales.size())
        throw InputError("kernel: input dimension mismatch");
}

// d^n/dr^n of exp(-s r^2 / 2) divided by the exponential itself, s = 1/lambda^2.
// These are (up to sign bookkeeping) the probabilists' Hermite polynomials in sqrt(s) r.
double lag_factor(int n, double r, double s) {
    switch (n) {
        case 0: return 1.0;
        case 1: return -s * r;
        case 2: return s * s * r * r - s;
        case 3: return 3.0 * s * s * r - s * s * s * r * r * r;
        case 4: {
            double sr2 = s * r * r;
            return s * s * (3.0 - 6.0 * sr2 + sr2 * sr2);
        }
        default:
            throw InputError("kernel: derivative order above 2 per argument unsupported");
    }
}

}  // namespace

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelHyperparams& hp) {
    check_dims(a, b, hp);
    double q = 0.0;
    for (int d = 0; d < a.size(); ++d) {
        double r = (a[d] - b[d]) / hp.length_scales[d];
        q += r * r;
    }
    return hp.output_scale * hp.output_scale * std::exp(-0.5 * q);
}

Eigen::VectorXd se_kernel_grad(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                               const KernelHyperparams& hp) {
    double k = se_kernel(a, b, hp);
    Eigen::VectorXd g(a.size());
    for (int d = 0; d < a.size(); ++d) {
        double lam2 = hp.length_scales[d] * hp.length_scales[d];
        g[d] = -(a[d] - b[d]) / lam2 * k;
    }
    return g;
}

Eigen::MatrixXd se_kernel_hess(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                               const KernelHyperparams& hp) {
    double k = se_kernel(a, b, hp);
    const int n = static_cast<int>(a.size());
    Eigen::MatrixXd h(n, n);
    for (int i = 0; i < n; ++i) {
        double si = 1.0 / (hp.length_scales[i] * hp.length_scales[i]);
        double ri = a[i] - b[i];
        for (int j = 0; j <= i; ++j) {
            double sj = 1.0 / (hp.length_scales[j] * hp.length_scales[j]);
            double rj = a[j] - b[j];
            double v = (i == j) ? (si * si * ri * ri - si) * k : si * ri * sj * rj * k;
            h(i, j) = v;
            h(j, i) = v;
        }
    }
    return h;
}

double se_kernel_cross(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const KernelHyperparams& hp, const MultiIndex& da, const MultiIndex& db) {
    check_dims(a, b, hp);
    if (da.size() != a.size() || db.size() != a.size())
        throw InputError("kernel: multi-index dimension mismatch");
    int ta = 0, tb = 0;
    for (int d = 0; d < da.size(); ++d) {
        if (da[d] < 0 || db[d] < 0) throw InputError("kernel: negative derivative order");
        ta += da[d];
        tb += db[d];
    }
    if (ta > 2 || tb > 2) throw InputError("kernel: derivative order above 2 per argument unsupported");

    // Zero lag reduces to exact rational forms (odd total order vanishes,
    // order 2 gives -l^2/lambda^2, order 4 gives 3 l^2/lambda^4); computing them
    // as a single division keeps no-data prior variances exact.
    if ((a - b).cwiseAbs().maxCoeff() == 0.0) {
        double coef = (tb % 2 == 0) ? 1.0 : -1.0;
        double denom = 1.0;
        for (int d = 0; d < da.size(); ++d) {
            const double lam2 = hp.length_scales[d] * hp.length_scales[d];
            switch (da[d] + db[d]) {
                case 0: break;
                case 1:
                case 3: return 0.0;
                case 2:
                    coef = -coef;
                    denom *= lam2;
                    break;
                case 4:
                    coef *= 3.0;
                    denom *= lam2 * lam2;
                    break;
                default: throw InputError("kernel: derivative order above 4 per dimension");
            }
        }
        return coef * (hp.output_scale * hp.output_scale) / denom;
    }

    // Each d/db flips the sign of the corresponding lag derivative; the rest factorizes
    // per dimension because the kernel is a product over dimensions.
    double k = se_kernel(a, b, hp);
    double factor = (tb % 2 == 0) ? 1.0 : -1.0;
    for (int d = 0; d < da.size(); ++d) {
        int n = da[d] + db[d];
        if (n == 0) continue;
        double s = 1.0 / (hp.length_scales[d] * hp.length_scales[d]);
        factor *= lag_factor(n, a[d] - b[d], s);
    }
    return factor * k;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b,
                              const KernelHyperparams& hp, const MultiIndex& da,
                              const MultiIndex& db) {
    hp.validate();
    const int dim = hp.dim();
    if (points_a.cols() != dim || points_b.cols() != dim || da.size() != dim || db.size() != dim)
        throw InputError("kernel: input dimension mismatch");
    int ta = 0, tb = 0;
    for (int d = 0; d < dim; ++d) {
        if (da[d] < 0 || db[d] < 0) throw InputError("kernel: negative derivative order");
        ta += da[d];
        tb += db[d];
    }
    if (ta > 2 || tb > 2)
        throw InputError("kernel: derivative order above 2 per argument unsupported");

    const double l2 = hp.output_scale * hp.output_scale;
    const double sign = (tb % 2 == 0) ? 1.0 : -1.0;
    Eigen::VectorXd s(dim);
    for (int d = 0; d < dim; ++d) s[d] = 1.0 / (hp.length_scales[d] * hp.length_scales[d]);

    // Hot path for batched rows: same arithmetic as se_kernel_cross with the
    // validation and per-dimension bookkeeping hoisted out of the loop.
    Eigen::MatrixXd K(points_a.rows(), points_b.rows());
    for (Eigen::Index i = 0; i < points_a.rows(); ++i)
        for (Eigen::Index j = 0; j < points_b.rows(); ++j) {
            double q = 0.0;
            for (int d = 0; d < dim; ++d) {
                double r = (points_a(i, d) - points_b(j, d)) / hp.length_scales[d];
                q += r * r;
            }
            double factor = sign;
            for (int d = 0; d < dim; ++d) {
                int n = da[d] + db[d];
                if (n != 0) factor *= lag_factor(n, points_a(i, d) - points_b(j, d), s[d]);
            }
            K(i, j) = factor * (l2 * std::exp(-0.5 * q));
        }
    return K;
}

}  // namespace sourcesink
