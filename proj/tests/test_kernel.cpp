#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sourcesink/errors.hpp"
#include "sourcesink/kernel.hpp"

using namespace sourcesink;

namespace {

KernelHyperparams iso(double l, double lambda, int dim, double noise = 0.0) {
    KernelHyperparams hp;
    hp.output_scale = l;
    hp.length_scales = Eigen::VectorXd::Constant(dim, lambda);
    hp.noise_std = noise;
    return hp;
}

}  // namespace

TEST_SUITE("kernel") {
    TEST_CASE("unit hyperparameters, unit lag") {
        Eigen::VectorXd a(1), b(1);
        a << 0.0;
        b << 1.0;
        CHECK(se_kernel(a, b, iso(1.0, 1.0, 1)) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
    }

    TEST_CASE("pinned anisotropic 3-d value") {
        KernelHyperparams hp;
        hp.output_scale = 0.7;
        hp.length_scales.resize(3);
        hp.length_scales << 1.1, 0.8, 2.0;
        Eigen::VectorXd a(3), b(3);
        a << 0.5, -1.2, 2.0;
        b << -0.3, 0.4, 1.5;
        CHECK(se_kernel(a, b, hp) == doctest::Approx(0.049337901618670785).epsilon(1e-15));
    }

    TEST_CASE("zero lag equals squared output scale") {
        Eigen::VectorXd a(2);
        a << 0.4, -0.9;
        KernelHyperparams hp = iso(1.7, 0.6, 2);
        CHECK(se_kernel(a, a, hp) == 1.7 * 1.7);
    }

    TEST_CASE("symmetry and positivity") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        KernelHyperparams hp;
        hp.output_scale = 1.3;
        hp.length_scales.resize(3);
        hp.length_scales << 0.8, 1.4, 2.2;
        for (int trial = 0; trial < 200; ++trial) {
            Eigen::VectorXd a(3), b(3);
            for (int d = 0; d < 3; ++d) {
                a[d] = u(rng);
                b[d] = u(rng);
            }
            const double kab = se_kernel(a, b, hp);
            CHECK(kab == se_kernel(b, a, hp));
            CHECK(kab > 0.0);
            CHECK(kab <= hp.output_scale * hp.output_scale);
        }
    }

    TEST_CASE("invalid hyperparameters are rejected") {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(2), b = Eigen::VectorXd::Ones(2);
        CHECK_THROWS_AS(se_kernel(a, b, iso(0.0, 1.0, 2)), InputError);
        CHECK_THROWS_AS(se_kernel(a, b, iso(-1.0, 1.0, 2)), InputError);
        CHECK_THROWS_AS(se_kernel(a, b, iso(1.0, 0.0, 2)), InputError);
        KernelHyperparams hp = iso(1.0, 1.0, 2);
        hp.noise_std = -0.1;
        CHECK_THROWS_AS(se_kernel(a, b, hp), InputError);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
        CHECK_THROWS_AS(se_kernel(a, c, iso(1.0, 1.0, 2)), InputError);
    }

    TEST_CASE("gradient closed form") {
        KernelHyperparams hp;
        hp.output_scale = 0.9;
        hp.length_scales.resize(2);
        hp.length_scales << 0.7, 1.9;
        Eigen::VectorXd a(2), b(2);
        a << 0.3, -0.2;
        b << -0.5, 1.1;
        const double k = se_kernel(a, b, hp);
        Eigen::VectorXd g = se_kernel_grad(a, b, hp);
        for (int d = 0; d < 2; ++d) {
            const double lam2 = hp.length_scales[d] * hp.length_scales[d];
            CHECK(g[d] == doctest::Approx(-(a[d] - b[d]) / lam2 * k).epsilon(1e-14));
        }
    }

    TEST_CASE("gradient at zero lag vanishes") {
        Eigen::VectorXd a(3);
        a << 1.0, -2.0, 0.5;
        Eigen::VectorXd g = se_kernel_grad(a, a, iso(1.2, 0.9, 3));
        CHECK(g.norm() == 0.0);
    }

    TEST_CASE("hessian structure at zero lag") {
        KernelHyperparams hp;
        hp.output_scale = 1.4;
        hp.length_scales.resize(2);
        hp.length_scales << 0.8, 1.5;
        Eigen::VectorXd a(2);
        a << 0.2, 0.7;
        Eigen::MatrixXd H = se_kernel_hess(a, a, hp);
        const double l2 = hp.output_scale * hp.output_scale;
        // d^2k/da_i da_j at zero lag: -l^2 / lambda_i^2 on the diagonal.
        CHECK(H(0, 0) == doctest::Approx(-l2 / (0.8 * 0.8)).epsilon(1e-14));
        CHECK(H(1, 1) == doctest::Approx(-l2 / (1.5 * 1.5)).epsilon(1e-14));
        CHECK(H(0, 1) == 0.0);
        CHECK(H(1, 0) == 0.0);
    }

    TEST_CASE("cross derivatives: order bounds and consistency") {
        KernelHyperparams hp;
        hp.output_scale = 1.1;
        hp.length_scales.resize(2);
        hp.length_scales << 1.3, 0.6;
        Eigen::VectorXd a(2), b(2);
        a << 0.4, -1.0;
        b << -0.2, 0.3;

        MultiIndex z = zero_index(2);
        CHECK(se_kernel_cross(a, b, hp, z, z) == se_kernel(a, b, hp));

        // first derivative in a reproduces the gradient
        Eigen::VectorXd g = se_kernel_grad(a, b, hp);
        for (int d = 0; d < 2; ++d)
            CHECK(se_kernel_cross(a, b, hp, unit_index(2, d), z) ==
                  doctest::Approx(g[d]).epsilon(1e-14));

        // derivative in b flips the sign of the lag derivative
        for (int d = 0; d < 2; ++d)
            CHECK(se_kernel_cross(a, b, hp, z, unit_index(2, d)) ==
                  doctest::Approx(-g[d]).epsilon(1e-14));

        // per-argument total order above 2 is rejected
        MultiIndex too_high = zero_index(2);
        too_high[0] = 3;
        CHECK_THROWS_AS(se_kernel_cross(a, b, hp, too_high, z), InputError);
        MultiIndex two_plus_one = zero_index(2);
        two_plus_one[0] = 2;
        two_plus_one[1] = 1;
        CHECK_THROWS_AS(se_kernel_cross(a, b, hp, two_plus_one, z), InputError);
        CHECK_THROWS_AS(se_kernel_cross(a, b, hp, zero_index(3), z), InputError);
        MultiIndex neg = zero_index(2);
        neg[0] = -1;
        CHECK_THROWS_AS(se_kernel_cross(a, b, hp, neg, z), InputError);
    }

    TEST_CASE("argument-exchange symmetry of equal-order cross derivatives") {
        KernelHyperparams hp;
        hp.output_scale = 0.8;
        hp.length_scales.resize(2);
        hp.length_scales << 0.9, 1.7;
        Eigen::VectorXd a(2), b(2);
        a << 1.2, -0.4;
        b << 0.1, 0.6;
        for (int d = 0; d < 2; ++d) {
            MultiIndex e = unit_index(2, d);
            CHECK(se_kernel_cross(a, b, hp, e, e) ==
                  doctest::Approx(se_kernel_cross(b, a, hp, e, e)).epsilon(1e-14));
        }
    }

    TEST_CASE("no-data second-derivative prior is exact") {
        KernelHyperparams hp;
        hp.output_scale = 0.7;
        hp.length_scales.resize(3);
        hp.length_scales << 1.3, 0.9, 2.0;
        Eigen::VectorXd x(3);
        x << 0.2, -0.8, 1.4;
        const double l2 = hp.output_scale * hp.output_scale;
        for (int d = 0; d < 3; ++d) {
            const double lam2 = hp.length_scales[d] * hp.length_scales[d];
            MultiIndex e1 = unit_index(3, d);
            MultiIndex e2 = unit_index(3, d, 2);
            CHECK(se_kernel_cross(x, x, hp, e1, e1) == l2 / lam2);
            CHECK(se_kernel_cross(x, x, hp, e2, e2) == 3.0 * l2 / (lam2 * lam2));
            CHECK(se_kernel_cross(x, x, hp, e1, zero_index(3)) == 0.0);
            CHECK(se_kernel_cross(x, x, hp, e2, e1) == 0.0);
        }
    }

    TEST_CASE("kernel matrix matches pointwise evaluation with derivatives") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        KernelHyperparams hp;
        hp.output_scale = 1.2;
        hp.length_scales.resize(3);
        hp.length_scales << 0.8, 1.1, 1.6;
        Eigen::MatrixXd A(7, 3), B(5, 3);
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            for (int d = 0; d < 3; ++d) A(i, d) = u(rng);
        for (Eigen::Index i = 0; i < B.rows(); ++i)
            for (int d = 0; d < 3; ++d) B(i, d) = u(rng);

        MultiIndex da = unit_index(3, 1, 2);
        MultiIndex db = zero_index(3);
        Eigen::MatrixXd K = kernel_matrix(A, B, hp, da, db);
        REQUIRE(K.rows() == 7);
        REQUIRE(K.cols() == 5);
        for (Eigen::Index i = 0; i < 7; ++i)
            for (Eigen::Index j = 0; j < 5; ++j)
                CHECK(K(i, j) ==
                      doctest::Approx(se_kernel_cross(A.row(i), B.row(j), hp, da, db))
                          .epsilon(1e-14));
    }

    TEST_CASE("gram matrix is positive semi-definite") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        KernelHyperparams hp;
        hp.output_scale = 1.5;
        hp.length_scales.resize(2);
        hp.length_scales << 0.7, 1.3;
        const int n = 200;
        Eigen::MatrixXd X(n, 2);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < 2; ++d) X(i, d) = u(rng);
        MultiIndex z = zero_index(2);
        Eigen::MatrixXd K = kernel_matrix(X, X, hp, z, z);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        const double l2 = hp.output_scale * hp.output_scale;
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * l2);
    }
}
