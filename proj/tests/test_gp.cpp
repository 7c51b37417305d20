#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sourcesink/errors.hpp"
#include "sourcesink/gp.hpp"

using namespace sourcesink;

namespace {

KernelHyperparams make_hp(double l, std::initializer_list<double> lambdas, double noise) {
    KernelHyperparams hp;
    hp.output_scale = l;
    hp.length_scales.resize(static_cast<Eigen::Index>(lambdas.size()));
    Eigen::Index i = 0;
    for (double v : lambdas) hp.length_scales[i++] = v;
    hp.noise_std = noise;
    return hp;
}

}  // namespace

TEST_SUITE("gp") {
    TEST_CASE("noiseless single point interpolates exactly") {
        Eigen::MatrixXd X(1, 1);
        X << 0.5;
        Eigen::VectorXd y(1);
        y << 2.0;
        GpModel m = fit(X, y, make_hp(1.0, {1.0}, 0.0));
        GaussianScalar p = predict(m, X.row(0));
        CHECK(p.mean == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(p.variance <= 1e-9);
    }

    TEST_CASE("far query reverts to the prior") {
        Eigen::MatrixXd X(2, 1);
        X << 0.0, 1.0;
        Eigen::VectorXd y(2);
        y << 1.0, -1.0;
        KernelHyperparams hp = make_hp(1.3, {0.5}, 0.1);
        GpModel m = fit(X, y, hp);
        Eigen::VectorXd q(1);
        q << 100.0;
        GaussianScalar p = predict(m, q);
        CHECK(std::abs(p.mean) < 1e-12);
        CHECK(p.variance == doctest::Approx(1.3 * 1.3).epsilon(1e-12));
    }

    TEST_CASE("duplicate inputs with zero noise fail fast") {
        Eigen::MatrixXd X(2, 1);
        X << 0.7, 0.7;
        Eigen::VectorXd y(2);
        y << 1.0, 2.0;
        CHECK_THROWS_AS(fit(X, y, make_hp(1.0, {1.0}, 0.0)), NumericalError);
    }

    TEST_CASE("duplicate inputs with noise are fine") {
        Eigen::MatrixXd X(2, 1);
        X << 0.7, 0.7;
        Eigen::VectorXd y(2);
        y << 1.0, 2.0;
        GpModel m = fit(X, y, make_hp(1.0, {1.0}, 0.3));
        GaussianScalar p = predict(m, X.row(0));
        CHECK(p.mean == doctest::Approx(1.5).epsilon(0.05));
    }

    TEST_CASE("shape mismatches are rejected") {
        Eigen::MatrixXd X(3, 2);
        X.setZero();
        X.col(0) << 0, 1, 2;
        Eigen::VectorXd y2(2);
        y2.setZero();
        CHECK_THROWS_AS(fit(X, y2, make_hp(1.0, {1.0, 1.0}, 0.1)), InputError);
        CHECK_THROWS_AS(fit(X, Eigen::VectorXd::Zero(3), make_hp(1.0, {1.0}, 0.1)), InputError);
        GpModel m = fit(X, Eigen::VectorXd::Zero(3), make_hp(1.0, {1.0, 1.0}, 0.1));
        CHECK_THROWS_AS(predict(m, Eigen::VectorXd::Zero(3)), InputError);
    }

    TEST_CASE("no-data model returns the derivative prior exactly") {
        KernelHyperparams hp = make_hp(0.7, {1.3, 0.9}, 0.0);
        GpModel m = no_data_model(hp);
        Eigen::VectorXd x(2);
        x << 0.3, -0.5;
        GaussianScalar p = predict(m, x);
        CHECK(p.mean == 0.0);
        CHECK(p.variance == 0.7 * 0.7);
        GaussianScalar d1 = predict_derivative(m, x, 1, 0);
        CHECK(d1.mean == 0.0);
        CHECK(d1.variance == (0.7 * 0.7) / (1.3 * 1.3));
        GaussianScalar d2 = predict_derivative(m, x, 2, 1);
        CHECK(d2.mean == 0.0);
        CHECK(d2.variance == 3.0 * (0.7 * 0.7) / ((0.9 * 0.9) * (0.9 * 0.9)));
    }

    TEST_CASE("second derivative of a parabola") {
        const int n = 30;
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            const double t = -1.0 + 2.0 * i / (n - 1);
            X(i, 0) = t;
            y[i] = t * t;
        }
        GpModel m = fit(X, y, make_hp(2.0, {1.0}, 1e-4));
        Eigen::VectorXd q(1);
        q << 0.0;
        GaussianScalar d2 = predict_derivative(m, q, 2, 0);
        CHECK(d2.mean == doctest::Approx(2.0).epsilon(0.05));
        CHECK(d2.variance >= 0.0);
    }

    TEST_CASE("derivative order and dimension are validated") {
        GpModel m = no_data_model(make_hp(1.0, {1.0, 1.0}, 0.0));
        Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
        CHECK_THROWS_AS(predict_derivative(m, x, 0, 0), InputError);
        CHECK_THROWS_AS(predict_derivative(m, x, 3, 0), InputError);
        CHECK_THROWS_AS(predict_derivative(m, x, 1, 2), InputError);
        CHECK_THROWS_AS(predict_derivative(m, x, 1, -1), InputError);
    }

    TEST_CASE("batched derivative prediction matches pointwise") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        const int n = 40;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = u(rng);
            X(i, 1) = u(rng);
            y[i] = std::sin(X(i, 0)) * std::cos(X(i, 1));
        }
        GpModel m = fit(X, y, make_hp(1.0, {0.9, 1.1}, 0.05));
        Eigen::MatrixXd Q(15, 2);
        for (Eigen::Index i = 0; i < Q.rows(); ++i) {
            Q(i, 0) = u(rng);
            Q(i, 1) = u(rng);
        }
        auto [mean, var] = predict_derivative_batch(m, Q, 1, 0);
        REQUIRE(mean.size() == Q.rows());
        for (Eigen::Index i = 0; i < Q.rows(); ++i) {
            GaussianScalar p = predict_derivative(m, Q.row(i), 1, 0);
            CHECK(mean[i] == doctest::Approx(p.mean).epsilon(1e-10));
            CHECK(var[i] == doctest::Approx(p.variance).epsilon(1e-10));
        }
    }

    TEST_CASE("single-point log marginal likelihood pin") {
        Eigen::MatrixXd X(1, 1);
        X << 0.0;
        Eigen::VectorXd y(1);
        y << 0.0;
        KernelHyperparams hp = make_hp(1.3, {1.0}, 0.2);
        // -0.5 log(l^2 + sigma^2) - 0.5 log(2 pi) for a zero target.
        CHECK(log_marginal_likelihood(fit(X, y, hp)) ==
              doctest::Approx(-1.1929992374595164).epsilon(1e-14));
    }

    TEST_CASE("likelihood gradient matches finite differences") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int n = 12;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = u(rng);
            X(i, 1) = u(rng);
            y[i] = gauss(rng);
        }
        KernelHyperparams hp = make_hp(0.9, {1.2, 0.8}, 0.3);
        auto [lml, grad] = lml_with_gradient(X, y, hp);
        REQUIRE(grad.size() == 4);
        const double h = 1e-6;
        auto eval = [&](int j, double delta) {
            KernelHyperparams q = hp;
            if (j == 0)
                q.output_scale *= std::exp(delta);
            else if (j <= 2)
                q.length_scales[j - 1] *= std::exp(delta);
            else
                q.noise_std *= std::exp(delta);
            return lml_with_gradient(X, y, q).first;
        };
        for (int j = 0; j < 4; ++j) {
            const double fd = (eval(j, h) - eval(j, -h)) / (2.0 * h);
            CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }

    TEST_CASE("optimizer never lands below the initial likelihood") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int n = 15;
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = u(rng);
            y[i] = std::sin(1.5 * X(i, 0)) + 0.1 * gauss(rng);
        }
        KernelHyperparams init = make_hp(1.0, {1.0}, 0.2);
        const double lml0 = lml_with_gradient(X, y, init).first;
        OptimizeConfig cfg;
        cfg.restarts = 2;
        OptimizeResult res = optimize_hyperparameters(X, y, init, cfg);
        CHECK(res.lml >= lml0 - 1e-9);
        if (res.improved) CHECK(res.lml > lml0);
    }

    TEST_CASE("optimizer recovers a known length scale") {
        // Data drawn deterministically from a smooth function with a clear scale.
        const int n = 40;
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            const double t = -3.0 + 6.0 * i / (n - 1);
            X(i, 0) = t;
            y[i] = std::sin(t);
        }
        OptimizeConfig cfg;
        cfg.restarts = 3;
        OptimizeResult res = optimize_hyperparameters(X, y, make_hp(0.5, {0.3}, 0.1), cfg);
        CHECK(res.hp.length_scales[0] > 0.5);
        CHECK(res.hp.length_scales[0] < 5.0);
        CHECK(res.hp.noise_std < 0.05);
    }

    TEST_CASE("optimization is deterministic for a fixed seed") {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        const int n = 12;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = u(rng);
            X(i, 1) = u(rng);
            y[i] = X(i, 0) * X(i, 1);
        }
        KernelHyperparams init = make_hp(1.0, {1.0, 1.0}, 0.2);
        OptimizeConfig cfg;
        cfg.restarts = 3;
        cfg.seed = 99;
        OptimizeResult a = optimize_hyperparameters(X, y, init, cfg);
        OptimizeResult b = optimize_hyperparameters(X, y, init, cfg);
        CHECK(a.lml == b.lml);
        CHECK(a.hp.output_scale == b.hp.output_scale);
        CHECK(a.hp.length_scales == b.hp.length_scales);
        CHECK(a.hp.noise_std == b.hp.noise_std);
    }

    TEST_CASE("box bounds are respected") {
        const int n = 20;
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            const double t = i * 0.3;
            X(i, 0) = t;
            y[i] = std::cos(t);
        }
        OptimizeConfig cfg;
        cfg.restarts = 2;
        cfg.lower = {0.5, 0.8, 0.05};
        cfg.upper = {2.0, 1.2, 0.5};
        OptimizeResult res = optimize_hyperparameters(X, y, make_hp(1.0, {1.0}, 0.1), cfg);
        CHECK(res.hp.output_scale >= 0.5 - 1e-12);
        CHECK(res.hp.output_scale <= 2.0 + 1e-12);
        CHECK(res.hp.length_scales[0] >= 0.8 - 1e-12);
        CHECK(res.hp.length_scales[0] <= 1.2 + 1e-12);
        CHECK(res.hp.noise_std >= 0.05 - 1e-12);
        CHECK(res.hp.noise_std <= 0.5 + 1e-12);
    }

    TEST_CASE("posterior variance never goes negative") {
        std::mt19937_64 rng(53);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const int n = 60;
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = u(rng);
            y[i] = X(i, 0);
        }
        GpModel m = fit(X, y, make_hp(1.0, {2.0}, 1e-5));
        for (int i = 0; i < 100; ++i) {
            Eigen::VectorXd q(1);
            q << u(rng);
            CHECK(predict(m, q).variance >= 0.0);
            CHECK(predict_derivative(m, q, 2, 0).variance >= 0.0);
        }
    }
}
