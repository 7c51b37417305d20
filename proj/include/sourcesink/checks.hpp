#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sourcesink {

struct CheckResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;  // worst observed error (relative or absolute per suite)
    std::string detail;
};

// Analytic kernel derivatives (gradient, Hessian, and every mixed
// cross-derivative with per-argument order <= 2) against central finite
// differences, on random hyperparameters and input pairs.
CheckResult check_kernel_derivatives(int pairs, std::uint64_t seed, double rel_tol);

// Log-marginal-likelihood gradient against central finite differences in log
// space on random small problems, plus the never-decreases property of the
// optimizer.
std::vector<CheckResult> check_lml_gradient(int problems, std::uint64_t seed, double rel_tol);

// Closed-form Gaussian KL against Monte-Carlo integration.
CheckResult check_kl_monte_carlo(int pairs, int samples, std::uint64_t seed, double abs_tol);

// Synthetic utility gradient/Laplacian against finite differences of the
// utility itself, and the exact one-step constant-gradient integrator unroll.
std::vector<CheckResult> check_synthetic_world(int points, std::uint64_t seed, double grad_rel_tol,
                                               double lap_rel_tol);

std::vector<CheckResult> run_all_checks(std::uint64_t seed);

}  // namespace sourcesink
