#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unlearn/certify.hpp"
#include "unlearn/parallel.hpp"
#include "unlearn/sgd_engine.hpp"

namespace unlearn {

// Outcome of one executable check. Exact checks pass iff violations == 0;
// statistical checks pass iff the Monte Carlo mean stays within bound + 3*SE
// at every tested point.
struct CheckReport {
  std::string name;
  bool statistical = false;
  std::int64_t instances = 0;
  std::int64_t violations = 0;
  double worst_margin = 0.0;  // bound - observed (incl. 3*SE for statistical), min over points
  double mc_mean = 0.0;       // at the worst point
  double mc_se = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string note;
};

struct VerifyOptions {
  std::int64_t trials = 10000;  // instances per exact check
  std::int64_t replicas = 500;  // Monte Carlo replicas per statistical check
  std::uint64_t seed = 1;
  ExecMode mode = ExecMode::OpenMP;
};

// ---- exact (zero-violation) checks ------------------------------------------

// Per-step gradient map bounds: expansion (1+eta*L) for smooth losses,
// nonexpansiveness for convex with eta <= 2/L, squared contraction (1-eta*mu)
// for strongly convex with eta <= mu/L^2, and the batch-averaged map
// inheriting the same factor. Out-of-range eta is allowed on purpose: the
// report then records the violations instead of throwing.
CheckReport check_contraction(const LossSpec& spec, double eta, const VerifyOptions& opt);

CheckReport check_projection_nonexpansive(const ProjectionSet& set, const VerifyOptions& opt);

// Exact full-gradient bias inequalities at random points:
// chi-square form ||bias||^2 <= m/(n-m) * mean_z ||grad l(z)||^2 always, and
// the relative form ||bias||^2 <= 1/2 ||grad L_retained||^2 + C/(4B) when
// m/n <= 1/(6B+1). Returns one report per inequality.
std::vector<CheckReport> check_bias_bounds(const Dataset& dataset,
                                           const UnlearnRequest& request,
                                           const LossSpec& spec, const VerifyOptions& opt);

CheckReport check_quadratic_growth(const LossSpec& spec, const Dataset& dataset,
                                   const VerifyOptions& opt);

// Analytic vs central finite-difference gradients (step 1e-5), relative error
// below 1e-5.
CheckReport check_gradient_finite_diff(const LossSpec& spec, const VerifyOptions& opt);

CheckReport check_smoothness(const LossSpec& spec, const VerifyOptions& opt);
CheckReport check_strong_convexity(const LossSpec& spec, const VerifyOptions& opt);
CheckReport check_grad_bound(const LossSpec& spec, const VerifyOptions& opt);
CheckReport check_loss_at_init(const LossSpec& spec, const Vec& theta0,
                               const VerifyOptions& opt);

// Worst-case 1-d Gaussian privacy curve at distance `distance` is at most
// delta for the calibrated sigma.
CheckReport check_gaussian_indistinguishability_1d(double distance, double sigma,
                                                   double epsilon, double delta);

// ---- statistical (Monte Carlo) checks ---------------------------------------

// E||theta_t - theta'_t|| against (2*eta*G*m/n) * (1-gamma^t)/(1-gamma) at
// every step. PSGD only.
CheckReport check_coupled_divergence(const RunConfig& cfg, const Dataset& dataset,
                                     const UnlearnRequest& request, const LossSpec& spec,
                                     const VerifyOptions& opt);

// Mean final distance (or squared distance for second-moment methods) against
// the certified Sigma, plus the Markov tail at radius Sigma/delta (first
// moment) or Sigma/sqrt(delta) (second moment). Returns {sensitivity, tail}.
std::vector<CheckReport> check_end_to_end_sensitivity(
    const RunConfig& cfg, const Dataset& dataset, const UnlearnRequest& request,
    const LossSpec& spec, UnlearnMethod method, FormulaVariant variant,
    double tail_delta, const VerifyOptions& opt);

// E[sum_t ||grad L(theta_t)||^2] <= (2/eta)(L(theta0) - L*) + L*eta*C*T.
CheckReport check_sgd_convergence(const RunConfig& cfg, const Dataset& dataset,
                                  const LossSpec& spec, const VerifyOptions& opt);

// E[L_retained(theta_T)] - L*_retained under biased SGD on the full set.
CheckReport check_biased_descent(const RunConfig& cfg, const Dataset& dataset,
                                 const UnlearnRequest& request, const LossSpec& spec,
                                 const VerifyOptions& opt);

// Sampling-layer distribution checks (4-sigma gates on 10^6 draws).
CheckReport check_batch_uniformity(std::int64_t source_size, std::int64_t draws,
                                   const VerifyOptions& opt);
CheckReport check_coupling_marginal(const Dataset& dataset, const UnlearnRequest& request,
                                    std::int64_t draws, const VerifyOptions& opt);
CheckReport check_coupling_agreement(const Dataset& dataset, const UnlearnRequest& request,
                                     std::int64_t draws, const VerifyOptions& opt);

// ---- helpers -----------------------------------------------------------------

// Deterministic full-batch minimizer (gradient descent, step 1/L) used as the
// oracle for L* when no closed form exists. Exact for Quadratic.
Vec minimize_full_loss(const LossSpec& spec, const Dataset& dataset,
                       const UnlearnRequest* request_or_null, const Vec& init,
                       double grad_tol = 1e-10);

}  // namespace unlearn
