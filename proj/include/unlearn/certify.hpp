#pragma once

#include <cstdint>
#include <string>

#include "unlearn/model_zoo.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;  // per-branch delta; the final guarantee is (epsilon, 2*delta)
};

enum class MomentOrder { First, Second };
enum class UnlearnMethod { PsgdR2d, SgdR2d, SgdD2d };
// The strongly convex sensitivity prefactor appears in two forms: the main
// statements use eta/mu, the derivations use eta/(1-gamma). They differ by a
// bounded factor; both are available and Appendix is the default.
enum class FormulaVariant { MainText, Appendix };

struct SensitivityBound {
  double sigma_bound = 0.0;  // Sigma
  MomentOrder moment = MomentOrder::First;
  ConvexityClass regime = ConvexityClass::StronglyConvex;
  UnlearnMethod method = UnlearnMethod::PsgdR2d;
  FormulaVariant variant = FormulaVariant::Appendix;
};

struct NoiseScale {
  double sigma = 0.0;
};

// Contraction factor of the per-step map: sqrt(1-eta*mu) strongly convex,
// 1 convex, 1+eta*L general smooth.
double contraction_factor(ConvexityClass regime, double eta, double L, double mu);

// Sensitivity for rewind-style unlearning with projected SGD. First-moment
// bound on E||theta'_T - theta''_K||.
SensitivityBound sigma_psgd_r2d(ConvexityClass regime, double eta, double L, double mu,
                                double G, std::int64_t n, std::int64_t m,
                                std::int64_t T, std::int64_t K,
                                FormulaVariant variant = FormulaVariant::Appendix);

// Sensitivity for rewind-style unlearning with unprojected SGD; relies on the
// relative noise bound (B, C) and the loss bound at initialization.
SensitivityBound sigma_sgd_r2d(ConvexityClass regime, double eta, double L, double mu,
                               double B, double C, double ell0, std::int64_t n,
                               std::int64_t m, std::int64_t T, std::int64_t K,
                               FormulaVariant variant = FormulaVariant::Appendix);

// Sensitivity for descend-style unlearning with SGD on strongly convex losses.
// Second-moment bound; callers must separately check the unlearned-fraction
// condition (ensure_d2d_fraction).
SensitivityBound sigma_sgd_d2d(double eta, double L, double mu, double B, double C,
                               std::int64_t K);

// Throws unless m/n < 1/(6B+1).
void ensure_d2d_fraction(std::int64_t n, std::int64_t m, double B);

struct D2dHorizon {
  std::int64_t T = 0;
  // Set when loss_at_init is already below the target neighborhood, in which
  // case T = K and no extra training is prescribed.
  bool already_converged = false;
};

// Training length prescribed for descend-style unlearning with K unlearning
// steps: T = K + ceil((log ell0 - log(5C/(4*B*mu))) / log(1/(1-eta*mu/2))).
D2dHorizon d2d_training_horizon(std::int64_t K, double eta, double mu, double B,
                                double C, double ell0);

// Largest Sigma reachable at K = 0 for strongly convex rewind unlearning.
double k_for_sigma_cap(double eta, double mu, double G, std::int64_t n, std::int64_t m,
                       std::int64_t T);

// Smallest K whose strongly convex sensitivity is at most sigma_target
// (main-text formula, which this inversion is exact for). Returns 0 when the
// target is above the K=0 cap.
std::int64_t k_for_sigma(double sigma_target, double eta, double mu, double G,
                         std::int64_t n, std::int64_t m, std::int64_t T);

// Gaussian scale of the relaxed mechanism. First moment:
// sigma = Sigma*sqrt(2*log(1.25/delta))/(eps*delta); second moment:
// sigma = (Sigma/eps)*sqrt(2*log(1.25/delta)/delta). The resulting guarantee
// is (eps, 2*delta).
NoiseScale calibrate_noise(const SensitivityBound& bound, const PrivacyBudget& budget);

// theta + xi with i.i.d. N(0, sigma^2) coordinates keyed by (role, Noise, step).
Vec add_calibrated_noise(const Vec& theta, double sigma, const CouplingStream& stream,
                         Role role, std::int64_t step);

enum class SamplingScheme { WithReplacement, WithoutReplacement };

struct AbcConstants {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
};

// Second-moment constants of the batch gradient estimator, determined by the
// sampling scheme:
//   with replacement     A = L/b,             B = 1 - 1/b,
//   without replacement  A = (n-b)L/(b(n-1)), B = n(b-1)/(b(n-1)),
// and C = 2*A*Delta_inf for both.
AbcConstants abc_constants(double L, std::int64_t b, double delta_inf,
                           SamplingScheme scheme, std::int64_t n = 0);

struct RelativeNoisePair {
  double B = 0.0;
  double C = 0.0;
};

// Folds the A-term of the ABC bound into B via the PL inequality
// (A*(loss gap) <= (A/(2*mu))*||grad||^2): B_eff = B + A/(2*mu), C_eff = C.
// Exact for strongly convex and PL losses.
RelativeNoisePair relative_noise_from_abc(const AbcConstants& abc, double mu);

// Worst-case privacy curve value sup_S (P[X in S] - e^eps * P[Y in S]) for two
// 1-d Gaussians with means `distance` apart and common scale `sigma`.
double gaussian_privacy_curve(double distance, double sigma, double epsilon);

std::string method_name(UnlearnMethod method);
UnlearnMethod method_from_name(const std::string& name);
std::string variant_name(FormulaVariant variant);
FormulaVariant variant_from_name(const std::string& name);
std::string moment_name(MomentOrder moment);

}  // namespace unlearn
