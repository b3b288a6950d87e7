#include "unlearn/certify.hpp"

#include <cmath>
#include <sstream>

namespace unlearn {
namespace {

// Every precondition failure names the violated inequality; a bound is never
// silently produced outside its admissible regime.
void require(bool ok, const std::string& inequality, double lhs, double rhs) {
  if (ok) return;
  std::ostringstream msg;
  msg << "certification precondition violated: " << inequality << " (have " << lhs
      << ", limit " << rhs << ")";
  throw certification_error(msg.str());
}

void validate_counts(std::int64_t n, std::int64_t m, std::int64_t T, std::int64_t K) {
  if (m <= 0 || m >= n) throw config_error("need 0 < m < n");
  if (K < 0 || T < 0 || K > T) throw config_error("need 0 <= K <= T");
}

double std_gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double contraction_factor(ConvexityClass regime, double eta, double L, double mu) {
  switch (regime) {
    case ConvexityClass::StronglyConvex: return std::sqrt(1.0 - eta * mu);
    case ConvexityClass::Convex: return 1.0;
    case ConvexityClass::Nonconvex: return 1.0 + eta * L;
  }
  return 1.0;
}

SensitivityBound sigma_psgd_r2d(ConvexityClass regime, double eta, double L, double mu,
                                double G, std::int64_t n, std::int64_t m,
                                std::int64_t T, std::int64_t K, FormulaVariant variant) {
  validate_counts(n, m, T, K);
  if (!(eta > 0.0) || !std::isfinite(eta)) throw config_error("eta must be positive");
  if (!(L > 0.0)) throw config_error("L must be positive");
  if (!std::isfinite(G) || G < 0.0) {
    throw certification_error(
        "G must be a finite gradient bound over the projection set; "
        "provide a projection ball to certify PSGD");
  }

  SensitivityBound bound;
  bound.moment = MomentOrder::First;
  bound.regime = regime;
  bound.method = UnlearnMethod::PsgdR2d;
  bound.variant = variant;

  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  switch (regime) {
    case ConvexityClass::Nonconvex: {
      const double base = 1.0 + eta * L;
      bound.sigma_bound = 2.0 * G * md *
                          (std::pow(base, static_cast<double>(T)) -
                           std::pow(base, static_cast<double>(K))) /
                          (nd * L);
      break;
    }
    case ConvexityClass::Convex: {
      require(eta <= 2.0 / L, "eta <= 2/L", eta, 2.0 / L);
      bound.sigma_bound = 2.0 * eta * G * md * static_cast<double>(T - K) / nd;
      break;
    }
    case ConvexityClass::StronglyConvex: {
      if (!(mu > 0.0)) throw config_error("strongly convex regime needs mu > 0");
      require(eta <= mu / (L * L), "eta <= mu/L^2", eta, mu / (L * L));
      const double gamma = std::sqrt(1.0 - eta * mu);
      const double decay = std::pow(gamma, static_cast<double>(K)) -
                           std::pow(gamma, static_cast<double>(T));
      const double denom = variant == FormulaVariant::MainText ? mu : 1.0 - gamma;
      bound.sigma_bound = 2.0 * eta * G * md * decay / (nd * denom);
      break;
    }
  }
  return bound;
}

SensitivityBound sigma_sgd_r2d(ConvexityClass regime, double eta, double L, double mu,
                               double B, double C, double ell0, std::int64_t n,
                               std::int64_t m, std::int64_t T, std::int64_t K,
                               FormulaVariant variant) {
  validate_counts(n, m, T, K);
  if (!(eta > 0.0) || !std::isfinite(eta)) throw config_error("eta must be positive");
  if (!(L > 0.0)) throw config_error("L must be positive");
  if (B < 0.0 || C < 0.0 || ell0 < 0.0) {
    throw config_error("B, C, ell0 must be nonnegative");
  }
  if (B > 0.0) require(eta <= 1.0 / (B * L), "eta <= 1/(B*L)", eta, 1.0 / (B * L));

  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  const double span = static_cast<double>(T - K);
  const double bracket =
      3.0 * B * (2.0 * ell0 / eta + L * eta * C * span) * ((3.0 * nd - md) / (nd - md)) +
      6.0 * C * (4.0 * nd - 3.0 * md) / (nd - md);
  const double root = std::sqrt(bracket);

  SensitivityBound bound;
  bound.moment = MomentOrder::First;
  bound.regime = regime;
  bound.method = UnlearnMethod::SgdR2d;
  bound.variant = variant;

  double prefactor = 0.0;
  switch (regime) {
    case ConvexityClass::Nonconvex: {
      const double base = 1.0 + eta * L;
      prefactor = (std::pow(base, static_cast<double>(T)) -
                   std::pow(base, static_cast<double>(K))) /
                  L;
      break;
    }
    case ConvexityClass::Convex: {
      require(eta <= 2.0 / L, "eta <= 2/L", eta, 2.0 / L);
      prefactor = eta * span;
      break;
    }
    case ConvexityClass::StronglyConvex: {
      if (!(mu > 0.0)) throw config_error("strongly convex regime needs mu > 0");
      require(eta <= mu / (L * L), "eta <= mu/L^2", eta, mu / (L * L));
      const double gamma = std::sqrt(1.0 - eta * mu);
      const double decay = std::pow(gamma, static_cast<double>(K)) -
                           std::pow(gamma, static_cast<double>(T));
      prefactor = variant == FormulaVariant::MainText ? decay / mu
                                                      : eta * decay / (1.0 - gamma);
      break;
    }
  }
  bound.sigma_bound = prefactor * root;
  return bound;
}

SensitivityBound sigma_sgd_d2d(double eta, double L, double mu, double B, double C,
                               std::int64_t K) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw config_error("eta must be positive");
  if (!(L > 0.0) || !(mu > 0.0)) throw config_error("need L > 0 and mu > 0");
  if (!(B > 0.0) || C < 0.0) throw config_error("need B > 0 and C >= 0");
  if (K < 0) throw config_error("need K >= 0");
  require(eta <= 1.0 / (B * L), "eta <= 1/(B*L)", eta, 1.0 / (B * L));
  const double r = 1.0 - eta * mu / 2.0;
  require(r >= 0.0, "eta*mu/2 <= 1", eta * mu / 2.0, 1.0);

  const double kd = static_cast<double>(K);
  const double sigma_sq = (5.0 * C / (mu * mu * B)) *
                              (std::pow(r, 2.0 * kd) + 2.0 * std::pow(r, kd)) +
                          4.0 * L * eta * C / (mu * mu);

  SensitivityBound bound;
  bound.sigma_bound = std::sqrt(sigma_sq);
  bound.moment = MomentOrder::Second;
  bound.regime = ConvexityClass::StronglyConvex;
  bound.method = UnlearnMethod::SgdD2d;
  bound.variant = FormulaVariant::MainText;
  return bound;
}

void ensure_d2d_fraction(std::int64_t n, std::int64_t m, double B) {
  if (m <= 0 || m >= n) throw config_error("need 0 < m < n");
  const double frac = static_cast<double>(m) / static_cast<double>(n);
  const double limit = 1.0 / (6.0 * B + 1.0);
  require(frac < limit, "m/n < 1/(6B+1)", frac, limit);
}

D2dHorizon d2d_training_horizon(std::int64_t K, double eta, double mu, double B,
                                double C, double ell0) {
  if (K < 0) throw config_error("need K >= 0");
  if (!(mu > 0.0) || !(B > 0.0) || C < 0.0 || ell0 < 0.0) {
    throw config_error("need mu > 0, B > 0, C >= 0, ell0 >= 0");
  }
  const double r = 1.0 - eta * mu / 2.0;
  if (!(r > 0.0 && r < 1.0)) {
    throw config_error("need 0 < 1 - eta*mu/2 < 1 for the descent factor");
  }
  const double target = 5.0 * C / (4.0 * B * mu);
  if (ell0 <= target) {
    // Training already starts inside the target neighborhood.
    return {K, true};
  }
  if (target == 0.0) {
    throw certification_error(
        "d2d_training_horizon: C = 0 (perfect interpolation) prescribes an "
        "unbounded horizon; pick C > 0 or treat training as converged");
  }
  const double ratio = (std::log(ell0) - std::log(target)) / std::log(1.0 / r);
  const auto extra = static_cast<std::int64_t>(std::ceil(ratio - 1e-9));
  return {K + (extra > 0 ? extra : 0), false};
}

double k_for_sigma_cap(double eta, double mu, double G, std::int64_t n, std::int64_t m,
                       std::int64_t T) {
  const double gamma = std::sqrt(1.0 - eta * mu);
  return 2.0 * eta * G * static_cast<double>(m) *
         (1.0 - std::pow(gamma, static_cast<double>(T))) /
         (static_cast<double>(n) * mu);
}

std::int64_t k_for_sigma(double sigma_target, double eta, double mu, double G,
                         std::int64_t n, std::int64_t m, std::int64_t T) {
  validate_counts(n, m, T, 0);
  if (!(eta > 0.0) || !(mu > 0.0) || !(G > 0.0)) {
    throw config_error("need eta > 0, mu > 0, G > 0");
  }
  if (!(eta * mu < 1.0)) throw config_error("need eta*mu < 1 for the contraction factor");
  if (!(sigma_target >= 0.0)) throw config_error("need sigma_target >= 0");

  const double cap = k_for_sigma_cap(eta, mu, G, n, m, T);
  if (sigma_target >= cap) return 0;

  const double gamma = std::sqrt(1.0 - eta * mu);
  const double x = static_cast<double>(n) * mu * sigma_target /
                       (2.0 * static_cast<double>(m) * eta * G) +
                   std::pow(gamma, static_cast<double>(T));
  auto K = static_cast<std::int64_t>(std::ceil(std::log(x) / std::log(gamma) - 1e-9));
  if (K < 0) K = 0;
  if (K > T) K = T;
  return K;
}

NoiseScale calibrate_noise(const SensitivityBound& bound, const PrivacyBudget& budget) {
  if (!(budget.epsilon > 0.0)) throw config_error("need epsilon > 0");
  if (!(budget.delta > 0.0 && budget.delta < 1.0)) throw config_error("need 0 < delta < 1");
  if (!(bound.sigma_bound >= 0.0) || !std::isfinite(bound.sigma_bound)) {
    throw config_error("sensitivity bound must be finite and nonnegative");
  }
  const double log_term = std::log(1.25 / budget.delta);
  NoiseScale noise;
  if (bound.moment == MomentOrder::First) {
    noise.sigma = bound.sigma_bound * std::sqrt(2.0 * log_term) /
                  (budget.epsilon * budget.delta);
  } else {
    noise.sigma =
        bound.sigma_bound / budget.epsilon * std::sqrt(2.0 * log_term / budget.delta);
  }
  return noise;
}

Vec add_calibrated_noise(const Vec& theta, double sigma, const CouplingStream& stream,
                         Role role, std::int64_t step) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw config_error("noise scale must be finite and nonnegative");
  }
  Vec out = theta;
  if (sigma == 0.0) return out;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const StreamKey key{role, DrawKind::Noise, static_cast<std::uint64_t>(step),
                        static_cast<std::uint64_t>(j)};
    out[j] += sigma * stream.gaussian(key, 0);
  }
  return out;
}

AbcConstants abc_constants(double L, std::int64_t b, double delta_inf,
                           SamplingScheme scheme, std::int64_t n) {
  if (b < 1) throw config_error("batch size must be >= 1");
  if (L < 0.0 || delta_inf < 0.0) throw config_error("need L >= 0, delta_inf >= 0");
  const double bd = static_cast<double>(b);
  AbcConstants abc;
  if (scheme == SamplingScheme::WithReplacement) {
    abc.A = L / bd;
    abc.B = 1.0 - 1.0 / bd;
  } else {
    if (n < 1 || b > n) throw config_error("without replacement needs 1 <= b <= n");
    if (b == n) {
      abc.A = 0.0;
      abc.B = 1.0;
    } else {
      const double nd = static_cast<double>(n);
      abc.A = (nd - bd) * L / (bd * (nd - 1.0));
      abc.B = nd * (bd - 1.0) / (bd * (nd - 1.0));
    }
  }
  abc.C = 2.0 * abc.A * delta_inf;
  return abc;
}

RelativeNoisePair relative_noise_from_abc(const AbcConstants& abc, double mu) {
  if (!(mu > 0.0)) {
    throw config_error("folding the A-term needs mu > 0 (PL/strongly convex)");
  }
  return {abc.B + abc.A / (2.0 * mu), abc.C};
}

double gaussian_privacy_curve(double distance, double sigma, double epsilon) {
  if (distance < 0.0 || sigma < 0.0) throw config_error("need distance, sigma >= 0");
  if (distance == 0.0) return 0.0;
  if (sigma == 0.0) return 1.0;
  const double a = distance / (2.0 * sigma);
  const double b = epsilon * sigma / distance;
  return std_gaussian_cdf(a - b) - std::exp(epsilon) * std_gaussian_cdf(-a - b);
}

std::string method_name(UnlearnMethod method) {
  switch (method) {
    case UnlearnMethod::PsgdR2d: return "psgd_r2d";
    case UnlearnMethod::SgdR2d: return "sgd_r2d";
    case UnlearnMethod::SgdD2d: return "sgd_d2d";
  }
  return "?";
}

UnlearnMethod method_from_name(const std::string& name) {
  if (name == "psgd_r2d") return UnlearnMethod::PsgdR2d;
  if (name == "sgd_r2d") return UnlearnMethod::SgdR2d;
  if (name == "sgd_d2d") return UnlearnMethod::SgdD2d;
  throw config_error("unknown method: " + name);
}

std::string variant_name(FormulaVariant variant) {
  return variant == FormulaVariant::MainText ? "main" : "appendix";
}

FormulaVariant variant_from_name(const std::string& name) {
  if (name == "main") return FormulaVariant::MainText;
  if (name == "appendix") return FormulaVariant::Appendix;
  throw config_error("unknown formula variant: " + name);
}

std::string moment_name(MomentOrder moment) {
  return moment == MomentOrder::First ? "first" : "second";
}

}  // namespace unlearn
