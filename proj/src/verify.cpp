#include "unlearn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace unlearn {
namespace {

constexpr double kRelSlack = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Each check draws from its own replica id so probe values never collide
// across checks run under one seed.
enum ProbeChannel : std::uint32_t {
  kContraction = 101,
  kProjection = 102,
  kBias = 103,
  kGrowth = 104,
  kFiniteDiff = 105,
  kSmoothness = 106,
  kStrongConvexity = 107,
  kGradBound = 108,
  kLossAtInit = 109,
  kUniformity = 110,
  kMarginal = 111,
  kAgreement = 112,
};

struct Probe {
  CouplingStream stream;
  int d;
  double data_radius;

  Probe(std::uint64_t seed, std::uint32_t channel, int dim, double radius)
      : stream(seed, channel), d(dim), data_radius(radius) {}

  Vec gaussian_vec(std::uint64_t instance, std::uint64_t slot_base, double scale) const {
    Vec v(d);
    for (int j = 0; j < d; ++j) {
      const StreamKey key{Role::Train, DrawKind::Probe, instance,
                          slot_base + static_cast<std::uint64_t>(j)};
      v[j] = scale * stream.gaussian(key, 0);
    }
    return v;
  }

  // Uniform point in the ball of `radius` around `center`; consumes d+1 slots.
  Vec ball_point(std::uint64_t instance, std::uint64_t slot_base, const Vec& center,
                 double radius) const {
    Vec g = gaussian_vec(instance, slot_base, 1.0);
    const StreamKey ukey{Role::Train, DrawKind::Probe, instance,
                         slot_base + static_cast<std::uint64_t>(d)};
    const double u = stream.uniform01(ukey, 0);
    const double norm = g.norm();
    const double r = radius * std::pow(u, 1.0 / d);
    if (norm == 0.0) return center;
    return center + g * (r / norm);
  }

  // Random point of the data domain; consumes d+2 slots.
  Sample domain_sample(std::uint64_t instance, std::uint64_t slot_base) const {
    Sample z;
    z.x = ball_point(instance, slot_base, Vec::Zero(d), data_radius);
    const StreamKey lkey{Role::Train, DrawKind::Probe, instance,
                         slot_base + static_cast<std::uint64_t>(d) + 1};
    z.y = (stream.word(lkey, 0) & 1ULL) ? 1.0 : -1.0;
    return z;
  }
};

struct ExactTally {
  std::int64_t violations = 0;
  double worst_margin = kInf;

  void add(double margin, double tol) {
    if (margin < worst_margin) worst_margin = margin;
    if (margin < -tol) ++violations;
  }
};

CheckReport exact_report(std::string name, std::int64_t instances, const ExactTally& tally,
                         std::string note = {}) {
  CheckReport rep;
  rep.name = std::move(name);
  rep.instances = instances;
  rep.violations = tally.violations;
  rep.worst_margin = tally.worst_margin;
  rep.pass = tally.violations == 0;
  rep.note = std::move(note);
  return rep;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Reduction in index order; bitwise reproducible for a fixed seed and replica
// count regardless of how the replicas were scheduled.
MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const double n = static_cast<double>(xs.size());
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / n;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

double grad_map_batch(const LossSpec& spec, const std::vector<Sample>& batch,
                      const Vec& theta, double eta, Vec& out) {
  out = Vec::Zero(theta.size());
  for (const Sample& z : batch) accumulate_grad(spec, z, theta, 1.0, out);
  out = theta - (eta / static_cast<double>(batch.size())) * out;
  return 0.0;
}

}  // namespace

Vec minimize_full_loss(const LossSpec& spec, const Dataset& dataset,
                       const UnlearnRequest* request_or_null, const Vec& init,
                       double grad_tol) {
  if (spec.family == Family::Quadratic) {
    // Closed form: the minimizer of the averaged quadratic is the sample mean.
    Vec mean = Vec::Zero(init.size());
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < dataset.size(); ++i) {
      if (request_or_null && request_or_null->contains(i)) continue;
      mean += dataset.samples[i].x;
      ++count;
    }
    return mean / static_cast<double>(count);
  }
  Vec theta = init;
  const double step = 1.0 / spec.smoothness_L;
  for (std::int64_t it = 0; it < 2000000; ++it) {
    const Vec g = request_or_null
                      ? full_gradient_retained(spec, dataset, *request_or_null, theta)
                      : full_gradient(spec, dataset, theta);
    if (g.norm() <= grad_tol) return theta;
    theta -= step * g;
  }
  throw config_error("minimize_full_loss: gradient tolerance not reached; "
                     "no finite minimizer available for this instance");
}

CheckReport check_contraction(const LossSpec& spec, double eta, const VerifyOptions& opt) {
  const Probe probe(opt.seed, kContraction, spec.dimension, spec.data_radius);
  const double gamma =
      contraction_factor(spec.convexity_class, eta, spec.smoothness_L,
                         spec.strong_convexity_mu);
  const double scale = 2.0 * std::max(1.0, spec.data_radius);

  std::vector<double> margins(opt.trials, kInf);
  std::vector<std::int64_t> faults(opt.trials, 0);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const auto inst = static_cast<std::uint64_t>(i);
    const std::uint64_t zw = static_cast<std::uint64_t>(spec.dimension) + 2;
    const Vec theta1 = probe.gaussian_vec(inst, 0, scale);
    // A sprinkle of coincident pairs keeps the zero-distance edge covered.
    const Vec theta2 = (i % 1000 == 0)
                           ? theta1
                           : probe.gaussian_vec(inst, spec.dimension, scale);
    const Sample z = probe.domain_sample(inst, 2 * spec.dimension);
    std::vector<Sample> batch;
    batch.reserve(8);
    for (int j = 0; j < 8; ++j) {
      batch.push_back(probe.domain_sample(inst, 2 * spec.dimension + (j + 1) * zw));
    }

    const Vec d1 = theta1 - eta * eval_grad(spec, z, theta1);
    const Vec d2 = theta2 - eta * eval_grad(spec, z, theta2);
    Vec b1, b2;
    grad_map_batch(spec, batch, theta1, eta, b1);
    grad_map_batch(spec, batch, theta2, eta, b2);

    const double dist = (theta1 - theta2).norm();
    double margin_single;
    double margin_batch;
    double tol;
    if (spec.convexity_class == ConvexityClass::StronglyConvex) {
      const double bound_sq = (1.0 - eta * spec.strong_convexity_mu) * dist * dist;
      margin_single = bound_sq - (d1 - d2).squaredNorm();
      // Batch-averaged map inherits gamma in the norm (not squared) form.
      margin_batch = gamma * dist - (b1 - b2).norm();
      tol = kRelSlack * std::max(1.0, bound_sq);
    } else {
      const double bound = gamma * dist;
      margin_single = bound - (d1 - d2).norm();
      margin_batch = bound - (b1 - b2).norm();
      tol = kRelSlack * std::max(1.0, bound);
    }
    const double margin = std::min(margin_single, margin_batch);
    margins[i] = margin;
    faults[i] = margin < -tol ? 1 : 0;
  });

  ExactTally tally;
  for (std::int64_t i = 0; i < opt.trials; ++i) {
    if (margins[i] < tally.worst_margin) tally.worst_margin = margins[i];
    tally.violations += faults[i];
  }
  return exact_report("contraction[" + family_name(spec.family) + "," +
                          convexity_name(spec.convexity_class) + "]",
                      opt.trials, tally);
}

CheckReport check_projection_nonexpansive(const ProjectionSet& set, const VerifyOptions& opt) {
  const Probe probe(opt.seed, kProjection, static_cast<int>(set.center.size()),
                    set.radius);
  const int d = static_cast<int>(set.center.size());
  std::vector<double> margins(opt.trials, kInf);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const auto inst = static_cast<std::uint64_t>(i);
    const Vec u = set.center + probe.gaussian_vec(inst, 0, 3.0 * set.radius);
    const Vec v = set.center + probe.gaussian_vec(inst, d, 3.0 * set.radius);
    margins[i] = (u - v).norm() - (project(set, u) - project(set, v)).norm();
  });
  ExactTally tally;
  for (double m : margins) tally.add(m, kRelSlack);
  return exact_report("projection_nonexpansive", opt.trials, tally);
}

std::vector<CheckReport> check_bias_bounds(const Dataset& dataset,
                                           const UnlearnRequest& request,
                                           const LossSpec& spec, const VerifyOptions& opt) {
  const Probe probe(opt.seed, kBias, spec.dimension, spec.data_radius);
  const std::int64_t n = dataset.size();
  const std::int64_t m = request.m();
  const double chi2 = chi_square_empirical(n, m);
  const bool relative_applies =
      spec.noise_B > 0.0 && static_cast<double>(m) / static_cast<double>(n) <=
                                1.0 / (6.0 * spec.noise_B + 1.0);
  const double scale = 3.0 * std::max(1.0, spec.data_radius);

  std::vector<double> margins_chi(opt.trials, kInf);
  std::vector<double> margins_rel(opt.trials, kInf);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const Vec theta = probe.gaussian_vec(static_cast<std::uint64_t>(i), 0, scale);
    const Vec bias = unlearning_bias(dataset, request, spec, theta);
    const double lhs = bias.squaredNorm();

    double mean_sq = 0.0;
    for (const Sample& z : dataset.samples) {
      mean_sq += eval_grad(spec, z, theta).squaredNorm();
    }
    mean_sq /= static_cast<double>(n);
    margins_chi[i] = chi2 * mean_sq - lhs;

    if (relative_applies) {
      const double rhs =
          0.5 * full_gradient_retained(spec, dataset, request, theta).squaredNorm() +
          spec.noise_C / (4.0 * spec.noise_B);
      margins_rel[i] = rhs - lhs;
    }
  });

  std::vector<CheckReport> reports;
  ExactTally chi_tally;
  for (double m2 : margins_chi) chi_tally.add(m2, kRelSlack);
  reports.push_back(exact_report("bias_chi_square", opt.trials, chi_tally));
  if (relative_applies) {
    ExactTally rel_tally;
    for (double m2 : margins_rel) rel_tally.add(m2, kRelSlack);
    reports.push_back(exact_report("bias_relative", opt.trials, rel_tally));
  }
  return reports;
}

CheckReport check_quadratic_growth(const LossSpec& spec, const Dataset& dataset,
                                   const VerifyOptions& opt) {
  if (spec.convexity_class != ConvexityClass::StronglyConvex) {
    throw config_error("quadratic growth check needs a strongly convex family");
  }
  const Probe probe(opt.seed, kGrowth, spec.dimension, spec.data_radius);
  const Vec theta_star =
      minimize_full_loss(spec, dataset, nullptr, Vec::Zero(spec.dimension));
  const double loss_star = full_loss(spec, dataset, theta_star);
  const double mu = spec.strong_convexity_mu;
  const double scale = 3.0 * std::max(1.0, spec.data_radius);

  std::vector<double> margins(opt.trials, kInf);
  std::vector<double> tols(opt.trials, 0.0);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const Vec theta = probe.gaussian_vec(static_cast<std::uint64_t>(i), 0, scale);
    const double gap = full_loss(spec, dataset, theta) - loss_star;
    const double rhs = 0.5 * mu * (theta - theta_star).squaredNorm();
    margins[i] = gap - rhs;
    tols[i] = 1e-9 * std::max(1.0, rhs);
  });
  ExactTally tally;
  for (std::int64_t i = 0; i < opt.trials; ++i) tally.add(margins[i], tols[i]);
  return exact_report(
      "quadratic_growth[" + family_name(spec.family) + "]", opt.trials, tally,
      spec.family == Family::Quadratic ? "" : "theta* from deterministic minimizer (grad tol 1e-10)");
}

CheckReport check_gradient_finite_diff(const LossSpec& spec, const VerifyOptions& opt) {
  const Probe probe(opt.seed, kFiniteDiff, spec.dimension, spec.data_radius);
  const double h = 1e-5;
  std::vector<double> margins(opt.trials, kInf);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const auto inst = static_cast<std::uint64_t>(i);
    const Vec theta = probe.gaussian_vec(inst, 0, 2.0);
    const Sample z = probe.domain_sample(inst, spec.dimension);
    const Vec g = eval_grad(spec, z, theta);
    Vec fd(spec.dimension);
    for (int j = 0; j < spec.dimension; ++j) {
      Vec plus = theta;
      Vec minus = theta;
      plus[j] += h;
      minus[j] -= h;
      fd[j] = (eval_loss(spec, z, plus) - eval_loss(spec, z, minus)) / (2.0 * h);
    }
    const double rel = (fd - g).norm() / std::max(1.0, g.norm());
    margins[i] = 1e-5 - rel;
  });
  ExactTally tally;
  for (double m : margins) tally.add(m, 0.0);
  return exact_report("gradient_finite_difference[" + family_name(spec.family) + "]",
                      opt.trials, tally);
}

CheckReport check_smoothness(const LossSpec& spec, const VerifyOptions& opt) {
  const Probe probe(opt.seed, kSmoothness, spec.dimension, spec.data_radius);
  const double scale = 3.0 * std::max(1.0, spec.data_radius);
  std::vector<double> margins(opt.trials, kInf);
  std::vector<std::int64_t> faults(opt.trials, 0);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const auto inst = static_cast<std::uint64_t>(i);
    const Vec theta1 = probe.gaussian_vec(inst, 0, scale);
    const Vec theta2 = probe.gaussian_vec(inst, spec.dimension, scale);
    const Sample z = probe.domain_sample(inst, 2 * spec.dimension);
    const double lhs = (eval_grad(spec, z, theta1) - eval_grad(spec, z, theta2)).norm();
    const double bound = spec.smoothness_L * (theta1 - theta2).norm();
    margins[i] = bound - lhs;
    faults[i] = lhs > bound + kRelSlack * std::max(1.0, bound) ? 1 : 0;
  });
  ExactTally tally;
  for (std::int64_t i = 0; i < opt.trials; ++i) {
    if (margins[i] < tally.worst_margin) tally.worst_margin = margins[i];
    tally.violations += faults[i];
  }
  return exact_report("smoothness_certificate[" + family_name(spec.family) + "]",
                      opt.trials, tally);
}

CheckReport check_strong_convexity(const LossSpec& spec, const VerifyOptions& opt) {
  if (spec.convexity_class != ConvexityClass::StronglyConvex) {
    throw config_error("strong convexity check needs a strongly convex family");
  }
  const Probe probe(opt.seed, kStrongConvexity, spec.dimension, spec.data_radius);
  const double scale = 3.0 * std::max(1.0, spec.data_radius);
  std::vector<double> margins(opt.trials, kInf);
  std::vector<std::int64_t> faults(opt.trials, 0);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const auto inst = static_cast<std::uint64_t>(i);
    const Vec theta1 = probe.gaussian_vec(inst, 0, scale);
    const Vec theta2 = probe.gaussian_vec(inst, spec.dimension, scale);
    const Sample z = probe.domain_sample(inst, 2 * spec.dimension);
    const Vec g2 = eval_grad(spec, z, theta2);
    const double lhs = eval_loss(spec, z, theta1);
    const double rhs = eval_loss(spec, z, theta2) + g2.dot(theta1 - theta2) +
                       0.5 * spec.strong_convexity_mu * (theta1 - theta2).squaredNorm();
    const double tol =
        kRelSlack * (std::abs(lhs) + std::abs(rhs) + g2.norm() * (theta1 - theta2).norm() + 1.0);
    margins[i] = lhs - rhs;
    faults[i] = lhs < rhs - tol ? 1 : 0;
  });
  ExactTally tally;
  for (std::int64_t i = 0; i < opt.trials; ++i) {
    if (margins[i] < tally.worst_margin) tally.worst_margin = margins[i];
    tally.violations += faults[i];
  }
  return exact_report("strong_convexity_certificate[" + family_name(spec.family) + "]",
                      opt.trials, tally);
}

CheckReport check_grad_bound(const LossSpec& spec, const VerifyOptions& opt) {
  if (!std::isfinite(spec.grad_bound_G)) {
    throw config_error("gradient bound check needs a finite G (projection set)");
  }
  const Probe probe(opt.seed, kGradBound, spec.dimension, spec.data_radius);
  std::vector<double> margins(opt.trials, kInf);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const auto inst = static_cast<std::uint64_t>(i);
    const Vec theta =
        spec.projection
            ? probe.ball_point(inst, 0, spec.projection->center, spec.projection->radius)
            : probe.gaussian_vec(inst, 0, 5.0 * std::max(1.0, spec.data_radius));
    const Sample z =
        probe.domain_sample(inst, static_cast<std::uint64_t>(spec.dimension) + 1);
    margins[i] = spec.grad_bound_G - eval_grad(spec, z, theta).norm();
  });
  ExactTally tally;
  for (double m : margins) tally.add(m, kRelSlack * std::max(1.0, spec.grad_bound_G));
  return exact_report("grad_bound_certificate[" + family_name(spec.family) + "]",
                      opt.trials, tally);
}

CheckReport check_loss_at_init(const LossSpec& spec, const Vec& theta0,
                               const VerifyOptions& opt) {
  const Probe probe(opt.seed, kLossAtInit, spec.dimension, spec.data_radius);
  std::vector<double> margins(opt.trials, kInf);
  parallel_for(opt.trials, opt.mode, [&](std::int64_t i) {
    const Sample z = probe.domain_sample(static_cast<std::uint64_t>(i), 0);
    margins[i] = spec.loss_at_init - eval_loss(spec, z, theta0);
  });
  ExactTally tally;
  for (double m : margins) tally.add(m, kRelSlack * std::max(1.0, spec.loss_at_init));
  return exact_report("loss_at_init_certificate[" + family_name(spec.family) + "]",
                      opt.trials, tally);
}

CheckReport check_gaussian_indistinguishability_1d(double distance, double sigma,
                                                   double epsilon, double delta) {
  CheckReport rep;
  rep.name = "gaussian_curve_1d";
  rep.instances = 1;
  const double value = gaussian_privacy_curve(distance, sigma, epsilon);
  rep.worst_margin = delta - value;
  rep.violations = value > delta ? 1 : 0;
  rep.pass = rep.violations == 0;
  return rep;
}

CheckReport check_coupled_divergence(const RunConfig& cfg, const Dataset& dataset,
                                     const UnlearnRequest& request, const LossSpec& spec,
                                     const VerifyOptions& opt) {
  if (opt.replicas < 100) {
    throw config_error("coupled divergence check needs at least 100 replicas");
  }
  if (!cfg.projected || !std::isfinite(spec.grad_bound_G)) {
    throw config_error("coupled divergence bound needs PSGD mode with finite G");
  }
  validate_run_config(cfg, spec);

  const std::int64_t R = opt.replicas;
  const std::int64_t T = cfg.T;
  std::vector<std::vector<double>> dists(R);
  RunConfig traced = cfg;
  traced.store_iterates = true;
  traced.record_grad_norms = false;
  parallel_for(R, opt.mode, [&](std::int64_t r) {
    const CouplingStream stream(cfg.seed, static_cast<std::uint32_t>(r));
    const TrajectoryRecord learn = run_learn(traced, dataset, spec, stream);
    const TrajectoryRecord retrain = run_retrain(traced, dataset, request, spec, stream);
    std::vector<double> d(T + 1);
    for (std::int64_t t = 0; t <= T; ++t) {
      d[t] = (learn.iterates[t] - retrain.iterates[t]).norm();
    }
    dists[r] = std::move(d);
  });

  const double gamma = contraction_factor(spec.convexity_class, cfg.eta,
                                          spec.smoothness_L, spec.strong_convexity_mu);
  const double rate = 2.0 * cfg.eta * spec.grad_bound_G * static_cast<double>(request.m()) /
                      static_cast<double>(dataset.size());

  CheckReport rep;
  rep.name = "coupled_divergence";
  rep.statistical = true;
  rep.instances = R;
  rep.worst_margin = kInf;
  std::vector<double> column(R);
  for (std::int64_t t = 0; t <= T; ++t) {
    for (std::int64_t r = 0; r < R; ++r) column[r] = dists[r][t];
    const MeanSe ms = mean_se(column);
    const double bound =
        gamma == 1.0 ? rate * static_cast<double>(t)
                     : rate * (1.0 - std::pow(gamma, static_cast<double>(t))) / (1.0 - gamma);
    const double margin = bound + 3.0 * ms.se - ms.mean;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.mc_mean = ms.mean;
      rep.mc_se = ms.se;
      rep.bound = bound;
    }
    if (ms.mean > bound + 3.0 * ms.se) ++rep.violations;
  }
  rep.pass = rep.violations == 0;
  return rep;
}

std::vector<CheckReport> check_end_to_end_sensitivity(
    const RunConfig& cfg, const Dataset& dataset, const UnlearnRequest& request,
    const LossSpec& spec, UnlearnMethod method, FormulaVariant variant,
    double tail_delta, const VerifyOptions& opt) {
  if (opt.replicas < 100) {
    throw config_error("end-to-end sensitivity check needs at least 100 replicas");
  }
  if (!(tail_delta > 0.0 && tail_delta < 1.0)) {
    throw config_error("tail delta must be in (0, 1)");
  }
  const bool wants_projection = method == UnlearnMethod::PsgdR2d;
  if (cfg.projected != wants_projection) {
    throw config_error("method/projection mismatch between config and check");
  }
  const AlgorithmKind wants_alg =
      method == UnlearnMethod::SgdD2d ? AlgorithmKind::D2D : AlgorithmKind::R2D;
  if (cfg.algorithm != wants_alg) {
    throw config_error("method/algorithm mismatch between config and check");
  }
  validate_run_config(cfg, spec);

  const std::int64_t n = dataset.size();
  const std::int64_t m = request.m();
  SensitivityBound bound;
  switch (method) {
    case UnlearnMethod::PsgdR2d:
      bound = sigma_psgd_r2d(spec.convexity_class, cfg.eta, spec.smoothness_L,
                             spec.strong_convexity_mu, spec.grad_bound_G, n, m, cfg.T,
                             cfg.K, variant);
      break;
    case UnlearnMethod::SgdR2d:
      bound = sigma_sgd_r2d(spec.convexity_class, cfg.eta, spec.smoothness_L,
                            spec.strong_convexity_mu, spec.noise_B, spec.noise_C,
                            spec.loss_at_init, n, m, cfg.T, cfg.K, variant);
      break;
    case UnlearnMethod::SgdD2d:
      ensure_d2d_fraction(n, m, spec.noise_B);
      bound = sigma_sgd_d2d(cfg.eta, spec.smoothness_L, spec.strong_convexity_mu,
                            spec.noise_B, spec.noise_C, cfg.K);
      break;
  }

  const std::int64_t R = opt.replicas;
  std::vector<double> finals(R);
  parallel_for(R, opt.mode, [&](std::int64_t r) {
    finals[r] =
        run_coupled_triple(cfg, dataset, request, spec, static_cast<std::uint32_t>(r))
            .dist_final;
  });

  const bool second = bound.moment == MomentOrder::Second;
  std::vector<double> obs(R);
  for (std::int64_t r = 0; r < R; ++r) obs[r] = second ? finals[r] * finals[r] : finals[r];
  const MeanSe ms = mean_se(obs);
  const double limit =
      second ? bound.sigma_bound * bound.sigma_bound : bound.sigma_bound;

  CheckReport sens;
  sens.name = std::string("end_to_end_sensitivity[") + method_name(method) + "]";
  sens.statistical = true;
  sens.instances = R;
  sens.mc_mean = ms.mean;
  sens.mc_se = ms.se;
  sens.bound = limit;
  sens.worst_margin = limit + 3.0 * ms.se - ms.mean;
  sens.violations = ms.mean > limit + 3.0 * ms.se ? 1 : 0;
  sens.pass = sens.violations == 0;
  sens.note = second ? "second moment vs Sigma^2" : "first moment vs Sigma";

  const double radius = second ? bound.sigma_bound / std::sqrt(tail_delta)
                               : bound.sigma_bound / tail_delta;
  std::int64_t exceed = 0;
  for (double dist : finals) {
    if (dist > radius) ++exceed;
  }
  const double frac = static_cast<double>(exceed) / static_cast<double>(R);
  const double frac_se = std::sqrt(frac * (1.0 - frac) / static_cast<double>(R));

  CheckReport tail;
  tail.name = std::string("markov_tail[") + method_name(method) + "]";
  tail.statistical = true;
  tail.instances = R;
  tail.mc_mean = frac;
  tail.mc_se = frac_se;
  tail.bound = tail_delta;
  tail.worst_margin = tail_delta + 3.0 * frac_se - frac;
  tail.violations = frac > tail_delta + 3.0 * frac_se ? 1 : 0;
  tail.pass = tail.violations == 0;

  return {sens, tail};
}

CheckReport check_sgd_convergence(const RunConfig& cfg, const Dataset& dataset,
                                  const LossSpec& spec, const VerifyOptions& opt) {
  if (opt.replicas < 100) {
    throw config_error("sgd convergence check needs at least 100 replicas");
  }
  if (cfg.projected) throw config_error("sgd convergence bound is for unprojected SGD");
  if (spec.noise_B > 0.0 && cfg.eta > 1.0 / (spec.noise_B * spec.smoothness_L)) {
    throw config_error("sgd convergence check needs eta <= 1/(B*L)");
  }
  validate_run_config(cfg, spec);

  const Vec theta_star =
      minimize_full_loss(spec, dataset, nullptr, Vec::Zero(cfg.dimension));
  const double loss_star = full_loss(spec, dataset, theta_star);
  const double loss0 = full_loss(spec, dataset, cfg.theta0);
  const double bound = 2.0 / cfg.eta * (loss0 - loss_star) +
                       spec.smoothness_L * cfg.eta * spec.noise_C *
                           static_cast<double>(cfg.T);

  RunConfig traced = cfg;
  traced.record_grad_norms = true;
  const std::int64_t R = opt.replicas;
  std::vector<double> sums(R);
  parallel_for(R, opt.mode, [&](std::int64_t r) {
    const CouplingStream stream(cfg.seed, static_cast<std::uint32_t>(r));
    const TrajectoryRecord rec = run_learn(traced, dataset, spec, stream);
    double s = 0.0;
    for (double g : rec.grad_norms) s += g * g;
    sums[r] = s;
  });
  const MeanSe ms = mean_se(sums);

  CheckReport rep;
  rep.name = "sgd_convergence";
  rep.statistical = true;
  rep.instances = R;
  rep.mc_mean = ms.mean;
  rep.mc_se = ms.se;
  rep.bound = bound;
  rep.worst_margin = bound + 3.0 * ms.se - ms.mean;
  rep.violations = ms.mean > bound + 3.0 * ms.se ? 1 : 0;
  rep.pass = rep.violations == 0;
  rep.note = spec.family == Family::Quadratic ? "" : "L* from deterministic minimizer (grad tol 1e-10)";
  return rep;
}

CheckReport check_biased_descent(const RunConfig& cfg, const Dataset& dataset,
                                 const UnlearnRequest& request, const LossSpec& spec,
                                 const VerifyOptions& opt) {
  if (opt.replicas < 100) {
    throw config_error("biased descent check needs at least 100 replicas");
  }
  if (spec.convexity_class != ConvexityClass::StronglyConvex) {
    throw config_error("biased descent bound needs a strongly convex family");
  }
  if (cfg.projected) throw config_error("biased descent bound is for unprojected SGD");
  if (spec.noise_B > 0.0 && cfg.eta > 1.0 / (spec.noise_B * spec.smoothness_L)) {
    throw config_error("biased descent check needs eta <= 1/(B*L)");
  }
  ensure_d2d_fraction(dataset.size(), request.m(), spec.noise_B);
  validate_run_config(cfg, spec);

  const Vec theta_star =
      minimize_full_loss(spec, dataset, &request, Vec::Zero(cfg.dimension));
  const double loss_star = full_loss_retained(spec, dataset, request, theta_star);
  const double gap0 = full_loss_retained(spec, dataset, request, cfg.theta0) - loss_star;
  const double mu = spec.strong_convexity_mu;
  const double B = spec.noise_B;
  const double C = spec.noise_C;
  const double bound = std::pow(1.0 - cfg.eta * mu / 2.0, static_cast<double>(cfg.T)) * gap0 +
                       C / (4.0 * B * mu) + spec.smoothness_L * cfg.eta * C / mu;

  const std::int64_t R = opt.replicas;
  std::vector<double> gaps(R);
  parallel_for(R, opt.mode, [&](std::int64_t r) {
    const CouplingStream stream(cfg.seed, static_cast<std::uint32_t>(r));
    const TrajectoryRecord rec = run_learn(cfg, dataset, spec, stream);
    gaps[r] = full_loss_retained(spec, dataset, request, rec.final) - loss_star;
  });
  const MeanSe ms = mean_se(gaps);

  CheckReport rep;
  rep.name = "biased_descent";
  rep.statistical = true;
  rep.instances = R;
  rep.mc_mean = ms.mean;
  rep.mc_se = ms.se;
  rep.bound = bound;
  rep.worst_margin = bound + 3.0 * ms.se - ms.mean;
  rep.violations = ms.mean > bound + 3.0 * ms.se ? 1 : 0;
  rep.pass = rep.violations == 0;
  return rep;
}

CheckReport check_batch_uniformity(std::int64_t source_size, std::int64_t draws,
                                   const VerifyOptions& opt) {
  if (source_size < 2 || draws < 1000) {
    throw config_error("uniformity check needs source_size >= 2 and draws >= 1000");
  }
  const CouplingStream stream(opt.seed, kUniformity);
  std::vector<std::int64_t> counts(source_size, 0);
  for (std::int64_t t = 0; t < draws; ++t) {
    const StreamKey key{Role::Train, DrawKind::BatchIndex, static_cast<std::uint64_t>(t), 0};
    ++counts[stream.uniform_index(key, static_cast<std::uint64_t>(source_size))];
  }
  const double p = 1.0 / static_cast<double>(source_size);
  const double expected = static_cast<double>(draws) * p;
  const double cell_sd = std::sqrt(static_cast<double>(draws) * p * (1.0 - p));

  CheckReport rep;
  rep.name = "batch_uniformity";
  rep.statistical = true;
  rep.instances = draws;
  rep.worst_margin = kInf;
  double chi2 = 0.0;
  for (std::int64_t c : counts) {
    const double dev = std::abs(static_cast<double>(c) - expected);
    chi2 += dev * dev / expected;
    const double margin = 4.0 * cell_sd - dev;
    if (margin < rep.worst_margin) rep.worst_margin = margin;
    if (dev > 4.0 * cell_sd) ++rep.violations;
  }
  const double dof = static_cast<double>(source_size - 1);
  const double chi2_limit = dof + 4.0 * std::sqrt(2.0 * dof);
  if (chi2 > chi2_limit) ++rep.violations;
  rep.mc_mean = chi2;
  rep.bound = chi2_limit;
  rep.pass = rep.violations == 0;
  rep.note = "per-cell 4-sigma + chi-square GOF";
  return rep;
}

CheckReport check_coupling_marginal(const Dataset& dataset, const UnlearnRequest& request,
                                    std::int64_t draws, const VerifyOptions& opt) {
  const std::int64_t n = dataset.size();
  const std::int64_t retained = n - request.m();
  const CouplingStream stream(opt.seed, kMarginal);

  std::vector<std::int64_t> counts(n, 0);
  for (std::int64_t t = 0; t < draws; ++t) {
    const BatchDraw full = sample_batch(stream, Role::Train, n, 1, t);
    const BatchDraw coupled = couple_batch(full, dataset, request, stream, t);
    ++counts[coupled.indices[0]];
  }

  const double p = 1.0 / static_cast<double>(retained);
  const double expected = static_cast<double>(draws) * p;
  const double cell_sd = std::sqrt(static_cast<double>(draws) * p * (1.0 - p));

  CheckReport rep;
  rep.name = "coupling_marginal_uniformity";
  rep.statistical = true;
  rep.instances = draws;
  rep.worst_margin = kInf;
  double chi2 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (request.contains(i)) {
      // Unlearned samples must never appear in a coupled batch.
      if (counts[i] != 0) ++rep.violations;
      continue;
    }
    const double dev = std::abs(static_cast<double>(counts[i]) - expected);
    chi2 += dev * dev / expected;
    const double margin = 4.0 * cell_sd - dev;
    if (margin < rep.worst_margin) rep.worst_margin = margin;
    if (dev > 4.0 * cell_sd) ++rep.violations;
  }
  const double dof = static_cast<double>(retained - 1);
  const double chi2_limit = dof + 4.0 * std::sqrt(2.0 * dof);
  if (chi2 > chi2_limit) ++rep.violations;
  rep.mc_mean = chi2;
  rep.bound = chi2_limit;
  rep.pass = rep.violations == 0;
  return rep;
}

CheckReport check_coupling_agreement(const Dataset& dataset, const UnlearnRequest& request,
                                     std::int64_t draws, const VerifyOptions& opt) {
  const std::int64_t n = dataset.size();
  const CouplingStream stream(opt.seed, kAgreement);
  std::int64_t differing = 0;
  for (std::int64_t t = 0; t < draws; ++t) {
    const BatchDraw full = sample_batch(stream, Role::Train, n, 1, t);
    const BatchDraw coupled = couple_batch(full, dataset, request, stream, t);
    if (coupled.indices[0] != full.indices[0]) ++differing;
  }
  const double target = static_cast<double>(request.m()) / static_cast<double>(n);
  const double frac = static_cast<double>(differing) / static_cast<double>(draws);
  const double sd = std::sqrt(target * (1.0 - target) / static_cast<double>(draws));

  CheckReport rep;
  rep.name = "coupling_agreement_rate";
  rep.statistical = true;
  rep.instances = draws;
  rep.mc_mean = frac;
  rep.mc_se = sd;
  rep.bound = target;
  rep.worst_margin = 4.0 * sd - std::abs(frac - target);
  rep.violations = std::abs(frac - target) > 4.0 * sd ? 1 : 0;
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace unlearn
