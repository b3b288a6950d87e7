#include "unlearn/config.hpp"

#include <cmath>
#include <fstream>

namespace unlearn {
namespace {

[[noreturn]] void bad(const std::string& msg) { throw config_error("config: " + msg); }

double get_num(const Json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number()) bad("missing numeric field '" + key + "'");
  return j[key].get<double>();
}

std::int64_t get_int(const Json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    bad("missing integer field '" + key + "'");
  }
  return j[key].get<std::int64_t>();
}

std::string get_str(const Json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_string()) bad("missing string field '" + key + "'");
  return j[key].get<std::string>();
}

// Vectors appear either as explicit arrays or as {"fill": v} broadcast to d.
Vec parse_vec(const Json& j, int dimension, const std::string& what) {
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != dimension) {
      bad(what + " has " + std::to_string(j.size()) + " entries, expected " +
          std::to_string(dimension));
    }
    Vec v(dimension);
    for (int i = 0; i < dimension; ++i) v[i] = j[i].get<double>();
    return v;
  }
  if (j.is_object() && j.contains("fill")) {
    return Vec::Constant(dimension, j["fill"].get<double>());
  }
  bad(what + " must be an array of length d or {\"fill\": value}");
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  try {
    cfg.family = family_from_name(get_str(j, "family"));
    if (j.contains("family_params")) {
      const Json& fp = j["family_params"];
      if (fp.contains("lambda")) cfg.family_params.ridge_lambda = fp["lambda"].get<double>();
    }

    const Json& data = j.contains("data") ? j["data"] : Json::object();
    cfg.data_source = data.contains("source") ? data["source"].get<std::string>() : "synthetic";
    cfg.dimension = static_cast<int>(get_int(data, "d"));
    cfg.data_radius = get_num(data, "radius");
    if (cfg.data_source == "synthetic") {
      cfg.n = get_int(data, "n");
      cfg.data_seed = data.contains("seed") ? data["seed"].get<std::uint64_t>() : 0;
    } else if (cfg.data_source == "csv") {
      cfg.csv_path = get_str(data, "path");
    } else {
      bad("data.source must be 'synthetic' or 'csv'");
    }

    const Json& ul = j.contains("unlearn") ? j["unlearn"] : Json::object();
    const std::string sel =
        ul.contains("selection") ? ul["selection"].get<std::string>() : "first_m";
    if (sel == "first_m") {
      cfg.selection = SelectionRule::FirstM;
    } else if (sel == "random_seeded") {
      cfg.selection = SelectionRule::RandomSeeded;
    } else if (sel == "explicit_indices") {
      cfg.selection = SelectionRule::ExplicitIndices;
    } else {
      bad("unlearn.selection must be first_m | random_seeded | explicit_indices");
    }
    if (cfg.selection == SelectionRule::ExplicitIndices) {
      if (!ul.contains("indices") || !ul["indices"].is_array()) {
        bad("unlearn.indices required for explicit_indices");
      }
      for (const auto& v : ul["indices"]) {
        cfg.explicit_indices.push_back(v.get<std::int64_t>());
      }
      cfg.m = static_cast<std::int64_t>(cfg.explicit_indices.size());
    } else {
      cfg.m = get_int(ul, "m");
    }
    cfg.request_seed = ul.contains("seed") ? ul["seed"].get<std::uint64_t>() : 0;

    const Json& run = j.contains("run") ? j["run"] : Json::object();
    cfg.eta = get_num(run, "eta");
    if (run.contains("T") && run["T"].is_string()) {
      if (run["T"].get<std::string>() != "auto") bad("run.T must be an integer or \"auto\"");
      cfg.auto_T = true;
    } else {
      cfg.T = get_int(run, "T");
    }
    cfg.K = get_int(run, "K");
    cfg.batch_size = run.contains("batch_size") ? run["batch_size"].get<std::int64_t>() : 1;
    cfg.run_seed = run.contains("seed") ? run["seed"].get<std::uint64_t>() : 0;
    cfg.theta0 = run.contains("theta0") ? parse_vec(run["theta0"], cfg.dimension, "run.theta0")
                                        : Vec(Vec::Zero(cfg.dimension));
    cfg.store_iterates =
        run.contains("store_iterates") && run["store_iterates"].get<bool>();

    if (j.contains("projection")) {
      ProjectionSet set;
      set.center = parse_vec(j["projection"]["center"], cfg.dimension, "projection.center");
      set.radius = j["projection"]["radius"].get<double>();
      cfg.projection = set;
    }

    const Json& privacy = j.contains("privacy") ? j["privacy"] : Json::object();
    cfg.budget.epsilon = get_num(privacy, "epsilon");
    cfg.budget.delta = get_num(privacy, "delta");

    cfg.method = method_from_name(get_str(j, "method"));
    cfg.variant = j.contains("variant") ? variant_from_name(j["variant"].get<std::string>())
                                        : FormulaVariant::Appendix;
    cfg.replicas = j.contains("replicas") ? j["replicas"].get<std::int64_t>() : 1;
    if (j.contains("sigma_target")) cfg.sigma_target = j["sigma_target"].get<double>();
    if (j.contains("sweep")) {
      cfg.sweep_axis = get_str(j["sweep"], "axis");
      if (!j["sweep"].contains("values") || !j["sweep"]["values"].is_array() ||
          j["sweep"]["values"].empty()) {
        bad("sweep.values must be a nonempty array");
      }
      for (const auto& v : j["sweep"]["values"]) cfg.sweep_values.push_back(v.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed JSON value: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment exp;
  exp.dataset = cfg.data_source == "csv"
                    ? load_dataset_csv(cfg.csv_path, cfg.dimension, cfg.data_radius)
                    : synthesize_dataset(cfg.n, cfg.dimension, cfg.data_radius,
                                         cfg.data_seed);
  exp.spec = certified_constants(cfg.family, cfg.family_params, cfg.data_radius,
                                 cfg.projection, cfg.theta0);
  exp.request = make_request(exp.dataset, cfg.selection, cfg.m, cfg.request_seed,
                             cfg.explicit_indices);

  std::int64_t T = cfg.T;
  if (cfg.auto_T) {
    if (cfg.method != UnlearnMethod::SgdD2d) {
      throw config_error("run.T = \"auto\" is only defined for sgd_d2d");
    }
    const D2dHorizon horizon =
        d2d_training_horizon(cfg.K, cfg.eta, exp.spec.strong_convexity_mu,
                             exp.spec.noise_B, exp.spec.noise_C, exp.spec.loss_at_init);
    T = horizon.T;
    if (horizon.already_converged) {
      exp.warnings.push_back(
          "d2d_training_horizon: loss_at_init already below 5C/(4B*mu); T = K");
    }
  }

  exp.run.eta = cfg.eta;
  exp.run.T = T;
  exp.run.K = cfg.K;
  exp.run.batch_size = cfg.batch_size;
  exp.run.dimension = cfg.dimension;
  exp.run.projected = cfg.method == UnlearnMethod::PsgdR2d;
  exp.run.algorithm =
      cfg.method == UnlearnMethod::SgdD2d ? AlgorithmKind::D2D : AlgorithmKind::R2D;
  exp.run.seed = cfg.run_seed;
  exp.run.theta0 = cfg.theta0;
  exp.run.store_iterates = cfg.store_iterates;
  validate_run_config(exp.run, exp.spec);

  // Every certification precondition is checked here, before any trajectory
  // is run; a violated inequality aborts with its name.
  calibrate_experiment(cfg, exp);

  if (cfg.sigma_target && cfg.method != UnlearnMethod::SgdD2d &&
      exp.spec.convexity_class == ConvexityClass::StronglyConvex) {
    const double cap =
        k_for_sigma_cap(cfg.eta, exp.spec.strong_convexity_mu, exp.spec.grad_bound_G,
                        exp.dataset.size(), exp.request.m(), T);
    if (*cfg.sigma_target >= cap) {
      exp.warnings.push_back("sigma_target is above the K=0 cap; the K plan is 0");
    }
  }
  return exp;
}

Calibration calibrate_experiment(const ExperimentConfig& cfg, const Experiment& exp) {
  const std::int64_t n = exp.dataset.size();
  const std::int64_t m = exp.request.m();
  Calibration cal;
  switch (cfg.method) {
    case UnlearnMethod::PsgdR2d:
      cal.bound = sigma_psgd_r2d(exp.spec.convexity_class, cfg.eta, exp.spec.smoothness_L,
                                 exp.spec.strong_convexity_mu, exp.spec.grad_bound_G, n, m,
                                 exp.run.T, exp.run.K, cfg.variant);
      break;
    case UnlearnMethod::SgdR2d:
      cal.bound = sigma_sgd_r2d(exp.spec.convexity_class, cfg.eta, exp.spec.smoothness_L,
                                exp.spec.strong_convexity_mu, exp.spec.noise_B,
                                exp.spec.noise_C, exp.spec.loss_at_init, n, m, exp.run.T,
                                exp.run.K, cfg.variant);
      break;
    case UnlearnMethod::SgdD2d:
      if (exp.spec.convexity_class != ConvexityClass::StronglyConvex) {
        throw certification_error("sgd_d2d requires a strongly convex family");
      }
      ensure_d2d_fraction(n, m, exp.spec.noise_B);
      cal.bound = sigma_sgd_d2d(cfg.eta, exp.spec.smoothness_L,
                                exp.spec.strong_convexity_mu, exp.spec.noise_B,
                                exp.spec.noise_C, exp.run.K);
      break;
  }
  cal.noise = calibrate_noise(cal.bound, cfg.budget);
  return cal;
}

Json calibration_to_json(const ExperimentConfig& cfg, const Experiment& exp,
                         const Calibration& cal) {
  Json out;
  out["schema"] = "unlearn.calibration.v1";
  out["method"] = method_name(cfg.method);
  out["regime"] = convexity_name(exp.spec.convexity_class);
  out["variant"] = variant_name(cal.bound.variant);
  out["moment"] = moment_name(cal.bound.moment);
  out["Sigma"] = cal.bound.sigma_bound;
  out["sigma"] = cal.noise.sigma;
  out["epsilon"] = cfg.budget.epsilon;
  out["delta"] = cfg.budget.delta;
  out["total_delta"] = 2.0 * cfg.budget.delta;
  out["eta"] = cfg.eta;
  out["T"] = exp.run.T;
  out["K"] = exp.run.K;
  out["n"] = exp.dataset.size();
  out["m"] = exp.request.m();
  out["batch_size"] = cfg.batch_size;
  Json consts;
  consts["L"] = exp.spec.smoothness_L;
  consts["mu"] = exp.spec.strong_convexity_mu;
  consts["G"] = std::isfinite(exp.spec.grad_bound_G) ? Json(exp.spec.grad_bound_G)
                                                     : Json("inf");
  consts["B"] = exp.spec.noise_B;
  consts["C"] = exp.spec.noise_C;
  consts["ell0"] = exp.spec.loss_at_init;
  consts["delta_inf"] = exp.spec.interp_const;
  consts["data_radius"] = exp.spec.data_radius;
  out["constants"] = consts;

  Json plans = Json::object();
  if (cfg.method == UnlearnMethod::SgdD2d) {
    const D2dHorizon horizon =
        d2d_training_horizon(exp.run.K, cfg.eta, exp.spec.strong_convexity_mu,
                             exp.spec.noise_B, exp.spec.noise_C, exp.spec.loss_at_init);
    plans["d2d_horizon_T"] = horizon.T;
    plans["already_converged"] = horizon.already_converged;
  }
  if (cfg.sigma_target && cfg.method != UnlearnMethod::SgdD2d &&
      exp.spec.convexity_class == ConvexityClass::StronglyConvex) {
    plans["sigma_target"] = *cfg.sigma_target;
    plans["k_for_sigma"] =
        k_for_sigma(*cfg.sigma_target, cfg.eta, exp.spec.strong_convexity_mu,
                    exp.spec.grad_bound_G, exp.dataset.size(), exp.request.m(), exp.run.T);
    plans["k_cap_sigma"] =
        k_for_sigma_cap(cfg.eta, exp.spec.strong_convexity_mu, exp.spec.grad_bound_G,
                        exp.dataset.size(), exp.request.m(), exp.run.T);
  }
  out["plans"] = plans;
  out["warnings"] = exp.warnings;
  return out;
}

namespace {

std::vector<CheckReport> exact_catalog(const VerifyOptions& opt) {
  const int d = 5;
  ProjectionSet ball;
  ball.center = Vec::Zero(d);
  ball.radius = 2.0;
  Vec theta0 = Vec::Zero(d);
  theta0[0] = 1.0;

  FamilyParams ridge_params;
  ridge_params.ridge_lambda = 0.1;
  const LossSpec quad =
      certified_constants(Family::Quadratic, {}, 1.0, ball, theta0);
  const LossSpec ridge =
      certified_constants(Family::RidgeLogistic, ridge_params, 1.0, ball, theta0);
  const LossSpec logi = certified_constants(Family::Logistic, {}, 1.0, ball, theta0);
  const LossSpec ncvx =
      certified_constants(Family::SmoothNonconvex, {}, 1.0, ball, theta0);

  const Dataset growth_data = synthesize_dataset(100, d, 1.0, 11);

  VerifyOptions fd_opt = opt;
  fd_opt.trials = 100;  // finite differences run on 100 points per family

  std::vector<CheckReport> reps;
  reps.push_back(check_contraction(quad, 0.5, opt));
  reps.push_back(check_contraction(
      ridge, ridge.strong_convexity_mu / (ridge.smoothness_L * ridge.smoothness_L), opt));
  reps.push_back(check_contraction(logi, 2.0 / logi.smoothness_L, opt));
  reps.push_back(check_contraction(ncvx, 0.5, opt));
  reps.push_back(check_projection_nonexpansive(ball, opt));
  for (const LossSpec* spec : {&quad, &ridge, &logi, &ncvx}) {
    reps.push_back(check_gradient_finite_diff(*spec, fd_opt));
    reps.push_back(check_smoothness(*spec, opt));
    reps.push_back(check_grad_bound(*spec, opt));
    reps.push_back(check_loss_at_init(*spec, theta0, opt));
  }
  reps.push_back(check_strong_convexity(quad, opt));
  reps.push_back(check_strong_convexity(ridge, opt));
  reps.push_back(check_quadratic_growth(quad, growth_data, opt));
  reps.push_back(check_quadratic_growth(ridge, growth_data, opt));
  return reps;
}

}  // namespace

std::vector<CheckReport> run_suites(const ExperimentConfig& cfg, const Experiment& exp,
                                    SuiteKind kind, const VerifyOptions& opt) {
  std::vector<CheckReport> reps;
  if (kind == SuiteKind::Exact || kind == SuiteKind::All) {
    std::vector<CheckReport> catalog = exact_catalog(opt);
    reps.insert(reps.end(), catalog.begin(), catalog.end());
    std::vector<CheckReport> bias =
        check_bias_bounds(exp.dataset, exp.request, exp.spec, opt);
    reps.insert(reps.end(), bias.begin(), bias.end());

    const Calibration cal = calibrate_experiment(cfg, exp);
    const double distance = cal.bound.moment == MomentOrder::First
                                ? cal.bound.sigma_bound / cfg.budget.delta
                                : cal.bound.sigma_bound / std::sqrt(cfg.budget.delta);
    reps.push_back(check_gaussian_indistinguishability_1d(
        distance, cal.noise.sigma, cfg.budget.epsilon, cfg.budget.delta));
  }
  if (kind == SuiteKind::Statistical || kind == SuiteKind::All) {
    constexpr std::int64_t kDraws = 1000000;
    reps.push_back(check_batch_uniformity(exp.dataset.size(), kDraws, opt));
    reps.push_back(check_coupling_marginal(exp.dataset, exp.request, kDraws, opt));
    reps.push_back(check_coupling_agreement(exp.dataset, exp.request, kDraws, opt));

    if (cfg.method == UnlearnMethod::PsgdR2d) {
      reps.push_back(
          check_coupled_divergence(exp.run, exp.dataset, exp.request, exp.spec, opt));
    }
    std::vector<CheckReport> e2e = check_end_to_end_sensitivity(
        exp.run, exp.dataset, exp.request, exp.spec, cfg.method, cfg.variant,
        cfg.budget.delta, opt);
    reps.insert(reps.end(), e2e.begin(), e2e.end());

    const bool sgd_ok = !exp.run.projected &&
                        (exp.spec.noise_B == 0.0 ||
                         cfg.eta <= 1.0 / (exp.spec.noise_B * exp.spec.smoothness_L));
    if (sgd_ok) {
      reps.push_back(check_sgd_convergence(exp.run, exp.dataset, exp.spec, opt));
      const double frac = static_cast<double>(exp.request.m()) /
                          static_cast<double>(exp.dataset.size());
      if (exp.spec.convexity_class == ConvexityClass::StronglyConvex &&
          exp.spec.noise_B > 0.0 &&
          frac < 1.0 / (6.0 * exp.spec.noise_B + 1.0)) {
        reps.push_back(
            check_biased_descent(exp.run, exp.dataset, exp.request, exp.spec, opt));
      }
    }
  }
  return reps;
}

Json report_to_json(const CheckReport& rep) {
  Json j;
  j["name"] = rep.name;
  j["type"] = rep.statistical ? "statistical" : "exact";
  j["instances"] = rep.instances;
  j["violations"] = rep.violations;
  j["worst_margin"] = rep.worst_margin;
  if (rep.statistical) {
    j["mc_mean"] = rep.mc_mean;
    j["mc_se"] = rep.mc_se;
    j["bound"] = rep.bound;
  }
  j["pass"] = rep.pass;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

Json reports_to_json(const std::vector<CheckReport>& reps, const VerifyOptions& opt,
                     SuiteKind kind) {
  Json j;
  j["schema"] = "unlearn.report.v1";
  j["suite"] = kind == SuiteKind::Exact ? "exact"
               : kind == SuiteKind::Statistical ? "statistical"
                                                : "all";
  j["seed"] = opt.seed;
  j["trials"] = opt.trials;
  j["replicas"] = opt.replicas;
  bool all_pass = true;
  Json checks = Json::array();
  for (const CheckReport& rep : reps) {
    all_pass = all_pass && rep.pass;
    checks.push_back(report_to_json(rep));
  }
  j["all_pass"] = all_pass;
  j["checks"] = checks;
  return j;
}

}  // namespace unlearn
