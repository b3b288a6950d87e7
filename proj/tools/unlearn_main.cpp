#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "unlearn/config.hpp"

namespace fs = std::filesystem;
using namespace unlearn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitCheckFailure = 2;
constexpr int kExitDivergence = 3;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write " + path.string());
  out << text;
}

Json vec_to_json(const Vec& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::int64_t replicas = -1;
  std::int64_t seed = -1;
  std::string variant;
  int threads = 0;
  bool serial = false;
};

void apply_overrides(ExperimentConfig& cfg, const CommonFlags& flags) {
  if (flags.replicas >= 0) cfg.replicas = flags.replicas;
  if (flags.seed >= 0) cfg.run_seed = static_cast<std::uint64_t>(flags.seed);
  if (!flags.variant.empty()) cfg.variant = variant_from_name(flags.variant);
  set_worker_count(flags.threads);
  set_default_exec_mode(flags.serial ? ExecMode::Serial : ExecMode::OpenMP);
}

int cmd_calibrate(const CommonFlags& flags) {
  ExperimentConfig cfg = load_config(flags.config_path);
  apply_overrides(cfg, flags);
  const Experiment exp = build_experiment(cfg);
  const Calibration cal = calibrate_experiment(cfg, exp);
  const Json out = calibration_to_json(cfg, exp, cal);
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!flags.out_dir.empty()) {
    fs::create_directories(flags.out_dir);
    write_text(fs::path(flags.out_dir) / "calibration.json", text);
  }
  return kExitOk;
}

int cmd_run(const CommonFlags& flags, bool coupled) {
  ExperimentConfig cfg = load_config(flags.config_path);
  apply_overrides(cfg, flags);
  if (flags.out_dir.empty()) throw config_error("run: --out DIR is required");
  const Experiment exp = build_experiment(cfg);
  const Calibration cal = calibrate_experiment(cfg, exp);

  fs::create_directories(flags.out_dir);
  write_text(fs::path(flags.out_dir) / "calibration.json",
             calibration_to_json(cfg, exp, cal).dump(2) + "\n");

  const std::int64_t R = std::max<std::int64_t>(1, cfg.replicas);
  struct ReplicaOut {
    TrajectoryRecord learn;
    TrajectoryRecord unlearn;
    std::vector<double> dists;
    double dist_final = 0.0;
    Vec noisy_train;
    Vec noisy_unlearn;
  };
  std::vector<ReplicaOut> rows(R);
  parallel_for(R, [&](std::int64_t r) {
    ReplicaOut& row = rows[r];
    const CouplingStream stream(exp.run.seed, static_cast<std::uint32_t>(r));
    if (coupled) {
      CoupledTriple triple =
          run_coupled_triple(exp.run, exp.dataset, exp.request, exp.spec,
                             static_cast<std::uint32_t>(r));
      row.learn = std::move(triple.learn);
      row.unlearn = std::move(triple.unlearn);
      row.dists = std::move(triple.dist_train_retrain);
      row.dist_final = triple.dist_final;
    } else {
      row.learn = run_learn(exp.run, exp.dataset, exp.spec, stream);
      row.unlearn =
          run_unlearn(exp.run, exp.dataset, exp.request, exp.spec, stream, row.learn);
    }
    row.noisy_train = add_calibrated_noise(row.learn.final, cal.noise.sigma, stream,
                                           Role::Train, exp.run.T);
    row.noisy_unlearn = add_calibrated_noise(row.unlearn.final, cal.noise.sigma, stream,
                                             Role::Unlearn, exp.run.K);
  });

  Json traj;
  traj["schema"] = "unlearn.trajectories.v1";
  traj["algorithm"] = exp.run.algorithm == AlgorithmKind::R2D ? "r2d" : "d2d";
  traj["T"] = exp.run.T;
  traj["K"] = exp.run.K;
  traj["noise_sigma"] = cal.noise.sigma;
  Json reps = Json::array();
  for (std::int64_t r = 0; r < R; ++r) {
    const ReplicaOut& row = rows[r];
    Json jr;
    jr["replica"] = r;
    jr["checkpoint_step"] = row.learn.checkpoint_step;
    jr["checkpoint"] = vec_to_json(row.learn.checkpoint);
    jr["final_train"] = vec_to_json(row.learn.final);
    jr["final_unlearn"] = vec_to_json(row.unlearn.final);
    jr["noisy_train"] = vec_to_json(row.noisy_train);
    jr["noisy_unlearn"] = vec_to_json(row.noisy_unlearn);
    if (cfg.store_iterates) {
      Json its = Json::array();
      for (const Vec& v : row.learn.iterates) its.push_back(vec_to_json(v));
      jr["iterates_train"] = its;
      Json itu = Json::array();
      for (const Vec& v : row.unlearn.iterates) itu.push_back(vec_to_json(v));
      jr["iterates_unlearn"] = itu;
    }
    reps.push_back(jr);
  }
  traj["replicas"] = reps;
  write_text(fs::path(flags.out_dir) / "trajectories.json", traj.dump(2) + "\n");

  if (coupled) {
    std::string csv = "# schema: unlearn.distances.v1\n";
    csv += "replica,t,dist_train_retrain,dist_final\n";
    for (std::int64_t r = 0; r < R; ++r) {
      for (std::size_t t = 0; t < rows[r].dists.size(); ++t) {
        csv += std::to_string(r) + "," + std::to_string(t) + "," +
               fmt_double(rows[r].dists[t]) + "," + fmt_double(rows[r].dist_final) + "\n";
      }
    }
    write_text(fs::path(flags.out_dir) / "distances.csv", csv);
  }
  std::cout << "wrote " << flags.out_dir << " (replicas=" << R
            << (coupled ? ", coupled" : "") << ")\n";
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags, const std::string& axis_flag) {
  ExperimentConfig base = load_config(flags.config_path);
  apply_overrides(base, flags);
  if (flags.out_dir.empty()) throw config_error("sweep: --out DIR is required");
  const std::string axis = axis_flag.empty() ? base.sweep_axis : axis_flag;
  if (axis.empty()) throw config_error("sweep: pick an axis (K, T, eps, m)");
  if (base.sweep_values.empty()) throw config_error("sweep: config.sweep.values is empty");
  const std::int64_t mc_replicas = flags.replicas > 0 ? flags.replicas : 0;

  std::string csv = "# schema: unlearn.sweep.v1\n";
  csv += "axis,value,Sigma,sigma,K,T,mc_mean_dist\n";
  for (double value : base.sweep_values) {
    ExperimentConfig cfg = base;
    cfg.replicas = 1;
    if (axis == "K") {
      cfg.K = static_cast<std::int64_t>(value);
    } else if (axis == "T") {
      cfg.T = static_cast<std::int64_t>(value);
      cfg.auto_T = false;
    } else if (axis == "eps") {
      cfg.budget.epsilon = value;
    } else if (axis == "m") {
      cfg.m = static_cast<std::int64_t>(value);
      cfg.explicit_indices.clear();
      if (cfg.selection == SelectionRule::ExplicitIndices) {
        cfg.selection = SelectionRule::FirstM;
      }
    } else {
      throw config_error("sweep: unknown axis '" + axis + "'");
    }
    Experiment exp = build_experiment(cfg);
    if (axis == "T" && cfg.sigma_target &&
        exp.spec.convexity_class == ConvexityClass::StronglyConvex &&
        cfg.method != UnlearnMethod::SgdD2d) {
      // Fixed-noise planning mode: K follows the target Sigma as T grows.
      exp.run.K = k_for_sigma(*cfg.sigma_target, cfg.eta, exp.spec.strong_convexity_mu,
                              exp.spec.grad_bound_G, exp.dataset.size(),
                              exp.request.m(), exp.run.T);
      cfg.K = exp.run.K;
    }
    const Calibration cal = calibrate_experiment(cfg, exp);

    std::string mc = "";
    if (mc_replicas > 0) {
      std::vector<double> finals(mc_replicas);
      parallel_for(mc_replicas, [&](std::int64_t r) {
        finals[r] = run_coupled_triple(exp.run, exp.dataset, exp.request, exp.spec,
                                       static_cast<std::uint32_t>(r))
                        .dist_final;
      });
      double sum = 0.0;
      for (double d : finals) sum += d;
      mc = fmt_double(sum / static_cast<double>(mc_replicas));
    }
    csv += axis + "," + fmt_double(value) + "," + fmt_double(cal.bound.sigma_bound) +
           "," + fmt_double(cal.noise.sigma) + "," + std::to_string(exp.run.K) + "," +
           std::to_string(exp.run.T) + "," + mc + "\n";
  }
  fs::create_directories(flags.out_dir);
  write_text(fs::path(flags.out_dir) / "sweep.csv", csv);
  std::cout << "wrote " << (fs::path(flags.out_dir) / "sweep.csv").string() << "\n";
  return kExitOk;
}

int cmd_verify(const CommonFlags& flags, const std::string& suite_name,
               const std::string& report_path) {
  ExperimentConfig cfg = load_config(flags.config_path);
  apply_overrides(cfg, flags);
  SuiteKind kind;
  if (suite_name == "exact") {
    kind = SuiteKind::Exact;
  } else if (suite_name == "statistical") {
    kind = SuiteKind::Statistical;
  } else if (suite_name == "all") {
    kind = SuiteKind::All;
  } else {
    throw config_error("verify: --suite must be exact | statistical | all");
  }

  const Experiment exp = build_experiment(cfg);
  VerifyOptions opt;
  opt.seed = cfg.run_seed;
  opt.trials = 10000;
  opt.replicas = flags.replicas > 0 ? flags.replicas
                 : cfg.replicas >= 100 ? cfg.replicas
                                       : 500;
  opt.mode = flags.serial ? ExecMode::Serial : ExecMode::OpenMP;

  const std::vector<CheckReport> reports = run_suites(cfg, exp, kind, opt);
  bool all_pass = true;
  for (const CheckReport& rep : reports) {
    all_pass = all_pass && rep.pass;
    std::printf("[%s] %-45s instances=%" PRId64 " violations=%" PRId64
                " worst_margin=%.3g%s\n",
                rep.pass ? "PASS" : "FAIL", rep.name.c_str(), rep.instances,
                rep.violations, rep.worst_margin,
                rep.statistical
                    ? ("  mean=" + fmt_double(rep.mc_mean) + " bound=" +
                       fmt_double(rep.bound))
                          .c_str()
                    : "");
  }
  const Json report = reports_to_json(reports, opt, kind);
  // For verify, --out names the JSON report file itself.
  const std::string target = !report_path.empty() ? report_path : flags.out_dir;
  if (!target.empty()) {
    write_text(target, report.dump(2) + "\n");
  }
  std::printf("%s: %zu checks, %s\n", suite_name.c_str(), reports.size(),
              all_pass ? "all passed" : "FAILURES PRESENT");
  return all_pass ? kExitOk : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified unlearning laboratory (R2D / D2D)"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonFlags flags;
  app.add_option("--threads", flags.threads, "OpenMP worker count (0 = runtime default)");
  app.add_flag("--serial", flags.serial, "run every loop on the serial reference path");

  auto add_common = [&](CLI::App* sub, bool need_out) {
    sub->fallthrough();
    sub->add_option("--config", flags.config_path, "experiment config JSON")->required();
    auto* out = sub->add_option("--out", flags.out_dir, "output directory");
    if (need_out) out->required();
    sub->add_option("--replicas", flags.replicas, "replica count override");
    sub->add_option("--seed", flags.seed, "master seed override");
    sub->add_option("--variant", flags.variant, "formula variant: main | appendix");
  };

  CLI::App* calibrate = app.add_subcommand("calibrate", "closed-form Sigma and noise scale");
  add_common(calibrate, false);

  bool coupled = false;
  CLI::App* run = app.add_subcommand("run", "execute learn/unlearn trajectories");
  add_common(run, true);
  run->add_flag("--coupled", coupled, "also run the coupled retraining trajectory");

  std::string axis;
  CLI::App* sweep = app.add_subcommand("sweep", "tradeoff table along K, T, eps or m");
  add_common(sweep, true);
  sweep->add_option("--axis", axis, "sweep axis: K | T | eps | m");

  std::string suite = "all";
  std::string report_path;
  CLI::App* verify = app.add_subcommand("verify", "run the verification suites");
  add_common(verify, false);
  verify->add_option("--suite", suite, "exact | statistical | all");
  verify->add_option("--report", report_path, "write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return cmd_calibrate(flags);
    if (run->parsed()) return cmd_run(flags, coupled);
    if (sweep->parsed()) return cmd_sweep(flags, axis);
    if (verify->parsed()) return cmd_verify(flags, suite, report_path);
  } catch (const numeric_error& e) {
    std::cerr << "numeric divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const certification_error& e) {
    std::cerr << "certification error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
