#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "unlearn/verify.hpp"

namespace unlearn {

using Json = nlohmann::ordered_json;

// Everything one experiment needs, parsed from a single JSON config. All
// randomness flows from the seeds recorded here.
struct ExperimentConfig {
  Family family = Family::Quadratic;
  FamilyParams family_params;

  std::string data_source = "synthetic";  // "synthetic" | "csv"
  std::string csv_path;
  std::int64_t n = 0;
  int dimension = 0;
  double data_radius = 0.0;
  std::uint64_t data_seed = 0;

  SelectionRule selection = SelectionRule::FirstM;
  std::int64_t m = 0;
  std::uint64_t request_seed = 0;
  std::vector<std::int64_t> explicit_indices;

  double eta = 0.0;
  std::int64_t T = 0;
  bool auto_T = false;  // derive T from d2d_training_horizon (sgd_d2d only)
  std::int64_t K = 0;
  std::int64_t batch_size = 1;
  std::uint64_t run_seed = 0;
  Vec theta0;
  bool store_iterates = false;

  std::optional<ProjectionSet> projection;

  PrivacyBudget budget;
  UnlearnMethod method = UnlearnMethod::PsgdR2d;
  FormulaVariant variant = FormulaVariant::Appendix;
  std::int64_t replicas = 1;

  std::optional<double> sigma_target;  // K planning for strongly convex R2D
  std::string sweep_axis;              // "K" | "T" | "eps" | "m" when present
  std::vector<double> sweep_values;
};

ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);

// Materialized experiment: dataset, request, certified constants, run plan.
struct Experiment {
  Dataset dataset;
  UnlearnRequest request;
  LossSpec spec;
  RunConfig run;
  std::vector<std::string> warnings;
};

// Builds the experiment and checks every certification precondition before
// any compute; throws certification_error naming the failed inequality.
Experiment build_experiment(const ExperimentConfig& cfg);

// Sensitivity + noise for the experiment as configured.
struct Calibration {
  SensitivityBound bound;
  NoiseScale noise;
};
Calibration calibrate_experiment(const ExperimentConfig& cfg, const Experiment& exp);

Json calibration_to_json(const ExperimentConfig& cfg, const Experiment& exp,
                         const Calibration& cal);

enum class SuiteKind { Exact, Statistical, All };

// Suite assembly over the verify module. The exact suite pairs the
// config-driven instances with a fixed four-family catalog; the statistical
// suite runs every Monte Carlo check whose preconditions the config satisfies.
std::vector<CheckReport> run_suites(const ExperimentConfig& cfg, const Experiment& exp,
                                    SuiteKind kind, const VerifyOptions& opt);

Json report_to_json(const CheckReport& rep);
Json reports_to_json(const std::vector<CheckReport>& reps, const VerifyOptions& opt,
                     SuiteKind kind);

}  // namespace unlearn
