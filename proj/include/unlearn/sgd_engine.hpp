#pragma once

#include <cstdint>
#include <vector>

#include "unlearn/data_engine.hpp"

namespace unlearn {

enum class AlgorithmKind { R2D, D2D };

struct RunConfig {
  double eta = 0.0;
  std::int64_t T = 0;
  std::int64_t K = 0;
  std::int64_t batch_size = 1;
  int dimension = 0;
  bool projected = false;
  AlgorithmKind algorithm = AlgorithmKind::R2D;
  std::uint64_t seed = 0;
  Vec theta0;
  bool store_iterates = false;    // keep the full iterate list and batches
  bool record_grad_norms = false; // full-gradient norm at every pre-step iterate
};

void validate_run_config(const RunConfig& cfg, const LossSpec& spec);

struct TrajectoryRecord {
  std::vector<Vec> iterates;        // only when store_iterates
  std::vector<BatchDraw> batches;   // only when store_iterates
  Vec checkpoint;                   // theta_{T-K} for R2D, theta_T for D2D
  std::int64_t checkpoint_step = 0;
  Vec final;
  std::int64_t steps = 0;
  std::vector<double> grad_norms;   // ||grad L(theta_t)||, t = 0..steps-1
};

// One plain (projected) SGD step on the given batch of dataset indices.
Vec step_sgd(const Vec& theta, const BatchDraw& batch, const Dataset& dataset,
             const LossSpec& spec, double eta);
Vec step_psgd(const Vec& theta, const BatchDraw& batch, const Dataset& dataset,
              const LossSpec& spec, double eta, const ProjectionSet& proj);

// T steps on the full dataset from theta0. No noise is added here; release
// noise is the calibration module's job.
TrajectoryRecord run_learn(const RunConfig& cfg, const Dataset& dataset,
                           const LossSpec& spec, const CouplingStream& stream);

// T steps on the retained set from theta0, batches coupled slot-wise to the
// learning run's draws.
TrajectoryRecord run_retrain(const RunConfig& cfg, const Dataset& dataset,
                             const UnlearnRequest& request, const LossSpec& spec,
                             const CouplingStream& stream);

// K steps on the retained set. R2D starts from the T-K checkpoint and replays
// the retraining batch keys for steps T-K+1..T; D2D starts from theta_T with
// fresh retained-set draws.
TrajectoryRecord run_unlearn(const RunConfig& cfg, const Dataset& dataset,
                             const UnlearnRequest& request, const LossSpec& spec,
                             const CouplingStream& stream,
                             const TrajectoryRecord& learn_record);

struct CoupledTriple {
  TrajectoryRecord learn;
  TrajectoryRecord retrain;
  TrajectoryRecord unlearn;
  std::vector<double> dist_train_retrain;  // ||theta_t - theta'_t||, t = 0..T
  double dist_final = 0.0;                 // ||theta'_T - theta''_K||
};

CoupledTriple run_coupled_triple(const RunConfig& cfg, const Dataset& dataset,
                                 const UnlearnRequest& request, const LossSpec& spec,
                                 std::uint32_t replica_id);

}  // namespace unlearn
