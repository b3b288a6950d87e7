#include "unlearn/sgd_engine.hpp"

#include <cmath>
#include <utility>

namespace unlearn {
namespace {

Vec batch_gradient(const BatchDraw& batch, const Dataset& dataset, const LossSpec& spec,
                   const Vec& theta) {
  Vec g = Vec::Zero(theta.size());
  for (std::int64_t idx : batch.indices) {
    accumulate_grad(spec, dataset.samples[idx], theta, 1.0, g);
  }
  return g / static_cast<double>(batch.indices.size());
}

void check_iterate(const Vec& theta, std::int64_t step) {
  if (!theta.allFinite() || theta.norm() > kDivergenceNormLimit) {
    throw numeric_error("iterate diverged", step);
  }
}

// Shared trajectory driver. `batch_at(t)` supplies the step-t minibatch
// (1-based steps); `grad_norm_at(theta)` is evaluated at the pre-step iterate
// when diagnostics are on.
template <typename BatchAt, typename GradNormAt>
TrajectoryRecord drive(const RunConfig& cfg, const Dataset& dataset, const LossSpec& spec,
                       const Vec& start, std::int64_t steps, std::int64_t checkpoint_step,
                       BatchAt&& batch_at, GradNormAt&& grad_norm_at) {
  TrajectoryRecord rec;
  rec.steps = steps;
  rec.checkpoint_step = checkpoint_step;
  Vec theta = start;
  if (cfg.store_iterates) {
    rec.iterates.reserve(steps + 1);
    rec.iterates.push_back(theta);
    rec.batches.reserve(steps);
  }
  if (cfg.record_grad_norms) rec.grad_norms.reserve(steps);
  if (checkpoint_step == 0) rec.checkpoint = theta;
  for (std::int64_t t = 1; t <= steps; ++t) {
    if (cfg.record_grad_norms) rec.grad_norms.push_back(grad_norm_at(theta));
    BatchDraw batch = batch_at(t);
    const Vec g = batch_gradient(batch, dataset, spec, theta);
    theta -= cfg.eta * g;
    if (cfg.projected) theta = project(*spec.projection, theta);
    check_iterate(theta, t);
    if (cfg.store_iterates) {
      rec.iterates.push_back(theta);
      rec.batches.push_back(std::move(batch));
    }
    if (t == checkpoint_step) rec.checkpoint = theta;
  }
  rec.final = theta;
  return rec;
}

}  // namespace

void validate_run_config(const RunConfig& cfg, const LossSpec& spec) {
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) {
    throw config_error("run config: eta must be positive and finite");
  }
  if (cfg.T < 0 || cfg.K < 0 || cfg.K > cfg.T) {
    throw config_error("run config: need 0 <= K <= T");
  }
  if (cfg.batch_size < 1) throw config_error("run config: batch size must be >= 1");
  if (cfg.dimension < 1) throw config_error("run config: dimension must be >= 1");
  if (cfg.theta0.size() != cfg.dimension || !cfg.theta0.allFinite()) {
    throw config_error("run config: theta0 must be finite with matching dimension");
  }
  if (cfg.projected && !spec.projection) {
    throw config_error("run config: projected run needs a projection set");
  }
  if (cfg.projected) {
    const Vec p = project(*spec.projection, cfg.theta0);
    if ((p - cfg.theta0).norm() > 0.0) {
      throw config_error("run config: theta0 must lie inside the projection set");
    }
  }
}

Vec step_sgd(const Vec& theta, const BatchDraw& batch, const Dataset& dataset,
             const LossSpec& spec, double eta) {
  Vec next = theta - eta * batch_gradient(batch, dataset, spec, theta);
  if (!next.allFinite()) throw numeric_error("sgd step produced non-finite iterate", 0);
  return next;
}

Vec step_psgd(const Vec& theta, const BatchDraw& batch, const Dataset& dataset,
              const LossSpec& spec, double eta, const ProjectionSet& proj) {
  return project(proj, step_sgd(theta, batch, dataset, spec, eta));
}

TrajectoryRecord run_learn(const RunConfig& cfg, const Dataset& dataset,
                           const LossSpec& spec, const CouplingStream& stream) {
  validate_run_config(cfg, spec);
  const std::int64_t n = dataset.size();
  const std::int64_t checkpoint =
      cfg.algorithm == AlgorithmKind::R2D ? cfg.T - cfg.K : cfg.T;
  return drive(
      cfg, dataset, spec, cfg.theta0, cfg.T, checkpoint,
      [&](std::int64_t t) {
        return sample_batch(stream, Role::Train, n, cfg.batch_size, t);
      },
      [&](const Vec& theta) { return full_gradient(spec, dataset, theta).norm(); });
}

TrajectoryRecord run_retrain(const RunConfig& cfg, const Dataset& dataset,
                             const UnlearnRequest& request, const LossSpec& spec,
                             const CouplingStream& stream) {
  validate_run_config(cfg, spec);
  const std::int64_t n = dataset.size();
  return drive(
      cfg, dataset, spec, cfg.theta0, cfg.T, cfg.T,
      [&](std::int64_t t) {
        const BatchDraw full = sample_batch(stream, Role::Train, n, cfg.batch_size, t);
        return couple_batch(full, dataset, request, stream, t);
      },
      [&](const Vec& theta) {
        return full_gradient_retained(spec, dataset, request, theta).norm();
      });
}

TrajectoryRecord run_unlearn(const RunConfig& cfg, const Dataset& dataset,
                             const UnlearnRequest& request, const LossSpec& spec,
                             const CouplingStream& stream,
                             const TrajectoryRecord& learn_record) {
  validate_run_config(cfg, spec);
  if (learn_record.checkpoint.size() != cfg.dimension) {
    throw state_error("run_unlearn: learning record has no checkpoint for this config");
  }
  const std::int64_t expected_checkpoint =
      cfg.algorithm == AlgorithmKind::R2D ? cfg.T - cfg.K : cfg.T;
  if (learn_record.checkpoint_step != expected_checkpoint) {
    throw state_error("run_unlearn: checkpoint was saved at step " +
                      std::to_string(learn_record.checkpoint_step) + ", expected " +
                      std::to_string(expected_checkpoint));
  }
  const std::int64_t n = dataset.size();
  if (cfg.algorithm == AlgorithmKind::R2D) {
    // Replay the retraining batch keys for steps T-K+1..T so the unlearning
    // trajectory shares every draw with the retraining one.
    return drive(
        cfg, dataset, spec, learn_record.checkpoint, cfg.K, cfg.K,
        [&](std::int64_t t) {
          const std::int64_t s = cfg.T - cfg.K + t;
          const BatchDraw full = sample_batch(stream, Role::Train, n, cfg.batch_size, s);
          return couple_batch(full, dataset, request, stream, s);
        },
        [&](const Vec& theta) {
          return full_gradient_retained(spec, dataset, request, theta).norm();
        });
  }
  return drive(
      cfg, dataset, spec, learn_record.checkpoint, cfg.K, cfg.K,
      [&](std::int64_t t) {
        return sample_batch_retained(stream, Role::Unlearn, dataset, request,
                                     cfg.batch_size, t);
      },
      [&](const Vec& theta) {
        return full_gradient_retained(spec, dataset, request, theta).norm();
      });
}

CoupledTriple run_coupled_triple(const RunConfig& cfg, const Dataset& dataset,
                                 const UnlearnRequest& request, const LossSpec& spec,
                                 std::uint32_t replica_id) {
  const CouplingStream stream(cfg.seed, replica_id);

  RunConfig traced = cfg;
  traced.store_iterates = true;

  CoupledTriple triple;
  triple.learn = run_learn(traced, dataset, spec, stream);
  triple.retrain = run_retrain(traced, dataset, request, spec, stream);
  triple.unlearn = run_unlearn(cfg, dataset, request, spec, stream, triple.learn);

  triple.dist_train_retrain.resize(cfg.T + 1);
  for (std::int64_t t = 0; t <= cfg.T; ++t) {
    triple.dist_train_retrain[t] =
        (triple.learn.iterates[t] - triple.retrain.iterates[t]).norm();
  }
  triple.dist_final = (triple.retrain.final - triple.unlearn.final).norm();

  if (!cfg.store_iterates) {
    triple.learn.iterates.clear();
    triple.learn.batches.clear();
    triple.retrain.iterates.clear();
    triple.retrain.batches.clear();
  }
  return triple;
}

}  // namespace unlearn
