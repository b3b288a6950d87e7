#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "unlearn/sgd_engine.hpp"

using namespace unlearn;

namespace {

ProjectionSet ball(int d, double radius) {
  ProjectionSet set;
  set.center = Vec::Zero(d);
  set.radius = radius;
  return set;
}

Dataset dataset_from_points(const std::vector<Vec>& xs, double radius) {
  Dataset ds;
  ds.declared_radius = radius;
  for (const Vec& x : xs) {
    Sample z;
    z.x = x;
    ds.samples.push_back(z);
  }
  return ds;
}

RunConfig base_cfg(int d, double eta, std::int64_t T, std::int64_t K, std::int64_t b,
                   bool projected, AlgorithmKind alg) {
  RunConfig cfg;
  cfg.eta = eta;
  cfg.T = T;
  cfg.K = K;
  cfg.batch_size = b;
  cfg.dimension = d;
  cfg.projected = projected;
  cfg.algorithm = alg;
  cfg.seed = 99;
  cfg.theta0 = Vec::Zero(d);
  return cfg;
}

}  // namespace

TEST_CASE("step_sgd arithmetic") {
  const LossSpec spec =
      certified_constants(Family::Quadratic, {}, 10.0, ball(2, 100.0), Vec::Zero(2));
  // One quadratic sample at z = theta - g realizes the gradient estimator g.
  Vec theta(2);
  theta << 1.0, 1.0;
  Vec z(2);
  z << 0.5, 1.5;  // gradient estimator (0.5, -0.5)
  const Dataset ds = dataset_from_points({z}, 10.0);
  BatchDraw batch;
  batch.indices = {0};

  const Vec next = step_sgd(theta, batch, ds, spec, 0.1);
  CHECK(next[0] == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(next[1] == doctest::Approx(1.05).epsilon(1e-15));

  CHECK(step_sgd(theta, batch, ds, spec, 0.0) == theta);  // eta = 0 identity
  const Vec at_min = step_sgd(z, batch, ds, spec, 0.3);
  CHECK((at_min - z).norm() == 0.0);  // zero gradient at its own sample
}

TEST_CASE("step_psgd projects back onto the ball") {
  const ProjectionSet set = ball(2, 1.0);
  const LossSpec spec = certified_constants(Family::Quadratic, {}, 10.0, set, Vec::Zero(2));
  Vec z(2);
  z << 3.0, 0.0;
  const Dataset ds = dataset_from_points({z}, 10.0);
  BatchDraw batch;
  batch.indices = {0};
  // Starting at the sample keeps the gradient zero; the raw step stays at
  // (3,0) and the projection maps it to (1,0).
  const Vec projected = step_psgd(z, batch, ds, spec, 0.1, set);
  CHECK(projected[0] == doctest::Approx(1.0));
  CHECK(projected[1] == 0.0);

  Vec inside(2);
  inside << 0.2, 0.1;
  const Dataset ds2 = dataset_from_points({inside}, 10.0);
  const Vec kept = step_psgd(inside, batch, ds2, spec, 0.1, set);
  CHECK(kept == inside);
}

TEST_CASE("run_learn: T=0, determinism, closed-form contraction") {
  const LossSpec spec =
      certified_constants(Family::Quadratic, {}, 10.0, ball(1, 100.0), Vec::Zero(1));

  // All samples identical, so every with-replacement batch equals the full
  // gradient and the recursion is exactly geometric.
  const Vec point = Vec::Constant(1, 2.0);
  const Dataset ds = dataset_from_points({point, point, point, point}, 10.0);

  RunConfig cfg = base_cfg(1, 0.1, 0, 0, 4, false, AlgorithmKind::R2D);
  cfg.theta0 = Vec::Constant(1, -1.0);
  const CouplingStream stream(cfg.seed, 0);
  CHECK(run_learn(cfg, ds, spec, stream).final == cfg.theta0);

  cfg.T = 30;
  cfg.K = 10;
  cfg.store_iterates = true;
  const TrajectoryRecord rec = run_learn(cfg, ds, spec, stream);
  const TrajectoryRecord rec2 = run_learn(cfg, ds, spec, stream);
  for (std::int64_t t = 0; t <= 30; ++t) {
    CHECK(rec.iterates[t] == rec2.iterates[t]);  // bitwise determinism
    const double want = 2.0 + std::pow(0.9, static_cast<double>(t)) * (-1.0 - 2.0);
    CHECK(rec.iterates[t][0] == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(rec.checkpoint_step == 20);
  CHECK(rec.checkpoint == rec.iterates[20]);
}

TEST_CASE("retrain and R2D unlearn coincide with learn under a no-effect request") {
  // Identical samples: replacing an unlearned draw cannot change any gradient.
  const Vec point = Vec::Constant(2, 0.5);
  const Dataset ds = dataset_from_points({point, point, point, point, point}, 10.0);
  const LossSpec spec =
      certified_constants(Family::Quadratic, {}, 10.0, ball(2, 100.0), Vec::Zero(2));
  UnlearnRequest req;
  req.indices = {1, 3};

  RunConfig cfg = base_cfg(2, 0.2, 25, 10, 3, false, AlgorithmKind::R2D);
  cfg.theta0 = Vec::Constant(2, -2.0);
  cfg.store_iterates = true;
  const CouplingStream stream(cfg.seed, 0);

  const TrajectoryRecord learn = run_learn(cfg, ds, spec, stream);
  const TrajectoryRecord retrain = run_retrain(cfg, ds, req, spec, stream);
  for (std::int64_t t = 0; t <= 25; ++t) {
    CHECK((learn.iterates[t] - retrain.iterates[t]).norm() == 0.0);
  }
  const TrajectoryRecord unlearn = run_unlearn(cfg, ds, req, spec, stream, learn);
  CHECK((unlearn.final - retrain.final).norm() == 0.0);
}

TEST_CASE("R2D identities: K=0, K=T, checkpoint wiring") {
  const Dataset ds = synthesize_dataset(12, 2, 1.0, 3);
  const LossSpec spec =
      certified_constants(Family::Quadratic, {}, 1.0, ball(2, 50.0), Vec::Zero(2));
  const UnlearnRequest req = make_request(ds, SelectionRule::FirstM, 3, 0);

  SUBCASE("K = 0 returns the final iterate untouched") {
    RunConfig cfg = base_cfg(2, 0.1, 15, 0, 2, false, AlgorithmKind::R2D);
    const CouplingStream stream(cfg.seed, 0);
    const TrajectoryRecord learn = run_learn(cfg, ds, spec, stream);
    const TrajectoryRecord unlearn = run_unlearn(cfg, ds, req, spec, stream, learn);
    CHECK(unlearn.final == learn.final);
    CHECK(learn.checkpoint_step == 15);
  }
  SUBCASE("K = T reproduces the coupled retrain bitwise") {
    RunConfig cfg = base_cfg(2, 0.1, 15, 15, 2, false, AlgorithmKind::R2D);
    const CouplingStream stream(cfg.seed, 0);
    const TrajectoryRecord learn = run_learn(cfg, ds, spec, stream);
    const TrajectoryRecord retrain = run_retrain(cfg, ds, req, spec, stream);
    const TrajectoryRecord unlearn = run_unlearn(cfg, ds, req, spec, stream, learn);
    CHECK((unlearn.final - retrain.final).norm() == 0.0);
  }
  SUBCASE("D2D starts from theta_T") {
    RunConfig cfg = base_cfg(2, 0.1, 15, 4, 2, false, AlgorithmKind::D2D);
    cfg.store_iterates = true;
    const CouplingStream stream(cfg.seed, 0);
    const TrajectoryRecord learn = run_learn(cfg, ds, spec, stream);
    CHECK(learn.checkpoint_step == 15);
    const TrajectoryRecord unlearn = run_unlearn(cfg, ds, req, spec, stream, learn);
    CHECK(unlearn.iterates.front() == learn.final);
  }
  SUBCASE("checkpoint from a mismatched config is rejected") {
    RunConfig cfg = base_cfg(2, 0.1, 15, 4, 2, false, AlgorithmKind::R2D);
    const CouplingStream stream(cfg.seed, 0);
    const TrajectoryRecord learn = run_learn(cfg, ds, spec, stream);
    RunConfig other = cfg;
    other.K = 7;  // expects checkpoint at T-7, not T-4
    CHECK_THROWS_AS(run_unlearn(other, ds, req, spec, stream, learn), state_error);
    TrajectoryRecord empty;
    CHECK_THROWS_AS(run_unlearn(cfg, ds, req, spec, stream, empty), state_error);
  }
}

TEST_CASE("PSGD iterates stay inside the projection set") {
  const ProjectionSet set = ball(3, 1.5);
  const LossSpec spec = certified_constants(Family::Quadratic, {}, 1.0, set, Vec::Zero(3));
  const Dataset ds = synthesize_dataset(20, 3, 1.0, 4);
  RunConfig cfg = base_cfg(3, 0.5, 40, 10, 4, true, AlgorithmKind::R2D);
  cfg.store_iterates = true;
  const CouplingStream stream(cfg.seed, 0);
  const TrajectoryRecord rec = run_learn(cfg, ds, spec, stream);
  for (const Vec& theta : rec.iterates) {
    CHECK(theta.norm() <= 1.5 + 1e-12);
  }
}

TEST_CASE("same-loss coupling contracts at sqrt(1-eta*mu) per step") {
  const ProjectionSet set = ball(3, 2.0);
  const LossSpec spec = certified_constants(Family::Quadratic, {}, 1.0, set, Vec::Zero(3));
  const Dataset ds = synthesize_dataset(30, 3, 1.0, 8);
  const UnlearnRequest req = make_request(ds, SelectionRule::RandomSeeded, 6, 2);

  RunConfig cfg = base_cfg(3, 0.1, 60, 25, 4, true, AlgorithmKind::R2D);
  cfg.theta0 = Vec::Zero(3);
  cfg.store_iterates = true;
  const double gamma = std::sqrt(1.0 - cfg.eta * spec.strong_convexity_mu);

  for (std::uint32_t r = 0; r < 20; ++r) {
    const CouplingStream stream(cfg.seed, r);
    const TrajectoryRecord learn = run_learn(cfg, ds, spec, stream);
    const TrajectoryRecord retrain = run_retrain(cfg, ds, req, spec, stream);
    const TrajectoryRecord unlearn = run_unlearn(cfg, ds, req, spec, stream, learn);
    const double d0 = (retrain.iterates[cfg.T - cfg.K] - unlearn.iterates[0]).norm();
    for (std::int64_t t = 0; t <= cfg.K; ++t) {
      const double dist =
          (retrain.iterates[cfg.T - cfg.K + t] - unlearn.iterates[t]).norm();
      const double bound = std::pow(gamma, static_cast<double>(t)) * d0;
      CHECK(dist <= bound * (1.0 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("coupled triple distances start at zero and stay nonnegative") {
  const ProjectionSet set = ball(2, 2.0);
  const LossSpec spec = certified_constants(Family::Quadratic, {}, 1.0, set, Vec::Zero(2));
  const Dataset ds = synthesize_dataset(25, 2, 1.0, 6);
  const UnlearnRequest req = make_request(ds, SelectionRule::FirstM, 5, 0);
  RunConfig cfg = base_cfg(2, 0.1, 30, 10, 4, true, AlgorithmKind::R2D);
  const CoupledTriple triple = run_coupled_triple(cfg, ds, req, spec, 0);
  CHECK(triple.dist_train_retrain[0] == 0.0);
  for (double d : triple.dist_train_retrain) CHECK(d >= 0.0);
  CHECK(triple.dist_final >= 0.0);
  CHECK(triple.learn.iterates.empty());  // thinned by default

  const CoupledTriple again = run_coupled_triple(cfg, ds, req, spec, 0);
  CHECK(triple.dist_final == again.dist_final);  // bitwise reproducible
}

TEST_CASE("b = 64n with-replacement runs agree with deterministic GD in the mean") {
  const int d = 2;
  const LossSpec spec =
      certified_constants(Family::Quadratic, {}, 1.0, ball(d, 100.0), Vec::Zero(d));
  const Dataset ds = synthesize_dataset(4, d, 1.0, 14);
  const std::int64_t T = 20;
  const double eta = 0.2;

  // Deterministic full-batch oracle.
  Vec gd = Vec::Zero(d);
  gd[0] = 1.0;
  for (std::int64_t t = 0; t < T; ++t) gd -= eta * full_gradient(spec, ds, gd);

  RunConfig cfg = base_cfg(d, eta, T, 0, 64 * 4, false, AlgorithmKind::R2D);
  cfg.theta0 = Vec::Zero(d);
  cfg.theta0[0] = 1.0;
  const std::int64_t R = 400;
  std::vector<Vec> finals(R);
  for (std::int64_t r = 0; r < R; ++r) {
    finals[r] = run_learn(cfg, ds, spec, CouplingStream(cfg.seed, static_cast<std::uint32_t>(r)))
                    .final;
  }
  for (int j = 0; j < d; ++j) {
    double mean = 0.0, ss = 0.0;
    for (const Vec& f : finals) mean += f[j];
    mean /= static_cast<double>(R);
    for (const Vec& f : finals) ss += (f[j] - mean) * (f[j] - mean);
    const double se = std::sqrt(ss / (R - 1.0)) / std::sqrt(static_cast<double>(R));
    CHECK(std::abs(mean - gd[j]) <= 4.0 * se + 1e-9);
  }
}

TEST_CASE("divergent runs abort with the failing step") {
  const LossSpec spec =
      certified_constants(Family::Quadratic, {}, 1.0, ball(1, 1e30), Vec::Zero(1));
  const Dataset ds = dataset_from_points({Vec::Zero(1)}, 1.0);
  RunConfig cfg = base_cfg(1, 3.0, 80, 0, 1, false, AlgorithmKind::R2D);
  cfg.theta0 = Vec::Constant(1, 1e6);  // |1 - eta| = 2 doubles the iterate each step
  const CouplingStream stream(cfg.seed, 0);
  CHECK_THROWS_AS(run_learn(cfg, ds, spec, stream), numeric_error);
  try {
    run_learn(cfg, ds, spec, stream);
  } catch (const numeric_error& e) {
    CHECK(e.step > 0);
  }
}

TEST_CASE("run config validation") {
  const ProjectionSet set = ball(2, 1.0);
  const LossSpec spec = certified_constants(Family::Quadratic, {}, 1.0, set, Vec::Zero(2));
  RunConfig cfg = base_cfg(2, 0.1, 10, 3, 2, true, AlgorithmKind::R2D);
  CHECK_NOTHROW(validate_run_config(cfg, spec));
  RunConfig bad = cfg;
  bad.K = 11;
  CHECK_THROWS_AS(validate_run_config(bad, spec), config_error);
  bad = cfg;
  bad.eta = 0.0;
  CHECK_THROWS_AS(validate_run_config(bad, spec), config_error);
  bad = cfg;
  bad.theta0 = Vec::Constant(2, 9.0);  // outside the projection ball
  CHECK_THROWS_AS(validate_run_config(bad, spec), config_error);
}
