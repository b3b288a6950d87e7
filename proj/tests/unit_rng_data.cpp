#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "unlearn/data_engine.hpp"
#include "unlearn/verify.hpp"

using namespace unlearn;

namespace {

Dataset quad_dataset(std::initializer_list<double> xs) {
  Dataset ds;
  ds.declared_radius = 10.0;
  for (double v : xs) {
    Sample z;
    z.x = Vec::Constant(1, v);
    ds.samples.push_back(z);
  }
  return ds;
}

LossSpec quad_spec_1d() {
  ProjectionSet ball;
  ball.center = Vec::Zero(1);
  ball.radius = 100.0;
  return certified_constants(Family::Quadratic, {}, 10.0, ball, Vec::Zero(1));
}

}  // namespace

TEST_CASE("keyed draws are pure functions of (seed, replica, key, counter)") {
  const CouplingStream a(123, 0);
  const CouplingStream b(123, 0);
  const StreamKey key{Role::Retrain, DrawKind::Redraw, 17, 3};
  CHECK(a.word(key, 0) == b.word(key, 0));
  CHECK(a.word(key, 0) != a.word(key, 1));
  CHECK(a.word(key, 0) != a.with_replica(1).word(key, 0));
  const StreamKey other{Role::Retrain, DrawKind::Redraw, 17, 4};
  CHECK(a.word(key, 0) != a.word(other, 0));
  CHECK(CouplingStream(124, 0).word(key, 0) != a.word(key, 0));
}

TEST_CASE("uniform01 lands in (0,1] and gaussians have sane moments") {
  const CouplingStream s(7);
  double sum = 0.0, sumsq = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const StreamKey key{Role::Train, DrawKind::Probe, static_cast<std::uint64_t>(i), 0};
    const double u = s.uniform01(key, 0);
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
    const double g = s.gaussian(key, 1);
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / N;
  const double var = sumsq / N - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(N)));
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("sample_batch basics") {
  const CouplingStream s(1);
  const BatchDraw one = sample_batch(s, Role::Train, 1, 3, 5);
  CHECK(one.indices == std::vector<std::int64_t>{0, 0, 0});

  const BatchDraw a = sample_batch(s, Role::Train, 10, 4, 5);
  const BatchDraw b = sample_batch(s, Role::Train, 10, 4, 5);
  CHECK(a.indices == b.indices);
  for (std::int64_t idx : a.indices) {
    CHECK(idx >= 0);
    CHECK(idx < 10);
  }
  CHECK_THROWS_AS(sample_batch(s, Role::Train, 10, 0, 1), config_error);
  CHECK_THROWS_AS(sample_batch(s, Role::Train, 0, 1, 1), config_error);
}

TEST_CASE("couple_batch keeps retained slots and redraws unlearned ones") {
  Dataset ds = quad_dataset({0.0, 1.0, 2.0, 3.0});
  const CouplingStream s(2);

  UnlearnRequest high;  // drop indices 2, 3
  high.indices = {2, 3};

  BatchDraw retained_only;
  retained_only.indices = {0, 1, 0, 1};
  CHECK(couple_batch(retained_only, ds, high, s, 0).indices == retained_only.indices);

  BatchDraw dropped_only;
  dropped_only.indices = {2, 3, 2};
  const BatchDraw coupled = couple_batch(dropped_only, ds, high, s, 0);
  for (std::int64_t idx : coupled.indices) {
    CHECK(idx >= 0);
    CHECK(idx <= 1);  // every slot redrawn from the retained set
  }

  UnlearnRequest full;
  full.indices = {0, 1, 2, 3};
  CHECK_THROWS_AS(couple_batch(dropped_only, ds, full, s, 0), config_error);
}

TEST_CASE("coupling marginal and agreement statistics") {
  const Dataset ds = synthesize_dataset(50, 3, 1.0, 9);
  const UnlearnRequest req = make_request(ds, SelectionRule::RandomSeeded, 5, 4);
  VerifyOptions opt;
  opt.seed = 12;
  CHECK(check_batch_uniformity(50, 200000, opt).pass);
  CHECK(check_coupling_marginal(ds, req, 200000, opt).pass);
  CHECK(check_coupling_agreement(ds, req, 200000, opt).pass);
}

TEST_CASE("unlearning bias matches the two-point hand computation") {
  // samples {0, 2}, unlearn the sample at value 2, theta = 0:
  // grad_full = -1, grad_retained = 0, bias = +1.
  Dataset ds = quad_dataset({0.0, 2.0});
  UnlearnRequest req;
  req.indices = {1};
  const LossSpec spec = quad_spec_1d();
  const Vec bias = unlearning_bias(ds, req, spec, Vec::Zero(1));
  CHECK(bias[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("bias vanishes when the retained set replicates the full set") {
  Dataset ds = quad_dataset({0.5, -1.0, 0.5, -1.0});
  UnlearnRequest req;
  req.indices = {2, 3};  // drop one copy of each duplicated sample
  const LossSpec spec = quad_spec_1d();
  const CouplingStream s(3);
  for (int i = 0; i < 20; ++i) {
    const StreamKey key{Role::Train, DrawKind::Probe, static_cast<std::uint64_t>(i), 0};
    const Vec theta = Vec::Constant(1, 3.0 * s.gaussian(key, 0));
    CHECK(unlearning_bias(ds, req, spec, theta).norm() <= 1e-15);
  }
}

TEST_CASE("bias norm obeys the chi-square bound on random instances") {
  const Dataset ds = synthesize_dataset(40, 3, 2.0, 5);
  const UnlearnRequest req = make_request(ds, SelectionRule::RandomSeeded, 7, 8);
  ProjectionSet ball;
  ball.center = Vec::Zero(3);
  ball.radius = 5.0;
  const LossSpec spec = certified_constants(Family::Quadratic, {}, 2.0, ball, Vec::Zero(3));
  const CouplingStream s(6);
  const double chi2 = chi_square_empirical(40, 7);
  for (int i = 0; i < 100; ++i) {
    Vec theta(3);
    for (int j = 0; j < 3; ++j) {
      const StreamKey key{Role::Train, DrawKind::Probe, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(j)};
      theta[j] = 4.0 * s.gaussian(key, 0);
    }
    double mean_sq = 0.0;
    for (const Sample& z : ds.samples) mean_sq += eval_grad(spec, z, theta).squaredNorm();
    mean_sq /= static_cast<double>(ds.size());
    const double lhs = unlearning_bias(ds, req, spec, theta).squaredNorm();
    CHECK(lhs <= chi2 * mean_sq * (1.0 + 1e-12));
  }
}

TEST_CASE("chi_square_empirical closed form and brute-force oracle") {
  CHECK(chi_square_empirical(100, 10) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK(chi_square_empirical(2, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(chi_square_empirical(10, 10), config_error);
  CHECK_THROWS_AS(chi_square_empirical(10, 0), config_error);

  // Brute force: sum over D of (w(x)-1)^2 / n with w = n/(n-m) on retained, 0 dropped.
  for (auto [n, m] : {std::pair<int, int>{7, 3}, {50, 12}, {9, 8}}) {
    const double w = static_cast<double>(n) / (n - m);
    const double brute = (m * 1.0 + (n - m) * (w - 1.0) * (w - 1.0)) / n;
    CHECK(chi_square_empirical(n, m) == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("synthetic datasets live in the declared ball") {
  const Dataset ds = synthesize_dataset(200, 4, 1.5, 13);
  CHECK(ds.size() == 200);
  for (const Sample& z : ds.samples) {
    CHECK(z.x.norm() <= 1.5 + 1e-12);
    CHECK((z.y == 1.0 || z.y == -1.0));
  }
  // Seeded generation is reproducible.
  const Dataset again = synthesize_dataset(200, 4, 1.5, 13);
  for (int i = 0; i < 200; ++i) {
    CHECK(ds.samples[i].x == again.samples[i].x);
    CHECK(ds.samples[i].y == again.samples[i].y);
  }
}

TEST_CASE("CSV loading round trip and domain validation") {
  const std::string path = "unit_rng_data_tmp.csv";
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "0.5,0.25,1\n";
    out << "-0.25,0.1,-1\n";
  }
  const Dataset ds = load_dataset_csv(path, 2, 1.0);
  CHECK(ds.size() == 2);
  CHECK(ds.samples[0].x[0] == 0.5);
  CHECK(ds.samples[1].y == -1.0);
  CHECK_THROWS_AS(load_dataset_csv(path, 3, 1.0), config_error);   // column mismatch
  CHECK_THROWS_AS(load_dataset_csv(path, 2, 0.01), config_error);  // outside ball
  std::remove(path.c_str());
}

TEST_CASE("request selection rules") {
  const Dataset ds = synthesize_dataset(20, 2, 1.0, 1);
  const UnlearnRequest first = make_request(ds, SelectionRule::FirstM, 4, 0);
  CHECK(first.indices == std::vector<std::int64_t>{0, 1, 2, 3});

  const UnlearnRequest rnd = make_request(ds, SelectionRule::RandomSeeded, 6, 10);
  CHECK(rnd.m() == 6);
  CHECK(std::set<std::int64_t>(rnd.indices.begin(), rnd.indices.end()).size() == 6);
  const UnlearnRequest rnd2 = make_request(ds, SelectionRule::RandomSeeded, 6, 10);
  CHECK(rnd.indices == rnd2.indices);

  const UnlearnRequest expl =
      make_request(ds, SelectionRule::ExplicitIndices, 0, 0, {5, 3, 9});
  CHECK(expl.indices == std::vector<std::int64_t>{3, 5, 9});
  CHECK_THROWS_AS(make_request(ds, SelectionRule::ExplicitIndices, 0, 0, {3, 3}),
                  config_error);
  CHECK_THROWS_AS(make_request(ds, SelectionRule::FirstM, 20, 0), config_error);
  CHECK_THROWS_AS(make_request(ds, SelectionRule::FirstM, 0, 0), config_error);
}
