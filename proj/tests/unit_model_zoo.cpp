#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "unlearn/verify.hpp"

using namespace unlearn;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ProjectionSet ball(int d, double radius) {
  ProjectionSet set;
  set.center = Vec::Zero(d);
  set.radius = radius;
  return set;
}

// Straightforward re-transcription, independent of the library code path.
double ridge_logistic_oracle(const Vec& x, double y, const Vec& theta, double lambda) {
  double u = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) u += x[i] * theta[i];
  return std::log(1.0 + std::exp(-y * u)) + 0.5 * lambda * theta.squaredNorm();
}

}  // namespace

TEST_CASE("quadratic loss and gradient at pinned points") {
  const LossSpec spec =
      certified_constants(Family::Quadratic, {}, 2.0, ball(2, 3.0), Vec::Zero(2));
  Sample z;
  z.x = vec2(0.0, 0.0);
  CHECK(eval_loss(spec, z, vec2(0.0, 0.0)) == 0.0);
  z.x = vec2(1.0, 0.0);
  CHECK(eval_loss(spec, z, vec2(0.0, 0.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eval_grad(spec, z, vec2(1.0, 0.0)).norm() == 0.0);
  z.x = vec2(0.0, 0.0);
  const Vec g = eval_grad(spec, z, vec2(2.0, 0.0));
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == 0.0);
}

TEST_CASE("ridge logistic matches an independent transcription to 1e-12") {
  FamilyParams params;
  params.ridge_lambda = 0.1;
  const LossSpec spec =
      certified_constants(Family::RidgeLogistic, params, 1.0, ball(3, 2.0), Vec::Zero(3));
  const CouplingStream s(21);
  for (int i = 0; i < 200; ++i) {
    Sample z;
    z.x = Vec(3);
    Vec theta(3);
    for (int j = 0; j < 3; ++j) {
      const StreamKey kx{Role::Train, DrawKind::Probe, static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(j)};
      const StreamKey kt{Role::Train, DrawKind::Probe, static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(j) + 3};
      z.x[j] = 0.5 * s.gaussian(kx, 0);
      theta[j] = 2.0 * s.gaussian(kt, 0);
    }
    const StreamKey ky{Role::Train, DrawKind::Probe, static_cast<std::uint64_t>(i), 7};
    z.y = (s.word(ky, 0) & 1ULL) ? 1.0 : -1.0;
    const double want = ridge_logistic_oracle(z.x, z.y, theta, 0.1);
    CHECK(eval_loss(spec, z, theta) ==
          doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("gradients agree with central finite differences") {
  VerifyOptions opt;
  opt.trials = 100;
  opt.seed = 5;
  FamilyParams ridge_params;
  ridge_params.ridge_lambda = 0.1;
  const Vec theta0 = Vec::Zero(4);
  for (Family fam : {Family::Quadratic, Family::RidgeLogistic, Family::Logistic,
                     Family::SmoothNonconvex}) {
    const FamilyParams params = fam == Family::RidgeLogistic ? ridge_params : FamilyParams{};
    const LossSpec spec = certified_constants(fam, params, 1.0, ball(4, 2.0), theta0);
    const CheckReport rep = check_gradient_finite_diff(spec, opt);
    INFO(rep.name);
    CHECK(rep.violations == 0);
  }
}

TEST_CASE("certified constants: closed forms and invariants") {
  const Vec theta0 = [] {
    Vec t = Vec::Zero(5);
    t[0] = 1.0;
    return t;
  }();

  SUBCASE("quadratic") {
    const LossSpec s = certified_constants(Family::Quadratic, {}, 1.0, ball(5, 2.0), theta0);
    CHECK(s.smoothness_L == 1.0);
    CHECK(s.strong_convexity_mu == 1.0);
    CHECK(s.convexity_class == ConvexityClass::StronglyConvex);
    CHECK(s.grad_bound_G == doctest::Approx(3.0));          // r + R_z
    CHECK(s.loss_at_init == doctest::Approx(2.0));          // (|theta0| + R)^2 / 2
    CHECK(s.noise_B == 1.0);
    CHECK(s.noise_C == doctest::Approx(1.0));
    CHECK(s.interp_const == doctest::Approx(0.5));
  }
  SUBCASE("ridge logistic: mu = lambda, L = lambda + R^2/4") {
    FamilyParams params;
    params.ridge_lambda = 0.1;
    const LossSpec s =
        certified_constants(Family::RidgeLogistic, params, 1.0, ball(5, 2.0), theta0);
    CHECK(s.strong_convexity_mu == doctest::Approx(0.1));
    CHECK(s.smoothness_L == doctest::Approx(0.35));
    CHECK(s.grad_bound_G == doctest::Approx(1.0 + 0.1 * 2.0));
    CHECK(s.strong_convexity_mu <= s.smoothness_L);
  }
  SUBCASE("logistic is convex with a global gradient bound") {
    const LossSpec s = certified_constants(Family::Logistic, {}, 1.0, ball(5, 2.0), theta0);
    CHECK(s.strong_convexity_mu == 0.0);
    CHECK(s.convexity_class == ConvexityClass::Convex);
    CHECK(s.smoothness_L == doctest::Approx(0.25));
    CHECK(s.grad_bound_G == doctest::Approx(1.0));
  }
  SUBCASE("smooth nonconvex family") {
    const LossSpec s =
        certified_constants(Family::SmoothNonconvex, {}, 1.0, ball(5, 2.0), theta0);
    CHECK(s.convexity_class == ConvexityClass::Nonconvex);
    CHECK(s.smoothness_L == doctest::Approx(0.125));
    CHECK(s.grad_bound_G == doctest::Approx(1.0 / (6.0 * std::sqrt(3.0))));
    CHECK(s.noise_B == 0.0);
    CHECK(s.loss_at_init == doctest::Approx(0.25));
  }
  SUBCASE("mu <= L for every family") {
    FamilyParams ridge_params;
    ridge_params.ridge_lambda = 0.3;
    for (Family fam : {Family::Quadratic, Family::RidgeLogistic, Family::Logistic,
                       Family::SmoothNonconvex}) {
      const FamilyParams params =
          fam == Family::RidgeLogistic ? ridge_params : FamilyParams{};
      const LossSpec s = certified_constants(fam, params, 2.0, ball(5, 1.0), theta0);
      CHECK(s.strong_convexity_mu <= s.smoothness_L);
      CHECK((s.convexity_class == ConvexityClass::StronglyConvex) ==
            (s.strong_convexity_mu > 0.0));
    }
  }
  SUBCASE("invalid parameters are rejected") {
    FamilyParams bad;
    bad.ridge_lambda = 0.0;
    CHECK_THROWS_AS(certified_constants(Family::RidgeLogistic, bad, 1.0, ball(5, 2.0), theta0),
                    config_error);
    CHECK_THROWS_AS(certified_constants(Family::Quadratic, {}, 0.0, ball(5, 2.0), theta0),
                    config_error);
  }
}

TEST_CASE("certificates hold on random draws") {
  VerifyOptions opt;
  opt.trials = 2000;
  opt.seed = 17;
  const Vec theta0 = [] {
    Vec t = Vec::Zero(3);
    t[0] = 0.5;
    return t;
  }();
  FamilyParams ridge_params;
  ridge_params.ridge_lambda = 0.2;
  for (Family fam : {Family::Quadratic, Family::RidgeLogistic, Family::Logistic,
                     Family::SmoothNonconvex}) {
    const FamilyParams params = fam == Family::RidgeLogistic ? ridge_params : FamilyParams{};
    const LossSpec spec = certified_constants(fam, params, 1.5, ball(3, 2.5), theta0);
    CHECK(check_smoothness(spec, opt).violations == 0);
    CHECK(check_grad_bound(spec, opt).violations == 0);
    CHECK(check_loss_at_init(spec, theta0, opt).violations == 0);
    if (spec.convexity_class == ConvexityClass::StronglyConvex) {
      CHECK(check_strong_convexity(spec, opt).violations == 0);
    }
  }
}

TEST_CASE("smooth nonconvex family is genuinely nonconvex") {
  const LossSpec spec =
      certified_constants(Family::SmoothNonconvex, {}, 1.0, ball(1, 5.0), Vec::Zero(1));
  Sample z;
  z.x = Vec::Constant(1, 1.0);
  z.y = 0.0;
  // Around u ~ 2 the link has negative curvature; the convexity inequality fails.
  const Vec t1 = Vec::Constant(1, 1.5);
  const Vec t2 = Vec::Constant(1, 2.5);
  const Vec mid = 0.5 * (t1 + t2);
  const double chord = 0.5 * (eval_loss(spec, z, t1) + eval_loss(spec, z, t2));
  CHECK(eval_loss(spec, z, mid) > chord + 1e-6);
}

TEST_CASE("non-finite inputs raise domain errors") {
  const LossSpec spec =
      certified_constants(Family::Quadratic, {}, 1.0, ball(2, 2.0), Vec::Zero(2));
  Sample z;
  z.x = vec2(0.0, 0.0);
  Vec bad = vec2(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_AS(eval_loss(spec, z, bad), std::domain_error);
  CHECK_THROWS_AS(eval_grad(spec, z, bad), std::domain_error);
}

TEST_CASE("projection is the radial map onto the ball") {
  const ProjectionSet set = ball(2, 1.0);
  CHECK(project(set, vec2(0.3, 0.2)) == vec2(0.3, 0.2));
  const Vec p = project(set, vec2(3.0, 0.0));
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == 0.0);
}
