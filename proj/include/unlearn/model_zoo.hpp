#pragma once

#include <optional>
#include <string>

#include "unlearn/common.hpp"

namespace unlearn {

enum class Family { Quadratic, RidgeLogistic, Logistic, SmoothNonconvex };
enum class ConvexityClass { StronglyConvex, Convex, Nonconvex };

// One data point: feature vector plus a scalar label. Quadratic losses ignore
// the label and fit theta directly to x.
struct Sample {
  Vec x;
  double y = 0.0;
};

// Closed Euclidean ball the projected iterates live in.
struct ProjectionSet {
  Vec center;
  double radius = 0.0;
};

// Euclidean projection onto the ball (radial rescale outside it).
Vec project(const ProjectionSet& set, const Vec& theta);

// A sample-loss family together with analytically certified constants. The
// constants are derived from the family and the data-domain radius only, never
// from dataset values, so they are safe inputs to the noise calibration.
struct LossSpec {
  Family family = Family::Quadratic;
  int dimension = 0;
  double ridge_lambda = 0.0;   // only meaningful for RidgeLogistic
  double data_radius = 0.0;    // bound on ||x|| over the data domain

  double smoothness_L = 0.0;
  double strong_convexity_mu = 0.0;
  ConvexityClass convexity_class = ConvexityClass::StronglyConvex;
  double grad_bound_G = 0.0;   // sup of ||grad|| over the projection set
  double noise_B = 0.0;
  double noise_C = 0.0;
  double loss_at_init = 0.0;   // sup over the data domain of loss(z; theta0)
  double interp_const = 0.0;   // Delta^inf upper bound

  std::optional<ProjectionSet> projection;
};

double eval_loss(const LossSpec& spec, const Sample& z, const Vec& theta);
Vec eval_grad(const LossSpec& spec, const Sample& z, const Vec& theta);

// out += scale * grad(spec, z, theta) without allocating. Hot path for the
// trajectory engine; assumes inputs already validated.
void accumulate_grad(const LossSpec& spec, const Sample& z, const Vec& theta,
                     double scale, Vec& out);

struct FamilyParams {
  double ridge_lambda = 0.0;
};

// Builds a LossSpec with every constant in closed form:
//   L, mu         per-family curvature bounds,
//   G             sup of ||grad|| over the projection ball (or a global bound
//                 when the family has one),
//   ell0          sup over the data domain of loss(z; theta0),
//   (B, C)        relative second-moment bound, valid for every dataset drawn
//                 from the domain and every batch size,
//   Delta^inf     interpolation-gap bound.
LossSpec certified_constants(Family family, const FamilyParams& params,
                             double data_radius,
                             const std::optional<ProjectionSet>& projection,
                             const Vec& theta0);

std::string family_name(Family family);
Family family_from_name(const std::string& name);
std::string convexity_name(ConvexityClass c);

}  // namespace unlearn
