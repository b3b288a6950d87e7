#include "unlearn/model_zoo.hpp"

#include <cmath>
#include <limits>

namespace unlearn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sigmoid(double u) {
  if (u >= 0.0) {
    const double e = std::exp(-u);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log(1 + exp(u)) without overflow.
inline double softplus(double u) {
  if (u > 0.0) return u + std::log1p(std::exp(-u));
  return std::log1p(std::exp(u));
}

inline void require_finite(const LossSpec& spec, const Sample& z, const Vec& theta) {
  if (!theta.allFinite() || !z.x.allFinite() || !std::isfinite(z.y)) {
    throw std::domain_error("eval: non-finite input");
  }
  if (theta.size() != spec.dimension || z.x.size() != spec.dimension) {
    throw std::domain_error("eval: dimension mismatch");
  }
}

// Link of the nonconvex family: s(u) = (sigmoid(u) - 1/2)^2.
inline double link_value(double u) {
  const double p = sigmoid(u) - 0.5;
  return p * p;
}

inline double link_slope(double u) {
  const double s = sigmoid(u);
  return 2.0 * (s - 0.5) * s * (1.0 - s);
}

}  // namespace

Vec project(const ProjectionSet& set, const Vec& theta) {
  const Vec delta = theta - set.center;
  const double norm = delta.norm();
  if (norm <= set.radius) return theta;
  return set.center + delta * (set.radius / norm);
}

double eval_loss(const LossSpec& spec, const Sample& z, const Vec& theta) {
  require_finite(spec, z, theta);
  switch (spec.family) {
    case Family::Quadratic:
      return 0.5 * (theta - z.x).squaredNorm();
    case Family::RidgeLogistic:
      return softplus(-z.y * z.x.dot(theta)) +
             0.5 * spec.ridge_lambda * theta.squaredNorm();
    case Family::Logistic:
      return softplus(-z.y * z.x.dot(theta));
    case Family::SmoothNonconvex:
      return link_value(z.x.dot(theta) - z.y);
  }
  throw std::logic_error("unknown family");
}

Vec eval_grad(const LossSpec& spec, const Sample& z, const Vec& theta) {
  require_finite(spec, z, theta);
  switch (spec.family) {
    case Family::Quadratic:
      return theta - z.x;
    case Family::RidgeLogistic:
      return (-z.y * sigmoid(-z.y * z.x.dot(theta))) * z.x +
             spec.ridge_lambda * theta;
    case Family::Logistic:
      return (-z.y * sigmoid(-z.y * z.x.dot(theta))) * z.x;
    case Family::SmoothNonconvex:
      return link_slope(z.x.dot(theta) - z.y) * z.x;
  }
  throw std::logic_error("unknown family");
}

void accumulate_grad(const LossSpec& spec, const Sample& z, const Vec& theta,
                     double scale, Vec& out) {
  switch (spec.family) {
    case Family::Quadratic:
      out += scale * (theta - z.x);
      return;
    case Family::RidgeLogistic:
      out += (scale * -z.y * sigmoid(-z.y * z.x.dot(theta))) * z.x;
      out += (scale * spec.ridge_lambda) * theta;
      return;
    case Family::Logistic:
      out += (scale * -z.y * sigmoid(-z.y * z.x.dot(theta))) * z.x;
      return;
    case Family::SmoothNonconvex:
      out += (scale * link_slope(z.x.dot(theta) - z.y)) * z.x;
      return;
  }
}

LossSpec certified_constants(Family family, const FamilyParams& params,
                             double data_radius,
                             const std::optional<ProjectionSet>& projection,
                             const Vec& theta0) {
  if (!(data_radius > 0.0) || !std::isfinite(data_radius)) {
    throw config_error("certified_constants: data_radius must be positive and finite");
  }
  if (!theta0.allFinite() || theta0.size() == 0) {
    throw config_error("certified_constants: theta0 must be finite and nonempty");
  }
  if (projection) {
    if (!(projection->radius > 0.0) || projection->center.size() != theta0.size()) {
      throw config_error("certified_constants: projection ball must have positive radius and matching dimension");
    }
  }

  LossSpec spec;
  spec.family = family;
  spec.dimension = static_cast<int>(theta0.size());
  spec.data_radius = data_radius;
  spec.projection = projection;

  const double R = data_radius;
  const double theta0_norm = theta0.norm();
  // Largest ||theta|| reachable inside the projection ball.
  const double theta_sup =
      projection ? projection->center.norm() + projection->radius : kInf;

  switch (family) {
    case Family::Quadratic: {
      spec.smoothness_L = 1.0;
      spec.strong_convexity_mu = 1.0;
      spec.convexity_class = ConvexityClass::StronglyConvex;
      spec.grad_bound_G = projection ? theta_sup + R : kInf;
      spec.loss_at_init = 0.5 * (theta0_norm + R) * (theta0_norm + R);
      // E_z||grad||^2 = ||mean grad||^2 + Var_z(x) and Var_z(x) <= R^2.
      spec.noise_B = 1.0;
      spec.noise_C = R * R;
      spec.interp_const = 0.5 * R * R;
      break;
    }
    case Family::RidgeLogistic: {
      if (!(params.ridge_lambda > 0.0)) {
        throw config_error("certified_constants: RidgeLogistic requires lambda > 0");
      }
      spec.ridge_lambda = params.ridge_lambda;
      spec.smoothness_L = params.ridge_lambda + 0.25 * R * R;
      spec.strong_convexity_mu = params.ridge_lambda;
      spec.convexity_class = ConvexityClass::StronglyConvex;
      spec.grad_bound_G = projection ? R + params.ridge_lambda * theta_sup : kInf;
      spec.loss_at_init = softplus(R * theta0_norm) +
                          0.5 * params.ridge_lambda * theta0_norm * theta0_norm;
      // grad = lambda*theta + g_z with ||g_z|| <= R, so Var_z <= R^2.
      spec.noise_B = 1.0;
      spec.noise_C = R * R;
      spec.interp_const = std::log(2.0);  // objective at theta=0
      break;
    }
    case Family::Logistic: {
      spec.smoothness_L = 0.25 * R * R;
      spec.strong_convexity_mu = 0.0;
      spec.convexity_class = ConvexityClass::Convex;
      spec.grad_bound_G = R;  // global bound, projection or not
      spec.loss_at_init = softplus(R * theta0_norm);
      spec.noise_B = 1.0;
      spec.noise_C = R * R;
      spec.interp_const = std::log(2.0);
      break;
    }
    case Family::SmoothNonconvex: {
      // s(u) = (sigmoid(u)-1/2)^2: sup|s'| = 1/(6*sqrt(3)), sup|s''| = 1/8,
      // inf s'' = -1/24 < 0, sup s = 1/4.
      const double slope_sup = 1.0 / (6.0 * std::sqrt(3.0));
      spec.smoothness_L = R * R / 8.0;
      spec.strong_convexity_mu = 0.0;
      spec.convexity_class = ConvexityClass::Nonconvex;
      spec.grad_bound_G = slope_sup * R;  // global bound
      spec.loss_at_init = 0.25;
      spec.noise_B = 0.0;
      spec.noise_C = slope_sup * R * slope_sup * R;
      spec.interp_const = 0.25;
      break;
    }
  }
  return spec;
}

std::string family_name(Family family) {
  switch (family) {
    case Family::Quadratic: return "quadratic";
    case Family::RidgeLogistic: return "ridge_logistic";
    case Family::Logistic: return "logistic";
    case Family::SmoothNonconvex: return "smooth_nonconvex";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "quadratic") return Family::Quadratic;
  if (name == "ridge_logistic") return Family::RidgeLogistic;
  if (name == "logistic") return Family::Logistic;
  if (name == "smooth_nonconvex") return Family::SmoothNonconvex;
  throw config_error("unknown loss family: " + name);
}

std::string convexity_name(ConvexityClass c) {
  switch (c) {
    case ConvexityClass::StronglyConvex: return "strongly_convex";
    case ConvexityClass::Convex: return "convex";
    case ConvexityClass::Nonconvex: return "nonconvex";
  }
  return "?";
}

}  // namespace unlearn
