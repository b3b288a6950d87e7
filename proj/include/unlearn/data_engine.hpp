#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unlearn/model_zoo.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

struct Dataset {
  std::vector<Sample> samples;
  double declared_radius = 0.0;

  std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }
};

// Indices (into the dataset) of the samples to forget.
struct UnlearnRequest {
  std::vector<std::int64_t> indices;  // sorted, distinct

  std::int64_t m() const { return static_cast<std::int64_t>(indices.size()); }
  bool contains(std::int64_t i) const;
};

// Minibatch of dataset indices, drawn with replacement.
struct BatchDraw {
  std::vector<std::int64_t> indices;
};

// b i.i.d. uniform indices in [0, source_size); pure function of the stream
// key (role, BatchIndex, t, slot).
BatchDraw sample_batch(const CouplingStream& stream, Role role, std::int64_t source_size,
                       std::int64_t b, std::int64_t t);

// Favorable coupling of the retained-set batch to a full-set draw: a slot
// whose sample is retained keeps it; a slot that drew an unlearned sample is
// redrawn uniformly from the retained set on its own (Redraw, t, slot)
// substream. Output indices refer to the original dataset and are marginally
// i.i.d. uniform over the retained set.
BatchDraw couple_batch(const BatchDraw& draw_full, const Dataset& dataset,
                       const UnlearnRequest& request, const CouplingStream& stream,
                       std::int64_t t);

// Uniform draw over the retained set with fresh (role, BatchIndex) keys; used
// by trajectories that are not coupled to a full-set run.
BatchDraw sample_batch_retained(const CouplingStream& stream, Role role,
                                const Dataset& dataset, const UnlearnRequest& request,
                                std::int64_t b, std::int64_t t);

// Full gradient of the empirical loss over all samples.
Vec full_gradient(const LossSpec& spec, const Dataset& dataset, const Vec& theta);
// Full gradient over the retained samples only.
Vec full_gradient_retained(const LossSpec& spec, const Dataset& dataset,
                           const UnlearnRequest& request, const Vec& theta);
double full_loss(const LossSpec& spec, const Dataset& dataset, const Vec& theta);
double full_loss_retained(const LossSpec& spec, const Dataset& dataset,
                          const UnlearnRequest& request, const Vec& theta);

// Exact unlearning bias grad L_retained(theta) - grad L_full(theta).
Vec unlearning_bias(const Dataset& dataset, const UnlearnRequest& request,
                    const LossSpec& spec, const Vec& theta);

// Chi-square divergence between the retained and full empirical distributions:
// m / (n - m).
double chi_square_empirical(std::int64_t n, std::int64_t m);

// Synthetic dataset: x uniform in the ball of data_radius, labels uniform +-1.
Dataset synthesize_dataset(std::int64_t n, int dimension, double data_radius,
                           std::uint64_t seed);

// CSV loader: one row per sample, d feature columns then one label column.
Dataset load_dataset_csv(const std::string& path, int dimension, double data_radius);

enum class SelectionRule { FirstM, RandomSeeded, ExplicitIndices };

UnlearnRequest make_request(const Dataset& dataset, SelectionRule rule, std::int64_t m,
                            std::uint64_t seed,
                            const std::vector<std::int64_t>& explicit_indices = {});

}  // namespace unlearn
