#include "unlearn/data_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace unlearn {

bool UnlearnRequest::contains(std::int64_t i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

namespace {

void validate_request(const Dataset& dataset, const UnlearnRequest& request) {
  const std::int64_t n = dataset.size();
  const std::int64_t m = request.m();
  if (m <= 0 || m >= n) {
    throw config_error("unlearn request needs 0 < m < n (m=" + std::to_string(m) +
                       ", n=" + std::to_string(n) + ")");
  }
  for (std::int64_t i : request.indices) {
    if (i < 0 || i >= n) throw config_error("unlearn index out of range");
  }
}

std::vector<std::int64_t> retained_indices(const Dataset& dataset,
                                           const UnlearnRequest& request) {
  std::vector<std::int64_t> retained;
  retained.reserve(dataset.size() - request.m());
  std::int64_t r = 0;
  const auto& drop = request.indices;
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    if (r < static_cast<std::int64_t>(drop.size()) && drop[r] == i) {
      ++r;
      continue;
    }
    retained.push_back(i);
  }
  return retained;
}

}  // namespace

BatchDraw sample_batch(const CouplingStream& stream, Role role, std::int64_t source_size,
                       std::int64_t b, std::int64_t t) {
  if (b <= 0) throw config_error("batch size must be >= 1");
  if (source_size <= 0) throw config_error("cannot sample from an empty dataset");
  BatchDraw draw;
  draw.indices.resize(b);
  for (std::int64_t i = 0; i < b; ++i) {
    const StreamKey key{role, DrawKind::BatchIndex,
                        static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i)};
    draw.indices[i] = static_cast<std::int64_t>(
        stream.uniform_index(key, static_cast<std::uint64_t>(source_size)));
  }
  return draw;
}

BatchDraw couple_batch(const BatchDraw& draw_full, const Dataset& dataset,
                       const UnlearnRequest& request, const CouplingStream& stream,
                       std::int64_t t) {
  validate_request(dataset, request);
  const auto retained = retained_indices(dataset, request);
  BatchDraw coupled;
  coupled.indices.resize(draw_full.indices.size());
  for (std::size_t i = 0; i < draw_full.indices.size(); ++i) {
    const std::int64_t idx = draw_full.indices[i];
    if (!request.contains(idx)) {
      coupled.indices[i] = idx;
      continue;
    }
    const StreamKey key{Role::Retrain, DrawKind::Redraw,
                        static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i)};
    coupled.indices[i] =
        retained[stream.uniform_index(key, retained.size())];
  }
  return coupled;
}

BatchDraw sample_batch_retained(const CouplingStream& stream, Role role,
                                const Dataset& dataset, const UnlearnRequest& request,
                                std::int64_t b, std::int64_t t) {
  validate_request(dataset, request);
  const auto retained = retained_indices(dataset, request);
  BatchDraw base = sample_batch(stream, role, static_cast<std::int64_t>(retained.size()), b, t);
  for (auto& idx : base.indices) idx = retained[idx];
  return base;
}

Vec full_gradient(const LossSpec& spec, const Dataset& dataset, const Vec& theta) {
  Vec g = Vec::Zero(theta.size());
  for (const Sample& z : dataset.samples) accumulate_grad(spec, z, theta, 1.0, g);
  return g / static_cast<double>(dataset.size());
}

Vec full_gradient_retained(const LossSpec& spec, const Dataset& dataset,
                           const UnlearnRequest& request, const Vec& theta) {
  validate_request(dataset, request);
  Vec g = Vec::Zero(theta.size());
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    if (request.contains(i)) continue;
    accumulate_grad(spec, dataset.samples[i], theta, 1.0, g);
    ++count;
  }
  return g / static_cast<double>(count);
}

double full_loss(const LossSpec& spec, const Dataset& dataset, const Vec& theta) {
  double total = 0.0;
  for (const Sample& z : dataset.samples) total += eval_loss(spec, z, theta);
  return total / static_cast<double>(dataset.size());
}

double full_loss_retained(const LossSpec& spec, const Dataset& dataset,
                          const UnlearnRequest& request, const Vec& theta) {
  validate_request(dataset, request);
  double total = 0.0;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    if (request.contains(i)) continue;
    total += eval_loss(spec, dataset.samples[i], theta);
    ++count;
  }
  return total / static_cast<double>(count);
}

Vec unlearning_bias(const Dataset& dataset, const UnlearnRequest& request,
                    const LossSpec& spec, const Vec& theta) {
  return full_gradient_retained(spec, dataset, request, theta) -
         full_gradient(spec, dataset, theta);
}

double chi_square_empirical(std::int64_t n, std::int64_t m) {
  if (m <= 0 || m >= n) {
    throw config_error("chi_square_empirical needs 0 < m < n");
  }
  return static_cast<double>(m) / static_cast<double>(n - m);
}

Dataset synthesize_dataset(std::int64_t n, int dimension, double data_radius,
                           std::uint64_t seed) {
  if (n <= 0 || dimension <= 0 || !(data_radius > 0.0)) {
    throw config_error("synthetic dataset needs n >= 1, d >= 1, radius > 0");
  }
  const CouplingStream stream(seed);
  Dataset ds;
  ds.declared_radius = data_radius;
  ds.samples.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    Vec g(dimension);
    for (int j = 0; j < dimension; ++j) {
      const StreamKey key{Role::Train, DrawKind::DataGen,
                          static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)};
      g[j] = stream.gaussian(key, 0);
    }
    const StreamKey rkey{Role::Train, DrawKind::DataGen,
                         static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(dimension)};
    const double u = stream.uniform01(rkey, 0);
    const double norm = g.norm();
    const double radius = data_radius * std::pow(u, 1.0 / dimension);
    ds.samples[i].x = norm > 0.0 ? Vec(g * (radius / norm)) : Vec(Vec::Zero(dimension));
    const StreamKey lkey{Role::Train, DrawKind::DataGen,
                         static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(dimension) + 1};
    ds.samples[i].y = (stream.word(lkey, 0) & 1ULL) ? 1.0 : -1.0;
  }
  return ds;
}

Dataset load_dataset_csv(const std::string& path, int dimension, double data_radius) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open dataset CSV: " + path);
  Dataset ds;
  ds.declared_radius = data_radius;
  std::string line;
  std::int64_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw config_error("CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(values.size()) != dimension + 1) {
      throw config_error("CSV row " + std::to_string(row) + ": expected " +
                         std::to_string(dimension + 1) + " columns, got " +
                         std::to_string(values.size()));
    }
    Sample z;
    z.x = Eigen::Map<Vec>(values.data(), dimension);
    z.y = values.back();
    if (!z.x.allFinite() || !std::isfinite(z.y)) {
      throw config_error("CSV row " + std::to_string(row) + ": non-finite value");
    }
    if (z.x.norm() > data_radius * (1.0 + 1e-12)) {
      throw config_error("CSV row " + std::to_string(row) +
                         ": sample outside the declared data-domain ball");
    }
    ds.samples.push_back(std::move(z));
  }
  if (ds.samples.empty()) throw config_error("dataset CSV is empty: " + path);
  return ds;
}

UnlearnRequest make_request(const Dataset& dataset, SelectionRule rule, std::int64_t m,
                            std::uint64_t seed,
                            const std::vector<std::int64_t>& explicit_indices) {
  const std::int64_t n = dataset.size();
  UnlearnRequest request;
  switch (rule) {
    case SelectionRule::FirstM: {
      for (std::int64_t i = 0; i < m; ++i) request.indices.push_back(i);
      break;
    }
    case SelectionRule::RandomSeeded: {
      if (m <= 0 || m >= n) throw config_error("unlearn request needs 0 < m < n");
      std::vector<std::int64_t> pool(n);
      for (std::int64_t i = 0; i < n; ++i) pool[i] = i;
      const CouplingStream stream(seed);
      for (std::int64_t i = 0; i < m; ++i) {
        const StreamKey key{Role::Train, DrawKind::Request,
                            static_cast<std::uint64_t>(i), 0};
        const std::int64_t j =
            i + static_cast<std::int64_t>(stream.uniform_index(key, n - i));
        std::swap(pool[i], pool[j]);
      }
      request.indices.assign(pool.begin(), pool.begin() + m);
      std::sort(request.indices.begin(), request.indices.end());
      break;
    }
    case SelectionRule::ExplicitIndices: {
      request.indices = explicit_indices;
      std::sort(request.indices.begin(), request.indices.end());
      if (std::adjacent_find(request.indices.begin(), request.indices.end()) !=
          request.indices.end()) {
        throw config_error("explicit unlearn indices must be distinct");
      }
      break;
    }
  }
  validate_request(dataset, request);
  return request;
}

}  // namespace unlearn
