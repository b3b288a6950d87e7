#pragma once

#include <cstdint>

namespace unlearn {

// Which trajectory a draw belongs to.
enum class Role : std::uint32_t { Train = 0, Retrain = 1, Unlearn = 2 };

// What the draw is used for. Separating the channels keeps the coupled
// replacement draws and the release noise independent of the base batch
// indices at the same (role, step, slot).
enum class DrawKind : std::uint32_t {
  BatchIndex = 0,
  Redraw = 1,
  Noise = 2,
  DataGen = 3,
  Request = 4,
  Probe = 5,  // generic randomness for property checks
};

struct StreamKey {
  Role role = Role::Train;
  DrawKind kind = DrawKind::BatchIndex;
  std::uint64_t step = 0;
  std::uint64_t slot = 0;
};

// Counter-based keyed randomness source. Every draw is a pure function of
// (master_seed, replica, key, counter), so coupled trajectories and parallel
// replicas see identical values no matter in which order they are evaluated.
class CouplingStream {
 public:
  explicit CouplingStream(std::uint64_t master_seed, std::uint32_t replica = 0)
      : master_seed_(master_seed), replica_(replica) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint32_t replica() const { return replica_; }

  CouplingStream with_replica(std::uint32_t replica) const {
    return CouplingStream(master_seed_, replica);
  }

  // Raw 64-bit word for (key, counter).
  std::uint64_t word(const StreamKey& key, std::uint64_t counter) const;

  // Unbiased uniform draw in [0, bound). Uses rejection sampling, consuming
  // counters starting at `counter_base`.
  std::uint64_t uniform_index(const StreamKey& key, std::uint64_t bound,
                              std::uint64_t counter_base = 0) const;

  // Uniform double in (0, 1].
  double uniform01(const StreamKey& key, std::uint64_t counter) const;

  // Standard normal draw; `pair_index` selects independent variates.
  double gaussian(const StreamKey& key, std::uint64_t pair_index) const;

 private:
  std::uint64_t master_seed_;
  std::uint32_t replica_;
};

}  // namespace unlearn
