#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

namespace lagma::codebook {

/// Code indices visited from some timestep to the end of an episode.
using QuantizedTrajectory = std::vector<std::size_t>;

struct SeqHeapEntry {
  double key = 0.0;
  QuantizedTrajectory trajectory;

  friend bool operator==(const SeqHeapEntry&, const SeqHeapEntry&) = default;
};

/// For every start code, the top-k trajectories by stored return, kept as a
/// binary min-heap so the weakest entry sits at index 0.
class SequenceBuffer {
 public:
  SequenceBuffer() = default;
  SequenceBuffer(std::size_t n_codes, std::size_t k);

  /// Offers (key, trajectory) to the heap of trajectory.front(). Pushes while
  /// the heap holds fewer than k entries, otherwise replaces the minimum iff
  /// key is strictly larger. Returns whether the buffer changed.
  bool update(double key, const QuantizedTrajectory& trajectory);

  /// Uniformly random stored trajectory of `code`, or nothing when empty.
  std::optional<QuantizedTrajectory> sample(std::size_t code, std::mt19937_64& rng) const;

  const std::vector<SeqHeapEntry>& heap(std::size_t code) const;
  std::vector<SeqHeapEntry>& mutable_heap(std::size_t code);
  std::size_t n_codes() const { return heaps_.size(); }
  std::size_t k() const { return k_; }
  std::size_t total_entries() const;

  /// Min-heap ordering used for every per-code buffer.
  static bool heap_less(const SeqHeapEntry& a, const SeqHeapEntry& b) { return a.key > b.key; }

 private:
  void check(std::size_t code) const;

  std::size_t k_ = 0;
  std::vector<std::vector<SeqHeapEntry>> heaps_;
};

/// Undiscounted reward sum of a whole episode.
double trajectory_return(const std::vector<double>& rewards);

}  // namespace lagma::codebook
