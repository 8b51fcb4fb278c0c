#include "lagma/codebook/sequence_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lagma/common/error.hpp"

namespace lagma::codebook {

SequenceBuffer::SequenceBuffer(std::size_t n_codes, std::size_t k) : k_(k), heaps_(n_codes) {
  if (k == 0) throw Error("SequenceBuffer: k must be >= 1");
}

void SequenceBuffer::check(std::size_t code) const {
  if (code >= heaps_.size()) {
    throw Error("SequenceBuffer: code " + std::to_string(code) + " out of range [0," +
                std::to_string(heaps_.size()) + ")");
  }
}

bool SequenceBuffer::update(double key, const QuantizedTrajectory& trajectory) {
  if (!std::isfinite(key)) throw Error("SequenceBuffer: non-finite key");
  if (trajectory.empty()) throw Error("SequenceBuffer: empty trajectory");
  for (std::size_t z : trajectory) check(z);
  auto& heap = heaps_[trajectory.front()];
  if (heap.size() < k_) {
    heap.push_back({key, trajectory});
    std::push_heap(heap.begin(), heap.end(), heap_less);
    return true;
  }
  if (key > heap.front().key) {
    std::pop_heap(heap.begin(), heap.end(), heap_less);
    heap.back() = {key, trajectory};
    std::push_heap(heap.begin(), heap.end(), heap_less);
    return true;
  }
  return false;
}

std::optional<QuantizedTrajectory> SequenceBuffer::sample(std::size_t code,
                                                          std::mt19937_64& rng) const {
  check(code);
  const auto& heap = heaps_[code];
  if (heap.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, heap.size() - 1);
  return heap[pick(rng)].trajectory;
}

const std::vector<SeqHeapEntry>& SequenceBuffer::heap(std::size_t code) const {
  check(code);
  return heaps_[code];
}

std::vector<SeqHeapEntry>& SequenceBuffer::mutable_heap(std::size_t code) {
  check(code);
  return heaps_[code];
}

std::size_t SequenceBuffer::total_entries() const {
  std::size_t n = 0;
  for (const auto& h : heaps_) n += h.size();
  return n;
}

double trajectory_return(const std::vector<double>& rewards) {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

}  // namespace lagma::codebook
