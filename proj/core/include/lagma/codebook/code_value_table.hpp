#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace lagma::codebook {

/// Return statistics of one code vector.
struct CodeValueEntry {
  /// Most recent discounted returns, oldest first; at most `capacity` long.
  std::deque<double> returns;
  /// Number of updates ever applied (not capped by the buffer size).
  std::uint64_t visits = 0;
  /// Mean of `returns`; meaningless while visits == 0.
  double value = 0.0;
};

/// Per-code moving-average value estimates over a FIFO of the last m returns.
class CodeValueTable {
 public:
  CodeValueTable() = default;
  CodeValueTable(std::size_t n_codes, std::size_t capacity);

  /// Appends a discounted return for `code` and returns the recomputed mean.
  /// Throws on a non-finite return or out-of-range code; the table is then unchanged.
  double update(std::size_t code, double discounted_return);
  std::optional<double> value(std::size_t code) const;

  const CodeValueEntry& entry(std::size_t code) const;
  CodeValueEntry& mutable_entry(std::size_t code);
  std::size_t n_codes() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Codes with at least one update.
  std::size_t visited_codes() const;

 private:
  void check(std::size_t code) const;

  std::size_t capacity_ = 0;
  std::vector<CodeValueEntry> entries_;
};

}  // namespace lagma::codebook
