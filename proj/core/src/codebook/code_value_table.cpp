#include "lagma/codebook/code_value_table.hpp"

#include <cmath>
#include <string>

#include "lagma/common/error.hpp"

namespace lagma::codebook {

CodeValueTable::CodeValueTable(std::size_t n_codes, std::size_t capacity)
    : capacity_(capacity), entries_(n_codes) {
  if (capacity == 0) throw Error("CodeValueTable: buffer size must be >= 1");
}

void CodeValueTable::check(std::size_t code) const {
  if (code >= entries_.size()) {
    throw Error("CodeValueTable: code " + std::to_string(code) + " out of range [0," +
                std::to_string(entries_.size()) + ")");
  }
}

double CodeValueTable::update(std::size_t code, double discounted_return) {
  check(code);
  if (!std::isfinite(discounted_return)) throw Error("CodeValueTable: non-finite return");
  CodeValueEntry& e = entries_[code];
  if (e.returns.size() == capacity_) e.returns.pop_front();
  e.returns.push_back(discounted_return);
  e.visits += 1;
  // Recomputed from scratch so the cached mean never drifts.
  double total = 0.0;
  for (double r : e.returns) total += r;
  e.value = total / static_cast<double>(e.returns.size());
  return e.value;
}

std::optional<double> CodeValueTable::value(std::size_t code) const {
  check(code);
  const CodeValueEntry& e = entries_[code];
  if (e.visits == 0) return std::nullopt;
  return e.value;
}

const CodeValueEntry& CodeValueTable::entry(std::size_t code) const {
  check(code);
  return entries_[code];
}

CodeValueEntry& CodeValueTable::mutable_entry(std::size_t code) {
  check(code);
  return entries_[code];
}

std::size_t CodeValueTable::visited_codes() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.visits > 0 ? 1 : 0;
  return n;
}

}  // namespace lagma::codebook
