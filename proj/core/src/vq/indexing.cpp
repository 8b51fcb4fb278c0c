#include "lagma/vq/indexing.hpp"

#include <string>

#include "lagma/common/error.hpp"

namespace lagma::vq {

IndexSet timestep_indices(std::size_t t, std::size_t T, std::size_t n_codes) {
  if (T == 0 || n_codes == 0) throw Error("timestep_indices: T and n_codes must be >= 1");
  if (t >= T) {
    throw Error("timestep_indices: t=" + std::to_string(t) + " outside [0," + std::to_string(T) +
                ")");
  }
  const std::size_t d = n_codes / T;
  const std::size_t r = n_codes % T;
  const std::size_t start_rest = d * T;
  IndexSet out;
  if (d >= 1) {
    out.reserve(d + 1);
    for (std::size_t j = d * t; j < d * (t + 1); ++j) out.push_back(j);
    if (t < r) out.push_back(start_rest + t);
  } else {
    out.push_back(t * n_codes / T);
  }
  return out;
}

}  // namespace lagma::vq
