#include <algorithm>
#include <charconv>
#include <sstream>

#include "lagma/common/error.hpp"
#include "lagma/harness/checkpoint.hpp"
#include "lagma/harness/trainer.hpp"

namespace lagma::harness {

namespace {

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

std::mt19937_64 rng_from_text(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::mt19937_64 rng;
  in >> rng;
  if (!in) throw CheckpointError("checkpoint: corrupt generator state '" + what + "'");
  return rng;
}

std::uint64_t meta_u64(const Checkpoint& c, const std::string& key) {
  const std::string& v = c.meta_value(key);
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw CheckpointError("checkpoint: metadata '" + key + "' is not an unsigned integer: '" + v + "'");
  }
  return out;
}

std::vector<double> flat(const ad::Tensor& t) { return {t.data().begin(), t.data().end()}; }

void assign(ad::Tensor& t, const std::vector<double>& v) { std::copy(v.begin(), v.end(), t.data().begin()); }

void put_column(Checkpoint& c, const std::string& name, std::vector<double> v) {
  const std::size_t n = v.size();
  c.add_array(name, n, 1, std::move(v));
}

void put_params(Checkpoint& c, const std::string& prefix, const ad::ParamSet& p) {
  for (const auto& e : p.entries()) c.add_array(prefix + e.name, e.value.rows(), e.value.cols(), flat(e.value));
}

void put_moments(Checkpoint& c, const std::string& prefix, const ad::ParamSet& p, const ad::AdamState& s) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.add_array(prefix + "m." + p.name(i), s.first[i].rows(), s.first[i].cols(), flat(s.first[i]));
    c.add_array(prefix + "v." + p.name(i), s.second[i].rows(), s.second[i].cols(), flat(s.second[i]));
  }
}

const NamedArray& shaped(const Checkpoint& c, const std::string& name, std::size_t rows, std::size_t cols) {
  const NamedArray& a = c.array(name);
  if (a.rows != rows || a.cols != cols) {
    throw CheckpointError("checkpoint: array '" + name + "' is " + std::to_string(a.rows) + "x" +
                          std::to_string(a.cols) + ", expected " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  return a;
}

const NamedArray& col(const Checkpoint& c, const std::string& name) {
  const NamedArray& a = c.array(name);
  if (a.cols != 1 && a.rows * a.cols != 0) {
    throw CheckpointError("checkpoint: array '" + name + "' must be a column");
  }
  return a;
}

std::size_t as_count(double v, const std::string& what) {
  if (!(v >= 0.0) || v > 9007199254740992.0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) {
    throw CheckpointError("checkpoint: " + what + " holds a non-integer or negative count");
  }
  return static_cast<std::size_t>(v);
}

void load_params(const Checkpoint& c, const std::string& prefix, ad::ParamSet& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const ad::Tensor& cur = p.value(i);
    assign(p.value(i), shaped(c, prefix + p.name(i), cur.rows(), cur.cols()).data);
  }
}

void load_moments(const Checkpoint& c, const std::string& prefix, const ad::ParamSet& p, ad::AdamState& s,
                  std::uint64_t step) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const ad::Tensor& cur = p.value(i);
    assign(s.first[i], shaped(c, prefix + "m." + p.name(i), cur.rows(), cur.cols()).data);
    assign(s.second[i], shaped(c, prefix + "v." + p.name(i), cur.rows(), cur.cols()).data);
  }
  s.step = step;
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  Checkpoint c;
  c.config_text = format_config(config_);
  c.set_meta("env_steps", std::to_string(env_steps_));
  c.set_meta("episodes", std::to_string(episodes_));
  c.set_meta("records", std::to_string(records_));
  c.set_meta("next_eval", std::to_string(next_eval_));
  c.set_meta("finished", finished_ ? "1" : "0");
  c.set_meta("zero_intrinsic", force_zero_intrinsic_ ? "1" : "0");
  c.set_meta("train_steps", std::to_string(learner_.train_steps()));
  c.set_meta("theta_adam_step", std::to_string(learner_.optimizer().step));
  c.set_meta("vq_adam_step", std::to_string(vq_.optimizer().step));
  c.set_meta("rng.act", rng_text(act_rng_));
  c.set_meta("rng.sample", rng_text(sample_rng_));
  c.set_meta("rng.intrinsic", rng_text(intrinsic_rng_));

  put_params(c, "theta.", learner_.params());
  put_params(c, "target.", learner_.target_params());
  put_moments(c, "theta_adam.", learner_.params(), learner_.optimizer());
  put_params(c, "vq.", vq_.params());
  put_moments(c, "vq_adam.", vq_.params(), vq_.optimizer());

  std::vector<double> visits;
  std::vector<double> values;
  std::vector<double> sizes;
  std::vector<double> returns;
  for (std::size_t j = 0; j < values_.n_codes(); ++j) {
    const auto& e = values_.entry(j);
    visits.push_back(static_cast<double>(e.visits));
    values.push_back(e.value);
    sizes.push_back(static_cast<double>(e.returns.size()));
    returns.insert(returns.end(), e.returns.begin(), e.returns.end());
  }
  put_column(c, "dvq.visits", std::move(visits));
  put_column(c, "dvq.values", std::move(values));
  put_column(c, "dvq.sizes", std::move(sizes));
  put_column(c, "dvq.returns", std::move(returns));

  std::vector<double> heap_sizes;
  std::vector<double> keys;
  std::vector<double> lengths;
  std::vector<double> codes;
  for (std::size_t j = 0; j < sequences_.n_codes(); ++j) {
    const auto& heap = sequences_.heap(j);
    heap_sizes.push_back(static_cast<double>(heap.size()));
    for (const auto& e : heap) {
      keys.push_back(e.key);
      lengths.push_back(static_cast<double>(e.trajectory.size()));
      for (std::size_t z : e.trajectory) codes.push_back(static_cast<double>(z));
    }
  }
  put_column(c, "dseq.sizes", std::move(heap_sizes));
  put_column(c, "dseq.keys", std::move(keys));
  put_column(c, "dseq.lengths", std::move(lengths));
  put_column(c, "dseq.codes", std::move(codes));

  std::vector<double> seeds;
  std::vector<double> ep_lengths;
  std::vector<double> actions;
  for (std::size_t i = 0; i < replay_.size(); ++i) {
    const marl::Episode& ep = replay_.at(i);
    seeds.push_back(static_cast<double>(ep.env_seed));
    ep_lengths.push_back(static_cast<double>(ep.length()));
    for (int a : ep.actions) actions.push_back(static_cast<double>(a));
  }
  put_column(c, "replay.seeds", std::move(seeds));
  put_column(c, "replay.lengths", std::move(ep_lengths));
  put_column(c, "replay.actions", std::move(actions));

  put_column(c, "window.sums",
             std::vector<double>{window_.loss_sum, window_.vq_loss_sum, window_.intrinsic_sum, window_.nonzero_sum,
                     static_cast<double>(window_.train_count), static_cast<double>(window_.vq_count)});
  put_column(c, "window.codes", std::vector<double>(window_.codes.begin(), window_.codes.end()));

  write_checkpoint(c, path);
}

Trainer Trainer::load_checkpoint(const std::string& path) {
  const Checkpoint c = read_checkpoint(path);
  ExperimentConfig cfg;
  try {
    cfg = parse_config(c.config_text, path + " (embedded config)");
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: embedded config rejected: ") + e.what());
  }
  Trainer t(cfg);

  t.env_steps_ = meta_u64(c, "env_steps");
  t.episodes_ = meta_u64(c, "episodes");
  t.records_ = meta_u64(c, "records");
  t.next_eval_ = meta_u64(c, "next_eval");
  t.finished_ = meta_u64(c, "finished") != 0;
  t.force_zero_intrinsic_ = meta_u64(c, "zero_intrinsic") != 0;
  t.learner_.set_train_steps(meta_u64(c, "train_steps"));
  t.act_rng_ = rng_from_text(c.meta_value("rng.act"), "rng.act");
  t.sample_rng_ = rng_from_text(c.meta_value("rng.sample"), "rng.sample");
  t.intrinsic_rng_ = rng_from_text(c.meta_value("rng.intrinsic"), "rng.intrinsic");

  load_params(c, "theta.", t.learner_.params());
  load_params(c, "target.", t.learner_.target_params());
  load_moments(c, "theta_adam.", t.learner_.params(), t.learner_.optimizer(), meta_u64(c, "theta_adam_step"));
  load_params(c, "vq.", t.vq_.params());
  load_moments(c, "vq_adam.", t.vq_.params(), t.vq_.optimizer(), meta_u64(c, "vq_adam_step"));

  const std::size_t n_codes = t.values_.n_codes();
  {
    const auto& visits = shaped(c, "dvq.visits", n_codes, 1).data;
    const auto& values = shaped(c, "dvq.values", n_codes, 1).data;
    const auto& sizes = shaped(c, "dvq.sizes", n_codes, 1).data;
    const auto& returns = col(c, "dvq.returns").data;
    std::size_t off = 0;
    for (std::size_t j = 0; j < n_codes; ++j) {
      const std::size_t n = as_count(sizes[j], "dvq.sizes");
      if (n > t.values_.capacity() || off + n > returns.size()) {
        throw CheckpointError("checkpoint: code value buffers do not match their sizes");
      }
      auto& e = t.values_.mutable_entry(j);
      e.visits = as_count(visits[j], "dvq.visits");
      e.value = values[j];
      e.returns.assign(returns.begin() + static_cast<std::ptrdiff_t>(off),
                       returns.begin() + static_cast<std::ptrdiff_t>(off + n));
      off += n;
    }
    if (off != returns.size()) throw CheckpointError("checkpoint: code value buffers do not match their sizes");
  }
  {
    const auto& sizes = shaped(c, "dseq.sizes", n_codes, 1).data;
    const auto& keys = col(c, "dseq.keys").data;
    const auto& lengths = shaped(c, "dseq.lengths", keys.size(), 1).data;
    const auto& codes = col(c, "dseq.codes").data;
    std::size_t e_off = 0;
    std::size_t z_off = 0;
    for (std::size_t j = 0; j < n_codes; ++j) {
      const std::size_t n = as_count(sizes[j], "dseq.sizes");
      if (n > t.sequences_.k() || e_off + n > keys.size()) {
        throw CheckpointError("checkpoint: sequence buffers do not match their sizes");
      }
      auto& heap = t.sequences_.mutable_heap(j);
      heap.clear();
      for (std::size_t i = 0; i < n; ++i, ++e_off) {
        const std::size_t len = as_count(lengths[e_off], "dseq.lengths");
        if (len == 0 || z_off + len > codes.size()) {
          throw CheckpointError("checkpoint: sequence buffers do not match their sizes");
        }
        codebook::SeqHeapEntry entry{keys[e_off], {}};
        for (std::size_t q = 0; q < len; ++q, ++z_off) {
          const std::size_t z = as_count(codes[z_off], "dseq.codes");
          if (z >= n_codes) throw CheckpointError("checkpoint: stored trajectory has an out-of-range code");
          entry.trajectory.push_back(z);
        }
        heap.push_back(std::move(entry));
      }
    }
    if (e_off != keys.size() || z_off != codes.size()) {
      throw CheckpointError("checkpoint: sequence buffers do not match their sizes");
    }
  }
  {
    const auto& seeds = col(c, "replay.seeds").data;
    const auto& lengths = shaped(c, "replay.lengths", seeds.size(), 1).data;
    const auto& actions = col(c, "replay.actions").data;
    if (seeds.size() > t.replay_.capacity()) throw CheckpointError("checkpoint: replay exceeds its capacity");
    const std::size_t n_agents = t.env_->n_agents();
    std::size_t off = 0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const std::size_t len = as_count(lengths[i], "replay.lengths");
      if (off + len * n_agents > actions.size()) throw CheckpointError("checkpoint: replay actions are truncated");
      std::vector<int> acts(len * n_agents);
      for (auto& a : acts) a = static_cast<int>(as_count(actions[off++], "replay.actions"));
      try {
        t.replay_.push(marl::replay_episode(*t.env_, as_count(seeds[i], "replay.seeds"), acts));
      } catch (const Error& e) {
        throw CheckpointError(std::string("checkpoint: replay episode ") + std::to_string(i) +
                              " does not re-simulate: " + e.what());
      }
    }
    if (off != actions.size()) throw CheckpointError("checkpoint: replay actions do not match their lengths");
  }
  {
    const auto& sums = shaped(c, "window.sums", 6, 1).data;
    t.window_.loss_sum = sums[0];
    t.window_.vq_loss_sum = sums[1];
    t.window_.intrinsic_sum = sums[2];
    t.window_.nonzero_sum = sums[3];
    t.window_.train_count = as_count(sums[4], "window.sums");
    t.window_.vq_count = as_count(sums[5], "window.sums");
    for (double z : col(c, "window.codes").data) t.window_.codes.insert(as_count(z, "window.codes"));
  }
  return t;
}

}  // namespace lagma::harness
