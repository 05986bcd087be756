#include "smdl/zoo/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "smdl/core/error.hpp"
#include "smdl/core/rng.hpp"

namespace smdl::zoo {

using core::Matrix;

std::uint64_t MlpSpec::hash() const {
  std::vector<unsigned char> bytes;
  auto put = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  for (std::size_t n : layers) put(n);
  put(static_cast<std::uint64_t>(activation));
  put(static_cast<std::uint64_t>(loss));
  return core::fnv1a64(bytes);
}

MlpModel::MlpModel(MlpSpec spec) : spec_(std::move(spec)) {
  require(spec_.layers.size() >= 2, "mlp: need at least input and output sizes");
  for (std::size_t n : spec_.layers) require(n >= 1, "mlp: layer sizes must be positive");
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec_.layers.size(); ++l) {
    LayerSlot s;
    s.in = spec_.layers[l];
    s.out = spec_.layers[l + 1];
    s.weight_offset = off;
    s.bias_offset = off + s.in * s.out;
    off = s.bias_offset + s.out;
    slots_.push_back(s);
  }
  count_ = off;
}

void MlpModel::check_params(std::span<const double> params) const {
  if (params.size() != count_)
    fail(ErrorKind::invalid_input, "mlp: parameter vector has length " + std::to_string(params.size()) +
                                       ", model expects " + std::to_string(count_));
}

Matrix MlpModel::weight(std::span<const double> params, std::size_t layer) const {
  check_params(params);
  const LayerSlot& s = slots_.at(layer);
  return Matrix(s.out, s.in,
                std::vector<double>(params.begin() + s.weight_offset, params.begin() + s.bias_offset));
}

void MlpModel::set_weight(std::span<double> params, std::size_t layer, const Matrix& w) const {
  check_params(params);
  const LayerSlot& s = slots_.at(layer);
  require(w.rows() == s.out && w.cols() == s.in, "mlp: weight shape mismatch");
  std::copy(w.data().begin(), w.data().end(), params.begin() + s.weight_offset);
}

namespace {

double activate(Activation a, double z) { return a == Activation::tanh ? std::tanh(z) : z; }

// Derivative expressed through the activation output h.
double activate_prime(Activation a, double h) { return a == Activation::tanh ? 1.0 - h * h : 1.0; }

}  // namespace

void MlpModel::forward(std::span<const double> params, std::span<const double> x, std::span<double> out) const {
  check_params(params);
  require(x.size() == input_size() && out.size() == output_size(), "mlp forward: io size mismatch");
  std::vector<double> cur(x.begin(), x.end()), next;
  for (std::size_t l = 0; l < slots_.size(); ++l) {
    const LayerSlot& s = slots_[l];
    next.assign(s.out, 0.0);
    for (std::size_t o = 0; o < s.out; ++o) {
      double z = params[s.bias_offset + o];
      const double* wr = params.data() + s.weight_offset + o * s.in;
      for (std::size_t i = 0; i < s.in; ++i) z += wr[i] * cur[i];
      next[o] = (l + 1 < slots_.size()) ? activate(spec_.activation, z) : z;
    }
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

double MlpModel::loss_sum(std::span<const double> params, const Dataset& data, std::size_t begin,
                          std::size_t end, std::span<double> grad) const {
  check_params(params);
  require(data.inputs.cols() == input_size() && data.targets.cols() == output_size(),
          "mlp: dataset shape does not match model");
  require(begin < end && end <= data.size(), "mlp: empty or out-of-range batch");
  const bool want_grad = !grad.empty();
  if (want_grad) require(grad.size() == count_, "mlp: gradient buffer length mismatch");

  const std::size_t layers = slots_.size();
  std::vector<std::vector<double>> acts(layers + 1);
  for (std::size_t l = 0; l <= layers; ++l) acts[l].resize(spec_.layers[l]);
  std::vector<double> delta, prev_delta;

  double total = 0.0;
  for (std::size_t r = begin; r < end; ++r) {
    const auto x = data.inputs.row(r);
    std::copy(x.begin(), x.end(), acts[0].begin());
    for (std::size_t l = 0; l < layers; ++l) {
      const LayerSlot& s = slots_[l];
      for (std::size_t o = 0; o < s.out; ++o) {
        double z = params[s.bias_offset + o];
        const double* wr = params.data() + s.weight_offset + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) z += wr[i] * acts[l][i];
        acts[l + 1][o] = (l + 1 < layers) ? activate(spec_.activation, z) : z;
      }
    }

    const auto t = data.targets.row(r);
    const auto& y = acts[layers];
    delta.assign(y.size(), 0.0);
    if (spec_.loss == LossKind::mse) {
      for (std::size_t k = 0; k < y.size(); ++k) {
        const double e = y[k] - t[k];
        total += e * e;
        delta[k] = 2.0 * e;
      }
    } else {
      const double zmax = *std::max_element(y.begin(), y.end());
      double norm = 0.0;
      for (double v : y) norm += std::exp(v - zmax);
      const double log_norm = zmax + std::log(norm);
      double tsum = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) {
        total -= t[k] * (y[k] - log_norm);
        tsum += t[k];
      }
      for (std::size_t k = 0; k < y.size(); ++k) delta[k] = std::exp(y[k] - log_norm) * tsum - t[k];
    }
    if (!want_grad) continue;

    for (std::size_t l = layers; l-- > 0;) {
      const LayerSlot& s = slots_[l];
      const auto& in = acts[l];
      for (std::size_t o = 0; o < s.out; ++o) {
        const double d = delta[o];
        grad[s.bias_offset + o] += d;
        double* gr = grad.data() + s.weight_offset + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) gr[i] += d * in[i];
      }
      if (l == 0) break;
      prev_delta.assign(s.in, 0.0);
      for (std::size_t o = 0; o < s.out; ++o) {
        const double* wr = params.data() + s.weight_offset + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) prev_delta[i] += wr[i] * delta[o];
      }
      for (std::size_t i = 0; i < s.in; ++i) prev_delta[i] *= activate_prime(spec_.activation, in[i]);
      delta.swap(prev_delta);
    }
  }
  return total;
}

double MlpModel::loss_and_grad(std::span<const double> params, const Dataset& data, std::size_t begin,
                               std::size_t end, std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double n = static_cast<double>(end - begin);
  const double s = loss_sum(params, data, begin, end, grad);
  for (double& g : grad) g /= n;
  return s / n;
}

double MlpModel::mean_loss(std::span<const double> params, const Dataset& data) const {
  return loss_sum(params, data, 0, data.size()) / static_cast<double>(data.size());
}

std::vector<double> MlpModel::initialize(double scale, std::uint64_t seed) const {
  std::vector<double> p(count_, 0.0);
  core::RngStream rng(seed, 0x1417);
  for (const LayerSlot& s : slots_) {
    const double sd = scale / std::sqrt(static_cast<double>(s.in));
    for (std::size_t k = s.weight_offset; k < s.bias_offset; ++k) p[k] = sd * rng.normal();
  }
  return p;
}

Dataset make_teacher_dataset(const MlpModel& model, const TeacherConfig& cfg) {
  require(cfg.samples >= 1, "teacher dataset: need at least one sample");
  const std::vector<double> teacher = model.initialize(cfg.weight_scale, cfg.seed);
  core::RngStream rng(cfg.seed, 0x7ea);
  Dataset ds{Matrix(cfg.samples, model.input_size()), Matrix(cfg.samples, model.output_size())};
  rng.fill_normal(ds.inputs.data());
  std::vector<double> out(model.output_size());
  for (std::size_t r = 0; r < cfg.samples; ++r) {
    model.forward(teacher, ds.inputs.row(r), out);
    auto t = ds.targets.row(r);
    if (model.spec().loss == LossKind::cross_entropy) {
      const double zmax = *std::max_element(out.begin(), out.end());
      double norm = 0.0;
      for (double v : out) norm += std::exp(v - zmax);
      for (std::size_t k = 0; k < out.size(); ++k) t[k] = std::exp(out[k] - zmax) / norm;
    } else {
      for (std::size_t k = 0; k < out.size(); ++k) t[k] = out[k] + cfg.output_noise * rng.normal();
    }
  }
  return ds;
}

MlpObjective::MlpObjective(const MlpModel& model, const Dataset& data, std::size_t batch_size)
    : model_(model), data_(data), batch_size_(batch_size) {
  require(data.size() >= 1, "mlp objective: empty dataset");
  require(batch_size_ <= data.size(), "mlp objective: batch larger than dataset");
  batches_ = batch_size_ == 0 ? 0 : data.size() / batch_size_;
}

std::pair<std::size_t, std::size_t> MlpObjective::rows(std::size_t batch) const {
  if (batches_ == 0) return {0, data_.size()};
  const std::size_t b = batch % batches_;
  return {b * batch_size_, (b + 1) * batch_size_};
}

double MlpObjective::loss(std::span<const double> w, std::size_t batch) const {
  const auto [lo, hi] = rows(batch);
  return model_.loss_sum(w, data_, lo, hi) / static_cast<double>(hi - lo);
}

double MlpObjective::loss_and_grad(std::span<const double> w, std::size_t batch, std::span<double> grad) const {
  const auto [lo, hi] = rows(batch);
  return model_.loss_and_grad(w, data_, lo, hi, grad);
}

namespace {

constexpr char kMagic[8] = {'S', 'M', 'D', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_le(std::string& buf, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& buf, std::size_t& pos, int bytes, const std::string& path) {
  if (pos + bytes > buf.size()) fail(ErrorKind::invalid_input, "checkpoint truncated: " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += bytes;
  return v;
}

std::uint64_t bits_of(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof u);
  return u;
}

double from_bits(std::uint64_t u) {
  double x;
  std::memcpy(&x, &u, sizeof x);
  return x;
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string buf(kMagic, kMagic + 8);
  put_le(buf, kVersion, 4);
  put_le(buf, ckpt.params.size(), 8);
  put_le(buf, static_cast<std::uint64_t>(ckpt.step), 8);
  put_le(buf, ckpt.seed, 8);
  put_le(buf, ckpt.spec_hash, 8);
  put_le(buf, bits_of(ckpt.train_loss), 8);
  for (double v : ckpt.params) put_le(buf, bits_of(v), 8);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::invalid_input, "cannot write checkpoint: " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) fail(ErrorKind::invalid_input, "cannot write checkpoint: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::invalid_input, "cannot open checkpoint: " + path);
  const std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 8) != 0)
    fail(ErrorKind::invalid_input, "not a checkpoint file (bad magic): " + path);
  std::size_t pos = 8;
  if (get_le(buf, pos, 4, path) != kVersion) fail(ErrorKind::invalid_input, "unsupported checkpoint version: " + path);
  Checkpoint c;
  const std::uint64_t d = get_le(buf, pos, 8, path);
  c.step = static_cast<std::int64_t>(get_le(buf, pos, 8, path));
  c.seed = get_le(buf, pos, 8, path);
  c.spec_hash = get_le(buf, pos, 8, path);
  c.train_loss = from_bits(get_le(buf, pos, 8, path));
  if (buf.size() != pos + 8 * d) fail(ErrorKind::invalid_input, "checkpoint length does not match header: " + path);
  c.params.resize(d);
  for (auto& v : c.params) v = from_bits(get_le(buf, pos, 8, path));
  return c;
}

std::string checkpoint_filename(std::int64_t step) {
  char name[32];
  std::snprintf(name, sizeof name, "ckpt_%08lld.bin", static_cast<long long>(step));
  return name;
}

TrainTrace train_sgd(const MlpModel& model, const Dataset& data, const TrainConfig& cfg,
                     std::span<const double> init, std::span<const double> mask, bool track_min,
                     const std::string& out_dir) {
  require(cfg.steps >= 1, "train: steps must be at least 1");
  require(cfg.learning_rate > 0.0, "train: learning rate must be positive");
  require(cfg.batch_size >= 1 && cfg.batch_size <= data.size(), "train: batch size out of range");
  for (std::int64_t s : cfg.schedule)
    require(s >= 0 && s <= cfg.steps, "train: checkpoint schedule entry outside [0, steps]");
  if (!mask.empty()) require(mask.size() == model.parameter_count(), "train: mask length mismatch");

  std::vector<double> w = init.empty() ? model.initialize(cfg.init_scale, cfg.seed)
                                       : std::vector<double>(init.begin(), init.end());
  require(w.size() == model.parameter_count(), "train: initial parameter length mismatch");
  std::vector<std::int64_t> schedule = cfg.schedule;
  std::sort(schedule.begin(), schedule.end());
  schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  TrainTrace trace;
  const std::uint64_t spec_hash = model.spec().hash();
  auto snapshot = [&](std::int64_t step) {
    Checkpoint c{step, w, model.mean_loss(w, data), cfg.seed, spec_hash};
    if (!out_dir.empty()) write_checkpoint((std::filesystem::path(out_dir) / checkpoint_filename(step)).string(), c);
    trace.checkpoints.push_back(std::move(c));
  };

  std::size_t next_ckpt = 0;
  if (next_ckpt < schedule.size() && schedule[next_ckpt] == 0) {
    snapshot(0);
    ++next_ckpt;
  }
  trace.min_loss = model.mean_loss(w, data);

  core::RngStream rng(cfg.seed, 0x56d);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = data.size();
  Dataset batch{Matrix(cfg.batch_size, model.input_size()), Matrix(cfg.batch_size, model.output_size())};
  std::vector<double> grad(w.size());

  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == data.size()) {
        for (std::size_t i = data.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
        cursor = 0;
      }
      const std::size_t r = order[cursor++];
      std::copy(data.inputs.row(r).begin(), data.inputs.row(r).end(), batch.inputs.row(b).begin());
      std::copy(data.targets.row(r).begin(), data.targets.row(r).end(), batch.targets.row(b).begin());
    }
    const double loss = model.loss_and_grad(w, batch, 0, cfg.batch_size, grad);
    if (!std::isfinite(loss) || loss > 1e6)
      fail(ErrorKind::training_diverged, "training diverged at step " + std::to_string(step) +
                                             " (batch loss " + std::to_string(loss) + ")");
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = mask.empty() ? grad[k] : grad[k] * mask[k];
      w[k] -= cfg.learning_rate * g;
    }
    if (track_min) trace.min_loss = std::min(trace.min_loss, model.mean_loss(w, data));
    if (next_ckpt < schedule.size() && schedule[next_ckpt] == step) {
      snapshot(step);
      ++next_ckpt;
    }
  }
  trace.final_loss = model.mean_loss(w, data);
  trace.min_loss = std::min(trace.min_loss, trace.final_loss);
  trace.final_params = w;
  return trace;
}

}  // namespace smdl::zoo
