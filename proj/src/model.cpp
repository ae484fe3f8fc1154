#include "fedval/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace fedval {

void Dataset::append(std::span<const double> features, int label) {
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

void Dataset::append_all(const Dataset& other) {
  if (other.dim != dim || other.num_classes != num_classes) {
    throw std::invalid_argument("dataset shape mismatch on append");
  }
  x.insert(x.end(), other.x.begin(), other.x.end());
  y.insert(y.end(), other.y.begin(), other.y.end());
}

void Dataset::validate() const {
  if (x.size() != rows() * dim) {
    throw std::invalid_argument("dataset feature matrix has wrong size");
  }
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw std::invalid_argument("dataset label out of range");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
  Dataset s;
  s.dim = dim;
  s.num_classes = num_classes;
  for (std::size_t i : idx) s.append(row(i), y[i]);
  return s;
}

std::size_t MlpModel::param_count(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("model needs >= 2 dims");
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    n += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
  }
  return n;
}

MlpModel::MlpModel(std::vector<int> dims, std::vector<double> p)
    : layer_dims(std::move(dims)), params(std::move(p)) {
  if (params.size() != param_count(layer_dims)) {
    throw std::invalid_argument("parameter count inconsistent with dims");
  }
}

void MlpModel::init_random(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  for (double& w : params) w = dist(rng);
}

std::vector<double> MlpModel::forward(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(layer_dims.front())) {
    throw std::invalid_argument("input dimension mismatch");
  }
  std::vector<double> act(x.begin(), x.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int in = layer_dims[l];
    const int out = layer_dims[l + 1];
    std::vector<double> next(out);
    for (int o = 0; o < out; ++o) {
      double z = params[off + static_cast<std::size_t>(out) * in + o];  // bias
      const double* w = params.data() + off + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) z += w[i] * act[i];
      next[o] = z;
    }
    off += static_cast<std::size_t>(out) * in + out;
    const bool hidden = l + 2 < layer_dims.size();
    if (hidden) {
      for (double& v : next) v = std::max(0.0, v);
    }
    act = std::move(next);
  }
  return act;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

int predict(const MlpModel& model, std::span<const double> x) {
  return argmax_lowest(model.forward(x));
}

double accuracy(const MlpModel& model, const Dataset& d) {
  if (d.rows() == 0) throw std::invalid_argument("accuracy of empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (predict(model, d.row(i)) == d.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.rows());
}

double mean_max_softmax(const MlpModel& model, const Dataset& d) {
  if (d.rows() == 0) {
    throw std::invalid_argument("max-softmax of empty dataset");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const auto p = softmax(model.forward(d.row(i)));
    sum += *std::max_element(p.begin(), p.end());
  }
  return sum / static_cast<double>(d.rows());
}

namespace {

// Gradient of softmax cross-entropy for one row, accumulated into grad.
void accumulate_gradient(const MlpModel& model, std::span<const double> x,
                         int label, std::vector<double>& grad) {
  const auto& dims = model.layer_dims;
  const std::size_t layers = dims.size() - 1;

  // forward pass, keeping post-activation values per layer
  std::vector<std::vector<double>> acts(layers + 1);
  acts[0].assign(x.begin(), x.end());
  std::vector<std::size_t> offsets(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    const int in = dims[l];
    const int out = dims[l + 1];
    acts[l + 1].resize(out);
    for (int o = 0; o < out; ++o) {
      double z = model.params[off + static_cast<std::size_t>(out) * in + o];
      const double* w =
          model.params.data() + off + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) z += w[i] * acts[l][i];
      acts[l + 1][o] = (l + 1 < layers) ? std::max(0.0, z) : z;
    }
    off += static_cast<std::size_t>(out) * in + out;
  }

  // delta at the output: softmax - onehot
  std::vector<double> delta = softmax(acts[layers]);
  delta[label] -= 1.0;

  for (std::size_t l = layers; l-- > 0;) {
    const int in = dims[l];
    const int out = dims[l + 1];
    const std::size_t base = offsets[l];
    std::vector<double> prev_delta(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const std::size_t wrow = base + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        grad[wrow + i] += delta[o] * acts[l][i];
        prev_delta[i] += delta[o] * model.params[wrow + i];
      }
      grad[base + static_cast<std::size_t>(out) * in + o] += delta[o];
    }
    if (l > 0) {
      // ReLU derivative via the stored post-activation values
      for (int i = 0; i < in; ++i) {
        if (acts[l][i] <= 0.0) prev_delta[i] = 0.0;
      }
      delta = std::move(prev_delta);
    }
  }
}

}  // namespace

std::vector<double> local_train(MlpModel& model, const Dataset& d,
                                const TrainOptions& opts,
                                std::mt19937_64& rng) {
  if (opts.lr <= 0.0) throw std::invalid_argument("learning rate must be > 0");
  const std::vector<double> w_old = model.params;
  if (opts.epochs == 0 || d.rows() == 0) {
    return std::vector<double>(model.params.size(), 0.0);
  }

  std::vector<std::size_t> order(d.rows());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(model.params.size());
  std::vector<double> velocity;
  if (opts.momentum > 0.0) velocity.assign(model.params.size(), 0.0);

  const std::size_t batch =
      std::max<std::size_t>(1, static_cast<std::size_t>(opts.batch_size));
  for (int e = 0; e < opts.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        accumulate_gradient(model, d.row(order[k]), d.y[order[k]], grad);
      }
      const double scale = opts.lr / static_cast<double>(end - start);
      if (opts.momentum > 0.0) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
          velocity[i] = opts.momentum * velocity[i] - scale * grad[i];
          model.params[i] += velocity[i];
        }
      } else {
        for (std::size_t i = 0; i < grad.size(); ++i) {
          model.params[i] -= scale * grad[i];
        }
      }
    }
  }

  std::vector<double> update(model.params.size());
  for (std::size_t i = 0; i < update.size(); ++i) {
    update[i] = model.params[i] - w_old[i];
  }
  return update;
}

FixedVec pack_dataset(const Dataset& d, const FixedParams& p) {
  FixedVec v(d.rows() * (d.dim + 1), p);
  std::size_t k = 0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.dim; ++c) {
      v.data[k++] = encode_fixed(d.x[r * d.dim + c], p);
    }
    v.data[k++] = encode_fixed(static_cast<double>(d.y[r]), p);
  }
  return v;
}

std::vector<u128> fixed_forward(std::span<const u128> model_raw,
                                const std::vector<int>& layer_dims,
                                std::span<const u128> x_raw,
                                const FixedParams& p) {
  if (model_raw.size() != MlpModel::param_count(layer_dims)) {
    throw std::invalid_argument("model size inconsistent with dims");
  }
  if (x_raw.size() != static_cast<std::size_t>(layer_dims.front())) {
    throw std::invalid_argument("input dimension mismatch");
  }
  std::vector<u128> act(x_raw.begin(), x_raw.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int in = layer_dims[l];
    const int out = layer_dims[l + 1];
    std::vector<u128> next(out);
    for (int o = 0; o < out; ++o) {
      u128 z = model_raw[off + static_cast<std::size_t>(out) * in + o];
      for (int i = 0; i < in; ++i) {
        const u128 w = model_raw[off + static_cast<std::size_t>(o) * in + i];
        z = ring_add(z, mul_fixed(w, act[i], p), p);
      }
      next[o] = z;
    }
    off += static_cast<std::size_t>(out) * in + out;
    if (l + 2 < layer_dims.size()) {
      for (u128& v : next) {
        if (to_signed(v, p) < 0) v = 0;  // ReLU on the sign bit
      }
    }
    act = std::move(next);
  }
  return act;
}

namespace {

int fixed_argmax(const std::vector<u128>& logits, const FixedParams& p) {
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (to_signed(logits[i], p) > to_signed(logits[best], p)) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::size_t packed_rows(std::span<const u128> packed, int input_dim) {
  const std::size_t stride = static_cast<std::size_t>(input_dim) + 1;
  if (packed.empty() || packed.size() % stride != 0) {
    throw std::invalid_argument("packed dataset size mismatch");
  }
  return packed.size() / stride;
}

}  // namespace

u128 fixed_accuracy(std::span<const u128> model_raw,
                    const std::vector<int>& layer_dims,
                    std::span<const u128> packed_data, const FixedParams& p) {
  const int in = layer_dims.front();
  const std::size_t rows = packed_rows(packed_data, in);
  const std::size_t stride = static_cast<std::size_t>(in) + 1;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = packed_data.subspan(r * stride, in);
    const auto logits = fixed_forward(model_raw, layer_dims, row, p);
    const int label = static_cast<int>(
        std::lround(decode_fixed(packed_data[r * stride + in], p)));
    if (fixed_argmax(logits, p) == label) ++correct;
  }
  return encode_fixed(
      static_cast<double>(correct) / static_cast<double>(rows), p);
}

u128 fixed_max_softmax(std::span<const u128> model_raw,
                       const std::vector<int>& layer_dims,
                       std::span<const u128> packed_data,
                       const FixedParams& p) {
  const int in = layer_dims.front();
  const std::size_t rows = packed_rows(packed_data, in);
  const std::size_t stride = static_cast<std::size_t>(in) + 1;
  double sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = packed_data.subspan(r * stride, in);
    const auto logits = fixed_forward(model_raw, layer_dims, row, p);
    std::vector<double> real(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
      real[i] = decode_fixed(logits[i], p);
    }
    const auto probs = softmax(real);
    sum += *std::max_element(probs.begin(), probs.end());
  }
  return encode_fixed(sum / static_cast<double>(rows), p);
}

namespace {

uint32_t read_be32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("truncated IDX file: " + path);
  }
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) |
         (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace

Dataset load_idx_dataset(const std::string& images_path,
                         const std::string& labels_path, int num_classes) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open " + images_path);
  if (read_be32(img, images_path) != 0x00000803) {
    throw std::runtime_error("bad IDX image magic in " + images_path);
  }
  const uint32_t n = read_be32(img, images_path);
  const uint32_t h = read_be32(img, images_path);
  const uint32_t w = read_be32(img, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open " + labels_path);
  if (read_be32(lab, labels_path) != 0x00000801) {
    throw std::runtime_error("bad IDX label magic in " + labels_path);
  }
  if (read_be32(lab, labels_path) != n) {
    throw std::runtime_error("IDX image/label count mismatch");
  }

  Dataset d;
  d.dim = static_cast<std::size_t>(h) * w;
  d.num_classes = static_cast<std::size_t>(num_classes);
  d.x.resize(static_cast<std::size_t>(n) * d.dim);
  d.y.resize(n);
  std::vector<unsigned char> buf(d.dim);
  for (uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
      throw std::runtime_error("truncated IDX image payload");
    }
    for (std::size_t k = 0; k < d.dim; ++k) {
      d.x[i * d.dim + k] = buf[k] / 255.0;
    }
    char lb;
    if (!lab.read(&lb, 1)) throw std::runtime_error("truncated IDX labels");
    d.y[i] = static_cast<unsigned char>(lb);
  }
  d.validate();
  return d;
}

}  // namespace fedval
