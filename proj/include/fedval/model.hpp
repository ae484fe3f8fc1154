#pragma once
// A small MLP classifier (logistic regression when there are no hidden
// layers). Clients train it in plain double arithmetic; a fixed-point
// inference path mirrors the math on ring elements for everything that
// enters secret shares.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedval/fixed.hpp"

namespace fedval {

struct Dataset {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> x;  // rows() * dim, row-major
  std::vector<int> y;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * dim, dim};
  }
  void append(std::span<const double> features, int label);
  void append_all(const Dataset& other);
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& idx) const;
};

// Layers in order, each as row-major weights then bias. ReLU on hidden
// layers, identity on the output.
struct MlpModel {
  std::vector<int> layer_dims;  // {input, hidden..., classes}
  std::vector<double> params;

  static std::size_t param_count(const std::vector<int>& dims);

  MlpModel() = default;
  explicit MlpModel(std::vector<int> dims)
      : layer_dims(std::move(dims)), params(param_count(layer_dims), 0.0) {}
  MlpModel(std::vector<int> dims, std::vector<double> p);

  int num_classes() const { return layer_dims.back(); }
  int input_dim() const { return layer_dims.front(); }

  std::vector<double> forward(std::span<const double> x) const;
  void init_random(std::mt19937_64& rng, double scale = 0.1);
};

std::vector<double> softmax(const std::vector<double>& logits);
int argmax_lowest(const std::vector<double>& v);
int predict(const MlpModel& model, std::span<const double> x);
double accuracy(const MlpModel& model, const Dataset& d);
// Mean over rows of the maximum softmax probability; in [1/L, 1].
double mean_max_softmax(const MlpModel& model, const Dataset& d);

struct TrainOptions {
  int epochs = 1;
  double lr = 0.1;
  int batch_size = 16;
  double momentum = 0.0;
};

// Minibatch SGD on softmax cross-entropy. Returns w_new - w_old; the model
// is left at w_new. Deterministic given the rng state.
std::vector<double> local_train(MlpModel& model, const Dataset& d,
                                const TrainOptions& opts,
                                std::mt19937_64& rng);

// --- fixed-point inference kernels -----------------------------------------
// These operate on raw ring elements and are the single source of truth for
// what the sealed functionalities compute; the plaintext pipeline oracle
// reuses them verbatim.

// Packed dataset layout: per row, dim feature elements followed by the label
// encoded as a fixed-point integer.
FixedVec pack_dataset(const Dataset& d, const FixedParams& p);

std::vector<u128> fixed_forward(std::span<const u128> model_raw,
                                const std::vector<int>& layer_dims,
                                std::span<const u128> x_raw,
                                const FixedParams& p);

// Fraction of correctly predicted rows, re-encoded as a fixed-point real.
u128 fixed_accuracy(std::span<const u128> model_raw,
                    const std::vector<int>& layer_dims,
                    std::span<const u128> packed_data, const FixedParams& p);

// Mean max-softmax probability of the fixed-point logits, encoded.
u128 fixed_max_softmax(std::span<const u128> model_raw,
                       const std::vector<int>& layer_dims,
                       std::span<const u128> packed_data,
                       const FixedParams& p);

// --- IDX byte format (optional dataset source) ------------------------------
// Big-endian magic + dims + raw payload, the classic MNIST container.
Dataset load_idx_dataset(const std::string& images_path,
                         const std::string& labels_path, int num_classes);

}  // namespace fedval
