#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gustrl/domain.hpp"

namespace gustrl {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// conv1d(kernel, stride 1, no padding) -> flatten -> dense(hidden) -> ReLU
/// -> dense(hidden) -> ReLU -> dense(outputs).
struct NetworkSpec {
  int input_channels = 7;
  int input_length = static_cast<int>(Observation::kWindowLength);
  int kernel = 3;
  int filters = 16;
  int hidden = 512;
  int outputs = 7;

  int conv_length() const { return input_length - kernel + 1; }
  int flat_width() const { return filters * conv_length(); }
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Activations kept from a forward pass for the backward pass.
struct ForwardCache {
  bool valid = false;
  RowMatrix columns;  // (batch * conv_length) x (channels * kernel)
  RowMatrix flat;     // batch x flat_width
  RowMatrix hidden1;  // post-ReLU
  RowMatrix hidden2;  // post-ReLU
};

/// Valid cross-correlation of a channels x length signal with filters x channels x kernel
/// weights (flattened filter-major). Returns filters x (length - kernel + 1).
RowMatrix conv1d_forward(const RowMatrix& input, std::span<const double> kernels, std::span<const double> bias,
                         int kernel);

class Network {
 public:
  Network() = default;
  /// He-uniform trunk, +-1e-3 uniform output head, zero biases.
  Network(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  /// `inputs` holds one flattened observation per row, step-major (t * channels + c).
  /// Returns batch x outputs.
  RowMatrix forward(const RowMatrix& inputs, ForwardCache* cache = nullptr) const;

  /// Accumulates dLoss/dParameters into `grads` given dLoss/dOutputs.
  void backward(const ForwardCache& cache, const RowMatrix& d_outputs, std::span<double> grads) const;

  void zero_output_layer();

  // Parameter block offsets within parameters().
  struct Layout {
    std::size_t conv_w, conv_b, w1, b1, w2, b2, w3, b3, total;
  };
  const Layout& layout() const noexcept { return layout_; }

 private:
  NetworkSpec spec_;
  Layout layout_{};
  // Fixed base alignment keeps Eigen's vectorized summation order independent of the heap.
  std::vector<double, Eigen::aligned_allocator<double>> params_;
};

Network::Layout network_layout(const NetworkSpec& spec);

/// Stacks observations into network input rows.
RowMatrix stack_observations(std::span<const Observation> observations);
RowMatrix observation_row(const Observation& observation);

RowMatrix softmax_rows(const RowMatrix& logits);
RowMatrix log_softmax_rows(const RowMatrix& logits);

/// Action probabilities for one observation.
std::vector<double> forward_actor(const Network& actor, const Observation& observation);
double forward_critic(const Network& critic, const Observation& observation);

struct AdamState {
  double learning_rate = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  static AdamState for_parameters(std::size_t count, double learning_rate = 3e-5);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace gustrl
