#include "gustrl/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "gustrl/error.hpp"

namespace gustrl {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using ConstRowVec = Eigen::Map<const Eigen::RowVectorXd>;

// Gradients are formed in Eigen-owned (aligned) storage and added elementwise, so the
// result does not depend on the alignment of the caller's buffer.
void accumulate(double* dst, const RowMatrix& block) {
  const double* src = block.data();
  for (Eigen::Index i = 0; i < block.size(); ++i) dst[i] += src[i];
}

// im2col for a batch of step-major observations.
RowMatrix unfold(const RowMatrix& inputs, const NetworkSpec& spec) {
  const int batch = static_cast<int>(inputs.rows());
  const int lc = spec.conv_length();
  const int channels = spec.input_channels;
  RowMatrix cols(static_cast<Eigen::Index>(batch) * lc, channels * spec.kernel);
  for (int b = 0; b < batch; ++b) {
    for (int p = 0; p < lc; ++p) {
      const auto row = static_cast<Eigen::Index>(b) * lc + p;
      for (int c = 0; c < channels; ++c) {
        for (int k = 0; k < spec.kernel; ++k) {
          cols(row, c * spec.kernel + k) = inputs(b, (p + k) * channels + c);
        }
      }
    }
  }
  return cols;
}

}  // namespace

std::size_t NetworkSpec::parameter_count() const { return network_layout(*this).total; }

void NetworkSpec::validate() const {
  std::vector<std::string> problems;
  if (input_channels <= 0) problems.emplace_back("network.input_channels must be > 0");
  if (kernel <= 0 || kernel > input_length) problems.emplace_back("network.kernel must be in [1, input_length]");
  if (filters <= 0) problems.emplace_back("network.filters must be > 0");
  if (hidden <= 0) problems.emplace_back("network.hidden must be > 0");
  if (outputs <= 0) problems.emplace_back("network.outputs must be > 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

Network::Layout network_layout(const NetworkSpec& spec) {
  Network::Layout l{};
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    const std::size_t start = at;
    at += n;
    return start;
  };
  const auto f = static_cast<std::size_t>(spec.filters);
  const auto h = static_cast<std::size_t>(spec.hidden);
  const auto o = static_cast<std::size_t>(spec.outputs);
  l.conv_w = take(f * static_cast<std::size_t>(spec.input_channels * spec.kernel));
  l.conv_b = take(f);
  l.w1 = take(h * static_cast<std::size_t>(spec.flat_width()));
  l.b1 = take(h);
  l.w2 = take(h * h);
  l.b2 = take(h);
  l.w3 = take(o * h);
  l.b3 = take(o);
  l.total = at;
  return l;
}

Network::Network(const NetworkSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  layout_ = network_layout(spec_);
  params_.assign(layout_.total, 0.0);

  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t offset, std::size_t count, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = dist(rng);
  };
  const auto he = [](int fan_in) { return std::sqrt(6.0 / fan_in); };
  fill(layout_.conv_w, layout_.conv_b - layout_.conv_w, he(spec_.input_channels * spec_.kernel));
  fill(layout_.w1, layout_.b1 - layout_.w1, he(spec_.flat_width()));
  fill(layout_.w2, layout_.b2 - layout_.w2, he(spec_.hidden));
  fill(layout_.w3, layout_.b3 - layout_.w3, 1e-3);
}

void Network::zero_output_layer() {
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(layout_.w3), params_.end(), 0.0);
}

RowMatrix Network::forward(const RowMatrix& inputs, ForwardCache* cache) const {
  const int width = spec_.input_channels * spec_.input_length;
  if (inputs.cols() != width)
    throw SpecMismatchError("Network::forward: input width " + std::to_string(inputs.cols()) + " != expected " +
                            std::to_string(width));
  const auto batch = inputs.rows();
  const int lc = spec_.conv_length();
  const int f = spec_.filters;
  const int h = spec_.hidden;
  const double* p = params_.data();

  ConstMap conv_w(p + layout_.conv_w, f, spec_.input_channels * spec_.kernel);
  ConstRowVec conv_b(p + layout_.conv_b, f);
  ConstMap w1(p + layout_.w1, h, spec_.flat_width());
  ConstRowVec b1(p + layout_.b1, h);
  ConstMap w2(p + layout_.w2, h, h);
  ConstRowVec b2(p + layout_.b2, h);
  ConstMap w3(p + layout_.w3, spec_.outputs, h);
  ConstRowVec b3(p + layout_.b3, spec_.outputs);

  RowMatrix cols = unfold(inputs, spec_);
  RowMatrix conv = cols * conv_w.transpose();
  conv.rowwise() += conv_b;

  // Flatten filter-major: flat(b, f * lc + p).
  RowMatrix flat(batch, spec_.flat_width());
  for (Eigen::Index b = 0; b < batch; ++b)
    for (int q = 0; q < lc; ++q)
      for (int k = 0; k < f; ++k) flat(b, k * lc + q) = conv(b * lc + q, k);

  RowMatrix h1 = flat * w1.transpose();
  h1.rowwise() += b1;
  h1 = h1.cwiseMax(0.0);
  RowMatrix h2 = h1 * w2.transpose();
  h2.rowwise() += b2;
  h2 = h2.cwiseMax(0.0);
  RowMatrix out = h2 * w3.transpose();
  out.rowwise() += b3;

  if (cache != nullptr) {
    cache->columns = std::move(cols);
    cache->flat = std::move(flat);
    cache->hidden1 = std::move(h1);
    cache->hidden2 = std::move(h2);
    cache->valid = true;
  }
  return out;
}

void Network::backward(const ForwardCache& cache, const RowMatrix& d_out, std::span<double> grads) const {
  if (!cache.valid) throw std::logic_error("Network::backward called without a recorded forward pass");
  if (grads.size() != params_.size()) throw SpecMismatchError("Network::backward: gradient buffer size mismatch");
  if (d_out.rows() != cache.flat.rows() || d_out.cols() != spec_.outputs)
    throw SpecMismatchError("Network::backward: output gradient shape mismatch");

  const auto batch = d_out.rows();
  const int lc = spec_.conv_length();
  const int f = spec_.filters;
  const int h = spec_.hidden;
  const double* p = params_.data();
  double* g = grads.data();

  ConstMap w1(p + layout_.w1, h, spec_.flat_width());
  ConstMap w2(p + layout_.w2, h, h);
  ConstMap w3(p + layout_.w3, spec_.outputs, h);

  accumulate(g + layout_.w3, d_out.transpose() * cache.hidden2);
  accumulate(g + layout_.b3, d_out.colwise().sum());

  // ReLU subgradient is 0 at 0.
  RowMatrix d2 = (d_out * w3).cwiseProduct((cache.hidden2.array() > 0.0).cast<double>().matrix());
  accumulate(g + layout_.w2, d2.transpose() * cache.hidden1);
  accumulate(g + layout_.b2, d2.colwise().sum());

  RowMatrix d1 = (d2 * w2).cwiseProduct((cache.hidden1.array() > 0.0).cast<double>().matrix());
  accumulate(g + layout_.w1, d1.transpose() * cache.flat);
  accumulate(g + layout_.b1, d1.colwise().sum());

  RowMatrix d_flat = d1 * w1;
  RowMatrix d_conv(batch * lc, f);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (int q = 0; q < lc; ++q)
      for (int k = 0; k < f; ++k) d_conv(b * lc + q, k) = d_flat(b, k * lc + q);

  accumulate(g + layout_.conv_w, d_conv.transpose() * cache.columns);
  accumulate(g + layout_.conv_b, d_conv.colwise().sum());
}

RowMatrix conv1d_forward(const RowMatrix& input, std::span<const double> kernels, std::span<const double> bias,
                         int kernel) {
  const auto channels = static_cast<int>(input.rows());
  const auto length = static_cast<int>(input.cols());
  const auto filters = static_cast<int>(bias.size());
  if (kernel <= 0 || kernel > length) throw SpecMismatchError("conv1d_forward: kernel longer than input");
  if (kernels.size() != static_cast<std::size_t>(filters * channels * kernel))
    throw SpecMismatchError("conv1d_forward: kernel tensor shape mismatch");

  NetworkSpec spec;
  spec.input_channels = channels;
  spec.input_length = length;
  spec.kernel = kernel;
  RowMatrix step_major(1, channels * length);
  for (int t = 0; t < length; ++t)
    for (int c = 0; c < channels; ++c) step_major(0, t * channels + c) = input(c, t);

  const RowMatrix cols = unfold(step_major, spec);
  ConstMap w(kernels.data(), filters, channels * kernel);
  RowMatrix conv = cols * w.transpose();
  conv.rowwise() += ConstRowVec(bias.data(), filters);
  return conv.transpose();
}

RowMatrix observation_row(const Observation& observation) {
  const auto data = observation.data();
  RowMatrix row(1, static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = data[i];
  return row;
}

RowMatrix stack_observations(std::span<const Observation> observations) {
  if (observations.empty()) return {};
  const auto width = static_cast<Eigen::Index>(observations.front().data().size());
  RowMatrix rows(static_cast<Eigen::Index>(observations.size()), width);
  for (std::size_t b = 0; b < observations.size(); ++b) {
    const auto data = observations[b].data();
    if (static_cast<Eigen::Index>(data.size()) != width)
      throw SpecMismatchError("stack_observations: mixed channel counts");
    for (Eigen::Index i = 0; i < width; ++i) rows(static_cast<Eigen::Index>(b), i) = data[static_cast<std::size_t>(i)];
  }
  return rows;
}

RowMatrix log_softmax_rows(const RowMatrix& logits) {
  RowMatrix out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    const double lse = m + std::log((out.row(r).array() - m).exp().sum());
    out.row(r).array() -= lse;
  }
  return out;
}

RowMatrix softmax_rows(const RowMatrix& logits) { return log_softmax_rows(logits).array().exp().matrix(); }

std::vector<double> forward_actor(const Network& actor, const Observation& observation) {
  if (static_cast<int>(observation.channels()) != actor.spec().input_channels)
    throw SpecMismatchError("forward_actor: observation has " + std::to_string(observation.channels()) +
                            " channels, network expects " + std::to_string(actor.spec().input_channels));
  const RowMatrix probs = softmax_rows(actor.forward(observation_row(observation)));
  return {probs.data(), probs.data() + probs.cols()};
}

double forward_critic(const Network& critic, const Observation& observation) {
  if (static_cast<int>(observation.channels()) != critic.spec().input_channels)
    throw SpecMismatchError("forward_critic: observation channel count does not match the network");
  if (critic.spec().outputs != 1) throw SpecMismatchError("forward_critic: critic must have one output");
  return critic.forward(observation_row(observation))(0, 0);
}

AdamState AdamState::for_parameters(std::size_t count, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment.assign(count, 0.0);
  s.second_moment.assign(count, 0.0);
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size())
    throw SpecMismatchError("adam_step: parameter, gradient and moment sizes differ");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace gustrl
