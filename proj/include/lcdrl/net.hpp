#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lcdrl/rng.hpp"

namespace lcdrl {

enum class HeadKind { ScalarLinear, VectorLinear, SoftmaxHeads };

struct HeadSpec {
    HeadKind kind = HeadKind::ScalarLinear;
    std::vector<int> sizes;  // per-head output widths; {1} for a scalar head

    int total() const;
    static HeadSpec scalar() { return {HeadKind::ScalarLinear, {1}}; }
    static HeadSpec vector(int k) { return {HeadKind::VectorLinear, {k}}; }
    static HeadSpec softmax(std::vector<int> sizes) { return {HeadKind::SoftmaxHeads, std::move(sizes)}; }
};

/// Hidden layers use rectified linear units; the output layer is linear and
/// interpreted through the head spec (softmax heads operate on slices of it).
/// Parameters live in one flat vector: per layer the row-major weight block
/// [out x in] followed by the bias block.
class DenseNet {
  public:
    DenseNet() = default;
    DenseNet(int input_size, std::vector<int> hidden, HeadSpec head);

    /// Scaled uniform fan-in initialization: W ~ U(-sqrt(3/fan_in), +sqrt(3/fan_in)), b = 0.
    void init_params(Rng& rng);

    int input_size() const { return dims_.front(); }
    int output_size() const { return dims_.back(); }
    int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
    const std::vector<int>& dims() const { return dims_; }
    const HeadSpec& head() const { return head_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    int num_params() const { return static_cast<int>(params_.size()); }

    std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)].first; }
    std::size_t bias_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)].second; }

  private:
    std::vector<int> dims_;  // input, hidden..., output total
    HeadSpec head_;
    std::vector<double> params_;
    std::vector<std::pair<std::size_t, std::size_t>> offsets_;  // (W, b) per layer
};

struct ForwardCache {
    std::vector<std::vector<double>> act;  // act[0] = input, act[L] = raw outputs
};

/// Deterministic forward pass; returns the raw (pre-softmax) output layer.
std::span<const double> forward(const DenseNet& net, std::span<const double> input, ForwardCache& cache);

/// Convenience forward without keeping the cache.
std::vector<double> forward_raw(const DenseNet& net, std::span<const double> input);

/// Softmax probabilities for every head, max-subtracted for stability and
/// floored at 1e-12 (then renormalized) so logs stay finite.
std::vector<double> head_probabilities(const HeadSpec& head, std::span<const double> raw);
void head_probabilities_into(const HeadSpec& head, std::span<const double> raw, std::vector<double>& out);

/// log pi(action) of one softmax head, consistent with head_probabilities.
double head_log_prob(const HeadSpec& head, std::span<const double> raw, int head_index, int action);

std::pair<int, int> head_slice(const HeadSpec& head, int head_index);  // (offset, size)

/// Exact reverse-mode gradients of a scalar loss whose gradient at the raw
/// output layer is `d_raw`; accumulates into `grad` (size num_params).
void backward(const DenseNet& net, const ForwardCache& cache, std::span<const double> d_raw,
              std::vector<double>& grad);

/// Adam with bias-corrected first and second moments.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<double> m, v;

    explicit AdamState(int num_params = 0, double lr = 1e-3)
        : learning_rate(lr), m(static_cast<std::size_t>(num_params), 0.0), v(static_cast<std::size_t>(num_params), 0.0) {}
};

void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state);

/// Central-difference check of backward() against the analytic gradient.
/// `loss` maps raw outputs to the scalar loss; `dloss` returns its gradient at
/// the raw outputs. Every `stride`-th parameter is probed (1 = all). Returns
/// the maximum relative error.
double grad_check(DenseNet& net, std::span<const double> input,
                  const std::function<double(std::span<const double>)>& loss,
                  const std::function<std::vector<double>(std::span<const double>)>& dloss,
                  double eps = 1e-5, int stride = 1);

/// Checkpoint: "LCNN" magic, version, dims, head spec, parameters, optimizer
/// moments/step, and the serialized RNG state of the owning training loop.
void save_checkpoint(std::ostream& out, const DenseNet& net, const AdamState& opt,
                     const std::string& rng_state);
void load_checkpoint(std::istream& in, DenseNet& net, AdamState& opt, std::string& rng_state);

}  // namespace lcdrl
