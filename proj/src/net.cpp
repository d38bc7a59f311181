#include "lcdrl/net.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lcdrl {

namespace {
constexpr double kProbFloor = 1e-12;
}

int HeadSpec::total() const {
    int n = 0;
    for (int s : sizes) n += s;
    return n;
}

DenseNet::DenseNet(int input_size, std::vector<int> hidden, HeadSpec head) : head_(std::move(head)) {
    if (input_size < 1) throw std::invalid_argument("DenseNet: input size must be positive");
    dims_.push_back(input_size);
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("DenseNet: hidden size must be positive");
        dims_.push_back(h);
    }
    int out = head_.total();
    if (out < 1) throw std::invalid_argument("DenseNet: head spec is empty");
    if (head_.kind == HeadKind::ScalarLinear && out != 1)
        throw std::invalid_argument("DenseNet: scalar head must have size 1");
    dims_.push_back(out);

    std::size_t offset = 0;
    for (int l = 0; l + 1 < static_cast<int>(dims_.size()); ++l) {
        std::size_t w = static_cast<std::size_t>(dims_[static_cast<std::size_t>(l) + 1]) *
                        static_cast<std::size_t>(dims_[static_cast<std::size_t>(l)]);
        offsets_.emplace_back(offset, offset + w);
        offset += w + static_cast<std::size_t>(dims_[static_cast<std::size_t>(l) + 1]);
    }
    params_.assign(offset, 0.0);
}

void DenseNet::init_params(Rng& rng) {
    for (int l = 0; l < num_layers(); ++l) {
        int fan_in = dims_[static_cast<std::size_t>(l)];
        int fan_out = dims_[static_cast<std::size_t>(l) + 1];
        double bound = std::sqrt(3.0 / fan_in);
        double* w = params_.data() + weight_offset(l);
        for (int i = 0; i < fan_out * fan_in; ++i) w[i] = (2.0 * rng.uniform() - 1.0) * bound;
        double* b = params_.data() + bias_offset(l);
        for (int i = 0; i < fan_out; ++i) b[i] = 0.0;
    }
}

std::span<const double> forward(const DenseNet& net, std::span<const double> input, ForwardCache& cache) {
    if (static_cast<int>(input.size()) != net.input_size())
        throw std::invalid_argument("forward: input size mismatch");
    int L = net.num_layers();
    cache.act.resize(static_cast<std::size_t>(L) + 1);
    cache.act[0].assign(input.begin(), input.end());
    const std::vector<double>& p = net.params();

    for (int l = 0; l < L; ++l) {
        int in = net.dims()[static_cast<std::size_t>(l)];
        int out = net.dims()[static_cast<std::size_t>(l) + 1];
        const double* w = p.data() + net.weight_offset(l);
        const double* b = p.data() + net.bias_offset(l);
        const double* a = cache.act[static_cast<std::size_t>(l)].data();
        std::vector<double>& z = cache.act[static_cast<std::size_t>(l) + 1];
        z.resize(static_cast<std::size_t>(out));
        for (int o = 0; o < out; ++o) {
            const double* row = w + static_cast<std::size_t>(o) * in;
            // Four independent accumulators in a fixed order: deterministic
            // and free of the serial-add latency chain.
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            int i = 0;
            for (; i + 4 <= in; i += 4) {
                s0 += row[i] * a[i];
                s1 += row[i + 1] * a[i + 1];
                s2 += row[i + 2] * a[i + 2];
                s3 += row[i + 3] * a[i + 3];
            }
            double acc = b[o] + ((s0 + s1) + (s2 + s3));
            for (; i < in; ++i) acc += row[i] * a[i];
            z[static_cast<std::size_t>(o)] = (l + 1 < L) ? std::max(0.0, acc) : acc;
        }
    }
    return cache.act.back();
}

std::vector<double> forward_raw(const DenseNet& net, std::span<const double> input) {
    ForwardCache cache;
    forward(net, input, cache);
    return cache.act.back();
}

std::pair<int, int> head_slice(const HeadSpec& head, int head_index) {
    int offset = 0;
    for (int h = 0; h < head_index; ++h) offset += head.sizes[static_cast<std::size_t>(h)];
    return {offset, head.sizes[static_cast<std::size_t>(head_index)]};
}

std::vector<double> head_probabilities(const HeadSpec& head, std::span<const double> raw) {
    std::vector<double> probs;
    head_probabilities_into(head, raw, probs);
    return probs;
}

void head_probabilities_into(const HeadSpec& head, std::span<const double> raw, std::vector<double>& probs) {
    if (head.kind != HeadKind::SoftmaxHeads)
        throw std::invalid_argument("head_probabilities: not a softmax head spec");
    probs.resize(raw.size());
    int offset = 0;
    for (int size : head.sizes) {
        double mx = raw[static_cast<std::size_t>(offset)];
        for (int i = 1; i < size; ++i) mx = std::max(mx, raw[static_cast<std::size_t>(offset + i)]);
        double sum = 0.0;
        for (int i = 0; i < size; ++i) {
            double e = std::exp(raw[static_cast<std::size_t>(offset + i)] - mx);
            probs[static_cast<std::size_t>(offset + i)] = e;
            sum += e;
        }
        double renorm = 0.0;
        for (int i = 0; i < size; ++i) {
            double v = std::max(probs[static_cast<std::size_t>(offset + i)] / sum, kProbFloor);
            probs[static_cast<std::size_t>(offset + i)] = v;
            renorm += v;
        }
        for (int i = 0; i < size; ++i) probs[static_cast<std::size_t>(offset + i)] /= renorm;
        offset += size;
    }
}

double head_log_prob(const HeadSpec& head, std::span<const double> raw, int head_index, int action) {
    auto [offset, size] = head_slice(head, head_index);
    double mx = raw[static_cast<std::size_t>(offset)];
    for (int i = 1; i < size; ++i) mx = std::max(mx, raw[static_cast<std::size_t>(offset + i)]);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) sum += std::exp(raw[static_cast<std::size_t>(offset + i)] - mx);
    double lp = raw[static_cast<std::size_t>(offset + action)] - mx - std::log(sum);
    return std::max(lp, std::log(kProbFloor));
}

void backward(const DenseNet& net, const ForwardCache& cache, std::span<const double> d_raw,
              std::vector<double>& grad) {
    int L = net.num_layers();
    if (static_cast<int>(cache.act.size()) != L + 1) throw std::invalid_argument("backward: missing cache");
    if (static_cast<int>(d_raw.size()) != net.output_size())
        throw std::invalid_argument("backward: output gradient size mismatch");
    if (static_cast<int>(grad.size()) != net.num_params()) grad.assign(static_cast<std::size_t>(net.num_params()), 0.0);

    const std::vector<double>& p = net.params();
    std::vector<double> delta(d_raw.begin(), d_raw.end());
    for (int l = L - 1; l >= 0; --l) {
        int in = net.dims()[static_cast<std::size_t>(l)];
        int out = net.dims()[static_cast<std::size_t>(l) + 1];
        const std::vector<double>& a = cache.act[static_cast<std::size_t>(l)];
        double* gw = grad.data() + net.weight_offset(l);
        double* gb = grad.data() + net.bias_offset(l);
        for (int o = 0; o < out; ++o) {
            double d = delta[static_cast<std::size_t>(o)];
            if (d == 0.0) continue;
            gb[o] += d;
            double* row = gw + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) row[i] += d * a[static_cast<std::size_t>(i)];
        }
        if (l == 0) break;
        const double* w = p.data() + net.weight_offset(l);
        std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
        for (int o = 0; o < out; ++o) {
            double d = delta[static_cast<std::size_t>(o)];
            if (d == 0.0) continue;
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) prev[static_cast<std::size_t>(i)] += d * row[i];
        }
        // ReLU derivative through the stored post-activation values.
        const std::vector<double>& act = cache.act[static_cast<std::size_t>(l)];
        for (int i = 0; i < in; ++i)
            if (act[static_cast<std::size_t>(i)] <= 0.0) prev[static_cast<std::size_t>(i)] = 0.0;
        delta = std::move(prev);
    }
}

void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state) {
    if (params.size() != grad.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step += 1;
    double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        double mhat = state.m[i] / b1t;
        double vhat = state.v[i] / b2t;
        params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

double grad_check(DenseNet& net, std::span<const double> input,
                  const std::function<double(std::span<const double>)>& loss,
                  const std::function<std::vector<double>(std::span<const double>)>& dloss,
                  double eps, int stride) {
    if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
    if (stride < 1) stride = 1;
    ForwardCache cache;
    forward(net, input, cache);
    std::vector<double> d_raw = dloss(cache.act.back());
    std::vector<double> analytic(static_cast<std::size_t>(net.num_params()), 0.0);
    backward(net, cache, d_raw, analytic);

    double max_rel = 0.0;
    std::vector<double>& p = net.params();
    ForwardCache scratch;
    for (std::size_t i = 0; i < p.size(); i += static_cast<std::size_t>(stride)) {
        double saved = p[i];
        p[i] = saved + eps;
        double plus = loss(forward(net, input, scratch));
        p[i] = saved - eps;
        double minus = loss(forward(net, input, scratch));
        p[i] = saved;
        double fd = (plus - minus) / (2.0 * eps);
        double a = analytic[i];
        double rel = std::abs(a - fd) / std::max({std::abs(a) + std::abs(fd), 1e-6});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

namespace {
constexpr char kNetMagic[4] = {'L', 'C', 'N', 'N'};
constexpr std::uint32_t kNetVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated stream");
}
}  // namespace

void save_checkpoint(std::ostream& out, const DenseNet& net, const AdamState& opt,
                     const std::string& rng_state) {
    out.write(kNetMagic, 4);
    put(out, kNetVersion);
    put(out, static_cast<std::int32_t>(net.dims().size()));
    for (int d : net.dims()) put(out, static_cast<std::int32_t>(d));
    put(out, static_cast<std::int32_t>(net.head().kind));
    put(out, static_cast<std::int32_t>(net.head().sizes.size()));
    for (int s : net.head().sizes) put(out, static_cast<std::int32_t>(s));
    put(out, static_cast<std::int64_t>(net.num_params()));
    out.write(reinterpret_cast<const char*>(net.params().data()),
              static_cast<std::streamsize>(net.params().size() * sizeof(double)));
    put(out, opt.learning_rate);
    put(out, opt.beta1);
    put(out, opt.beta2);
    put(out, opt.epsilon);
    put(out, static_cast<std::int64_t>(opt.step));
    out.write(reinterpret_cast<const char*>(opt.m.data()),
              static_cast<std::streamsize>(opt.m.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(opt.v.data()),
              static_cast<std::streamsize>(opt.v.size() * sizeof(double)));
    put(out, static_cast<std::int64_t>(rng_state.size()));
    out.write(rng_state.data(), static_cast<std::streamsize>(rng_state.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed");
}

void load_checkpoint(std::istream& in, DenseNet& net, AdamState& opt, std::string& rng_state) {
    char magic[4];
    in.read(magic, 4);
    if (!in || magic[0] != 'L' || magic[1] != 'C' || magic[2] != 'N' || magic[3] != 'N')
        throw std::runtime_error("checkpoint: bad magic");
    std::uint32_t version;
    get(in, version);
    if (version != kNetVersion) throw std::runtime_error("checkpoint: unsupported version");
    std::int32_t ndims;
    get(in, ndims);
    std::vector<int> dims(static_cast<std::size_t>(ndims));
    for (auto& d : dims) {
        std::int32_t v;
        get(in, v);
        d = v;
    }
    std::int32_t kind, nheads;
    get(in, kind);
    get(in, nheads);
    HeadSpec head;
    head.kind = static_cast<HeadKind>(kind);
    head.sizes.resize(static_cast<std::size_t>(nheads));
    for (auto& s : head.sizes) {
        std::int32_t v;
        get(in, v);
        s = v;
    }
    std::vector<int> hidden(dims.begin() + 1, dims.end() - 1);
    net = DenseNet(dims.front(), hidden, head);
    std::int64_t nparams;
    get(in, nparams);
    if (nparams != net.num_params()) throw std::runtime_error("checkpoint: parameter count mismatch");
    in.read(reinterpret_cast<char*>(net.params().data()),
            static_cast<std::streamsize>(net.params().size() * sizeof(double)));
    opt = AdamState(net.num_params());
    get(in, opt.learning_rate);
    get(in, opt.beta1);
    get(in, opt.beta2);
    get(in, opt.epsilon);
    std::int64_t step;
    get(in, step);
    opt.step = step;
    in.read(reinterpret_cast<char*>(opt.m.data()),
            static_cast<std::streamsize>(opt.m.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(opt.v.data()),
            static_cast<std::streamsize>(opt.v.size() * sizeof(double)));
    std::int64_t rng_len;
    get(in, rng_len);
    rng_state.resize(static_cast<std::size_t>(rng_len));
    in.read(rng_state.data(), static_cast<std::streamsize>(rng_len));
    if (!in) throw std::runtime_error("checkpoint: truncated stream");
}

}  // namespace lcdrl
