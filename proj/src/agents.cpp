#include "lcdrl/agents.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lcdrl/evaluate.hpp"
#include "lcdrl/policies.hpp"

namespace lcdrl {

namespace {
constexpr double kProbFloor = 1e-12;

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
    return best;
}
}  // namespace

// ---------------------------------------------------------------------------
// DDQN

int select_action_ddqn(const DenseNet& q_net, std::span<const double> input, double epsilon, Rng& rng) {
    int k = q_net.output_size();
    if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.uniform_int(k);
    std::vector<double> q = forward_raw(q_net, input);
    return argmax_lowest(q);
}

std::vector<double> ddqn_target(const std::vector<const DdqnRecord*>& batch, const DenseNet& online,
                                const DenseNet& target, double gamma) {
    std::vector<double> y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const DdqnRecord& r = *batch[i];
        if (r.terminal) {
            y[i] = r.reward;
            continue;
        }
        std::vector<double> next = to_double(r.next_input);
        std::vector<double> q_online = forward_raw(online, next);
        int best = argmax_lowest(q_online);
        std::vector<double> q_target = forward_raw(target, next);
        y[i] = r.reward + gamma * q_target[static_cast<std::size_t>(best)];
    }
    return y;
}

DdqnAgent::DdqnAgent(int input_size, int num_actions, const DdqnConfig& config, double gamma,
                     std::uint64_t init_seed)
    : config_(config),
      gamma_(gamma),
      online_(input_size, config.hidden, HeadSpec::vector(num_actions)),
      opt_(0, config.learning_rate),
      buffer_(config.buffer_capacity) {
    Rng rng(init_seed);
    online_.init_params(rng);
    target_ = online_;
    opt_ = AdamState(online_.num_params(), config.learning_rate);
}

double DdqnAgent::update(Rng& rng) {
    std::vector<const DdqnRecord*> batch;
    batch.reserve(static_cast<std::size_t>(config_.batch_size));
    for (int i = 0; i < config_.batch_size; ++i) batch.push_back(&buffer_.sample(rng));
    return update_batch(batch);
}

double DdqnAgent::update_batch(const std::vector<const DdqnRecord*>& batch) {
    if (batch.empty()) throw std::invalid_argument("ddqn update: empty batch");
    std::vector<double> y = ddqn_target(batch, online_, target_, gamma_);

    std::vector<double> grad(static_cast<std::size_t>(online_.num_params()), 0.0);
    ForwardCache cache;
    std::vector<double> d_raw(static_cast<std::size_t>(online_.output_size()), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const DdqnRecord& r = *batch[i];
        std::vector<double> input = to_double(r.input);
        std::span<const double> q = forward(online_, input, cache);
        double diff = q[static_cast<std::size_t>(r.action)] - y[i];
        loss += diff * diff;
        std::fill(d_raw.begin(), d_raw.end(), 0.0);
        d_raw[static_cast<std::size_t>(r.action)] = diff;
        backward(online_, cache, d_raw, grad);
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    loss *= inv;
    if (!std::isfinite(loss)) throw TrainingDivergence("ddqn update produced a non-finite loss");

    adam_step(online_.params(), grad, opt_);
    ++update_count_;
    if (update_count_ % config_.target_sync_period == 0) target_ = online_;
    return loss;
}

void DdqnAgent::save(std::ostream& out, const std::string& rng_state) const {
    out.write("LCQ1", 4);
    std::int64_t updates = update_count_;
    out.write(reinterpret_cast<const char*>(&updates), sizeof(updates));
    save_checkpoint(out, online_, opt_, rng_state);
    AdamState dummy(target_.num_params());
    save_checkpoint(out, target_, dummy, "");
}

void DdqnAgent::load(std::istream& in, std::string& rng_state) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "LCQ1") throw std::runtime_error("ddqn checkpoint: bad magic");
    std::int64_t updates;
    in.read(reinterpret_cast<char*>(&updates), sizeof(updates));
    update_count_ = updates;
    load_checkpoint(in, online_, opt_, rng_state);
    AdamState dummy;
    std::string ignored;
    load_checkpoint(in, target_, dummy, ignored);
}

// ---------------------------------------------------------------------------
// DCMAC

double dcmac_advantage(const DcmacRecord& record, const DenseNet& critic, double gamma) {
    std::vector<double> input = to_double(record.input);
    double v = forward_raw(critic, input)[0];
    if (record.terminal) return record.reward - v;
    std::vector<double> next = to_double(record.next_input);
    double v_next = forward_raw(critic, next)[0];
    return record.reward + gamma * v_next - v;
}

namespace {
double weight_from_probs(const DcmacRecord& record, const std::vector<double>& probs,
                         const std::vector<int>& head_sizes, double cap) {
    double ratio = 1.0;
    int offset = 0;
    for (std::size_t j = 0; j < head_sizes.size(); ++j) {
        double pi = probs[static_cast<std::size_t>(offset + record.action[j])];
        double mu = std::max(record.mu[j], kProbFloor);
        ratio *= pi / mu;
        offset += head_sizes[j];
    }
    return std::min(cap, ratio);
}
}  // namespace

double importance_weight(const DcmacRecord& record, const DenseNet& actor, double cap) {
    std::vector<double> input = to_double(record.input);
    std::vector<double> raw = forward_raw(actor, input);
    std::vector<double> probs = head_probabilities(actor.head(), raw);
    std::vector<int> sizes = actor.head().sizes;
    return weight_from_probs(record, probs, sizes, cap);
}

DcmacAgent::DcmacAgent(int input_size, std::vector<int> head_sizes, const DcmacConfig& config,
                       double gamma, std::uint64_t init_seed)
    : config_(config),
      gamma_(gamma),
      head_sizes_(std::move(head_sizes)),
      actor_(input_size, config.hidden, HeadSpec::softmax(head_sizes_)),
      critic_(input_size, config.hidden, HeadSpec::scalar()),
      actor_opt_(0, config.actor_learning_rate),
      critic_opt_(0, config.critic_learning_rate),
      buffer_(config.buffer_capacity) {
    Rng rng(init_seed);
    actor_.init_params(rng);
    critic_.init_params(rng);
    actor_opt_ = AdamState(actor_.num_params(), config.actor_learning_rate);
    critic_opt_ = AdamState(critic_.num_params(), config.critic_learning_rate);
}

void DcmacAgent::select_actions(std::span<const double> input, double epsilon, Rng& rng,
                                std::vector<int>& actions, std::vector<double>& mu,
                                double do_nothing_bias) const {
    std::vector<double> raw = forward_raw(actor_, input);
    std::vector<double> probs = head_probabilities(actor_.head(), raw);
    actions.resize(head_sizes_.size());
    mu.resize(head_sizes_.size());
    int offset = 0;
    for (std::size_t j = 0; j < head_sizes_.size(); ++j) {
        int k = head_sizes_[j];
        std::span<const double> pi(probs.data() + offset, static_cast<std::size_t>(k));
        auto explore_prob = [&](int a) {
            double uniform = (1.0 - do_nothing_bias) / k;
            return a == 0 ? do_nothing_bias + uniform : uniform;
        };
        int a;
        if (epsilon > 0.0 && rng.uniform() < epsilon) {
            if (do_nothing_bias > 0.0 && rng.uniform() < do_nothing_bias) {
                a = 0;
            } else {
                a = rng.uniform_int(k);
            }
        } else {
            a = rng.categorical(pi);
        }
        actions[j] = a;
        mu[j] = epsilon * explore_prob(a) + (1.0 - epsilon) * pi[static_cast<std::size_t>(a)];
        offset += k;
    }
}

void DcmacAgent::prepare_batch(const std::vector<const DcmacRecord*>& batch,
                               std::vector<double>& advantages, std::vector<double>& weights) const {
    advantages.resize(batch.size());
    weights.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        advantages[i] = dcmac_advantage(*batch[i], critic_, gamma_);
        weights[i] = importance_weight(*batch[i], actor_, config_.importance_weight_cap);
    }
}

double DcmacAgent::actor_step(const std::vector<const DcmacRecord*>& batch,
                              std::span<const double> advantages, std::span<const double> weights) {
    std::vector<double> grad(static_cast<std::size_t>(actor_.num_params()), 0.0);
    ForwardCache cache;
    std::vector<double> d_raw(static_cast<std::size_t>(actor_.output_size()), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const DcmacRecord& r = *batch[i];
        std::vector<double> input = to_double(r.input);
        std::span<const double> raw = forward(actor_, input, cache);
        std::vector<double> probs = head_probabilities(actor_.head(), raw);
        double coeff = weights[i] * advantages[i];
        // d(-w A log pi)/d logits = -w A (onehot - pi) per head.
        int offset = 0;
        for (std::size_t j = 0; j < head_sizes_.size(); ++j) {
            int k = head_sizes_[j];
            for (int c = 0; c < k; ++c) {
                double onehot = (c == r.action[j]) ? 1.0 : 0.0;
                d_raw[static_cast<std::size_t>(offset + c)] =
                    -coeff * (onehot - probs[static_cast<std::size_t>(offset + c)]);
            }
            offset += k;
        }
        backward(actor_, cache, d_raw, grad);
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    double norm_sq = 0.0;
    for (double& g : grad) {
        g *= inv;
        norm_sq += g * g;
    }
    if (!std::isfinite(norm_sq)) throw TrainingDivergence("actor update produced a non-finite gradient");
    adam_step(actor_.params(), grad, actor_opt_);
    return std::sqrt(norm_sq);
}

double DcmacAgent::critic_step(const std::vector<const DcmacRecord*>& batch,
                               std::span<const double> advantages, std::span<const double> weights) {
    std::vector<double> grad(static_cast<std::size_t>(critic_.num_params()), 0.0);
    ForwardCache cache;
    double loss = 0.0;
    double d_raw[1];
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const DcmacRecord& r = *batch[i];
        std::vector<double> input = to_double(r.input);
        forward(critic_, input, cache);
        // Semi-gradient: the bootstrap target is a constant, so minimizing the
        // weighted squared advantage pushes V by -w A at the output.
        d_raw[0] = -weights[i] * advantages[i];
        backward(critic_, cache, std::span<const double>(d_raw, 1), grad);
        loss += weights[i] * advantages[i] * advantages[i];
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    loss *= inv;
    if (!std::isfinite(loss)) throw TrainingDivergence("critic update produced a non-finite loss");
    adam_step(critic_.params(), grad, critic_opt_);
    return loss;
}

double DcmacAgent::actor_update(const std::vector<const DcmacRecord*>& batch) {
    if (batch.empty()) throw std::invalid_argument("actor update: empty batch");
    std::vector<double> advantages, weights;
    prepare_batch(batch, advantages, weights);
    return actor_step(batch, advantages, weights);
}

double DcmacAgent::critic_update(const std::vector<const DcmacRecord*>& batch) {
    if (batch.empty()) throw std::invalid_argument("critic update: empty batch");
    std::vector<double> advantages, weights;
    prepare_batch(batch, advantages, weights);
    return critic_step(batch, advantages, weights);
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapW = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<const Eigen::VectorXd>;

/// Whole-batch forward: activations[l] is the (batch x width) output of layer
/// l, with activations[0] the inputs. Hidden layers are rectified.
void batched_forward(const DenseNet& net, std::vector<Eigen::MatrixXd>& activations) {
    int L = net.num_layers();
    const double* p = net.params().data();
    for (int l = 0; l < L; ++l) {
        int in = net.dims()[static_cast<std::size_t>(l)];
        int out = net.dims()[static_cast<std::size_t>(l) + 1];
        MapW w(p + net.weight_offset(l), out, in);
        MapVec b(p + net.bias_offset(l), out);
        Eigen::MatrixXd& z = activations[static_cast<std::size_t>(l) + 1];
        z.noalias() = activations[static_cast<std::size_t>(l)] * w.transpose();
        z.rowwise() += b.transpose();
        if (l + 1 < L) z = z.cwiseMax(0.0);
    }
}

/// Whole-batch reverse pass accumulating summed parameter gradients into the
/// flat `grad` buffer (same layout as the net parameters).
void batched_backward(const DenseNet& net, const std::vector<Eigen::MatrixXd>& activations,
                      Eigen::MatrixXd delta, std::vector<double>& grad) {
    int L = net.num_layers();
    const double* p = net.params().data();
    for (int l = L - 1; l >= 0; --l) {
        int in = net.dims()[static_cast<std::size_t>(l)];
        int out = net.dims()[static_cast<std::size_t>(l) + 1];
        Eigen::Map<RowMat> gw(grad.data() + net.weight_offset(l), out, in);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + net.bias_offset(l), out);
        gw.noalias() = delta.transpose() * activations[static_cast<std::size_t>(l)];
        gb = delta.colwise().sum();
        if (l == 0) break;
        MapW w(p + net.weight_offset(l), out, in);
        Eigen::MatrixXd prev = delta * w;
        // ReLU mask from the stored post-activation values.
        prev.array() *= (activations[static_cast<std::size_t>(l)].array() > 0.0).cast<double>();
        delta = std::move(prev);
    }
}

}  // namespace

struct DcmacAgent::Workspace {
    std::vector<const DcmacRecord*> batch;
    std::vector<Eigen::MatrixXd> actor_act, critic_act, next_act;
    std::vector<double> advantage, weight, probs;
    std::vector<double> actor_grad, critic_grad;
};

DcmacAgent::~DcmacAgent() = default;

DcmacAgent::Workspace& DcmacAgent::workspace() {
    if (!work_ptr_) work_ptr_ = std::make_unique<Workspace>();
    return *work_ptr_;
}

void DcmacAgent::update(Rng& rng) {
    // Batched fast path: the whole batch moves through both networks as
    // matrix products. Same estimator as actor_step/critic_step, summation
    // order aside.
    Workspace& w = workspace();
    int batch = config_.batch_size;
    w.batch.clear();
    for (int i = 0; i < batch; ++i) w.batch.push_back(&buffer_.sample(rng));

    int in_dim = actor_.input_size();
    int L_actor = actor_.num_layers();
    int L_critic = critic_.num_layers();
    if (w.actor_act.empty()) {
        w.actor_act.resize(static_cast<std::size_t>(L_actor) + 1);
        w.critic_act.resize(static_cast<std::size_t>(L_critic) + 1);
        w.next_act.resize(static_cast<std::size_t>(L_critic) + 1);
        for (int l = 0; l <= L_actor; ++l)
            w.actor_act[static_cast<std::size_t>(l)].resize(batch, actor_.dims()[static_cast<std::size_t>(l)]);
        for (int l = 0; l <= L_critic; ++l) {
            w.critic_act[static_cast<std::size_t>(l)].resize(batch, critic_.dims()[static_cast<std::size_t>(l)]);
            w.next_act[static_cast<std::size_t>(l)].resize(batch, critic_.dims()[static_cast<std::size_t>(l)]);
        }
    }
    for (int i = 0; i < batch; ++i) {
        const DcmacRecord& r = *w.batch[static_cast<std::size_t>(i)];
        for (int k = 0; k < in_dim; ++k) {
            w.critic_act[0](i, k) = static_cast<double>(r.input[static_cast<std::size_t>(k)]);
            w.next_act[0](i, k) = static_cast<double>(r.next_input[static_cast<std::size_t>(k)]);
        }
    }
    w.actor_act[0] = w.critic_act[0];

    batched_forward(critic_, w.critic_act);
    batched_forward(critic_, w.next_act);
    w.advantage.resize(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
        const DcmacRecord& r = *w.batch[static_cast<std::size_t>(i)];
        double v = w.critic_act.back()(i, 0);
        w.advantage[static_cast<std::size_t>(i)] =
            r.terminal ? r.reward - v : r.reward + gamma_ * w.next_act.back()(i, 0) - v;
    }

    batched_forward(actor_, w.actor_act);
    w.weight.resize(static_cast<std::size_t>(batch));
    Eigen::MatrixXd actor_delta(batch, actor_.output_size());
    double mean_weight = 0.0;
    for (int i = 0; i < batch; ++i) {
        const DcmacRecord& r = *w.batch[static_cast<std::size_t>(i)];
        const auto& raw_row = w.actor_act.back();
        w.probs.resize(static_cast<std::size_t>(actor_.output_size()));
        // per-head stabilized softmax over this row
        int offset = 0;
        double ratio = 1.0;
        for (std::size_t j = 0; j < head_sizes_.size(); ++j) {
            int k = head_sizes_[j];
            double mx = raw_row(i, offset);
            for (int c = 1; c < k; ++c) mx = std::max(mx, raw_row(i, offset + c));
            double sum = 0.0;
            for (int c = 0; c < k; ++c) {
                double e = std::exp(raw_row(i, offset + c) - mx);
                w.probs[static_cast<std::size_t>(offset + c)] = e;
                sum += e;
            }
            double renorm = 0.0;
            for (int c = 0; c < k; ++c) {
                double v = std::max(w.probs[static_cast<std::size_t>(offset + c)] / sum, kProbFloor);
                w.probs[static_cast<std::size_t>(offset + c)] = v;
                renorm += v;
            }
            for (int c = 0; c < k; ++c) w.probs[static_cast<std::size_t>(offset + c)] /= renorm;
            ratio *= w.probs[static_cast<std::size_t>(offset + r.action[j])] / std::max(r.mu[j], kProbFloor);
            offset += k;
        }
        double weight = std::min(config_.importance_weight_cap, ratio);
        w.weight[static_cast<std::size_t>(i)] = weight;
        mean_weight += weight;
        double coeff = weight * w.advantage[static_cast<std::size_t>(i)];
        offset = 0;
        for (std::size_t j = 0; j < head_sizes_.size(); ++j) {
            int k = head_sizes_[j];
            for (int c = 0; c < k; ++c) {
                double onehot = (c == r.action[j]) ? 1.0 : 0.0;
                actor_delta(i, offset + c) = -coeff * (onehot - w.probs[static_cast<std::size_t>(offset + c)]);
            }
            offset += k;
        }
    }
    last_mean_weight_ = mean_weight / static_cast<double>(batch);

    w.actor_grad.resize(static_cast<std::size_t>(actor_.num_params()));
    batched_backward(actor_, w.actor_act, std::move(actor_delta), w.actor_grad);

    Eigen::MatrixXd critic_delta(batch, 1);
    double critic_loss = 0.0;
    for (int i = 0; i < batch; ++i) {
        double wa = w.weight[static_cast<std::size_t>(i)] * w.advantage[static_cast<std::size_t>(i)];
        critic_delta(i, 0) = -wa;
        critic_loss += wa * w.advantage[static_cast<std::size_t>(i)];
    }
    w.critic_grad.resize(static_cast<std::size_t>(critic_.num_params()));
    batched_backward(critic_, w.critic_act, std::move(critic_delta), w.critic_grad);

    double inv = 1.0 / static_cast<double>(batch);
    double actor_norm_sq = 0.0;
    for (double& g : w.actor_grad) {
        g *= inv;
        actor_norm_sq += g * g;
    }
    for (double& g : w.critic_grad) g *= inv;
    critic_loss *= inv;
    if (!std::isfinite(actor_norm_sq) || !std::isfinite(critic_loss))
        throw TrainingDivergence("dcmac update produced a non-finite loss");
    adam_step(actor_.params(), w.actor_grad, actor_opt_);
    adam_step(critic_.params(), w.critic_grad, critic_opt_);
}

void DcmacAgent::save(std::ostream& out, const std::string& rng_state) const {
    out.write("LCA2", 4);
    save_checkpoint(out, actor_, actor_opt_, rng_state);
    save_checkpoint(out, critic_, critic_opt_, "");
}

void DcmacAgent::load(std::istream& in, std::string& rng_state) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "LCA2") throw std::runtime_error("dcmac checkpoint: bad magic");
    load_checkpoint(in, actor_, actor_opt_, rng_state);
    std::string ignored;
    load_checkpoint(in, critic_, critic_opt_, ignored);
    head_sizes_ = actor_.head().sizes;
}

// ---------------------------------------------------------------------------
// Training loops

std::vector<int> actor_head_sizes(const SystemModel& sys) {
    std::vector<int> sizes;
    for (const ControlUnit& u : sys.units) sizes.push_back(u.num_actions);
    return sizes;
}

namespace {

/// Training-only shaping: costs added for actions that change neither the
/// state nor the rate of their component (e.g. rate repairs at rate zero).
double shaping_cost(const SystemModel& sys, const SystemState& state, const std::vector<int>& actions,
                    double penalty) {
    if (penalty <= 0.0) return 0.0;
    double total = 0.0;
    for (int u = 0; u < sys.num_units(); ++u) {
        const ControlUnit& unit = sys.units[static_cast<std::size_t>(u)];
        if (unit.is_inspection) continue;
        int a = actions[static_cast<std::size_t>(u)];
        if (a == 0) continue;
        const ComponentModel& c = sys.components[static_cast<std::size_t>(unit.component)];
        int x = state.damage[static_cast<std::size_t>(unit.component)];
        int tau = state.rate[static_cast<std::size_t>(unit.component)];
        if (c.shifted_state(x, a) == x && c.rate_after(tau, a) == tau) total += penalty;
    }
    return total;
}

template <typename EvalPolicyFactory>
void periodic_eval(const SystemModel& sys, const TrainOptions& options, int episode, double epsilon,
                   EvalPolicyFactory&& make_policy, std::vector<EvalPoint>& evals) {
    if (options.eval_every <= 0 || (episode + 1) % options.eval_every != 0) return;
    auto policy = make_policy();
    EvaluationReport report =
        evaluate_policy(*policy, sys, options.eval_episodes, Rng::derive(options.seed, 0xE7A1u + episode));
    EvalPoint point{episode + 1, report.mean_cost, report.ci_halfwidth, epsilon};
    evals.push_back(point);
    if (options.on_eval) options.on_eval(point);
}

}  // namespace

TrainResult train_ddqn(DdqnAgent& agent, const SystemModel& sys, const TrainOptions& options) {
    TrainResult result;
    Rng rng(Rng::derive(options.seed, 0xDD));
    EpisodeRunner runner(sys);
    bool lr_dropped = false;

    for (int episode = 0; episode < options.episodes; ++episode) {
        double epsilon = agent.config().exploration.at(episode);
        if (!lr_dropped && episode >= static_cast<int>(options.lr_drop_fraction * options.episodes)) {
            agent.optimizer().learning_rate = agent.config().learning_rate_final;
            lr_dropped = true;
        }
        runner.reset();
        while (!runner.done()) {
            // Acting on the float-rounded features keeps stored records
            // bit-consistent with replay-time forwards.
            std::vector<float> input_f = to_float(encode_input(runner.belief(), sys));
            std::vector<double> input = to_double(input_f);
            int joint = agent.select_action(input, epsilon, rng);
            std::vector<int> actions = decode_joint_action(sys, joint);
            const StepOutcome& outcome = runner.advance(actions, rng);
            double shaped = outcome.total + shaping_cost(sys, runner.state(), actions, 0.0);
            DdqnRecord record;
            record.input = std::move(input_f);
            record.next_input = to_float(encode_input(runner.belief(), sys));
            record.action = joint;
            record.reward = -shaped / options.cost_scale;
            record.terminal = runner.done();
            agent.store(std::move(record));
            if (agent.buffer().size() >= static_cast<std::size_t>(std::max(options.min_buffer, agent.config().batch_size)))
                agent.update(rng);
        }
        CurveRow row{episode + 1, epsilon, runner.discounted_cost()};
        result.curve.push_back(row);
        if (options.on_episode) options.on_episode(row);
        periodic_eval(
            sys, options, episode, epsilon,
            [&] { return std::make_unique<DdqnGreedyPolicy>(agent.online(), sys); }, result.evals);
        if (!options.checkpoint_dir.empty() && options.eval_every > 0 &&
            (episode + 1) % options.eval_every == 0) {
            std::ostringstream rng_state;
            rng_state << rng.engine();
            std::ofstream out(options.checkpoint_dir + "/ddqn_ep" + std::to_string(episode + 1) + ".ckpt",
                              std::ios::binary);
            agent.save(out, rng_state.str());
        }
    }
    return result;
}

TrainResult train_dcmac(DcmacAgent& agent, const SystemModel& sys, const TrainOptions& options) {
    TrainResult result;
    Rng rng(Rng::derive(options.seed, 0xAC));
    EpisodeRunner runner(sys);
    bool lr_dropped = false;
    std::vector<int> actions;
    std::vector<double> mu;

    for (int episode = 0; episode < options.episodes; ++episode) {
        double epsilon = agent.config().exploration.at(episode);
        if (!lr_dropped && episode >= static_cast<int>(options.lr_drop_fraction * options.episodes)) {
            agent.actor_optimizer().learning_rate = agent.config().actor_learning_rate_final;
            agent.critic_optimizer().learning_rate = agent.config().critic_learning_rate_final;
            lr_dropped = true;
        }
        runner.reset();
        while (!runner.done()) {
            std::vector<float> input_f = to_float(encode_input(runner.belief(), sys));
            std::vector<double> input = to_double(input_f);
            agent.select_actions(input, epsilon, rng, actions, mu, options.do_nothing_bias);
            double shaped_extra = shaping_cost(sys, runner.state(), actions, options.shaping_penalty);
            const StepOutcome& outcome = runner.advance(actions, rng);
            DcmacRecord record;
            record.input = std::move(input_f);
            record.next_input = to_float(encode_input(runner.belief(), sys));
            record.action.assign(actions.begin(), actions.end());
            record.mu = mu;
            record.reward = -(outcome.total + shaped_extra) / options.cost_scale;
            record.terminal = runner.done();
            agent.store(std::move(record));
            if (agent.buffer().size() >= static_cast<std::size_t>(std::max(options.min_buffer, agent.config().batch_size)))
                agent.update(rng);
        }
        CurveRow row{episode + 1, epsilon, runner.discounted_cost()};
        result.curve.push_back(row);
        if (options.on_episode) options.on_episode(row);
        periodic_eval(
            sys, options, episode, epsilon,
            [&] { return std::make_unique<DcmacGreedyPolicy>(agent.actor(), sys); }, result.evals);
        if (!options.checkpoint_dir.empty() && options.eval_every > 0 &&
            (episode + 1) % options.eval_every == 0) {
            std::ostringstream rng_state;
            rng_state << rng.engine();
            std::ofstream out(options.checkpoint_dir + "/dcmac_ep" + std::to_string(episode + 1) + ".ckpt",
                              std::ios::binary);
            agent.save(out, rng_state.str());
        }
    }
    return result;
}

}  // namespace lcdrl
