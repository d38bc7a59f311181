#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lcdrl/agents.hpp"

using namespace lcdrl;
using lcdrl::testing::make_matrix;
using lcdrl::testing::simple_system;

namespace {

/// Net whose outputs are exactly the given constants (zero weights, biases on
/// the output layer).
DenseNet constant_net(int input_size, std::vector<double> outputs, HeadSpec head) {
    DenseNet net(input_size, {}, head);
    for (std::size_t i = 0; i < outputs.size(); ++i) net.params()[net.bias_offset(0) + i] = outputs[i];
    return net;
}

/// Critic reading its value from the first input feature.
DenseNet passthrough_critic(int input_size) {
    DenseNet net(input_size, {}, HeadSpec::scalar());
    net.params()[net.weight_offset(0)] = 1.0;
    return net;
}

DcmacRecord make_record(std::vector<double> input, std::vector<double> next,
                        std::vector<int> actions, std::vector<double> mu, double reward,
                        bool terminal) {
    DcmacRecord r;
    r.input = to_float(input);
    r.next_input = to_float(next);
    r.action.assign(actions.begin(), actions.end());
    r.mu = std::move(mu);
    r.reward = reward;
    r.terminal = terminal;
    return r;
}

/// One-state two-action environment: action 0 free, action 1 costs one unit.
SystemModel bandit_system() {
    ComponentModel c;
    c.num_states = 1;
    c.max_rate = 0;
    c.base.push_back(make_matrix({{1.0}}));
    c.direct_loss = {0.0};
    c.actions.push_back({"idle", 0.0, 0, 0, false, 1.0});
    c.actions.push_back({"spend", 1.0, 0, 0, false, 1.0});
    c.observation = ObservationModel::banded(1, 1.0);
    SystemModel sys = simple_system({c}, 1, 0.99);
    sys.validate();
    return sys;
}

}  // namespace

TEST_CASE("exploration schedule anneals linearly and clamps") {
    ExplorationSchedule s{1.0, 0.01, 100};
    CHECK(s.at(0) == 1.0);
    CHECK(s.at(50) == doctest::Approx(0.505));
    CHECK(s.at(100) == 0.01);
    CHECK(s.at(100000) == 0.01);
    double prev = 2.0;
    for (int e = 0; e < 200; ++e) {
        CHECK(s.at(e) <= prev);
        prev = s.at(e);
    }
}

TEST_CASE("select_action_ddqn: epsilon one is uniform") {
    DenseNet q = constant_net(2, {0.0, 1.0, 2.0, 3.0}, HeadSpec::vector(4));
    Rng rng(5);
    std::vector<double> input = {0.5, 0.5};
    std::vector<int> counts(4, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(select_action_ddqn(q, input, 1.0, rng))]++;
    for (int a = 0; a < 4; ++a)
        CHECK(static_cast<double>(counts[static_cast<std::size_t>(a)]) / n == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("select_action_ddqn: greedy picks the known argmax") {
    DenseNet q = constant_net(2, {0.3, 2.5, -1.0, 2.5}, HeadSpec::vector(4));
    Rng rng(5);
    std::vector<double> input = {0.1, 0.9};
    // ties break toward the lowest index
    CHECK(select_action_ddqn(q, input, 0.0, rng) == 1);
}

TEST_CASE("select_action_ddqn: explore branch frequency at epsilon one half") {
    const int k = 32;
    std::vector<double> qvals(k, 0.0);
    qvals[11] = 5.0;
    DenseNet q = constant_net(2, qvals, HeadSpec::vector(k));
    Rng rng(17);
    std::vector<double> input = {0.2, 0.8};
    const int n = 100000;
    int non_greedy = 0;
    for (int i = 0; i < n; ++i)
        if (select_action_ddqn(q, input, 0.5, rng) != 11) ++non_greedy;
    // P(action != argmax) = eps * (k-1)/k
    double expected = 0.5 * (k - 1.0) / k;
    CHECK(static_cast<double>(non_greedy) / n == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("ddqn_target: terminal and zero-discount branches") {
    DenseNet online = constant_net(2, {1.0, 4.0}, HeadSpec::vector(2));
    DenseNet target = constant_net(2, {10.0, 20.0}, HeadSpec::vector(2));
    DdqnRecord terminal;
    terminal.input = {0.0f, 0.0f};
    terminal.next_input = {0.0f, 0.0f};
    terminal.action = 0;
    terminal.reward = -3.5;
    terminal.terminal = true;
    DdqnRecord running = terminal;
    running.terminal = false;

    std::vector<const DdqnRecord*> batch = {&terminal, &running};
    std::vector<double> y = ddqn_target(batch, online, target, 0.99);
    CHECK(y[0] == -3.5);
    // online argmax is action 1, so the target net's value of action 1 is used
    CHECK(y[1] == doctest::Approx(-3.5 + 0.99 * 20.0));
    std::vector<double> y0 = ddqn_target(batch, online, target, 0.0);
    CHECK(y0[1] == -3.5);
}

TEST_CASE("ddqn update: matched targets give zero loss and frozen parameters") {
    DdqnConfig cfg;
    cfg.hidden = {};
    DdqnAgent agent(2, 2, cfg, 0.0, 3);
    // gamma = 0 makes y = r; set rewards equal to the current Q(s, a) of the
    // float-rounded stored input.
    std::vector<float> input_f = to_float(std::vector<double>{0.4, 0.6});
    std::vector<double> q = forward_raw(agent.online(), to_double(input_f));
    DdqnRecord r;
    r.input = input_f;
    r.next_input = input_f;
    r.action = 1;
    r.reward = q[1];
    r.terminal = false;
    std::vector<double> before = agent.online().params();
    std::vector<const DdqnRecord*> batch = {&r};
    double loss = agent.update_batch(batch);
    CHECK(loss == 0.0);
    CHECK(agent.online().params() == before);
}

TEST_CASE("ddqn update: single-record loss is the squared residual") {
    DdqnConfig cfg;
    cfg.hidden = {8};
    DdqnAgent agent(2, 2, cfg, 0.0, 3);
    std::vector<double> input = {0.4, 0.6};
    double q = forward_raw(agent.online(), input)[0];
    DdqnRecord r;
    r.input = to_float(to_float(input).size() == 2 ? to_double(to_float(input)) : input);
    r.next_input = r.input;
    r.action = 0;
    r.reward = q - 2.0;
    r.terminal = true;
    std::vector<const DdqnRecord*> batch = {&r};
    double q_stored = forward_raw(agent.online(), to_double(r.input))[0];
    double expected = (q_stored - r.reward) * (q_stored - r.reward);
    CHECK(agent.update_batch(batch) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ddqn target network lags by whole sync periods") {
    DdqnConfig cfg;
    cfg.hidden = {4};
    cfg.target_sync_period = 13;
    DdqnAgent agent(2, 2, cfg, 0.9, 3);
    Rng rng(5);
    DdqnRecord r;
    r.input = {0.5f, 0.5f};
    r.next_input = {0.6f, 0.4f};
    r.action = 0;
    r.reward = -1.0;
    r.terminal = false;
    for (int i = 0; i < 40; ++i) agent.store(r);

    std::vector<std::vector<double>> history;  // online params after k updates
    history.push_back(agent.online().params());
    for (int k = 1; k <= 30; ++k) {
        agent.update(rng);
        history.push_back(agent.online().params());
        long lag = (agent.update_count() / 13) * 13;
        CHECK(agent.target().params() == history[static_cast<std::size_t>(lag)]);
    }
}

TEST_CASE("dcmac_advantage: zero critic reduces to the reward") {
    DenseNet critic(3, {}, HeadSpec::scalar());
    DcmacRecord r = make_record({0.1, 0.2, 0.7}, {0.3, 0.3, 0.4}, {0}, {1.0}, -2.5, false);
    CHECK(dcmac_advantage(r, critic, 0.99) == doctest::Approx(-2.5));
}

TEST_CASE("dcmac_advantage: terminal and hand-computed values") {
    DenseNet critic = passthrough_critic(3);
    // V(b) = 3, V(b') = 2, r = -1, gamma = 0.99 -> A = -1 + 1.98 - 3 = -2.02
    DcmacRecord r = make_record({3.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, {0}, {1.0}, -1.0, false);
    CHECK(dcmac_advantage(r, critic, 0.99) == doctest::Approx(-2.02).epsilon(1e-12));
    r.terminal = true;
    CHECK(dcmac_advantage(r, critic, 0.99) == doctest::Approx(-1.0 - 3.0).epsilon(1e-12));
}

TEST_CASE("importance weights: on-policy ratio is exactly one") {
    Rng rng(11);
    DenseNet actor(4, {6}, HeadSpec::softmax({3, 2}));
    actor.init_params(rng);
    std::vector<float> input_f = to_float(std::vector<double>{0.1, 0.4, 0.3, 0.2});
    std::vector<double> input = to_double(input_f);
    std::vector<double> probs = head_probabilities(actor.head(), forward_raw(actor, input));
    DcmacRecord r;
    r.input = input_f;
    r.next_input = input_f;
    r.action = {2, 1};
    r.mu = {probs[2], probs[3 + 1]};
    r.reward = 0.0;
    CHECK(importance_weight(r, actor, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("importance weights: truncated at the cap and multiplied across units") {
    DenseNet actor = constant_net(2, {0.0, 0.0, 0.0, 0.0}, HeadSpec::softmax({2, 2}));
    // uniform policy: pi = 0.5 per unit
    DcmacRecord r;
    r.input = {0.5f, 0.5f};
    r.next_input = {0.5f, 0.5f};
    r.action = {0, 0};
    r.mu = {0.1, 0.5};  // ratios 5.0 and 1.0 -> capped at 2
    CHECK(importance_weight(r, actor, 2.0) == 2.0);
    r.mu = {1.0, 1.0 / 6.0};  // ratios 0.5 and 3.0 -> 1.5
    CHECK(importance_weight(r, actor, 2.0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("joint log-probability equals the sum over heads") {
    Rng rng(23);
    DenseNet actor(5, {9}, HeadSpec::softmax({3, 4, 2}));
    actor.init_params(rng);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> input(5);
        for (double& v : input) v = rng.uniform();
        std::vector<double> raw = forward_raw(actor, input);
        std::vector<double> probs = head_probabilities(actor.head(), raw);
        std::vector<int> actions = {rng.uniform_int(3), rng.uniform_int(4), rng.uniform_int(2)};
        double joint = probs[static_cast<std::size_t>(actions[0])] *
                       probs[static_cast<std::size_t>(3 + actions[1])] *
                       probs[static_cast<std::size_t>(7 + actions[2])];
        double sum_logs = head_log_prob(actor.head(), raw, 0, actions[0]) +
                          head_log_prob(actor.head(), raw, 1, actions[1]) +
                          head_log_prob(actor.head(), raw, 2, actions[2]);
        CHECK(std::abs(std::log(joint) - sum_logs) < 1e-12);
    }
}

TEST_CASE("dcmac select_actions: behavior probabilities fold the mixture in") {
    DcmacConfig cfg;
    cfg.hidden = {};
    DcmacAgent agent(2, {2, 3}, cfg, 0.99, 7);
    std::vector<double> input = {0.3, 0.7};
    std::vector<double> probs = head_probabilities(agent.actor().head(), forward_raw(agent.actor(), input));
    Rng rng(3);
    std::vector<int> actions;
    std::vector<double> mu;
    for (int i = 0; i < 50; ++i) {
        agent.select_actions(input, 0.25, rng, actions, mu);
        CHECK(mu[0] == doctest::Approx(0.25 * 0.5 + 0.75 * probs[static_cast<std::size_t>(actions[0])]).epsilon(1e-12));
        CHECK(mu[1] ==
              doctest::Approx(0.25 / 3.0 + 0.75 * probs[static_cast<std::size_t>(2 + actions[1])]).epsilon(1e-12));
        for (double m : mu) {
            CHECK(m > 0.0);
            CHECK(m <= 1.0);
        }
    }
}

TEST_CASE("actor update: zero advantage leaves parameters unchanged") {
    DcmacConfig cfg;
    cfg.hidden = {6};
    DcmacAgent agent(3, {2, 2}, cfg, 0.0, 9);  // gamma 0, zero critic -> A = r
    for (double& p : agent.critic().params()) p = 0.0;
    DcmacRecord r = make_record({0.1, 0.2, 0.7}, {0.1, 0.2, 0.7}, {0, 1}, {0.5, 0.5}, 0.0, false);
    std::vector<double> before = agent.actor().params();
    std::vector<const DcmacRecord*> batch = {&r};
    double norm = agent.actor_update(batch);
    CHECK(norm == 0.0);
    CHECK(agent.actor().params() == before);
    double loss = agent.critic_update(batch);
    CHECK(loss == 0.0);
}

TEST_CASE("actor gradient matches finite differences (single unit, single record)") {
    Rng rng(15);
    DenseNet actor(4, {8}, HeadSpec::softmax({3}));
    actor.init_params(rng);
    std::vector<double> input = {0.2, 0.3, 0.1, 0.4};
    double w = 1.3, advantage = -0.7;
    int action = 2;
    auto loss = [&](std::span<const double> raw) {
        return w * advantage * head_log_prob(actor.head(), raw, 0, action);
    };
    auto dloss = [&](std::span<const double> raw) {
        std::vector<double> probs = head_probabilities(actor.head(), raw);
        std::vector<double> d(raw.size());
        for (int c = 0; c < 3; ++c)
            d[static_cast<std::size_t>(c)] = w * advantage * ((c == action ? 1.0 : 0.0) - probs[static_cast<std::size_t>(c)]);
        return d;
    };
    CHECK(grad_check(actor, input, loss, dloss, 1e-5) < 1e-4);
}

TEST_CASE("critic update: semi-gradient TD step on a linear critic") {
    DcmacConfig cfg;
    cfg.hidden = {};
    cfg.critic_learning_rate = 1e-2;
    DcmacAgent agent(1, {2}, cfg, 0.5, 21);
    // Zero-initialised critic on a 1-feature input: V = w * x + b.
    for (double& p : agent.critic().params()) p = 0.0;
    DcmacRecord r = make_record({1.0}, {1.0}, {0}, {0.5}, 2.0, true);
    // A = r - V = 2; minimizing pushes both parameters up (gradient -A * x).
    std::vector<const DcmacRecord*> batch = {&r};
    double loss = agent.critic_update(batch);
    CHECK(loss == doctest::Approx(4.0 * importance_weight(r, agent.actor(), 2.0)).epsilon(1e-9));
    // First Adam step moves each parameter by +lr (sign of the ascent direction).
    CHECK(agent.critic().params()[0] == doctest::Approx(1e-2).epsilon(1e-6));
    CHECK(agent.critic().params()[1] == doctest::Approx(1e-2).epsilon(1e-6));
}

TEST_CASE("batch of identical records equals the single-record update") {
    DcmacConfig cfg;
    cfg.hidden = {5};
    DcmacRecord r = make_record({0.3, 0.7}, {0.2, 0.8}, {1}, {0.5}, -1.5, false);
    DcmacAgent one(2, {2}, cfg, 0.9, 33);
    DcmacAgent many(2, {2}, cfg, 0.9, 33);
    std::vector<const DcmacRecord*> single = {&r};
    std::vector<const DcmacRecord*> triple = {&r, &r, &r};
    one.actor_update(single);
    many.actor_update(triple);
    auto max_diff = [](const std::vector<double>& a, const std::vector<double>& b) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
        return m;
    };
    // The mean convention makes N identical records equal one record up to
    // the rounding of (3g)/3.
    CHECK(max_diff(one.actor().params(), many.actor().params()) < 1e-12);
    one.critic_update(single);
    many.critic_update(triple);
    CHECK(max_diff(one.critic().params(), many.critic().params()) < 1e-12);
}

TEST_CASE("batched update matches the per-record update paths") {
    // update() runs the whole batch through matrix products; actor_update and
    // critic_update walk records one by one. Same estimator, so parameters
    // must agree to rounding.
    DcmacConfig cfg;
    cfg.hidden = {16, 16};
    cfg.batch_size = 8;
    cfg.buffer_capacity = 64;
    Rng record_rng(5);
    auto fill = [&](DcmacAgent& agent) {
        Rng r(17);
        for (int i = 0; i < 8; ++i) {
            std::vector<double> input = {r.uniform(), r.uniform(), r.uniform()};
            std::vector<double> next = {r.uniform(), r.uniform(), r.uniform()};
            agent.store(make_record(input, next, {r.uniform_int(2), r.uniform_int(3)},
                                    {0.4 + 0.2 * r.uniform(), 0.3 + 0.2 * r.uniform()},
                                    -r.uniform(), i == 7));
        }
    };
    DcmacAgent fast(3, {2, 3}, cfg, 0.95, 31);
    DcmacAgent slow_actor(3, {2, 3}, cfg, 0.95, 31);
    DcmacAgent slow_critic(3, {2, 3}, cfg, 0.95, 31);
    fill(fast);
    fill(slow_actor);
    fill(slow_critic);

    // One batch in a fixed order: drive the fast path's sampler with a known
    // seed and replicate the same indices for the slow paths.
    Rng sample_a(99), sample_b(99);
    fast.update(sample_a);
    std::vector<const DcmacRecord*> batch;
    for (int i = 0; i < cfg.batch_size; ++i) {
        std::size_t idx = slow_actor.buffer().sample_index(sample_b);
        batch.push_back(&slow_actor.buffer().at(idx));
    }
    std::vector<const DcmacRecord*> batch_c;
    for (const DcmacRecord* r : batch) {
        // same records live at the same indices in the third agent
        batch_c.push_back(&slow_critic.buffer().at(static_cast<std::size_t>(r - &slow_actor.buffer().at(0))));
    }
    slow_actor.actor_update(batch);
    slow_critic.critic_update(batch_c);

    double actor_diff = 0.0, critic_diff = 0.0;
    for (int i = 0; i < fast.actor().num_params(); ++i)
        actor_diff = std::max(actor_diff, std::abs(fast.actor().params()[static_cast<std::size_t>(i)] -
                                                   slow_actor.actor().params()[static_cast<std::size_t>(i)]));
    for (int i = 0; i < fast.critic().num_params(); ++i)
        critic_diff = std::max(critic_diff, std::abs(fast.critic().params()[static_cast<std::size_t>(i)] -
                                                     slow_critic.critic().params()[static_cast<std::size_t>(i)]));
    CHECK(actor_diff < 1e-9);
    CHECK(critic_diff < 1e-9);
}

TEST_CASE("replay sampling is uniform within binomial bounds") {
    ReplayBuffer<DdqnRecord> buffer(64);
    for (int i = 0; i < 64; ++i) {
        DdqnRecord r;
        r.action = i;
        buffer.add(r);
    }
    Rng rng(77);
    const long n = 1000000;
    std::vector<long> counts(64, 0);
    for (long i = 0; i < n; ++i) counts[buffer.sample_index(rng)]++;
    double p = 1.0 / 64;
    double sd = std::sqrt(p * (1.0 - p) * n);
    for (long c : counts) CHECK(std::abs(c - n * p) < 3.5 * sd);
}

TEST_CASE("replay ring never exceeds capacity and overwrites oldest") {
    ReplayBuffer<DdqnRecord> buffer(4);
    for (int i = 0; i < 10; ++i) {
        DdqnRecord r;
        r.action = i;
        buffer.add(r);
        CHECK(buffer.size() <= 4);
    }
    std::vector<int> kept;
    for (std::size_t i = 0; i < buffer.size(); ++i) kept.push_back(buffer.at(i).action);
    std::sort(kept.begin(), kept.end());
    CHECK(kept == std::vector<int>{6, 7, 8, 9});
}

TEST_CASE("on-policy records with a frozen actor keep all weights at one") {
    SystemModel sys = bandit_system();
    DcmacConfig cfg;
    cfg.hidden = {4};
    cfg.actor_learning_rate = 0.0;  // frozen actor: replayed pi stays the behavior policy
    cfg.actor_learning_rate_final = 0.0;
    cfg.critic_learning_rate = 1e-3;
    cfg.critic_learning_rate_final = 1e-3;
    cfg.exploration = {0.0, 0.0, 1};
    DcmacAgent agent(encoded_input_size(sys), actor_head_sizes(sys), cfg, sys.discount, 42);
    TrainOptions options;
    options.episodes = 200;
    options.seed = 5;
    train_dcmac(agent, sys, options);
    CHECK(agent.last_mean_weight() == 1.0);
}

TEST_CASE("dcmac learns the free arm of a two-action bandit") {
    SystemModel sys = bandit_system();
    DcmacConfig cfg;
    cfg.hidden = {8};
    cfg.actor_learning_rate = 1e-2;
    cfg.actor_learning_rate_final = 1e-2;
    cfg.critic_learning_rate = 1e-2;
    cfg.critic_learning_rate_final = 1e-2;
    cfg.buffer_capacity = 4096;
    cfg.exploration = {1.0, 0.05, 1000};
    DcmacAgent agent(encoded_input_size(sys), actor_head_sizes(sys), cfg, sys.discount, 4242);
    TrainOptions options;
    options.episodes = 2000;
    options.seed = 77;
    TrainResult result = train_dcmac(agent, sys, options);
    CHECK(result.curve.size() == 2000);

    std::vector<double> input = encode_input(sys.initial_belief(), sys);
    std::vector<double> probs = head_probabilities(agent.actor().head(), forward_raw(agent.actor(), input));
    CHECK(probs[0] > 0.99);
}

TEST_CASE("train returns an empty curve for zero episodes") {
    SystemModel sys = bandit_system();
    DcmacConfig cfg;
    cfg.hidden = {4};
    DcmacAgent agent(encoded_input_size(sys), actor_head_sizes(sys), cfg, sys.discount, 1);
    std::vector<double> before = agent.actor().params();
    TrainOptions options;
    options.episodes = 0;
    TrainResult result = train_dcmac(agent, sys, options);
    CHECK(result.curve.empty());
    CHECK(agent.actor().params() == before);
}

TEST_CASE("ddqn learns the free arm too") {
    SystemModel sys = bandit_system();
    DdqnConfig cfg;
    cfg.hidden = {8};
    cfg.learning_rate = 1e-2;
    cfg.learning_rate_final = 1e-2;
    cfg.buffer_capacity = 4096;
    cfg.exploration = {1.0, 0.05, 800};
    DdqnAgent agent(encoded_input_size(sys), sys.num_joint_actions(), cfg, sys.discount, 11);
    TrainOptions options;
    options.episodes = 1500;
    options.seed = 3;
    train_ddqn(agent, sys, options);
    std::vector<double> input = encode_input(sys.initial_belief(), sys);
    std::vector<double> q = forward_raw(agent.online(), input);
    CHECK(q[0] > q[1]);  // the free arm has the higher reward value
}

TEST_CASE("training trajectories are bit-identical under one seed") {
    SystemModel sys = bandit_system();
    auto run = [&](std::uint64_t seed) {
        DcmacConfig cfg;
        cfg.hidden = {6};
        DcmacAgent agent(encoded_input_size(sys), actor_head_sizes(sys), cfg, sys.discount, 99);
        TrainOptions options;
        options.episodes = 300;
        options.seed = seed;
        train_dcmac(agent, sys, options);
        return agent.actor().params();
    };
    CHECK(run(8) == run(8));
    CHECK(run(8) != run(9));
}
