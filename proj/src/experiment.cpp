#include "lcdrl/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lcdrl/common.hpp"
#include "lcdrl/config.hpp"
#include "lcdrl/policies.hpp"

namespace lcdrl {

namespace {
using nlohmann::json;

std::string resolve(const std::string& base_dir, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path.string() : (std::filesystem::path(base_dir) / path).string();
}
}  // namespace

std::vector<ThresholdPolicy> BaselineFamilySpec::enumerate(const SystemModel& sys) const {
    if (family == "state-map") {
        int states = sys.components.front().num_states;
        return enumerate_state_map_family(states, allowed_actions, rate_thresholds, rate_action,
                                          rate_states);
    }
    if (family == "loss-threshold")
        return enumerate_loss_threshold_family(inspection_period, major_grid, replace_grid,
                                               minor_rate_grid);
    throw std::invalid_argument("unknown baseline family: " + family);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open experiment config: " + path);
    json j;
    in >> j;
    std::string base_dir = std::filesystem::path(path).parent_path().string();

    ExperimentConfig cfg;
    cfg.environment_path = resolve(base_dir, j.at("environment").get<std::string>());
    cfg.seed = j.value("seed", 1ULL);
    cfg.evaluation_episodes = j.value("evaluation_episodes", 1000);
    cfg.baseline_eval_episodes = j.value("baseline_eval_episodes", 200);
    cfg.compare_exact = j.value("compare_exact", false);
    cfg.exact_cap = j.value("exact_cap", 1000000ULL);

    if (j.contains("agent")) {
        const json& a = j.at("agent");
        AgentSpec& s = cfg.agent;
        s.type = a.value("type", "dcmac");
        if (a.contains("hidden")) s.hidden = a.at("hidden").get<std::vector<int>>();
        s.actor_lr = a.value("actor_lr", s.actor_lr);
        s.actor_lr_final = a.value("actor_lr_final", s.actor_lr_final);
        s.critic_lr = a.value("critic_lr", s.critic_lr);
        s.critic_lr_final = a.value("critic_lr_final", s.critic_lr_final);
        s.ddqn_lr = a.value("ddqn_lr", s.ddqn_lr);
        s.ddqn_lr_final = a.value("ddqn_lr_final", s.ddqn_lr_final);
        s.batch_size = a.value("batch_size", s.batch_size);
        s.buffer_capacity = a.value("buffer_capacity", s.buffer_capacity);
        s.weight_cap = a.value("weight_cap", s.weight_cap);
        s.target_sync_period = a.value("target_sync_period", s.target_sync_period);
        s.epsilon_initial = a.value("epsilon_initial", s.epsilon_initial);
        s.epsilon_final = a.value("epsilon_final", s.epsilon_final);
        s.epsilon_anneal_fraction = a.value("epsilon_anneal_fraction", s.epsilon_anneal_fraction);
        s.episodes = a.value("episodes", s.episodes);
        s.eval_every = a.value("eval_every", s.eval_every);
        s.eval_episodes = a.value("eval_episodes", s.eval_episodes);
        s.cost_scale = a.value("cost_scale", s.cost_scale);
        s.lr_drop_fraction = a.value("lr_drop_fraction", s.lr_drop_fraction);
        s.do_nothing_bias = a.value("do_nothing_bias", s.do_nothing_bias);
        s.shaping_penalty = a.value("shaping_penalty", s.shaping_penalty);
    }
    if (j.contains("baselines")) {
        for (const json& b : j.at("baselines")) {
            BaselineFamilySpec f;
            f.name = b.at("name").get<std::string>();
            f.family = b.at("family").get<std::string>();
            if (b.contains("allowed_actions")) f.allowed_actions = b.at("allowed_actions").get<std::vector<int>>();
            if (b.contains("rate_thresholds")) f.rate_thresholds = b.at("rate_thresholds").get<std::vector<int>>();
            f.rate_action = b.value("rate_action", 0);
            if (b.contains("rate_states")) f.rate_states = b.at("rate_states").get<std::vector<int>>();
            f.inspection_period = b.value("inspection_period", 0);
            if (b.contains("major_grid")) f.major_grid = b.at("major_grid").get<std::vector<double>>();
            if (b.contains("replace_grid")) f.replace_grid = b.at("replace_grid").get<std::vector<double>>();
            if (b.contains("minor_rate_grid")) f.minor_rate_grid = b.at("minor_rate_grid").get<std::vector<int>>();
            cfg.baselines.push_back(std::move(f));
        }
    }
    return cfg;
}

DcmacConfig make_dcmac_config(const AgentSpec& spec) {
    DcmacConfig c;
    c.hidden = spec.hidden;
    c.actor_learning_rate = spec.actor_lr;
    c.actor_learning_rate_final = spec.actor_lr_final;
    c.critic_learning_rate = spec.critic_lr;
    c.critic_learning_rate_final = spec.critic_lr_final;
    c.batch_size = spec.batch_size;
    c.buffer_capacity = spec.buffer_capacity;
    c.importance_weight_cap = spec.weight_cap;
    c.exploration = {spec.epsilon_initial, spec.epsilon_final,
                     std::max(1, static_cast<int>(spec.epsilon_anneal_fraction * spec.episodes))};
    return c;
}

DdqnConfig make_ddqn_config(const AgentSpec& spec) {
    DdqnConfig c;
    c.hidden = spec.hidden;
    c.learning_rate = spec.ddqn_lr;
    c.learning_rate_final = spec.ddqn_lr_final;
    c.batch_size = spec.batch_size;
    c.buffer_capacity = spec.buffer_capacity;
    c.target_sync_period = spec.target_sync_period;
    c.exploration = {spec.epsilon_initial, spec.epsilon_final,
                     std::max(1, static_cast<int>(spec.epsilon_anneal_fraction * spec.episodes))};
    return c;
}

TrainOptions make_train_options(const AgentSpec& spec, std::uint64_t seed) {
    TrainOptions o;
    o.episodes = spec.episodes;
    o.seed = seed;
    o.cost_scale = spec.cost_scale;
    o.eval_every = spec.eval_every;
    o.eval_episodes = spec.eval_episodes;
    o.lr_drop_fraction = spec.lr_drop_fraction;
    o.do_nothing_bias = spec.do_nothing_bias;
    o.shaping_penalty = spec.shaping_penalty;
    return o;
}

void write_curve_csv(const std::vector<CurveRow>& curve, const std::string& path) {
    std::ofstream out(path);
    out << "episode,epsilon,train_cost\n";
    for (const CurveRow& r : curve)
        out << r.episode << ',' << format_full(r.epsilon) << ',' << format_full(r.train_cost) << '\n';
}

void write_eval_curve_csv(const std::vector<EvalPoint>& evals, const std::string& path) {
    std::ofstream out(path);
    out << "episode,mean_cost,ci_halfwidth,epsilon\n";
    for (const EvalPoint& e : evals)
        out << e.episode << ',' << format_full(e.mean_cost) << ',' << format_full(e.ci_halfwidth) << ','
            << format_full(e.epsilon) << '\n';
}

void write_evaluation_csv(const EvaluationReport& report, const std::string& path) {
    std::ofstream out(path);
    out << "episodes,mean_cost,ci_halfwidth,normalization,normalized_mean\n";
    out << report.per_episode.size() << ',' << format_full(report.mean_cost) << ','
        << format_full(report.ci_halfwidth) << ',' << format_full(report.normalization) << ','
        << format_full(report.normalized_mean()) << '\n';
}

void write_grid_report_csv(const GridResult& grid, const std::string& path) {
    std::vector<std::size_t> order(grid.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return grid.entries[a].mean_cost < grid.entries[b].mean_cost;
    });
    std::ofstream out(path);
    out << "rank,parameters,mean_cost,ci_halfwidth,best\n";
    for (std::size_t r = 0; r < order.size(); ++r) {
        const GridEntry& e = grid.entries[order[r]];
        out << r + 1 << ",\"" << e.policy.describe() << "\"," << format_full(e.mean_cost) << ','
            << format_full(e.ci_halfwidth) << ',' << (order[r] == grid.best ? 1 : 0) << '\n';
    }
}

void write_realization_trace(const Policy& policy, const SystemModel& sys, std::uint64_t seed,
                             const std::string& steps_path, const std::string& components_path) {
    std::ofstream steps(steps_path);
    std::ofstream comps(components_path);
    steps << "t,total_cost,direct_losses,penalty_factor,maintenance_cost,inspection_cost,inspected,"
             "displacement_ratio\n";
    comps << "t,component,true_state,rate,action,observed_state,belief_mean_state,belief_mean_loss\n";

    EpisodeRunner runner(sys);
    Rng rng(Rng::derive(seed, 0x7ACEu));
    while (!runner.done()) {
        DecisionContext ctx{runner.t(), &sys, &runner.belief(), &runner.observed()};
        std::vector<int> actions = policy.decide(ctx);
        int t = runner.t();
        std::vector<int> pre_rate = runner.state().rate;
        std::vector<int> pre_damage = runner.state().damage;
        const StepOutcome& outcome = runner.advance(actions, rng);

        bool inspected = !sys.inspection_optional;
        for (int u = 0; u < sys.num_units(); ++u)
            if (sys.units[static_cast<std::size_t>(u)].is_inspection)
                inspected = actions[static_cast<std::size_t>(u)] == 1;
        steps << t << ',' << format_full(outcome.total) << ',' << format_full(outcome.direct_losses)
              << ',' << format_full(outcome.penalty_factor) << ','
              << format_full(outcome.maintenance_cost) << ',' << format_full(outcome.inspection_cost)
              << ',' << (inspected ? 1 : 0) << ',' << format_full(outcome.displacement_ratio) << '\n';

        for (int u = 0; u < sys.num_units(); ++u) {
            const ControlUnit& unit = sys.units[static_cast<std::size_t>(u)];
            if (unit.is_inspection) continue;
            int l = unit.component;
            const auto& b = runner.belief().damage[static_cast<std::size_t>(l)];
            double mean_state = 0.0;
            for (std::size_t k = 0; k < b.size(); ++k) mean_state += (static_cast<double>(k) + 1.0) * b[k];
            double mean_loss = sys.components[static_cast<std::size_t>(l)].loss_rep.empty()
                                   ? -1.0
                                   : belief_mean_loss(sys, runner.belief(), l);
            int obs = runner.last_observation().has_value()
                          ? (*runner.last_observation())[static_cast<std::size_t>(l)]
                          : -1;
            comps << t << ',' << l << ',' << pre_damage[static_cast<std::size_t>(l)] << ','
                  << pre_rate[static_cast<std::size_t>(l)] << ',' << actions[static_cast<std::size_t>(u)]
                  << ',' << obs << ',' << format_full(mean_state) << ',' << format_full(mean_loss)
                  << '\n';
        }
    }
}

namespace {

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

struct ExactBundle {
    FlatMDP mdp;
    ExactSolution solution;
    double initial_value = 0.0;
};

ExactBundle solve_exact(const SystemModel& sys, std::size_t cap) {
    ExactBundle b;
    b.mdp = enumerate_joint(sys, cap);
    b.solution = value_iteration_finite(b.mdp);
    b.initial_value = b.solution.value[0][static_cast<std::size_t>(b.mdp.state_index(
        sys.initial_state().damage))];
    return b;
}

}  // namespace

int run_exact(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    SystemModel sys = load_system(cfg.environment_path);
    ExactBundle exact = solve_exact(sys, cfg.exact_cap);
    export_solution_csv(exact.mdp, exact.solution, out_dir + "/exact_solution.csv");

    ExactGreedyPolicy policy(exact.mdp, exact.solution, sys);
    EvaluationReport report = evaluate_policy(policy, sys, cfg.evaluation_episodes, cfg.seed);
    report.normalization = exact.initial_value;
    write_evaluation_csv(report, out_dir + "/exact_eval.csv");

    std::ofstream summary(out_dir + "/exact_value.csv");
    summary << "initial_value\n" << format_full(exact.initial_value) << '\n';
    return 0;
}

int run_train(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    SystemModel sys = load_system(cfg.environment_path);
    TrainOptions options = make_train_options(cfg.agent, cfg.seed);
    options.checkpoint_dir = "";

    auto started = std::chrono::steady_clock::now();
    TrainResult result;
    std::unique_ptr<Policy> greedy;
    std::unique_ptr<DcmacAgent> dcmac;
    std::unique_ptr<DdqnAgent> ddqn;

    std::ofstream log(out_dir + "/train.log");
    try {
        if (cfg.agent.type == "dcmac") {
            dcmac = std::make_unique<DcmacAgent>(encoded_input_size(sys), actor_head_sizes(sys),
                                                 make_dcmac_config(cfg.agent), sys.discount,
                                                 Rng::derive(cfg.seed, 0x11));
            result = train_dcmac(*dcmac, sys, options);
            greedy = std::make_unique<DcmacGreedyPolicy>(dcmac->actor(), sys);
            std::ofstream ck(out_dir + "/agent_final.ckpt", std::ios::binary);
            dcmac->save(ck, "");
        } else if (cfg.agent.type == "ddqn") {
            ddqn = std::make_unique<DdqnAgent>(encoded_input_size(sys), sys.num_joint_actions(),
                                               make_ddqn_config(cfg.agent), sys.discount,
                                               Rng::derive(cfg.seed, 0x11));
            result = train_ddqn(*ddqn, sys, options);
            greedy = std::make_unique<DdqnGreedyPolicy>(ddqn->online(), sys);
            std::ofstream ck(out_dir + "/agent_final.ckpt", std::ios::binary);
            ddqn->save(ck, "");
        } else {
            throw std::invalid_argument("unknown agent type: " + cfg.agent.type);
        }
    } catch (const TrainingDivergence& e) {
        // Keep the partial curve for diagnosis, then propagate.
        write_curve_csv(result.curve, out_dir + "/curve.csv");
        log << "diverged: " << e.what() << '\n';
        throw;
    }
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log << "train_seconds " << elapsed << '\n';

    write_curve_csv(result.curve, out_dir + "/curve.csv");
    write_eval_curve_csv(result.evals, out_dir + "/eval_curve.csv");

    EvaluationReport report = evaluate_policy(*greedy, sys, cfg.evaluation_episodes, cfg.seed);
    if (cfg.compare_exact) {
        ExactBundle exact = solve_exact(sys, cfg.exact_cap);
        report.normalization = exact.initial_value;
        ExactGreedyPolicy exact_policy(exact.mdp, exact.solution, sys);
        double agreement =
            action_agreement(*greedy, exact_policy, sys, cfg.evaluation_episodes, cfg.seed + 1);
        std::ofstream out(out_dir + "/exact_compare.csv");
        out << "exact_value,mc_mean,ci_halfwidth,normalized_mean,action_agreement\n";
        out << format_full(exact.initial_value) << ',' << format_full(report.mean_cost) << ','
            << format_full(report.ci_halfwidth) << ',' << format_full(report.normalized_mean()) << ','
            << format_full(agreement) << '\n';
    }
    write_evaluation_csv(report, out_dir + "/final_eval.csv");
    write_realization_trace(*greedy, sys, cfg.seed, out_dir + "/trace_steps.csv",
                            out_dir + "/trace_components.csv");
    return 0;
}

int run_eval(const ExperimentConfig& cfg, const std::string& out_dir, const std::string& checkpoint) {
    ensure_dir(out_dir);
    SystemModel sys = load_system(cfg.environment_path);
    std::ifstream in(checkpoint, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + checkpoint);
    std::string rng_state;
    std::unique_ptr<Policy> policy;
    std::unique_ptr<DcmacAgent> dcmac;
    std::unique_ptr<DdqnAgent> ddqn;
    if (cfg.agent.type == "dcmac") {
        dcmac = std::make_unique<DcmacAgent>(encoded_input_size(sys), actor_head_sizes(sys),
                                             make_dcmac_config(cfg.agent), sys.discount, 0);
        dcmac->load(in, rng_state);
        policy = std::make_unique<DcmacGreedyPolicy>(dcmac->actor(), sys);
    } else {
        ddqn = std::make_unique<DdqnAgent>(encoded_input_size(sys), sys.num_joint_actions(),
                                           make_ddqn_config(cfg.agent), sys.discount, 0);
        ddqn->load(in, rng_state);
        policy = std::make_unique<DdqnGreedyPolicy>(ddqn->online(), sys);
    }
    EvaluationReport report = evaluate_policy(*policy, sys, cfg.evaluation_episodes, cfg.seed);
    write_evaluation_csv(report, out_dir + "/eval.csv");
    write_realization_trace(*policy, sys, cfg.seed, out_dir + "/trace_steps.csv",
                            out_dir + "/trace_components.csv");
    return 0;
}

int run_optimize_baselines(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    SystemModel sys = load_system(cfg.environment_path);
    std::ofstream best(out_dir + "/baselines_best.csv");
    best << "name,parameters,mean_cost,ci_halfwidth\n";
    for (const BaselineFamilySpec& family : cfg.baselines) {
        GridResult grid = grid_optimize(family.enumerate(sys), sys, cfg.baseline_eval_episodes, cfg.seed);
        write_grid_report_csv(grid, out_dir + "/baseline_" + family.name + ".csv");
        const GridEntry& e = grid.entries[grid.best];
        best << family.name << ",\"" << e.policy.describe() << "\"," << format_full(e.mean_cost) << ','
             << format_full(e.ci_halfwidth) << '\n';
    }
    return 0;
}

int run_agreement(const ExperimentConfig& cfg, const std::string& out_dir, const std::string& checkpoint) {
    ensure_dir(out_dir);
    SystemModel sys = load_system(cfg.environment_path);
    ExactBundle exact = solve_exact(sys, cfg.exact_cap);
    ExactGreedyPolicy exact_policy(exact.mdp, exact.solution, sys);

    std::ifstream in(checkpoint, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + checkpoint);
    std::string rng_state;
    std::unique_ptr<Policy> policy;
    std::unique_ptr<DcmacAgent> dcmac;
    std::unique_ptr<DdqnAgent> ddqn;
    if (cfg.agent.type == "dcmac") {
        dcmac = std::make_unique<DcmacAgent>(encoded_input_size(sys), actor_head_sizes(sys),
                                             make_dcmac_config(cfg.agent), sys.discount, 0);
        dcmac->load(in, rng_state);
        policy = std::make_unique<DcmacGreedyPolicy>(dcmac->actor(), sys);
    } else {
        ddqn = std::make_unique<DdqnAgent>(encoded_input_size(sys), sys.num_joint_actions(),
                                           make_ddqn_config(cfg.agent), sys.discount, 0);
        ddqn->load(in, rng_state);
        policy = std::make_unique<DdqnGreedyPolicy>(ddqn->online(), sys);
    }
    double agreement = action_agreement(*policy, exact_policy, sys, cfg.evaluation_episodes, cfg.seed);
    std::ofstream out(out_dir + "/agreement.csv");
    out << "episodes,agreement\n" << cfg.evaluation_episodes << ',' << format_full(agreement) << '\n';
    return 0;
}

}  // namespace lcdrl
