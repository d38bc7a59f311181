#include "lcdrl/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lcdrl/gamma_process.hpp"

namespace lcdrl {

namespace {

using nlohmann::json;

Matrix parse_matrix(const json& j, int n) {
    Matrix m(n, n);
    if (static_cast<int>(j.size()) != n) throw std::invalid_argument("matrix: wrong row count");
    for (int r = 0; r < n; ++r) {
        if (static_cast<int>(j[static_cast<std::size_t>(r)].size()) != n)
            throw std::invalid_argument("matrix: wrong column count");
        for (int c = 0; c < n; ++c)
            m.at(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

std::vector<ActionEffect> parse_actions(const json& j) {
    std::vector<ActionEffect> actions;
    for (const json& a : j) {
        ActionEffect e;
        e.name = a.value("name", "action" + std::to_string(actions.size()));
        e.cost = a.value("cost", 0.0);
        e.state_shift = a.value("state_shift", 0);
        e.rate_shift = a.value("rate_shift", 0);
        e.reset = a.value("reset", false);
        e.success_prob = a.value("success_prob", 1.0);
        actions.push_back(e);
    }
    return actions;
}

/// Per-rate matrices interpolated linearly between an initial and a final
/// matrix, reaching the final one at rate_ref.
std::vector<Matrix> interpolate_matrices(const Matrix& initial, const Matrix& final_m, int rate_ref,
                                         int max_rate) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(max_rate) + 1);
    for (int tau = 0; tau <= max_rate; ++tau) {
        double s = rate_ref > 0 ? std::min(1.0, static_cast<double>(tau) / rate_ref) : 1.0;
        Matrix m(initial.rows, initial.cols);
        for (std::size_t i = 0; i < m.data.size(); ++i)
            m.data[i] = (1.0 - s) * initial.data[i] + s * final_m.data[i];
        out.push_back(std::move(m));
    }
    return out;
}

ComponentModel parse_matrix_component(const json& j, int horizon, double precision) {
    ComponentModel c;
    c.num_states = j.at("states").get<int>();
    Matrix initial = parse_matrix(j.at("initial_matrix"), c.num_states);
    if (j.contains("final_matrix")) {
        int rate_ref = j.value("rate_ref", horizon);
        c.max_rate = j.value("max_rate", horizon);
        c.base = interpolate_matrices(initial, parse_matrix(j.at("final_matrix"), c.num_states), rate_ref,
                                      c.max_rate);
    } else {
        c.max_rate = 0;
        c.base.push_back(initial);
    }
    c.direct_loss = j.at("direct_loss").get<std::vector<double>>();
    c.actions = parse_actions(j.at("actions"));
    c.observation = ObservationModel::banded(c.num_states, precision);
    if (j.contains("loss_rep")) c.loss_rep = j.at("loss_rep").get<std::vector<double>>();
    return c;
}

struct GammaSetup {
    GammaProcessModel model;
    DiscretizedDeterioration disc;
};

GammaSetup build_gamma(const json& g, int horizon, const std::string& base_dir) {
    GammaSetup setup;
    double mean = g.at("mean_at_T").get<double>();
    double sigma = g.at("sigma_at_T").get<double>();
    double calib_T = g.at("calibration_T").get<double>();
    double beta = g.value("beta", 1.5);
    setup.model = calibrate(mean, sigma, calib_T, beta);

    double bin_width = g.value("bin_width", 2.5);
    int num_states = g.value("num_states", 25);
    double failure = g.value("failure_threshold", 60.0);
    long n_sims = g.value("n_sims", 1000000L);
    std::uint64_t seed = g.value("seed", 90210ULL);

    std::string cache;
    if (g.contains("cache")) {
        std::filesystem::path p = g.at("cache").get<std::string>();
        cache = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
    }
    if (!cache.empty() && load_deterioration_cache(cache, setup.model, bin_width, num_states, failure,
                                                   horizon, n_sims, seed, setup.disc))
        return setup;
    setup.disc = estimate_transition_matrices(setup.model, bin_width, num_states, failure, horizon,
                                              n_sims, seed);
    if (!cache.empty()) save_deterioration_cache(cache, setup.model, setup.disc, n_sims, seed);
    return setup;
}

}  // namespace

SystemModel load_system_json(const json& j, const std::string& base_dir) {
    SystemModel sys;
    sys.name = j.value("name", "system");
    sys.horizon = j.at("horizon").get<int>();
    sys.discount = j.at("discount").get<double>();
    double precision = j.value("observation_precision", 1.0);
    if (j.contains("inspection")) {
        sys.inspection_optional = j.at("inspection").value("optional", false);
        sys.inspection_cost = j.at("inspection").value("cost", 0.0);
    }

    // Modes (parsed before components so displacement setups can scale costs).
    const json* modes = j.contains("modes") ? &j.at("modes") : nullptr;
    std::string mode_kind = modes ? modes->value("kind", "none") : "none";

    if (mode_kind == "displacement") {
        sys.mode_kind = ModeKind::Displacement;
        std::filesystem::path tp = modes->at("truss").get<std::string>();
        std::string truss_path = tp.is_absolute() ? tp.string() : (std::filesystem::path(base_dir) / tp).string();
        sys.truss = std::make_shared<TrussGeometry>(TrussGeometry::from_json_file(truss_path));
        sys.ratio_thresholds = modes->at("thresholds").get<std::vector<double>>();
        sys.ratio_factors = modes->at("factors").get<std::vector<double>>();
        sys.yield_displacement = compute_reference_yield_displacement(*sys.truss);
        if (modes->contains("load")) {
            sys.load.mean = modes->at("load").value("mean", 16.25);
            sys.load.cov = modes->at("load").value("cov", 0.10);
        }
    } else if (mode_kind == "topology") {
        sys.mode_kind = ModeKind::Topology;
        sys.failure_factor = modes->value("factor", 24.0);
    } else if (mode_kind == "k-out-of-n") {
        sys.mode_kind = ModeKind::KOutOfN;
        for (const json& r : modes->at("rules"))
            sys.mode_rules.push_back({r.at("min_state").get<int>(), r.at("percent").get<int>(),
                                      r.at("factor").get<double>()});
    } else if (mode_kind != "none") {
        throw std::invalid_argument("unknown mode kind: " + mode_kind);
    }

    // Components: either explicit matrices or a shared gamma-process setup.
    json component_template = j.value("component_template", json::object());
    std::optional<GammaSetup> gamma;
    if (component_template.contains("gamma_process"))
        gamma = build_gamma(component_template.at("gamma_process"), sys.horizon, base_dir);

    double max_volume = 0.0;
    if (sys.mode_kind == ModeKind::Displacement)
        for (std::size_t m = 0; m < sys.truss->members.size(); ++m)
            max_volume = std::max(max_volume, sys.truss->member_volume(static_cast<int>(m)));

    for (const json& entry : j.at("components")) {
        json cj = component_template;
        cj.update(entry);
        if (cj.contains("gamma_process")) {
            if (!gamma) gamma = build_gamma(cj.at("gamma_process"), sys.horizon, base_dir);
            ComponentModel c;
            c.num_states = gamma->disc.num_states;
            c.max_rate = static_cast<int>(gamma->disc.matrices.size()) - 1;
            c.base = gamma->disc.matrices;
            c.loss_rep = gamma->disc.representative;
            c.actions = parse_actions(cj.at("actions"));
            double scale = 1.0;
            if (cj.contains("member") && sys.mode_kind == ModeKind::Displacement) {
                int member = cj.at("member").get<int>();
                sys.member_of_component.push_back(member);
                scale = sys.truss->member_volume(member) / max_volume;
            }
            double loss_max = cj.value("direct_loss_max", 30.0);
            c.direct_loss.resize(static_cast<std::size_t>(c.num_states));
            for (int x = 0; x < c.num_states; ++x) {
                double rep = std::min(c.loss_rep[static_cast<std::size_t>(x)], gamma->disc.failure_threshold);
                c.direct_loss[static_cast<std::size_t>(x)] =
                    loss_max * scale * rep / gamma->disc.failure_threshold;
            }
            if (cj.contains("action_cost_max")) {
                std::vector<double> maxima = cj.at("action_cost_max").get<std::vector<double>>();
                for (std::size_t a = 0; a < c.actions.size() && a < maxima.size(); ++a)
                    c.actions[a].cost = maxima[a] * scale;
            }
            c.observation = ObservationModel::banded(c.num_states, precision);
            sys.components.push_back(std::move(c));
        } else {
            sys.components.push_back(parse_matrix_component(cj, sys.horizon, precision));
        }
    }

    if (mode_kind == "topology") {
        sys.failure_expr = FailureExpression::parse(modes->at("expression").get<std::string>(),
                                                    sys.num_components());
    }

    for (int l = 0; l < sys.num_components(); ++l)
        sys.units.push_back({l, static_cast<int>(sys.components[static_cast<std::size_t>(l)].actions.size()), false});
    if (sys.inspection_optional) sys.units.push_back({-1, 2, true});

    sys.validate();
    return sys;
}

SystemModel load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open environment file: " + path);
    json j;
    in >> j;
    return load_system_json(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace lcdrl
