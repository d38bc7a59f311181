#include "lcdrl/truss.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lcdrl {

double TrussGeometry::member_length(int m) const {
    const Member& mb = members.at(static_cast<std::size_t>(m));
    double dx = nodes[mb.node_j].x - nodes[mb.node_i].x;
    double dy = nodes[mb.node_j].y - nodes[mb.node_i].y;
    return std::hypot(dx, dy);
}

double TrussGeometry::member_volume(int m) const {
    return members[static_cast<std::size_t>(m)].area * member_length(m);
}

void TrussGeometry::validate() const {
    if (nodes.size() < 2 || members.empty()) throw std::invalid_argument("truss: too few nodes/members");
    for (const Member& m : members) {
        if (m.node_i < 0 || m.node_j < 0 || m.node_i >= static_cast<int>(nodes.size()) ||
            m.node_j >= static_cast<int>(nodes.size()) || m.node_i == m.node_j)
            throw std::invalid_argument("truss: bad member connectivity");
        if (m.area <= 0.0) throw std::invalid_argument("truss: member area must be positive");
    }
    if (monitored_node < 0 || monitored_node >= static_cast<int>(nodes.size()))
        throw std::invalid_argument("truss: monitored node out of range");
    for (const Support& s : supports)
        if (s.node == monitored_node && s.fix_y)
            throw std::invalid_argument("truss: monitored displacement is constrained");
    std::vector<double> zero(members.size(), 0.0);
    if (solve_displacement(*this, zero, 1.0).singular)
        throw std::invalid_argument("truss: intact structure is a mechanism");
}

TrussGeometry TrussGeometry::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open truss geometry file: " + path);
    nlohmann::json j;
    in >> j;

    TrussGeometry g;
    for (const auto& n : j.at("nodes")) g.nodes.push_back({n.at(0).get<double>(), n.at(1).get<double>()});
    for (const auto& m : j.at("members"))
        g.members.push_back({m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<double>()});
    for (const auto& s : j.at("supports")) {
        std::string dirs = s.at(1).get<std::string>();
        g.supports.push_back({s.at(0).get<int>(), dirs.find('x') != std::string::npos,
                              dirs.find('y') != std::string::npos});
    }
    for (const auto& l : j.at("unit_load"))
        g.unit_load.push_back({l.at(0).get<int>(), l.at(1).get<double>(), l.at(2).get<double>()});
    g.elastic_modulus = j.value("elastic_modulus", 210e6);
    g.yield_stress = j.value("yield_stress", 355e3);
    g.monitored_node = j.at("monitored_node").get<int>();
    g.validate();
    return g;
}

namespace {

struct Assembled {
    Eigen::MatrixXd stiffness;
    Eigen::VectorXd force;
    std::vector<int> dof_index;  // 2*node + dir -> reduced index or -1 when fixed
    int num_free = 0;
};

Assembled assemble(const TrussGeometry& g, std::span<const double> loss, double load) {
    int n = static_cast<int>(g.nodes.size());
    std::vector<int> dof(2 * static_cast<std::size_t>(n), 0);
    for (const auto& s : g.supports) {
        if (s.fix_x) dof[2 * static_cast<std::size_t>(s.node)] = -1;
        if (s.fix_y) dof[2 * static_cast<std::size_t>(s.node) + 1] = -1;
    }
    int free_count = 0;
    for (auto& d : dof)
        if (d != -1) d = free_count++;

    Assembled a;
    a.dof_index = std::move(dof);
    a.num_free = free_count;
    a.stiffness = Eigen::MatrixXd::Zero(free_count, free_count);
    a.force = Eigen::VectorXd::Zero(free_count);

    for (std::size_t m = 0; m < g.members.size(); ++m) {
        const auto& mb = g.members[m];
        double L = g.member_length(static_cast<int>(m));
        double c = (g.nodes[mb.node_j].x - g.nodes[mb.node_i].x) / L;
        double s = (g.nodes[mb.node_j].y - g.nodes[mb.node_i].y) / L;
        double k = g.elastic_modulus * mb.area * (1.0 - loss[m]) / L;
        double kk[2][2] = {{c * c, c * s}, {c * s, s * s}};
        int map[4] = {a.dof_index[2 * static_cast<std::size_t>(mb.node_i)],
                      a.dof_index[2 * static_cast<std::size_t>(mb.node_i) + 1],
                      a.dof_index[2 * static_cast<std::size_t>(mb.node_j)],
                      a.dof_index[2 * static_cast<std::size_t>(mb.node_j) + 1]};
        for (int r = 0; r < 4; ++r) {
            if (map[r] < 0) continue;
            for (int col = 0; col < 4; ++col) {
                if (map[col] < 0) continue;
                double sign = ((r < 2) == (col < 2)) ? 1.0 : -1.0;
                a.stiffness(map[r], map[col]) += sign * k * kk[r % 2][col % 2];
            }
        }
    }
    for (const auto& l : g.unit_load) {
        int ix = a.dof_index[2 * static_cast<std::size_t>(l.node)];
        int iy = a.dof_index[2 * static_cast<std::size_t>(l.node) + 1];
        if (ix >= 0) a.force(ix) += l.fx * load;
        if (iy >= 0) a.force(iy) += l.fy * load;
    }
    return a;
}

}  // namespace

TrussSolution solve_displacement(const TrussGeometry& g, std::span<const double> section_loss,
                                 double load_magnitude) {
    if (section_loss.size() != g.members.size())
        throw std::invalid_argument("solve_displacement: one loss per member expected");
    for (double l : section_loss)
        if (l < 0.0 || l > 1.0 || !std::isfinite(l))
            throw std::invalid_argument("solve_displacement: losses must be in [0,1]");

    Assembled a = assemble(g, section_loss, load_magnitude);
    TrussSolution sol;

    // Rank-revealing decomposition: losing a member of a determinate truss
    // forms a mechanism even when the load does not excite it.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a.stiffness);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) {
        sol.singular = true;
        return sol;
    }
    Eigen::VectorXd u = lu.solve(a.force);
    if (!u.allFinite()) {
        sol.singular = true;
        return sol;
    }

    int iy = a.dof_index[2 * static_cast<std::size_t>(g.monitored_node) + 1];
    sol.monitored_displacement = iy >= 0 ? std::abs(u(iy)) : 0.0;

    sol.member_stress.resize(g.members.size(), 0.0);
    for (std::size_t m = 0; m < g.members.size(); ++m) {
        const auto& mb = g.members[m];
        double L = g.member_length(static_cast<int>(m));
        double c = (g.nodes[mb.node_j].x - g.nodes[mb.node_i].x) / L;
        double s = (g.nodes[mb.node_j].y - g.nodes[mb.node_i].y) / L;
        auto disp = [&](int node, int dir) {
            int idx = a.dof_index[2 * static_cast<std::size_t>(node) + dir];
            return idx >= 0 ? u(idx) : 0.0;
        };
        double elongation = c * (disp(mb.node_j, 0) - disp(mb.node_i, 0)) +
                            s * (disp(mb.node_j, 1) - disp(mb.node_i, 1));
        // Stress on the remaining section: E * strain.
        sol.member_stress[m] = g.elastic_modulus * elongation / L;
    }
    return sol;
}

double compute_reference_yield_displacement(const TrussGeometry& g) {
    std::vector<double> intact(g.members.size(), 0.0);
    TrussSolution sol = solve_displacement(g, intact, 1.0);
    if (sol.singular) throw std::runtime_error("intact structure is singular");
    double max_stress = 0.0;
    for (double s : sol.member_stress) max_stress = std::max(max_stress, std::abs(s));
    if (max_stress <= 0.0) throw std::runtime_error("unit load produces no stress");
    return sol.monitored_displacement * (g.yield_stress / max_stress);
}

double displacement_ratio_penalty(double u, double u_y, std::span<const double> thresholds,
                                  std::span<const double> factors, bool collapse) {
    if (thresholds.size() != factors.size())
        throw std::invalid_argument("displacement_ratio_penalty: thresholds/factors mismatch");
    if (collapse) return factors.empty() ? 1.0 : factors.back();
    if (u_y <= 0.0) throw std::invalid_argument("displacement_ratio_penalty: u_y must be positive");
    double ratio = u / u_y;
    double penalty = 1.0;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        if (ratio >= thresholds[i]) penalty = factors[i];
    return penalty;
}

}  // namespace lcdrl
