#pragma once

#include <span>
#include <string>
#include <vector>

namespace lcdrl {

/// Planar pin-jointed truss with axial members. Member stiffness degrades as
/// EA(1 - loss)/L; the solver reports the monitored displacement and member
/// stresses for the mode-penalty evaluation.
struct TrussGeometry {
    struct Node {
        double x = 0.0, y = 0.0;
    };
    struct Member {
        int node_i = 0, node_j = 0;
        double area = 0.0;
    };
    struct Support {
        int node = 0;
        bool fix_x = false, fix_y = false;
    };
    struct NodalLoad {
        int node = 0;
        double fx = 0.0, fy = 0.0;  // per unit load intensity
    };

    std::vector<Node> nodes;
    std::vector<Member> members;
    std::vector<Support> supports;
    std::vector<NodalLoad> unit_load;
    double elastic_modulus = 210e6;  // kPa
    double yield_stress = 355e3;     // kPa
    int monitored_node = 0;          // vertical displacement is monitored

    double member_length(int m) const;
    double member_volume(int m) const;
    void validate() const;

    static TrussGeometry from_json_file(const std::string& path);
};

struct TrussSolution {
    bool singular = false;
    double monitored_displacement = 0.0;      // magnitude of the monitored vertical displacement
    std::vector<double> member_stress;         // axial stress per member (signed)
};

/// Solves K u = F with per-member section losses in [0, 1]; losses at 1 remove
/// the member entirely, which may turn the structure into a mechanism
/// (reported as singular).
TrussSolution solve_displacement(const TrussGeometry& geometry,
                                 std::span<const double> section_loss,
                                 double load_magnitude);

/// Monitored displacement at which the most stressed member of the intact
/// structure reaches yield. Scale-invariant in the unit load definition.
double compute_reference_yield_displacement(const TrussGeometry& geometry);

/// Penalty factor from the monitored displacement ratio. Bins are left-closed:
/// [0.60, 0.75) -> 2, [0.75, 1.00) -> 6, >= 1.00 (or collapse) -> 24.
double displacement_ratio_penalty(double u, double u_y,
                                  std::span<const double> thresholds,
                                  std::span<const double> factors,
                                  bool collapse = false);

/// Per-step vertical load intensity, normally distributed.
struct LoadModel {
    double mean = 16.25;
    double cov = 0.10;
};

}  // namespace lcdrl
