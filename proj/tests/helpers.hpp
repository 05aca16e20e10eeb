#pragma once

#include <quenchmap/quenchmap.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace qmtest {

using namespace quenchmap;

inline PhysicalParams unit_params() { return PhysicalParams{}; }

inline std::string source_dir() { return std::string(QUENCHMAP_SOURCE_DIR); }

inline std::string config_path(const std::string& name) {
    return source_dir() + "/configs/" + name;
}

// the two-packet state used by the interference fixtures: counter-propagating
// Gaussians, sigma0 = 1.5, p0 = +-4
inline std::vector<PacketComponent> counter_packets() {
    GaussianSpec right{1.5, 0.0, 4.0};
    GaussianSpec left{1.5, 0.0, -4.0};
    return {PacketComponent{right, {1.0, 0.0}}, PacketComponent{left, {1.0, 0.0}}};
}

inline SolutionEvaluator counter_superposition(const Grid& grid,
                                               const PhysicalParams& params) {
    return superposition(counter_packets(), params, grid);
}

inline double max_abs_diff(const SolutionEvaluator& a, const SolutionEvaluator& b,
                           const std::vector<double>& xs, double t) {
    double worst = 0.0;
    for (double x : xs) {
        worst = std::max(worst, std::abs(a(x, t) - b(x, t)));
    }
    return worst;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
    }
    return out;
}

}  // namespace qmtest
