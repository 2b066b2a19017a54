#pragma once

#include <cstddef>
#include <vector>

#include "gmmlor/model.hpp"

namespace fixture {

inline gmmlor::GaussianComponent2D component(double mx, double my, double a, double b, double c, double w = 1.0) {
    gmmlor::GaussianComponent2D g;
    g.mean = gmmlor::Vec2(mx, my);
    g.covariance << a, b, b, c;
    g.weight = w;
    return g;
}

/// The three-component reference mixture used throughout the study.
inline gmmlor::MixtureModel2D reference_mixture() {
    return gmmlor::MixtureModel2D::normalized({
        component(0.0, 0.0, 0.0625, 0.0, 0.0625, 3500.0),
        component(-0.4, -0.4, 0.04, 0.03, 0.09, 2500.0),
        component(1.25, -1.0, 0.04, 0.006, 0.01, 1000.0),
    });
}

inline std::vector<std::size_t> reference_counts() { return {3500, 2500, 1000}; }

inline gmmlor::MixtureModel2D single(const gmmlor::GaussianComponent2D& g) {
    auto c = g;
    c.weight = 1.0;
    return gmmlor::MixtureModel2D({c});
}

}  // namespace fixture
