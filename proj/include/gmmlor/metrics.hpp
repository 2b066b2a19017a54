#pragma once

#include <cstddef>
#include <vector>

#include "gmmlor/model.hpp"

namespace gmmlor {

struct ComponentErrors {
    double mean_error = 0.0;        // ||mu_hat - mu||_2
    double covariance_error = 0.0;  // ||Sigma_hat - Sigma||_F
    double weight_error = 0.0;      // |tau_hat - tau|
};

/// Assignment of estimated components to truth: entry t is the index of the
/// estimated component matched to truth component t.
using Permutation = std::vector<std::size_t>;

struct FitReport {
    std::vector<ComponentErrors> components;  // indexed by truth component
    double kl_divergence = 0.0;
    Permutation matching;
};

inline constexpr std::size_t kDefaultKlGrid = 512;

/// Exhaustive search (K <= 8) for the assignment with the smallest summed
/// mean error; ties are broken by summed covariance error.
Permutation match_components(const MixtureModel2D& estimated, const MixtureModel2D& truth);

std::vector<ComponentErrors> parameter_errors(const MixtureModel2D& estimated, const MixtureModel2D& truth,
                                              const Permutation& matching);

/// D_KL(estimated || truth) by midpoint quadrature on a grid x grid lattice
/// covering every mean of both models padded by 6 times the largest standard
/// deviation. Densities are floored at 1e-300 inside the logarithm.
double kl_divergence(const MixtureModel2D& estimated, const MixtureModel2D& truth,
                     std::size_t grid = kDefaultKlGrid);

FitReport evaluate(const MixtureModel2D& estimated, const MixtureModel2D& truth,
                   std::size_t grid = kDefaultKlGrid);

/// Axis-aligned box containing all means padded by `sigmas` times the
/// largest component standard deviation across the given models.
struct BoundingBox {
    double x_min, x_max, y_min, y_max;
};

BoundingBox bounding_box(const std::vector<const MixtureModel2D*>& models, double sigmas);

}  // namespace gmmlor
