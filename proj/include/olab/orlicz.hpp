#pragma once

#include "olab/field.hpp"
#include "olab/growth.hpp"

namespace olab {

struct NormResult {
    double value = 0.0;
    int iterations = 0;
    // |modular(f / value) - 1| when 0 < value < inf
    double residual = 0.0;
    bool infinite = false;
};

constexpr double kNormTol = 1e-10;
constexpr int kNormMaxIter = 200;

double modular(const GrowthFunction& phi, const MeshField& f, const MeshField& sigma);
// modular of f / lambda
double modular_at(const GrowthFunction& phi, const MeshField& f, const MeshField& sigma, double lambda);
NormResult luxemburg_norm(const GrowthFunction& phi, const MeshField& f, const MeshField& sigma, double tol = kNormTol);
// True iff modular(f / c) <= 1, which certifies that the Luxemburg norm is at most c.
bool norm_from_modular_bound(const GrowthFunction& phi, const MeshField& f, const MeshField& sigma, double c);

}  // namespace olab
