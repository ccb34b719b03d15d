#include "olab/orlicz.hpp"

#include <cmath>
#include <limits>

#include "olab/errors.hpp"

namespace olab {

double modular_at(const GrowthFunction& phi, const MeshField& f, const MeshField& sigma, double lambda) {
    require_same_mesh(f, sigma);
    if (!(lambda > 0.0)) throw DomainError("modular scale must be positive");
    Kahan k;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double a = std::abs(f.values[i]);
        if (a == 0.0) continue;
        const double v = eval(phi, a / lambda);
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        k.add(v * sigma.values[i]);
    }
    return k.value() * f.mesh.cell_volume();
}

double modular(const GrowthFunction& phi, const MeshField& f, const MeshField& sigma) {
    return modular_at(phi, f, sigma, 1.0);
}

NormResult luxemburg_norm(const GrowthFunction& phi, const MeshField& f, const MeshField& sigma, double tol) {
    require_same_mesh(f, sigma);
    if (!(tol > 0.0)) throw UsageError("norm tolerance must be positive");
    NormResult r;
    for (double v : f.values)
        if (!std::isfinite(v)) {
            r.value = std::numeric_limits<double>::infinity();
            r.infinite = true;
            return r;
        }
    if (is_zero(f)) return r;

    auto m = [&](double lambda) {
        ++r.iterations;
        return modular_at(phi, f, sigma, lambda);
    };
    const double m0 = modular(phi, f, sigma);
    double lam0 = std::isfinite(m0) ? m0 : 1e300;
    lam0 = std::min(std::max(lam0, 1e-300), 1e300);

    double lo, hi;
    if (m(lam0) <= 1.0) {
        hi = lam0;
        lo = 0.5 * hi;
        while (m(lo) <= 1.0) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) throw OverflowError("luxemburg_norm: no lower bracket");
        }
    } else {
        lo = lam0;
        hi = 2.0 * lo;
        while (m(hi) > 1.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) {
                if (m(1e300) > 1.0) {
                    r.value = std::numeric_limits<double>::infinity();
                    r.infinite = true;
                    return r;
                }
                hi = 1e300;
                break;
            }
        }
    }
    int steps = 0;
    while (hi / lo - 1.0 > tol && steps < kNormMaxIter) {
        const double mid = std::sqrt(lo) * std::sqrt(hi);
        if (m(mid) <= 1.0)
            hi = mid;
        else
            lo = mid;
        ++steps;
    }
    r.value = hi;
    r.residual = std::abs(modular_at(phi, f, sigma, hi) - 1.0);
    return r;
}

bool norm_from_modular_bound(const GrowthFunction& phi, const MeshField& f, const MeshField& sigma, double c) {
    if (!(c > 0.0)) throw UsageError("norm bound must be positive");
    if (is_zero(f)) return true;
    return modular_at(phi, f, sigma, c) <= 1.0;
}

}  // namespace olab
