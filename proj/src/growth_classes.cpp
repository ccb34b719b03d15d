#include <algorithm>
#include <cmath>
#include <limits>

#include "olab/errors.hpp"
#include "olab/growth.hpp"

namespace olab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double checked_log(const GrowthFunction& phi, double t) {
    const double v = phi.log_value(t);
    if (v == -kInf && t > 0.0) throw DegenerateError("growth function vanishes at t > 0");
    return v;
}

// log of integral of phi(s)/s^2 over [e^u0, e^u1], trapezoid in u, refined until relative change < 1e-6
double segment(const GrowthFunction& phi, double u0, double u1) {
    auto h = [&](double u) {
        const double v = phi.log_value(std::exp(u)) - u;
        return v == -kInf ? 0.0 : std::exp(v);
    };
    int n = 8;
    const double w0 = (u1 - u0) / n;
    double sum = 0.5 * (h(u0) + h(u1));
    for (int i = 1; i < n; ++i) sum += h(u0 + w0 * i);
    double est = sum * w0;
    for (int round = 0; round < 16; ++round) {
        const double w = (u1 - u0) / n;
        for (int i = 0; i < n; ++i) sum += h(u0 + w * (i + 0.5));
        n *= 2;
        const double next = sum * (u1 - u0) / n;
        const bool done = std::abs(next - est) <= 1e-6 * std::abs(next);
        est = next;
        if (done) break;
    }
    return est;
}

double nabla2_estimate(const GrowthFunction& phi, const std::vector<double>& grid, double* witness) {
    const double ln10 = std::log(10.0);
    double u_top = std::log(grid[0]);
    double total = 0.0;
    bool converged = false;
    for (int j = 0; j < 2000; ++j) {
        const double u_bot = u_top - ln10;
        if (u_bot < std::log(1e-300)) break;
        const double seg = segment(phi, u_bot, u_top);
        total += seg;
        u_top = u_bot;
        if (j >= 2 && seg <= 1e-9 * total) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        if (witness) *witness = grid[0];
        return kInf;
    }
    double best = -kInf;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (k > 0) total += segment(phi, std::log(grid[k - 1]), std::log(grid[k]));
        const double lr = std::log(total) + std::log(grid[k]) - checked_log(phi, grid[k]);
        if (lr > best) {
            best = lr;
            if (witness) *witness = grid[k];
        }
    }
    return std::exp(best);
}

}  // namespace

std::string to_string(GrowthProperty p) {
    switch (p) {
        case GrowthProperty::Delta2:
            return "delta2";
        case GrowthProperty::DeltaPrime:
            return "delta_prime";
        case GrowthProperty::Nabla2:
            return "nabla2";
        case GrowthProperty::UpperType:
            return "upper_type";
        case GrowthProperty::UTilde:
            return "u_tilde";
        case GrowthProperty::QuotientBound:
            return "quotient_bound";
        case GrowthProperty::RatioMonotone:
            return "ratio_monotone";
    }
    return "";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::HoldsOnGrid:
            return "holds-on-grid";
        case Verdict::Fails:
            return "fails";
        case Verdict::GrowsWithGrid:
            return "grows-with-grid";
    }
    return "";
}

GrowthProperty parse_property(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return c == '-' ? '_' : std::tolower(c); });
    for (auto p : {GrowthProperty::Delta2, GrowthProperty::DeltaPrime, GrowthProperty::Nabla2, GrowthProperty::UpperType,
                   GrowthProperty::UTilde, GrowthProperty::QuotientBound, GrowthProperty::RatioMonotone})
        if (to_string(p) == t) return p;
    throw UsageError("unknown growth property: " + text);
}

double grid_estimate(const GrowthFunction& phi, GrowthProperty property, const std::vector<double>& grid,
                     const std::optional<GrowthFunction>& aux, double q, double* witness) {
    if (grid.size() < 3) throw UsageError("classification grid needs at least 3 points");
    for (double t : grid)
        if (!(t > 0.0) || !std::isfinite(t)) throw UsageError("classification grid must be positive");
    if ((property == GrowthProperty::UpperType || property == GrowthProperty::UTilde) && !(q >= 1.0))
        throw UsageError("upper-type properties need q >= 1");
    if (property == GrowthProperty::RatioMonotone && !aux) throw UsageError("ratio_monotone needs a second function");

    const std::size_t n = grid.size();
    std::vector<double> lg(n), lphi(n);
    for (std::size_t i = 0; i < n; ++i) {
        lg[i] = std::log(grid[i]);
        lphi[i] = checked_log(phi, grid[i]);
    }
    double best = -kInf, arg = grid[0];
    auto offer = [&](double lr, double w) {
        if (std::isnan(lr)) lr = kInf;
        if (lr > best) {
            best = lr;
            arg = w;
        }
    };

    switch (property) {
        case GrowthProperty::Delta2:
            for (std::size_t i = 0; i < n; ++i) offer(checked_log(phi, 2.0 * grid[i]) - lphi[i], grid[i]);
            break;
        case GrowthProperty::DeltaPrime:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i; j < n; ++j)
                    offer(checked_log(phi, grid[i] * grid[j]) - lphi[i] - lphi[j], grid[i]);
            break;
        case GrowthProperty::Nabla2: {
            double w = grid[0];
            const double e = nabla2_estimate(phi, grid, &w);
            if (witness) *witness = w;
            return e;
        }
        case GrowthProperty::UpperType:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    if (grid[j] < 1.0) continue;
                    offer(checked_log(phi, grid[i] * grid[j]) - q * lg[j] - lphi[i], grid[i]);
                }
            break;
        case GrowthProperty::UTilde:
            for (std::size_t i = 0; i < n; ++i) {
                if (grid[i] < 1.0) continue;
                for (std::size_t j = 0; j < n; ++j) {
                    if (grid[j] < 1.0) continue;
                    offer(checked_log(phi, grid[i] / grid[j]) + q * lg[j] - lphi[i], grid[i]);
                }
            }
            break;
        case GrowthProperty::QuotientBound:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    offer(checked_log(phi, grid[i] / grid[j]) + lphi[j] - lphi[i], grid[i]);
            break;
        case GrowthProperty::RatioMonotone: {
            std::vector<double> lr(n);
            for (std::size_t i = 0; i < n; ++i) lr[i] = checked_log(*aux, grid[i]) - lphi[i];
            for (std::size_t i = 0; i + 1 < n; ++i) offer(lr[i] - lr[i + 1], grid[i]);
            break;
        }
    }
    if (witness) *witness = arg;
    return std::exp(best);
}

GrowthClassReport classify(const GrowthFunction& phi, GrowthProperty property, const std::vector<double>& grid,
                           const std::optional<GrowthFunction>& aux, double q) {
    GrowthClassReport r;
    r.property = property;
    r.q = q;
    r.grid = grid;
    r.estimate = grid_estimate(phi, property, grid, aux, q, &r.witness);
    if (property == GrowthProperty::RatioMonotone) {
        r.verdict = r.estimate <= 1.0 + 1e-12 ? Verdict::HoldsOnGrid : Verdict::Fails;
        return r;
    }
    if (!std::isfinite(r.estimate)) {
        r.verdict = Verdict::GrowsWithGrid;
        return r;
    }
    const double lo = grid.front(), hi = grid.back();
    const double extended = grid_estimate(phi, property, log_grid(lo, hi * 10.0, static_cast<int>(grid.size())), aux, q);
    r.verdict = extended > 1.1 * r.estimate ? Verdict::GrowsWithGrid : Verdict::HoldsOnGrid;
    return r;
}

double upper_type_exponent(const GrowthFunction& phi, const std::vector<double>& grid) {
    double q = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double s = (phi.log_value(grid[i + 1]) - phi.log_value(grid[i])) / (std::log(grid[i + 1]) - std::log(grid[i]));
        q = std::max(q, s);
    }
    return q;
}

}  // namespace olab
