#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace olab {

enum class Family {
    Power,
    PowerLog,
    ExpMinusLinear,
    Entropy,
    Tabulated,
    Product,
    PsiOfPhiInverse,
    Omega3,
    Complementary,
};

namespace detail {
struct GrowthNode;
}

// Immutable handle to a growth function. Copies share the underlying node.
class GrowthFunction {
public:
    GrowthFunction();

    static GrowthFunction power(double p, double scale = 1.0);
    // t^a log^b(1+t)
    static GrowthFunction power_log(double a, double b, double scale = 1.0);
    // e^t - t - 1
    static GrowthFunction exp_minus_linear(double scale = 1.0);
    // (1+t)ln(1+t) - t
    static GrowthFunction entropy(double scale = 1.0);
    static GrowthFunction tabulated(std::vector<double> xs, std::vector<double> ys);

    Family family() const;
    double scale() const;
    // Family parameters: power -> {p}, power_log -> {a, b}, others -> {}.
    std::vector<double> params() const;
    bool is_power() const;
    double power_exponent() const;

    double operator()(double t) const;
    double log_value(double t) const;
    std::string descriptor() const;

    const detail::GrowthNode& node() const { return *node_; }

    explicit GrowthFunction(std::shared_ptr<const detail::GrowthNode> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<const detail::GrowthNode> node_;
};

namespace detail {
struct GrowthNode {
    Family family = Family::Power;
    double scale = 1.0;
    double p = 1.0;
    double a = 1.0;
    double b = 0.0;
    std::vector<double> log_x, log_y;
    std::vector<GrowthFunction> children;
    double tol = 1e-12;
};
}  // namespace detail

constexpr double kInverseTol = 1e-12;

double eval(const GrowthFunction& phi, double t);
double inverse(const GrowthFunction& phi, double y, double tol = kInverseTol);

double complementary(const GrowthFunction& phi, double s, double tol = 1e-10);
// Pointwise complementary function as a growth function node.
GrowthFunction complementary_function(const GrowthFunction& phi, double tol = 1e-10);
// Samples phi on grid and returns the log-log interpolant.
GrowthFunction tabulate(const GrowthFunction& phi, const std::vector<double>& grid);
// Tabulated complementary function on a log grid, for repeated use.
GrowthFunction memoized_complementary(const GrowthFunction& phi, double lo = 1e-8, double hi = 1e8,
                                      int points = 801);

GrowthFunction product_compose(const std::vector<GrowthFunction>& phis);
// t -> psi(phi^{-1}(t))
GrowthFunction compose_inverse(const GrowthFunction& psi, const GrowthFunction& phi);
double omega3(const GrowthFunction& psi, const GrowthFunction& phi, double t);
GrowthFunction omega3_function(const GrowthFunction& psi, const GrowthFunction& phi);

GrowthFunction parse_growth(const std::string& text);

std::vector<double> log_grid(double lo, double hi, int points);
std::vector<double> default_grid();

enum class GrowthProperty {
    Delta2,
    DeltaPrime,
    Nabla2,
    UpperType,
    UTilde,
    QuotientBound,
    RatioMonotone,
};

enum class Verdict { HoldsOnGrid, Fails, GrowsWithGrid };

std::string to_string(GrowthProperty p);
std::string to_string(Verdict v);
GrowthProperty parse_property(const std::string& text);

struct GrowthClassReport {
    GrowthProperty property = GrowthProperty::Delta2;
    double q = 0.0;
    double estimate = 0.0;
    // sample abscissa (or the first coordinate of the pair) realizing the estimate
    double witness = 0.0;
    Verdict verdict = Verdict::HoldsOnGrid;
    std::vector<double> grid;
};

// Ratio supremum on the grid only, no extended rerun.
double grid_estimate(const GrowthFunction& phi, GrowthProperty property, const std::vector<double>& grid,
                     const std::optional<GrowthFunction>& aux = std::nullopt, double q = 0.0,
                     double* witness = nullptr);

GrowthClassReport classify(const GrowthFunction& phi, GrowthProperty property,
                           const std::vector<double>& grid = default_grid(),
                           const std::optional<GrowthFunction>& aux = std::nullopt, double q = 0.0);

// Smallest q with psi(st) <= t^q psi(s), t >= 1, read off as the max log-log slope on the grid.
double upper_type_exponent(const GrowthFunction& phi, const std::vector<double>& grid = default_grid());

}  // namespace olab
