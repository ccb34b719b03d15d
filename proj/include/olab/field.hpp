#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "olab/dyadic.hpp"

namespace olab {

constexpr double kWeightFloor = 1e-12;

enum class FieldKind { Weight, Function };

struct MeshField {
    Mesh mesh;
    FieldKind kind = FieldKind::Function;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

namespace gen {
struct Constant {
    double c = 1.0;
};
// Indicator of the box [lo, hi) in absolute coordinates, judged at cell centers.
struct Indicator {
    std::array<double, kMaxDim> lo{};
    std::array<double, kMaxDim> hi{};
};
struct PowerSingularity {
    std::array<double, kMaxDim> center{};
    double gamma = 0.0;
};
struct Lognormal {
    std::uint64_t seed = 0;
    double roughness = 1.0;
};
struct FromValues {
    std::vector<double> values;
};
}  // namespace gen

using Generator = std::variant<gen::Constant, gen::Indicator, gen::PowerSingularity, gen::Lognormal, gen::FromValues>;

MeshField make_field(const Mesh& mesh, FieldKind kind, const Generator& g);
MeshField make_weight(const Mesh& mesh, const Generator& g);
MeshField make_function(const Mesh& mesh, const Generator& g);

// Text form: constant:c=2, indicator:lo=0,hi=0.25 (per-axis lo/hi repeat for d > 1),
// powersing:center=0,gamma=-0.5, lognormal:seed=7,roughness=1, values:1;2;3
Generator parse_generator(const std::string& text, int dim);
std::string generator_descriptor(const Generator& g, int dim);

// Replicates values onto the tick lattice (subdiv 3); identity when already refined.
MeshField refine(const MeshField& f);
MeshField on_mesh(const MeshField& f, const Mesh& target);
void require_same_mesh(const MeshField& a, const MeshField& b);

double integrate(const MeshField& f, const CellBox& box);
double integrate(const MeshField& f, const DyadicCube& q);
double integrate(const MeshField& f);
double average(const MeshField& f, const MeshField& sigma, const CellBox& box);
double average(const MeshField& f, const MeshField& sigma, const DyadicCube& q);

MeshField map_field(const MeshField& f, FieldKind kind, const std::function<double(double)>& op);
MeshField product_field(const MeshField& a, const MeshField& b, FieldKind kind);
MeshField scaled(const MeshField& f, double c);
MeshField indicator_of_box(const Mesh& mesh, const CellBox& box);
bool is_zero(const MeshField& f);

// Neumaier-compensated accumulator.
class Kahan {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

void write_field_csv(std::ostream& out, const MeshField& f);
MeshField read_field_csv(std::istream& in);
MeshField load_field_csv(const std::string& path);
void save_field_csv(const std::string& path, const MeshField& f);

// Uniform double in [0, 1) from a 64-bit engine output, platform independent.
double unit_uniform(std::uint64_t bits);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace olab
