#pragma once

#include <string>
#include <vector>

#include "olab/dyadic.hpp"
#include "olab/field.hpp"
#include "olab/growth.hpp"
#include "olab/kernels.hpp"

namespace olab {

using kernels::Exec;

enum class CubeSetKind { SingleGrid, AllGrids, AllMeshAligned };

struct CubeSet {
    CubeSetKind kind = CubeSetKind::SingleGrid;
    Shift beta{};

    static CubeSet single(const Shift& beta = zero_shift()) { return {CubeSetKind::SingleGrid, beta}; }
    static CubeSet all_grids() { return {CubeSetKind::AllGrids, {}}; }
    static CubeSet all_mesh_aligned() { return {CubeSetKind::AllMeshAligned, {}}; }
    bool operator==(const CubeSet& o) const = default;
};

// "dyadic" (beta = 0), "single:0,1/3", "all-grids", "all-mesh-aligned"
CubeSet parse_cube_set(const std::string& text, int dim);
std::string to_string(const CubeSet& cs, int dim);

// Where the maximal field of a cube set lives: the input mesh for the standard grid on an
// unrefined mesh, otherwise the tick lattice.
Mesh output_mesh(const Mesh& input, const CubeSet& cs);

struct MaximalResult {
    MeshField field;
    CubeSet cube_set;
    double alpha = 0.0;
    int n = 1;
};

MaximalResult multilinear_weighted_maximal(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                                           const CubeSet& cs, Exec exec = Exec::Parallel);
MaximalResult fractional_multilinear_maximal(const std::vector<MeshField>& fs, double alpha, const CubeSet& cs,
                                             Exec exec = Exec::Parallel);
MaximalResult hardy_littlewood_maximal(const MeshField& f, const CubeSet& cs, Exec exec = Exec::Parallel);
MaximalResult log_maximal(const MeshField& f, const CubeSet& cs, Exec exec = Exec::Parallel);

// Functional and channels for the operators above, on the given output mesh.
struct Operator {
    kernels::Functional fn;
    kernels::Channels ch;
};
Operator weighted_operator(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs, const Mesh& mesh);
Operator fractional_operator(const std::vector<MeshField>& fs, double alpha, const Mesh& mesh);
Operator log_operator(const MeshField& f, const Mesh& mesh);
MeshField evaluate(const Operator& op, const CubeSet& cs, Exec exec = Exec::Parallel);

// Inclusion-maximal cubes of D^beta whose value exceeds lambda, in enumeration order.
std::vector<DyadicCube> level_cubes(const Operator& op, double lambda, const Shift& beta);
std::vector<DyadicCube> level_cubes(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                                    double lambda, const Shift& beta);

constexpr int kSparseRetries = 6;

SparseFamily sparse_decompose(const Operator& op, double base, const Shift& beta);
SparseFamily sparse_decompose(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs, double base,
                              const Shift& beta);

struct WeakTypeProfile {
    std::vector<double> lambda;
    std::vector<double> value;  // nu(E_lambda) * Phi(lambda)
    double sup = 0.0;           // exact, over all lambda > 0
    double sup_lambda = 0.0;
};

WeakTypeProfile weak_type_profile(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                                  const std::vector<GrowthFunction>& phis, const GrowthFunction& phi,
                                  const std::vector<double>& lambdas, const Shift& beta);

}  // namespace olab
