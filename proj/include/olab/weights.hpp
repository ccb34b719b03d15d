#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "olab/field.hpp"
#include "olab/growth.hpp"
#include "olab/kernels.hpp"
#include "olab/maximal.hpp"

namespace olab {

struct WeightSystem {
    std::vector<MeshField> sigmas;
    std::vector<GrowthFunction> phis;
    GrowthFunction phi;

    // phi from phi^{-1} = prod phi_i^{-1}
    static WeightSystem make(std::vector<MeshField> sigmas, std::vector<GrowthFunction> phis);
    int n() const { return static_cast<int>(sigmas.size()); }
};

// Cellwise 1 / Phi(prod Phi_i^{-1}(1 / sigma_i)); the closed form prod sigma_i^{p/p_i} for powers.
MeshField nu_sigma(const WeightSystem& ws);
// Always through numeric inversion.
MeshField nu_sigma_generic(const WeightSystem& ws);

enum class ClassKind {
    AP,
    A1,
    A_INF_FW,
    A_INF_EXP,
    DOUBLING,
    M,
    K,
    S_ALPHA,
    L_ALPHA,
    A_ALPHA,
    A_TILDE_ALPHA,
    B_ALPHA,
    W,
};

std::string to_string(ClassKind k);
ClassKind parse_class_kind(const std::string& text);

struct ClassConstant {
    ClassKind kind = ClassKind::AP;
    double param = 0.0;  // p for AP, alpha for the fractional kinds
    double value = 0.0;
    std::string argmax_cube;
    CubeSet cube_set;
    int dim = 1;
};

nlohmann::ordered_json to_json(const ClassConstant& c);

// A cube of a cube set on a mesh, with its cells and exact volume.
struct CubeRef {
    CellBox box;
    double volume = 0.0;
    int grid = -1;  // index into the grid list, -1 for mesh-aligned
    std::size_t flat = 0;
};

// Cubes of a cube set in enumeration order: grids in shift order, coarse levels first;
// mesh-aligned cubes by side then position.
class CubeCatalog {
public:
    CubeCatalog(const Mesh& mesh, const CubeSet& cs);
    const Mesh& mesh() const { return mesh_; }
    const std::vector<CubeRef>& cubes() const { return cubes_; }
    const std::vector<kernels::GridTree>& trees() const { return trees_; }
    std::string descriptor(const CubeRef& r) const;

private:
    Mesh mesh_;
    std::vector<kernels::GridTree> trees_;
    std::vector<CubeRef> cubes_;
};

std::string box_descriptor(const CellBox& b);

ClassConstant muckenhoupt_constant(ClassKind kind, double p, const MeshField& omega, const CubeSet& cs,
                                   Exec exec = Exec::Parallel);
ClassConstant pair_class_constant(ClassKind kind, double alpha, const WeightSystem& ws, const MeshField& omega,
                                  const GrowthFunction& psi, const CubeSet& cs, Exec exec = Exec::Parallel);
ClassConstant w_class_constant(const WeightSystem& ws, const GrowthFunction& psi, const CubeSet& cs,
                               Exec exec = Exec::Parallel);

struct ReverseHolderReport {
    double upper = 0.0;
    double lower = 0.0;
    std::string upper_cube;
    std::string lower_cube;
};

// Phi(prod Phi_i^{-1}(1 / sigma_i(Q))) * nu(Q) over the cube set.
ReverseHolderReport reverse_holder_check(const WeightSystem& ws, const CubeSet& cs);

}  // namespace olab
