#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "olab/dyadic.hpp"
#include "olab/field.hpp"
#include "olab/growth.hpp"

namespace olab {

// lambda_Q on one grid D^beta over a mesh.
struct CarlesonSequence {
    Mesh mesh;
    Shift beta{};
    std::vector<std::pair<DyadicCube, double>> entries;
};

struct CarlesonConstant {
    double value = 0.0;
    std::string argmax_cube;
};

// sup over grid cubes R of theta(1 / nu(R)) * sum_{Q in R} lambda_Q
CarlesonConstant carleson_constant(const CarlesonSequence& seq, const MeshField& nu, const GrowthFunction& theta);

// sum_Q lambda_Q psi(prod_i m_{sigma_i}(f_i / |f_i|, Q)), norms in L^{Phi_i}(sigma_i)
double embedding_sum(const CarlesonSequence& seq, const GrowthFunction& psi, const std::vector<MeshField>& sigmas,
                     const std::vector<MeshField>& fs, const std::vector<GrowthFunction>& phis);

struct LevelsetSums {
    double left = 0.0;   // sum over maximal level cubes R of 1 / theta(1 / nu(R))
    double right = 0.0;  // Phi(lambda) / Psi(lambda) * nu(E_lambda)
    std::size_t cubes = 0;
};

LevelsetSums levelset_sum(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                          const std::vector<GrowthFunction>& phis, const GrowthFunction& phi,
                          const GrowthFunction& psi, double lambda, const Shift& beta);

struct SparsePayload {
    enum class Kind { LebesgueE, WeightE, PsiWeighted };
    Kind kind = Kind::LebesgueE;
    MeshField omega;
    // PsiWeighted: lambda_Q = omega(E_Q) * psi(m_sigma(g, Q))
    GrowthFunction psi;
    MeshField sigma;
    MeshField g;

    static SparsePayload lebesgue() { return {}; }
    static SparsePayload weight(MeshField omega);
    static SparsePayload psi_weighted(MeshField omega, GrowthFunction psi, MeshField sigma, MeshField g);
};

CarlesonSequence sequence_from_sparse(const SparseFamily& family, const SparsePayload& payload);

// Header "# sequence <mesh>;beta=..", then one `cube-descriptor,value` line per cube.
void write_sequence(std::ostream& out, const CarlesonSequence& seq);
CarlesonSequence read_sequence(std::istream& in);

}  // namespace olab
