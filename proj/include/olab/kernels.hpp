#pragma once

#include <cstdint>
#include <vector>

#include "olab/dyadic.hpp"

namespace olab::kernels {

enum class Exec { Serial, Parallel };

// What a cube contributes, given its channel integrals and volume.
//   ProductAverage: |Q|^{alpha/d} * prod_i I[i] / D_i, with D_i = |Q| when unit_den, else I[n + i].
//   LogAverage:     0 if I[1] > 0 (a zero cell), else exp(I[0] / |Q|).
struct Functional {
    enum class Type { ProductAverage, LogAverage };
    Type type = Type::ProductAverage;
    int n = 1;
    bool unit_den = true;
    double alpha = 0.0;
    int dim = 1;

    int channels() const;
    double value(const double* integrals, double volume) const;
};

struct Channels {
    Mesh mesh;
    std::vector<std::vector<double>> data;
};

// Prefix sums over cell boxes, stored as double-double pairs.
class BoxSums {
public:
    BoxSums(const Mesh& mesh, const std::vector<std::vector<double>>& data);
    double sum(int channel, const CellBox& box) const;
    int channels() const { return channels_; }

private:
    Mesh mesh_;
    int channels_;
    std::int64_t stride_[kMaxDim]{};
    std::vector<std::vector<double>> sat_;
};

struct TreeLevel {
    int k = 0;
    std::int64_t side = 1;  // in cells
    IVec first_cell{};
    IVec first_index{};
    IVec count{};
    std::size_t offset = 0;
    std::size_t size = 0;
};

// The cubes of one grid that lie inside the window and are unions of mesh cells, finest level first.
class GridTree {
public:
    GridTree(const Mesh& mesh, const Shift& beta);

    const Mesh& mesh() const { return mesh_; }
    const Shift& beta() const { return beta_; }
    std::size_t size() const { return total_; }
    const std::vector<TreeLevel>& levels() const { return levels_; }
    std::int64_t parent(std::size_t flat) const { return parent_[flat]; }
    std::size_t level_of(std::size_t flat) const;
    DyadicCube cube(std::size_t flat) const;
    CellBox box(std::size_t flat) const;
    double volume(std::size_t flat) const;

    // Bottom-up channel integrals, flat index major: out[flat * C + c].
    std::vector<double> integrals(const Channels& ch, Exec exec) const;
    std::vector<double> values(const Functional& fn, const Channels& ch, Exec exec) const;
    // Max over strict ancestors (-inf style 0 for roots).
    std::vector<double> ancestor_max(const std::vector<double>& vals) const;
    // Per cell: max of vals over cubes containing the cell; 0 where no cube covers it.
    std::vector<double> pointwise_max(const std::vector<double>& vals, Exec exec) const;
    std::vector<std::uint8_t> covered_cells() const;
    // Local index range of cubes at a level meeting the box, per axis half-open.
    bool range_meeting(std::size_t level, const CellBox& b, IVec& lo, IVec& hi) const;
    std::size_t flat_index(std::size_t level, const IVec& local) const;

private:
    Mesh mesh_;
    Shift beta_;
    std::vector<TreeLevel> levels_;
    std::vector<std::int64_t> parent_;
    std::size_t total_ = 0;
};

std::vector<double> dyadic_maximal(const Functional& fn, const Channels& ch, const Shift& beta, Exec exec);
// Every cube aligned to the mesh and inside the window.
std::vector<double> exhaustive_maximal(const Functional& fn, const Channels& ch, Exec exec);

// One axis of a row-major array: out[x] = max of in[p] over p in [x - back, x + fwd] within the input,
// 0 where that range is empty. Updates shape[axis] to out_len.
void sliding_max_axis(const std::vector<double>& in, std::vector<std::int64_t>& shape, int axis,
                      std::int64_t out_len, std::int64_t back, std::int64_t fwd, std::vector<double>& out);

// Brute-force references: each cell scans every admissible cube and sums cells directly.
std::vector<double> reference_dyadic_maximal(const Functional& fn, const Channels& ch, const Shift& beta);
std::vector<double> reference_exhaustive_maximal(const Functional& fn, const Channels& ch);

// Visits every mesh-aligned cube inside the window as a CellBox, side-major then position.
template <class F>
void for_each_aligned_cube(const Mesh& m, F&& f) {
    const int d = m.dim();
    const std::int64_t n = m.per_side();
    for (std::int64_t s = 1; s <= n; ++s) {
        CellBox b;
        b.dim = d;
        IVec p{};
        while (true) {
            for (int a = 0; a < d; ++a) {
                b.lo[a] = p[a];
                b.hi[a] = p[a] + s;
            }
            f(b);
            int a = d - 1;
            while (a >= 0) {
                if (++p[a] <= n - s) break;
                p[a] = 0;
                --a;
            }
            if (a < 0) break;
        }
    }
}

}  // namespace olab::kernels
