#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace olab {

constexpr int kMaxDim = 3;
using IVec = std::array<std::int64_t, kMaxDim>;
// Per-axis shift: 0 means beta_i = 0, 1 means beta_i = 1/3.
using Shift = std::array<std::uint8_t, kMaxDim>;

// The cube 2^level([0,1)^d + origin).
struct Window {
    int dim = 1;
    int level = 0;
    IVec origin{};

    static Window unit(int dim);
    double side() const;
    double lower(int axis) const;
    bool operator==(const Window& o) const = default;
};

struct DyadicCube {
    int dim = 1;
    Shift shift{};
    int level = 0;
    IVec index{};

    // Per-axis offset (-1)^level * shift in thirds: one of -1, 0, 1.
    int offset_thirds(int axis) const;
    // Lower corner divided by 2^level/3, an exact integer: 3m + offset.
    std::int64_t scaled_lower(int axis) const;
    double lower(int axis) const;
    double upper(int axis) const;
    double side() const;
    double volume() const;
    DyadicCube parent() const;

    bool operator==(const DyadicCube& o) const = default;
    bool operator<(const DyadicCube& o) const;
};

std::vector<Shift> all_shifts(int dim);
Shift zero_shift();
bool is_zero(const Shift& s, int dim);

// Geometric containment and intersection, exact, across any grids.
bool contains(const DyadicCube& outer, const DyadicCube& inner);
bool intersects(const DyadicCube& a, const DyadicCube& b);
bool inside_window(const DyadicCube& q, const Window& w);

// Level descending, index lexicographic.
std::vector<DyadicCube> enumerate_cubes(const Window& w, const Shift& beta, int min_level, int max_level);

struct AxisCube {
    int dim = 1;
    std::array<double, kMaxDim> lower{};
    double side = 1.0;
};

struct Cover {
    Shift beta{};
    DyadicCube cube;
};

Cover cover_cube(const AxisCube& q);
bool covers(const DyadicCube& r, const AxisCube& q);

std::string to_descriptor(const DyadicCube& q);
DyadicCube parse_cube(const std::string& text);
std::string shift_descriptor(const Shift& s, int dim);

// A mesh over a window. subdiv = 1: 2^L cells per side. subdiv = 3: the tick lattice
// with 3 * 2^L cells per side, on which every shifted-grid cube is a union of cells.
struct Mesh {
    Window window;
    int level = 0;
    int subdiv = 1;

    int dim() const { return window.dim; }
    std::int64_t per_side() const { return static_cast<std::int64_t>(subdiv) << level; }
    std::size_t cell_count() const;
    double cell_side() const;
    double cell_volume() const;
    // Absolute level of the finest dyadic cubes representable.
    int finest_level() const { return window.level - level; }
    Mesh with_subdiv(int s) const;
    bool supports(const Shift& beta) const;
    std::array<double, kMaxDim> cell_center(std::size_t cell) const;
    std::string descriptor() const;
    bool operator==(const Mesh& o) const = default;
};

// Half-open box of mesh cells.
struct CellBox {
    int dim = 1;
    IVec lo{};
    IVec hi{};

    std::int64_t cells() const;
    std::int64_t extent(int axis) const { return hi[axis] - lo[axis]; }
    bool contains(const CellBox& o) const;
    bool contains_cell(const IVec& c) const;
    CellBox intersect(const CellBox& o) const;
    bool empty() const;
};

IVec cell_coords(const Mesh& m, std::size_t cell);
std::size_t cell_index(const Mesh& m, const IVec& c);
CellBox full_box(const Mesh& m);

// Cells of the mesh making up q; nullopt if q is not a union of cells or leaves the window.
std::optional<CellBox> try_cube_box(const Mesh& m, const DyadicCube& q);
// Throws ResolutionError when q is finer than the mesh or off the mesh lattice, UsageError when outside.
CellBox cube_box(const Mesh& m, const DyadicCube& q);

template <class F>
void for_each_cell(const Mesh& m, const CellBox& b, F&& f) {
    const int d = m.dim();
    const std::int64_t n = m.per_side();
    if (b.empty()) return;
    IVec c = b.lo;
    while (true) {
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(c[a]);
        f(idx, c);
        int a = d - 1;
        while (a >= 0) {
            if (++c[a] < b.hi[a]) break;
            c[a] = b.lo[a];
            --a;
        }
        if (a < 0) break;
    }
}

struct SparseEntry {
    DyadicCube cube;
    int k = 0;
    CellBox box;
    // E_Q as a mask over all mesh cells.
    std::vector<std::uint8_t> e_mask;
    std::int64_t e_cells() const;
};

struct SparseFamily {
    Mesh mesh;
    Shift beta{};
    double base = 2.0;
    std::vector<SparseEntry> entries;
    double packing = 0.0;
};

struct SparseValidation {
    bool level_disjoint = true;
    bool nested = true;
    bool packing_ok = true;
    bool e_disjoint = true;
    bool e_contained = true;
    bool e_large = true;
    double packing = 0.0;
    std::string failure;

    bool ok() const { return level_disjoint && nested && packing_ok && e_disjoint && e_contained && e_large; }
};

SparseValidation validate_sparse(const SparseFamily& family);
// Fills box and e_mask = Q minus A_{k+1} for the given cubes and levels.
SparseFamily make_sparse_family(const Mesh& mesh, const Shift& beta, std::vector<std::pair<DyadicCube, int>> cubes);

void write_sparse(std::ostream& out, const SparseFamily& family);
SparseFamily read_sparse(std::istream& in);

std::string window_descriptor(const Window& w);
// Inverse of Mesh::descriptor.
Mesh parse_mesh(const std::string& text);
Window parse_window(const std::string& text);

}  // namespace olab
