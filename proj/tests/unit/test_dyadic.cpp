#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "olab/dyadic.hpp"
#include "olab/errors.hpp"

using namespace olab;

namespace {

Shift third(int dim) {
    Shift s{};
    for (int a = 0; a < dim; ++a) s[a] = 1;
    return s;
}

// Realized interval of a 1-d cube from the textbook formula.
std::pair<double, double> realize_1d(int k, std::int64_t m, double beta) {
    const double side = std::ldexp(1.0, k);
    const double off = (k % 2 == 0 ? 1.0 : -1.0) * beta;
    return {side * (m + off), side * (m + 1 + off)};
}

}  // namespace

TEST_CASE("enumerate standard grid") {
    const auto w = Window::unit(1);
    const auto cubes = enumerate_cubes(w, zero_shift(), -2, 0);
    REQUIRE(cubes.size() == 7);
    CHECK(cubes[0].level == 0);
    CHECK(cubes[1].level == -1);
    CHECK(cubes[1].index[0] == 0);
    CHECK(cubes[2].index[0] == 1);
    for (int i = 3; i < 7; ++i) CHECK(cubes[i].level == -2);
    CHECK(enumerate_cubes(Window::unit(2), zero_shift(), -1, -1).size() == 4);
    CHECK_THROWS_AS(enumerate_cubes(w, zero_shift(), 0, -1), UsageError);
}

TEST_CASE("enumerate shifted grid matches membership oracle") {
    const auto cubes = enumerate_cubes(Window::unit(1), third(1), -1, -1);
    std::vector<std::pair<double, double>> want;
    for (std::int64_t m = -4; m <= 4; ++m) {
        const auto [lo, hi] = realize_1d(-1, m, 1.0 / 3.0);
        if (lo >= -1e-15 && hi <= 1 + 1e-15) want.emplace_back(lo, hi);
    }
    REQUIRE(cubes.size() == want.size());
    REQUIRE(cubes.size() == 1);
    CHECK(cubes[0].lower(0) == doctest::Approx(1.0 / 3.0));
    CHECK(cubes[0].upper(0) == doctest::Approx(5.0 / 6.0));
    CHECK(cubes[0].lower(0) == doctest::Approx(want[0].first));
}

TEST_CASE("realization matches the alternating shift formula") {
    for (int k = -5; k <= 3; ++k)
        for (std::int64_t m = -6; m <= 6; ++m) {
            DyadicCube q;
            q.shift = third(1);
            q.level = k;
            q.index[0] = m;
            const auto [lo, hi] = realize_1d(k, m, 1.0 / 3.0);
            CHECK(q.lower(0) == doctest::Approx(lo).epsilon(1e-14));
            CHECK(q.upper(0) == doctest::Approx(hi).epsilon(1e-14));
            CHECK(q.volume() == std::ldexp(1.0, k));
        }
}

TEST_CASE("parent contains child on every grid") {
    for (const auto& beta : all_shifts(2))
        for (int k = -4; k <= 2; ++k)
            for (std::int64_t i = -3; i <= 3; ++i)
                for (std::int64_t j = -3; j <= 3; ++j) {
                    DyadicCube q{2, beta, k, {i, j, 0}};
                    const auto p = q.parent();
                    CHECK(p.level == k + 1);
                    CHECK(contains(p, q));
                }
}

TEST_CASE("lattice property on random pairs") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> lev(-6, 0);
    for (const auto& beta : all_shifts(2)) {
        for (int t = 0; t < 1000; ++t) {
            DyadicCube a{2, beta, lev(rng), {}}, b{2, beta, lev(rng), {}};
            for (int ax = 0; ax < 2; ++ax) {
                a.index[ax] = std::uniform_int_distribution<std::int64_t>(-2, (1 << -a.level) + 1)(rng);
                b.index[ax] = std::uniform_int_distribution<std::int64_t>(-2, (1 << -b.level) + 1)(rng);
            }
            // Intervals per axis, compared geometrically in thirds of the finer side.
            bool overlap = true, a_in_b = true, b_in_a = true;
            for (int ax = 0; ax < 2; ++ax) {
                const double al = a.lower(ax), ah = a.upper(ax), bl = b.lower(ax), bh = b.upper(ax);
                overlap = overlap && std::max(al, bl) < std::min(ah, bh);
                a_in_b = a_in_b && bl <= al && ah <= bh;
                b_in_a = b_in_a && al <= bl && bh <= ah;
            }
            CHECK(overlap == intersects(a, b));
            if (overlap) CHECK((a_in_b || b_in_a));
        }
    }
}

TEST_CASE("levels partition the window") {
    for (int d = 1; d <= 2; ++d) {
        const auto w = Window::unit(d);
        const Mesh mesh{w, 4, 1};
        for (int k = -4; k <= 0; ++k) {
            std::vector<int> hits(mesh.cell_count(), 0);
            for (const auto& q : enumerate_cubes(w, zero_shift(), k, k))
                for_each_cell(mesh, cube_box(mesh, q), [&](std::size_t idx, const IVec&) { ++hits[idx]; });
            for (int h : hits) CHECK(h == 1);
        }
    }
}

TEST_CASE("shifted grid cubes tile the window where they fit") {
    const auto w = Window::unit(1);
    const Mesh mesh{w, 4, 3};
    for (int k = -4; k <= -1; ++k) {
        std::vector<int> hits(mesh.cell_count(), 0);
        for (const auto& q : enumerate_cubes(w, third(1), k, k))
            for_each_cell(mesh, cube_box(mesh, q), [&](std::size_t idx, const IVec&) { ++hits[idx]; });
        for (int h : hits) CHECK(h <= 1);
    }
}

TEST_CASE("cover_cube examples and random property") {
    AxisCube q;
    q.dim = 1;
    q.lower[0] = 0.0;
    q.side = 0.5;
    auto c = cover_cube(q);
    CHECK(covers(c.cube, q));
    CHECK(c.cube.side() <= 3.0);

    q.lower[0] = 0.4;
    c = cover_cube(q);
    CHECK(c.cube.lower(0) <= 0.4);
    CHECK(c.cube.upper(0) >= 0.9);
    CHECK(c.cube.side() <= 3.0);

    AxisCube q2;
    q2.dim = 2;
    q2.lower = {0.49, 0.49, 0};
    q2.side = 0.02;
    c = cover_cube(q2);
    for (int a = 0; a < 2; ++a) {
        CHECK(c.cube.lower(a) <= 0.49);
        CHECK(c.cube.upper(a) >= 0.51);
    }
    CHECK(c.cube.side() <= 0.12);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0), e(-8.0, 0.0);
    for (int d = 1; d <= 2; ++d)
        for (int t = 0; t < 1000; ++t) {
            AxisCube r;
            r.dim = d;
            r.side = std::exp2(e(rng));
            for (int a = 0; a < d; ++a) r.lower[a] = u(rng);
            const auto cv = cover_cube(r);
            for (int a = 0; a < d; ++a) {
                CHECK(cv.cube.lower(a) <= r.lower[a]);
                CHECK(cv.cube.upper(a) >= r.lower[a] + r.side);
            }
            CHECK(cv.cube.side() <= 6 * r.side);
        }
}

TEST_CASE("cube descriptor round trip") {
    DyadicCube q{2, {1, 0, 0}, -3, {5, -2, 0}};
    const auto text = to_descriptor(q);
    CHECK(text == "beta=1/3,0;k=-3;m=5,-2");
    CHECK(parse_cube(text) == q);
    CHECK_THROWS_AS(parse_cube("beta=1/2;k=0;m=0"), UsageError);
}

TEST_CASE("mesh descriptor round trip") {
    const Mesh m{Window::unit(2), 5, 3};
    CHECK(parse_mesh(m.descriptor()) == m);
    CHECK_THROWS_AS(parse_mesh("L=5"), UsageError);
}

TEST_CASE("cube boxes on meshes") {
    const Mesh m{Window::unit(1), 3, 1};
    DyadicCube q{1, {}, -1, {1, 0, 0}};
    const auto b = cube_box(m, q);
    CHECK(b.lo[0] == 4);
    CHECK(b.hi[0] == 8);
    DyadicCube fine{1, {}, -4, {0, 0, 0}};
    CHECK_THROWS_AS(cube_box(m, fine), ResolutionError);
    DyadicCube outside{1, {}, -1, {2, 0, 0}};
    CHECK_THROWS_AS(cube_box(m, outside), UsageError);
    DyadicCube shifted{1, {1, 0, 0}, -1, {1, 0, 0}};
    CHECK_THROWS_AS(cube_box(m, shifted), ResolutionError);
    const auto tb = cube_box(m.with_subdiv(3), shifted);
    CHECK(tb.lo[0] == 8);
    CHECK(tb.hi[0] == 20);
}

namespace {

SparseFamily two_cube_family() {
    const Mesh mesh{Window::unit(1), 10, 1};
    return make_sparse_family(mesh, zero_shift(),
                              {{DyadicCube{1, {}, -1, {0, 0, 0}}, 0}, {DyadicCube{1, {}, -2, {0, 0, 0}}, 1}});
}

}  // namespace

TEST_CASE("validate_sparse examples") {
    auto fam = two_cube_family();
    REQUIRE(fam.entries.size() == 2);
    CHECK(fam.entries[0].e_cells() == 256);
    CHECK(fam.entries[1].e_cells() == 256);
    // E_[0,1/2) = [1/4,1/2)
    CHECK(fam.entries[0].e_mask[255] == 0);
    CHECK(fam.entries[0].e_mask[256] == 1);
    auto v = validate_sparse(fam);
    CHECK(v.ok());
    CHECK(v.packing == 0.5);

    SparseFamily empty;
    empty.mesh = fam.mesh;
    v = validate_sparse(empty);
    CHECK(v.ok());
    CHECK(v.packing == 0.0);

    const Mesh mesh{Window::unit(1), 4, 1};
    auto bad = make_sparse_family(mesh, zero_shift(),
                                  {{DyadicCube{1, {}, -1, {0, 0, 0}}, 0}, {DyadicCube{1, {}, -1, {0, 0, 0}}, 0}});
    v = validate_sparse(bad);
    CHECK_FALSE(v.level_disjoint);
    CHECK_FALSE(v.ok());
}

TEST_CASE("validate_sparse packing failure") {
    const Mesh mesh{Window::unit(1), 4, 1};
    auto fam = make_sparse_family(mesh, zero_shift(),
                                  {{DyadicCube{1, {}, 0, {0, 0, 0}}, 0},
                                   {DyadicCube{1, {}, -2, {0, 0, 0}}, 1},
                                   {DyadicCube{1, {}, -2, {1, 0, 0}}, 1},
                                   {DyadicCube{1, {}, -2, {2, 0, 0}}, 1}});
    const auto v = validate_sparse(fam);
    CHECK_FALSE(v.packing_ok);
    CHECK(v.packing == 0.75);
    CHECK_FALSE(v.e_large);
}

TEST_CASE("sparse text round trip") {
    const auto fam = two_cube_family();
    std::stringstream ss;
    write_sparse(ss, fam);
    const auto back = read_sparse(ss);
    REQUIRE(back.entries.size() == fam.entries.size());
    for (std::size_t i = 0; i < fam.entries.size(); ++i) {
        CHECK(back.entries[i].cube == fam.entries[i].cube);
        CHECK(back.entries[i].k == fam.entries[i].k);
        CHECK(back.entries[i].e_mask == fam.entries[i].e_mask);
    }
    CHECK(validate_sparse(back).ok());
}
