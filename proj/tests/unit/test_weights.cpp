#include <doctest.h>

#include <cmath>
#include <random>

#include "olab/errors.hpp"
#include "olab/weights.hpp"
#include "oracle.hpp"

using namespace olab;

namespace {

Mesh mesh1(int L) { return Mesh{Window::unit(1), L, 1}; }
MeshField constant(const Mesh& m, double c) { return make_weight(m, gen::Constant{c}); }
const GrowthFunction P1 = GrowthFunction::power(1);
const GrowthFunction P2 = GrowthFunction::power(2);

// sup over intervals [a, b) of the tick lattice of avg(w) * avg(w^{1-p'})^{p-1}, by running sums.
double brute_ap(const std::vector<double>& w, double p) {
    const double pp = p / (p - 1);
    double best = 0.0;
    for (std::size_t a = 0; a < w.size(); ++a) {
        long double s0 = 0, s1 = 0;
        for (std::size_t b = a; b < w.size(); ++b) {
            s0 += w[b];
            s1 += std::pow(w[b], 1 - pp);
            const double len = static_cast<double>(b - a + 1);
            best = std::max(best, static_cast<double>(s0 / len * std::pow(static_cast<double>(s1) / len, p - 1)));
        }
    }
    return best;
}

}  // namespace

TEST_CASE("nu_sigma examples") {
    const auto m = mesh1(6);
    std::mt19937_64 rng(2);
    const auto s1 = make_weight(m, gen::Lognormal{rng(), 1.0});
    const auto s2 = make_weight(m, gen::Lognormal{rng(), 1.0});
    auto nu = nu_sigma(WeightSystem::make({s1}, {GrowthFunction::entropy()}));
    CHECK(nu.values == s1.values);
    nu = nu_sigma(WeightSystem::make({s1, s2}, {P2, P2}));
    for (std::size_t c = 0; c < nu.size(); ++c)
        CHECK(nu[c] == doctest::Approx(std::sqrt(s1[c] * s2[c])).epsilon(1e-14));
    nu = nu_sigma(WeightSystem::make({constant(m, 1), constant(m, 1)}, {GrowthFunction::power_log(2, 1), P2}));
    for (double v : nu.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("nu_sigma closed form matches numeric inversion") {
    std::mt19937_64 rng(3);
    const auto m = mesh1(6);
    for (int t = 0; t < 10; ++t) {
        const auto ws = WeightSystem::make({make_weight(m, gen::Lognormal{rng(), 1.0}), make_weight(m, gen::Lognormal{rng(), 1.0})},
                                           {GrowthFunction::power(1.5 + t * 0.2), GrowthFunction::power(3.0)});
        const auto a = nu_sigma(ws), b = nu_sigma_generic(ws);
        for (std::size_t c = 0; c < a.size(); ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-8));
    }
}

TEST_CASE("muckenhoupt anchors") {
    for (int dim = 1; dim <= 2; ++dim) {
        const Mesh m{Window::unit(dim), dim == 1 ? 5 : 3, 1};
        const auto w = constant(m, 3.7);
        for (const auto& cs : {CubeSet::single(), CubeSet::all_grids(), CubeSet::all_mesh_aligned()}) {
            CHECK(muckenhoupt_constant(ClassKind::AP, 2.0, w, cs).value == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(muckenhoupt_constant(ClassKind::AP, 3.5, w, cs).value == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(muckenhoupt_constant(ClassKind::A1, 0, w, cs).value == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(muckenhoupt_constant(ClassKind::A_INF_EXP, 0, w, cs).value == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(muckenhoupt_constant(ClassKind::A_INF_FW, 0, w, cs).value == doctest::Approx(1.0).epsilon(1e-14));
        }
        const auto one = constant(m, 1.0);
        CHECK(muckenhoupt_constant(ClassKind::DOUBLING, 0, one, CubeSet::single()).value == std::exp2(dim));
        CHECK(muckenhoupt_constant(ClassKind::DOUBLING, 0, one, CubeSet::all_mesh_aligned()).value == std::exp2(dim));
    }
    CHECK_THROWS_AS(muckenhoupt_constant(ClassKind::AP, 1.0, constant(mesh1(3), 1), CubeSet::single()), UsageError);
    CHECK_THROWS_AS(muckenhoupt_constant(ClassKind::M, 0, constant(mesh1(3), 1), CubeSet::single()), UsageError);
}

TEST_CASE("A_p of a power singularity matches brute force") {
    gen::PowerSingularity ps;
    ps.gamma = 0.5;
    const auto w = make_weight(mesh1(10), ps);
    const auto c = muckenhoupt_constant(ClassKind::AP, 2.0, w, CubeSet::all_mesh_aligned());
    const auto ticks = refine(w).values;
    CHECK(c.value == doctest::Approx(brute_ap(ticks, 2.0)).epsilon(1e-10));
    CHECK(c.argmax_cube.rfind("cells=", 0) == 0);
}

TEST_CASE("single-weight constants match brute force on random weights") {
    std::mt19937_64 rng(4);
    const Mesh m = mesh1(5);
    for (int t = 0; t < 5; ++t) {
        const auto w = make_weight(m, gen::Lognormal{rng(), 1.5});
        const auto tk = refine(w).values;
        const auto boxes = oracle::aligned_boxes(1, 96);
        double a1 = 0, aexp = 0;
        for (const auto& b : boxes) {
            double mn = INFINITY, s = 0, ls = 0;
            for (std::int64_t x = b.lo[0]; x < b.lo[0] + b.side; ++x) {
                mn = std::min(mn, tk[x]);
                s += tk[x];
                ls += std::log(tk[x]);
            }
            a1 = std::max(a1, s / b.side / mn);
            aexp = std::max(aexp, s / b.side * std::exp(-ls / b.side));
        }
        const auto cs = CubeSet::all_mesh_aligned();
        CHECK(muckenhoupt_constant(ClassKind::A1, 0, w, cs).value == doctest::Approx(a1).epsilon(1e-12));
        CHECK(muckenhoupt_constant(ClassKind::A_INF_EXP, 0, w, cs).value == doctest::Approx(aexp).epsilon(1e-12));
        CHECK(muckenhoupt_constant(ClassKind::AP, 3.0, w, cs).value == doctest::Approx(brute_ap(tk, 3.0)).epsilon(1e-12));
    }
}

TEST_CASE("doubling on the standard grid") {
    std::mt19937_64 rng(5);
    const Mesh m = mesh1(6);
    const auto w = make_weight(m, gen::Lognormal{rng(), 1.0});
    double best = 1.0;
    for (const auto& q : enumerate_cubes(m.window, zero_shift(), -6, -1))
        best = std::max(best, integrate(w, q.parent()) / integrate(w, q));
    CHECK(muckenhoupt_constant(ClassKind::DOUBLING, 0, w, CubeSet::single()).value == doctest::Approx(best).epsilon(1e-13));
}

TEST_CASE("pair class anchors") {
    const Mesh m = mesh1(6);
    const auto one = constant(m, 1.0);
    auto c = pair_class_constant(ClassKind::M, 0, WeightSystem::make({one}, {P1}), one, P1, CubeSet::single());
    CHECK(c.value == 1.0);
    c = pair_class_constant(ClassKind::K, 0, WeightSystem::make({one, one}, {P2, P2}), one, P2, CubeSet::single());
    CHECK(c.value == doctest::Approx(64.0).epsilon(1e-14));
    c = pair_class_constant(ClassKind::A_ALPHA, 0, WeightSystem::make({one}, {P1}), one, P1, CubeSet::single());
    CHECK(c.value == 1.0);
    c = pair_class_constant(ClassKind::A_TILDE_ALPHA, 0, WeightSystem::make({one}, {P2}), one, P2, CubeSet::single());
    CHECK(std::isfinite(c.value));
    CHECK_THROWS_AS(pair_class_constant(ClassKind::A_ALPHA, 1.0, WeightSystem::make({one}, {P1}), one, P1, CubeSet::single()),
                    UsageError);
}

TEST_CASE("B_alpha equals A_alpha for unit weights") {
    const Mesh m = mesh1(5);
    const auto one = constant(m, 1.0);
    std::mt19937_64 rng(6);
    const auto omega = make_weight(m, gen::Lognormal{rng(), 1.0});
    for (double alpha : {0.0, 0.5, 1.5}) {
        const auto ws = WeightSystem::make({one, one}, {P2, GrowthFunction::power(3)});
        const auto a = pair_class_constant(ClassKind::A_ALPHA, alpha, ws, omega, P2, CubeSet::single());
        const auto b = pair_class_constant(ClassKind::B_ALPHA, alpha, ws, omega, P2, CubeSet::single());
        CHECK(b.value == doctest::Approx(a.value).epsilon(1e-13));
    }
}

TEST_CASE("A_alpha <= B_alpha, and A_alpha against S_alpha") {
    std::mt19937_64 rng(7);
    const Mesh m = mesh1(5);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const auto ws = WeightSystem::make({make_weight(m, gen::Lognormal{rng(), 1.0}), make_weight(m, gen::Lognormal{rng(), 1.0})},
                                           {P2, GrowthFunction::power_log(2, 1)});
        const auto omega = make_weight(m, gen::Lognormal{rng(), 1.0});
        const auto psi = GrowthFunction::power(1.5);
        const double alpha = 0.5 * (t % 3);
        const auto a = pair_class_constant(ClassKind::A_ALPHA, alpha, ws, omega, psi, CubeSet::single());
        const auto b = pair_class_constant(ClassKind::B_ALPHA, alpha, ws, omega, psi, CubeSet::single());
        const auto s = pair_class_constant(ClassKind::S_ALPHA, alpha, ws, omega, psi, CubeSet::single());
        CHECK(a.value <= b.value * (1 + 1e-12));
        REQUIRE(s.value > 0.0);
        worst = std::max(worst, a.value / s.value);
    }
    MESSAGE("max A_alpha / S_alpha = " << worst);
    CHECK(std::isfinite(worst));
}

TEST_CASE("W class") {
    const Mesh m = mesh1(4);
    auto c = w_class_constant(WeightSystem::make({constant(m, 1.0)}, {P1}), P1, CubeSet::single());
    CHECK(c.value == doctest::Approx(1.0).epsilon(1e-14));
    const auto a = w_class_constant(WeightSystem::make({constant(m, 1.0), constant(m, 1.0)}, {P2, P2}), P2, CubeSet::single());
    const auto b = w_class_constant(WeightSystem::make({constant(m, 7.0), constant(m, 7.0)}, {P2, P2}), P2, CubeSet::single());
    CHECK(b.value == doctest::Approx(a.value).epsilon(1e-12));
}

TEST_CASE("W class matches oracle") {
    const Mesh m = mesh1(4);
    const auto sigma = make_weight(m, gen::Lognormal{3, 1.0});
    const auto c = w_class_constant(WeightSystem::make({sigma}, {P1}), P1, CubeSet::single());
    const auto tk = refine(sigma).values;
    const std::int64_t n = 48;
    std::vector<oracle::Box> grids;
    for (int b = 0; b <= 1; ++b) {
        const int beta[3]{b, 0, 0};
        const auto g = oracle::grid_boxes(1, 4, 3, beta);
        grids.insert(grids.end(), g.begin(), g.end());
    }
    const int zero[3]{};
    double best = 0.0;
    for (const auto& q : oracle::grid_boxes(1, 4, 3, zero)) {
        std::vector<double> trunc(n, 0.0);
        for (std::int64_t x = q.lo[0]; x < q.lo[0] + q.side; ++x) trunc[x] = tk[x];
        const auto M = oracle::pointwise(1, n, grids, oracle::fractional({trunc}, 0.0, 1, n));
        double integral = 0.0, mass = 0.0;
        for (std::int64_t x = q.lo[0]; x < q.lo[0] + q.side; ++x) {
            integral += M[x] / n;
            mass += tk[x] / n;
        }
        best = std::max(best, integral / mass);
    }
    CHECK(c.value == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("constants grow with the cube set") {
    std::mt19937_64 rng(8);
    const Mesh m = mesh1(4);
    const auto s1 = make_weight(m, gen::Lognormal{rng(), 1.0});
    const auto s2 = make_weight(m, gen::Lognormal{rng(), 1.0});
    const auto omega = make_weight(m, gen::Lognormal{rng(), 1.0});
    const auto ws = WeightSystem::make({s1, s2}, {P2, GrowthFunction::power(3)});
    for (ClassKind k : {ClassKind::M, ClassKind::K, ClassKind::A_ALPHA, ClassKind::B_ALPHA, ClassKind::A_TILDE_ALPHA}) {
        const double a = pair_class_constant(k, 0.5, ws, omega, P2, CubeSet::single()).value;
        const double b = pair_class_constant(k, 0.5, ws, omega, P2, CubeSet::all_grids()).value;
        const double c = pair_class_constant(k, 0.5, ws, omega, P2, CubeSet::all_mesh_aligned()).value;
        CHECK(a <= b * (1 + 1e-12));
        CHECK(b <= c * (1 + 1e-12));
    }
    for (ClassKind k : {ClassKind::AP, ClassKind::A1, ClassKind::A_INF_EXP, ClassKind::A_INF_FW}) {
        const double a = muckenhoupt_constant(k, 2.0, omega, CubeSet::single()).value;
        const double b = muckenhoupt_constant(k, 2.0, omega, CubeSet::all_grids()).value;
        const double c = muckenhoupt_constant(k, 2.0, omega, CubeSet::all_mesh_aligned()).value;
        CHECK(a <= b * (1 + 1e-12));
        CHECK(b <= c * (1 + 1e-12));
    }
}

TEST_CASE("serial and parallel constants agree") {
    std::mt19937_64 rng(9);
    const Mesh m = mesh1(5);
    const auto omega = make_weight(m, gen::Lognormal{rng(), 1.0});
    const auto ws = WeightSystem::make({make_weight(m, gen::Lognormal{rng(), 1.0})}, {P2});
    for (const auto& cs : {CubeSet::single(), CubeSet::all_mesh_aligned()}) {
        const auto a = pair_class_constant(ClassKind::S_ALPHA, 0.5, ws, omega, P2, cs, Exec::Serial);
        const auto b = pair_class_constant(ClassKind::S_ALPHA, 0.5, ws, omega, P2, cs, Exec::Parallel);
        CHECK(a.value == b.value);
        CHECK(a.argmax_cube == b.argmax_cube);
    }
}

TEST_CASE("reverse Hoelder") {
    std::mt19937_64 rng(10);
    const Mesh m = mesh1(6);
    const auto s = make_weight(m, gen::Lognormal{rng(), 1.0});
    auto rep = reverse_holder_check(WeightSystem::make({s}, {GrowthFunction::power_log(2, 1)}), CubeSet::single());
    CHECK(rep.upper == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.lower == doctest::Approx(1.0).epsilon(1e-9));
    for (int t = 0; t < 10; ++t) {
        const auto a = make_weight(m, gen::Lognormal{rng(), 1.0});
        const auto b = make_weight(m, gen::Lognormal{rng(), 1.0});
        rep = reverse_holder_check(WeightSystem::make({a, b}, {P2, GrowthFunction::power(3)}), CubeSet::all_mesh_aligned());
        CHECK(rep.upper <= 1 + 1e-9);
        rep = reverse_holder_check(WeightSystem::make({a, a}, {P2, GrowthFunction::power(3)}), CubeSet::all_grids());
        CHECK(rep.upper <= 1 + 1e-9);
    }
}

TEST_CASE("reverse Hoelder lower bound for A1 weights") {
    const Mesh m = mesh1(6);
    double worst = INFINITY;
    for (double g1 : {-0.1, -0.3})
        for (double g2 : {-0.05, -0.2}) {
            gen::PowerSingularity a, b;
            a.gamma = g1;
            b.gamma = g2;
            b.center[0] = 0.6;
            const auto s1 = make_weight(m, a), s2 = make_weight(m, b);
            const auto rep = reverse_holder_check(WeightSystem::make({s1, s2}, {P2, P2}), CubeSet::single());
            const double sum_a1 = muckenhoupt_constant(ClassKind::A1, 0, s1, CubeSet::single()).value +
                                  muckenhoupt_constant(ClassKind::A1, 0, s2, CubeSet::single()).value;
            worst = std::min(worst, rep.lower * sum_a1);
        }
    MESSAGE("measured c in lower >= c / sum [sigma_i]_A1: " << worst);
    CHECK(worst > 0.0);
}

TEST_CASE("class constant json") {
    const auto c = muckenhoupt_constant(ClassKind::AP, 2.0, constant(mesh1(3), 1.0), CubeSet::single());
    const auto j = to_json(c);
    CHECK(j.dump() == R"({"kind":"AP","params":{"p":2.0,"cube_set":"single:0"},"value":1.0,"argmax_cube":"beta=0;k=0;m=0"})");
    CHECK(parse_class_kind("a-tilde-alpha") == ClassKind::A_TILDE_ALPHA);
    CHECK_THROWS_AS(parse_class_kind("A3"), UsageError);
}
