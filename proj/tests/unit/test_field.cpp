#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "olab/errors.hpp"
#include "olab/field.hpp"

using namespace olab;

namespace {

Mesh mesh1(int L) { return Mesh{Window::unit(1), L, 1}; }

}  // namespace

TEST_CASE("generator examples") {
    auto f = make_weight(mesh1(3), gen::Constant{2.0});
    CHECK(f.size() == 8);
    for (double v : f.values) CHECK(v == 2.0);

    gen::Indicator ind;
    ind.hi[0] = 0.25;
    auto g = make_function(mesh1(2), ind);
    CHECK(g.values == std::vector<double>{1, 0, 0, 0});

    gen::PowerSingularity ps;
    ps.gamma = -0.5;
    auto h = make_weight(mesh1(10), ps);
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = (i + 0.5) / 1024.0;
        CHECK(h[i] == doctest::Approx(std::pow(std::max(x, 0.5 / 1024), -0.5)).epsilon(1e-14));
        if (i > 0) CHECK(h[i] < h[i - 1]);
        CHECK(std::isfinite(h[i]));
    }

    CHECK_THROWS_AS(make_weight(mesh1(3), gen::Constant{NAN}), UsageError);
}

TEST_CASE("weight floor") {
    gen::Indicator ind;
    ind.hi[0] = 0.5;
    const auto w = make_weight(mesh1(3), ind);
    for (std::size_t i = 0; i < 4; ++i) CHECK(w[i] == 1.0);
    for (std::size_t i = 4; i < 8; ++i) CHECK(w[i] == kWeightFloor);
}

TEST_CASE("lognormal is seeded and positive") {
    const auto a = make_weight(mesh1(8), gen::Lognormal{7, 1.0});
    const auto b = make_weight(mesh1(8), gen::Lognormal{7, 1.0});
    const auto c = make_weight(mesh1(8), gen::Lognormal{8, 1.0});
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    for (double v : a.values) CHECK(v > 0.0);
}

TEST_CASE("integrate examples") {
    const auto two = make_weight(mesh1(3), gen::Constant{2.0});
    CHECK(integrate(two, DyadicCube{1, {}, -1, {0, 0, 0}}) == 1.0);
    gen::Indicator ind;
    ind.hi[0] = 0.25;
    CHECK(integrate(make_function(mesh1(2), ind)) == 0.25);

    const auto ln = make_weight(mesh1(8), gen::Lognormal{7, 1.0});
    double naive = 0.0;
    for (double v : ln.values) naive += v / 256.0;
    CHECK(integrate(ln) == doctest::Approx(naive).epsilon(1e-13));

    CHECK_THROWS_AS(integrate(two, DyadicCube{1, {}, -5, {0, 0, 0}}), ResolutionError);
}

TEST_CASE("average examples") {
    const auto one = make_weight(mesh1(4), gen::Constant{1.0});
    const auto three = make_function(mesh1(4), gen::Constant{3.0});
    const auto ln = make_weight(mesh1(4), gen::Lognormal{2, 1.0});
    const DyadicCube q{1, {}, -2, {1, 0, 0}};
    CHECK(average(three, ln, q) == doctest::Approx(3.0).epsilon(1e-15));

    gen::Indicator quarter;
    quarter.hi[0] = 0.25;
    const auto chi = make_function(mesh1(4), quarter);
    const DyadicCube unit{1, {}, 0, {0, 0, 0}};
    CHECK(average(chi, one, unit) == 0.25);

    gen::Indicator half;
    half.hi[0] = 0.5;
    const auto sig = make_weight(mesh1(4), half);
    // (1/4) / (1/2 + 8 * 1e-12 / 16)
    const double want = 0.25 / (0.5 + 0.5 * 1e-12);
    CHECK(average(chi, sig, unit) == doctest::Approx(want).epsilon(1e-15));
    CHECK(average(chi, sig, unit) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("additivity over children") {
    for (int d = 1; d <= 2; ++d) {
        const Mesh m{Window::unit(d), d == 1 ? 8 : 5, 1};
        const auto f = make_function(m, gen::Lognormal{9, 1.5});
        for (const auto& q : enumerate_cubes(m.window, zero_shift(), -m.level + 1, 0)) {
            double kids = 0.0;
            for (const auto& c : enumerate_cubes(m.window, zero_shift(), q.level - 1, q.level - 1))
                if (contains(q, c)) kids += integrate(f, c);
            CHECK(integrate(f, q) == doctest::Approx(kids).epsilon(1e-12));
        }
    }
}

TEST_CASE("average is homogeneous") {
    const auto f = make_function(mesh1(6), gen::Lognormal{4, 1.0});
    const auto s = make_weight(mesh1(6), gen::Lognormal{5, 1.0});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-8, 8);
    for (int t = 0; t < 20; ++t) {
        const double c = std::exp2(std::round(u(rng)));
        for (const auto& q : enumerate_cubes(f.mesh.window, zero_shift(), -6, 0))
            CHECK(average(scaled(f, c), s, q) == std::abs(c) * average(f, s, q));
    }
}

TEST_CASE("refinement preserves integrals") {
    const auto f = make_function(mesh1(5), gen::Lognormal{4, 1.0});
    const auto r = refine(f);
    CHECK(r.mesh.subdiv == 3);
    CHECK(r.size() == 3 * f.size());
    CHECK(integrate(r) == doctest::Approx(integrate(f)).epsilon(1e-14));
    CHECK(refine(r).values == r.values);
}

TEST_CASE("csv round trip") {
    const auto f = make_weight(Mesh{Window::unit(2), 3, 1}, gen::Lognormal{4, 1.0});
    std::stringstream ss;
    write_field_csv(ss, f);
    const auto g = read_field_csv(ss);
    CHECK(g.mesh == f.mesh);
    CHECK(g.kind == f.kind);
    CHECK(g.values == f.values);

    std::stringstream bad("not a field\n1\n2\n");
    CHECK_THROWS_AS(read_field_csv(bad), UsageError);
}

TEST_CASE("generator descriptors") {
    const auto g = parse_generator("indicator:lo=0,hi=0.25", 1);
    const auto f = make_function(mesh1(2), g);
    CHECK(f.values == std::vector<double>{1, 0, 0, 0});
    CHECK(std::holds_alternative<gen::Lognormal>(parse_generator("lognormal:seed=7,roughness=1", 1)));
    CHECK_THROWS_AS(parse_generator("gaussian", 1), UsageError);
}

TEST_CASE("splitmix and uniform are fixed") {
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(unit_uniform(0) == 0.0);
    CHECK(unit_uniform(~0ULL) < 1.0);
}
