// One line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "olab/carleson.hpp"
#include "olab/dyadic.hpp"
#include "olab/field.hpp"
#include "olab/growth.hpp"
#include "olab/harness.hpp"
#include "olab/maximal.hpp"
#include "olab/orlicz.hpp"
#include "olab/weights.hpp"

using namespace olab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.pass && secs < limit;
    if (!ok) ++failures;
    std::printf("criterion %2d %s  %s: %s [%.2f s, limit %.0f s]\n", id, ok ? "PASS" : "FAIL", name, o.detail.c_str(), secs,
                limit);
    std::fflush(stdout);
}

class Rng {
public:
    explicit Rng(std::uint64_t s) : eng_(s) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_uniform(eng_()); }
    int below(int n) { return std::min(n - 1, static_cast<int>(unit_uniform(eng_()) * n)); }
    std::uint64_t bits() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

std::string sci(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", x);
    return b;
}

Mesh mesh_for(int dim) { return Mesh{Window::unit(dim), dim == 1 ? 8 : 5, 1}; }

MeshField lognormal_weight(const Mesh& m, Rng& r, double rough = 1.0) { return make_weight(m, gen::Lognormal{r.bits(), rough}); }
MeshField lognormal_function(const Mesh& m, Rng& r, double rough = 1.5) { return make_function(m, gen::Lognormal{r.bits(), rough}); }

DyadicCube random_grid_cube(const Mesh& m, Rng& r) {
    const int k = m.window.level - r.below(m.level + 1);
    DyadicCube q;
    q.dim = m.dim();
    q.level = k;
    const std::int64_t per = std::int64_t{1} << (m.window.level - k);
    for (int a = 0; a < q.dim; ++a) q.index[a] = r.below(static_cast<int>(per));
    return q;
}

// Independent: lower corner 2^k (m + (-1)^k beta / 3) per axis.
double corner(const DyadicCube& q, int a) {
    const double sign = (q.level % 2 == 0) ? 1.0 : -1.0;
    return std::ldexp(static_cast<double>(q.index[a]) + sign * q.shift[a] / 3.0, q.level);
}

// Brute-force dyadic maximal of f with respect to sigma on a unit-window 1-d mesh of 2^L cells.
std::vector<double> brute_dyadic_maximal(const std::vector<double>& f, const std::vector<double>& s, int L) {
    const std::size_t n = f.size();
    std::vector<double> out(n, 0.0);
    for (int j = 0; j <= L; ++j) {
        const std::size_t side = n >> j;
        for (std::size_t lo = 0; lo < n; lo += side) {
            double fs = 0.0, ss = 0.0;
            for (std::size_t c = lo; c < lo + side; ++c) {
                fs += std::abs(f[c]) * s[c];
                ss += s[c];
            }
            const double v = fs / ss;
            for (std::size_t c = lo; c < lo + side; ++c) out[c] = std::max(out[c], v);
        }
    }
    return out;
}

ExperimentConfig base_config(TheoremId id) {
    ExperimentConfig c;
    c.theorem = id;
    return c;
}

bool all_finite(const ExperimentReport& r) {
    for (const auto& t : r.trials)
        if (!std::isfinite(t.ratio) || !std::isfinite(t.ratio_fine)) return false;
    return true;
}

}  // namespace

int main() {
    criterion(1, "indicator-norm identity", 10, [] {
        Rng r(101);
        const Mesh m = mesh_for(1);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const GrowthFunction phi =
                t % 2 == 0 ? GrowthFunction::power(r.uniform(1.1, 4.0)) : GrowthFunction::power_log(r.uniform(1.1, 3.0), r.uniform(0.2, 2.0));
            const MeshField s = lognormal_weight(m, r);
            const DyadicCube q = random_grid_cube(m, r);
            const MeshField chi = indicator_of_box(m, cube_box(m, q));
            const double v = luxemburg_norm(phi, chi, s).value * inverse(phi, 1.0 / integrate(s, q));
            worst = std::max(worst, std::abs(v - 1.0));
        }
        return Outcome{worst <= 1e-8, "max |norm * Phi^-1(1/sigma(Q)) - 1| = " + sci(worst) + " (tol 1e-8)"};
    });

    criterion(2, "weak-type constant", 30, [] {
        Rng r(202);
        const Mesh m = mesh_for(1);
        const auto lambdas = log_grid(1e-3, 1e3, 64);
        double worst = 0.0, worst_exact = 0.0;
        bool ok = true;
        for (int t = 0; t < 50; ++t) {
            const int n = 1 + t % 2;
            const MeshField s = lognormal_weight(m, r);
            std::vector<MeshField> sig(static_cast<std::size_t>(n), s), fs;
            std::vector<GrowthFunction> phis;
            for (int i = 0; i < n; ++i) {
                phis.push_back(GrowthFunction::power(r.uniform(1.0, 4.0)));
                fs.push_back(lognormal_function(m, r));
            }
            const auto prof = weak_type_profile(sig, fs, phis, product_compose(phis), lambdas, zero_shift());
            const double grid_sup = *std::max_element(prof.value.begin(), prof.value.end());
            ok = ok && grid_sup <= n * (1 + 1e-9) && prof.sup <= n * (1 + 1e-9) && grid_sup <= prof.sup * (1 + 1e-12);
            worst = std::max(worst, grid_sup / n);
            worst_exact = std::max(worst_exact, prof.sup / n);
        }
        return Outcome{ok, "max over instances of grid sup / n = " + sci(worst) + ", exact sup / n = " + sci(worst_exact) +
                               " (bound 1 + 1e-9)"};
    });

    criterion(3, "three-lattice cover", 5, [] {
        Rng r(303);
        int good = 0;
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            AxisCube q;
            q.dim = 1 + t % 2;
            q.side = std::exp2(r.uniform(-12.0, 0.0));
            for (int a = 0; a < q.dim; ++a) q.lower[a] = r.uniform(-3.0, 3.0);
            const Cover c = cover_cube(q);
            const double side = std::ldexp(1.0, c.cube.level);
            bool inside = c.cube.shift == c.beta;
            for (int a = 0; a < q.dim; ++a) {
                const double lo = corner(c.cube, a);
                inside = inside && lo <= q.lower[a] && q.lower[a] + q.side <= lo + side;
            }
            worst = std::max(worst, side / q.side);
            if (inside && side <= 6.0 * q.side) ++good;
        }
        return Outcome{good == 1000, std::to_string(good) + "/1000 contained, max side ratio " + sci(worst) + " (bound 6)"};
    });

    criterion(4, "sparse validity", 60, [] {
        Rng r(404);
        int good = 0;
        double worst_pack = 0.0, worst_e = 1.0;
        for (int t = 0; t < 50; ++t) {
            const int dim = 1 + t % 2, n = 1 + (t / 2) % 2;
            const Mesh m = mesh_for(dim);
            std::vector<MeshField> sig, fs;
            for (int i = 0; i < n; ++i) {
                sig.push_back(lognormal_weight(m, r));
                fs.push_back(lognormal_function(m, r, 2.0));
            }
            const auto shifts = all_shifts(dim);
            const Shift beta = shifts[static_cast<std::size_t>(r.below(static_cast<int>(shifts.size())))];
            const SparseFamily fam = sparse_decompose(sig, fs, 2.0, beta);
            const SparseValidation v = validate_sparse(fam);
            bool e_ok = true;
            for (const auto& e : fam.entries) {
                std::int64_t cells = 0;
                for_each_cell(fam.mesh, e.box, [&](std::size_t idx, const IVec&) { cells += e.e_mask[idx]; });
                const double frac = static_cast<double>(cells) / static_cast<double>(e.box.cells());
                worst_e = std::min(worst_e, frac);
                e_ok = e_ok && 2 * cells >= e.box.cells();
            }
            worst_pack = std::max(worst_pack, v.packing);
            if (v.ok() && v.packing <= 0.5 && e_ok) ++good;
        }
        return Outcome{good == 50, std::to_string(good) + "/50 valid, max packing " + sci(worst_pack) + ", min |E_Q|/|Q| " +
                                       sci(worst_e)};
    });

    criterion(5, "pointwise grid domination", 120, [] {
        Rng r(505);
        int good = 0;
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const int dim = 1 + t % 2, n = 1 + (t / 2) % 2;
            const double alpha = (t / 4) % 2 ? dim / 2.0 : 0.0;
            const Mesh m = mesh_for(dim);
            std::vector<MeshField> fs;
            for (int i = 0; i < n; ++i) fs.push_back(lognormal_function(m, r));
            const MeshField ex = fractional_multilinear_maximal(fs, alpha, CubeSet::all_mesh_aligned()).field;
            std::vector<double> sum(ex.size(), 0.0);
            for (const auto& beta : all_shifts(dim)) {
                const MeshField g = on_mesh(fractional_multilinear_maximal(fs, alpha, CubeSet::single(beta)).field, ex.mesh);
                for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += g[c];
            }
            const double factor = std::pow(6.0, n * dim - alpha);
            bool ok = true;
            for (std::size_t c = 0; c < sum.size(); ++c) {
                worst = std::max(worst, ex[c] / (factor * sum[c]));
                ok = ok && ex[c] <= factor * sum[c] * (1 + 1e-12);
            }
            if (ok) ++good;
        }
        return Outcome{good == 20, std::to_string(good) + "/20 instances hold at every cell, max M / (6^(nd-a) sum) = " + sci(worst)};
    });

    criterion(6, "Carleson-from-sparse", 20, [] {
        Rng r(606);
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const int dim = 1 + t % 2;
            const Mesh m = mesh_for(dim);
            const MeshField s = lognormal_weight(m, r);
            const auto shifts = all_shifts(dim);
            const SparseFamily fam =
                sparse_decompose({s}, {lognormal_function(m, r, 2.0)}, 2.0, shifts[static_cast<std::size_t>(r.below(static_cast<int>(shifts.size())))]);
            const MeshField sf = on_mesh(s, fam.mesh);
            const auto seq = sequence_from_sparse(fam, SparsePayload::weight(sf));
            worst = std::max(worst, carleson_constant(seq, sf, GrowthFunction::power(1)).value);
        }
        return Outcome{worst <= 1 + 1e-12, "max Carleson constant " + sci(worst) + " (bound 1 + 1e-12)"};
    });

    criterion(7, "reverse-Hoelder power case", 20, [] {
        Rng r(707);
        double worst = 0.0, n1_dev = 0.0, oracle_gap = 0.0;
        for (int t = 0; t < 20; ++t) {
            const int n = 1 + t % 3;
            const Mesh m{Window::unit(1), 7, 1};
            std::vector<MeshField> sig;
            std::vector<GrowthFunction> phis;
            for (int i = 0; i < n; ++i) {
                sig.push_back(lognormal_weight(m, r, 1.5));
                phis.push_back(GrowthFunction::power(r.uniform(1.2, 4.0)));
            }
            const WeightSystem ws = WeightSystem::make(sig, phis);
            for (const auto& cs : {CubeSet::single(), CubeSet::all_grids(), CubeSet::all_mesh_aligned()}) {
                const auto rh = reverse_holder_check(ws, cs);
                worst = std::max(worst, rh.upper);
                if (n == 1) n1_dev = std::max({n1_dev, std::abs(rh.upper - 1.0), std::abs(rh.lower - 1.0)});
            }
            // Hoelder oracle on the standard grid: integral of prod sigma_i^{p/p_i} against prod sigma_i(Q)^{p/p_i}.
            double pinv = 0.0;
            for (const auto& f : phis) pinv += 1.0 / f.power_exponent();
            const double p = 1.0 / pinv;
            const std::size_t N = m.cell_count();
            double best = 0.0;
            for (int j = 0; j <= m.level; ++j) {
                const std::size_t side = N >> j;
                for (std::size_t lo = 0; lo < N; lo += side) {
                    double nu = 0.0, prod = 1.0;
                    for (std::size_t c = lo; c < lo + side; ++c) {
                        double v = 1.0;
                        for (int i = 0; i < n; ++i) v *= std::pow(sig[static_cast<std::size_t>(i)][c], p / phis[static_cast<std::size_t>(i)].power_exponent());
                        nu += v;
                    }
                    for (int i = 0; i < n; ++i) {
                        double s = 0.0;
                        for (std::size_t c = lo; c < lo + side; ++c) s += sig[static_cast<std::size_t>(i)][c];
                        prod *= std::pow(s, p / phis[static_cast<std::size_t>(i)].power_exponent());
                    }
                    best = std::max(best, nu / prod);
                }
            }
            const double lib = reverse_holder_check(ws, CubeSet::single()).upper;
            oracle_gap = std::max(oracle_gap, std::abs(lib - best) / best);
        }
        const bool ok = worst <= 1 + 1e-9 && n1_dev <= 1e-9 && oracle_gap <= 1e-9;
        return Outcome{ok, "max product " + sci(worst) + " (bound 1 + 1e-9), n=1 deviation " + sci(n1_dev) +
                               ", oracle gap " + sci(oracle_gap)};
    });

    criterion(8, "Carleson embedding stability", 120, [] {
        ExperimentConfig c = base_config(TheoremId::CARLESON_EMBED);
        c.n = 2;
        c.level = 6;
        c.trials = 50;
        c.seed = 5;
        c.phis = {"power:p=2"};
        c.psi = "power:p=1.5";
        const auto r = run_experiment(c);
        const bool ok = all_finite(r) && r.summary.refinement_trend <= 2.0;
        return Outcome{ok, "max ratio L=6 " + sci(r.summary.max_ratio) + ", L=8 " + sci(r.summary.max_ratio_fine) +
                               ", growth " + sci(r.summary.refinement_trend) + " (limit 2)"};
    });

    criterion(9, "Sawyer two-sided, power target", 300, [] {
        ExperimentConfig c = base_config(TheoremId::SAWYER_PQ);
        c.n = 2;
        c.level = 8;
        c.alpha = 0.5;
        c.trials = 20;
        c.seed = 2024;
        c.phis = {"power:p=2"};
        c.psi = "power:p=2";
        const auto r = run_experiment(c);
        double lo = INFINITY;
        for (const auto& t : r.trials) lo = std::min(lo, t.ratio);
        const bool ok = !r.verdict.violated && r.summary.refinement_trend <= 2.0 && r.summary.lower_min &&
                        *r.summary.lower_min > 0.0;
        return Outcome{ok, "sufficiency ratio in [" + sci(lo) + ", " + sci(r.summary.max_ratio) + "], trend " +
                               sci(r.summary.refinement_trend) + ", indicator ratio in [" +
                               sci(r.summary.lower_min.value_or(0)) + ", " + sci(r.summary.lower_max.value_or(0)) +
                               "], verdict " + (r.verdict.violated ? "violated" : "bounded")};
    });

    criterion(10, "dyadic Orlicz maximal boundedness", 120, [] {
        std::ostringstream d;
        bool ok = true;
        for (double p : {1.5, 2.0, 3.0}) {
            ExperimentConfig c = base_config(TheoremId::ORLICZ_MAX_BOUND);
            c.trials = 50;
            c.seed = 31;
            c.phis = {"power:p=" + std::to_string(p)};
            c.functions = {"lognormal:roughness=2"};
            const auto r = run_experiment(c);
            ok = ok && all_finite(r) && r.summary.refinement_trend <= 2.0;
            d << "p=" << p << " max " << sci(r.summary.max_ratio) << " trend " << sci(r.summary.refinement_trend) << "; ";
        }
        ExperimentConfig c = base_config(TheoremId::ORLICZ_MAX_BOUND);
        c.trials = 50;
        c.seed = 32;
        c.sigmas = {"constant:c=1"};
        c.functions = {"lognormal:roughness=2"};
        const auto r = run_experiment(c);
        ok = ok && r.summary.max_ratio <= 4 + 1e-6 && r.summary.max_ratio_fine <= 4 + 1e-6;
        d << "sigma=1 p=2 max " << sci(std::max(r.summary.max_ratio, r.summary.max_ratio_fine)) << " (bound 4); ";

        // Brute-force textbook oracle on small meshes.
        Rng rng(1010);
        double oracle_max = 0.0, gap = 0.0;
        const GrowthFunction sq = GrowthFunction::power(2);
        for (int t = 0; t < 30; ++t) {
            const int L = 3 + t % 4;
            const Mesh m{Window::unit(1), L, 1};
            const MeshField one = make_weight(m, gen::Constant{1.0});
            const MeshField f = lognormal_function(m, rng, 2.5);
            const auto mf = brute_dyadic_maximal(f.values, one.values, L);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < mf.size(); ++i) {
                num += mf[i] * mf[i];
                den += f[i] * f[i];
            }
            const double o = num / den;
            const MeshField lib = multilinear_weighted_maximal({one}, {f}, CubeSet::single()).field;
            const double l = modular(sq, lib, one) / modular(sq, f, one);
            oracle_max = std::max(oracle_max, o);
            gap = std::max(gap, std::abs(l - o) / o);
        }
        ok = ok && oracle_max <= 4 + 1e-6 && gap <= 1e-12;
        d << "oracle max " << sci(oracle_max) << ", library gap " << sci(gap);
        return Outcome{ok, d.str()};
    });

    criterion(11, "log-maximal", 60, [] {
        bool exact = true;
        for (int dim = 1; dim <= 2; ++dim) {
            const Mesh m = mesh_for(dim);
            const MeshField chi = make_function(m, gen::Constant{1.0});
            for (const auto& cs : {CubeSet::single(), CubeSet::all_grids()}) {
                const MeshField mf = log_maximal(chi, cs).field;
                for (double p : {0.5, 1.0, 2.0, 3.0}) {
                    double a = 0.0, b = 0.0;
                    for (double v : mf.values) a += std::pow(v, p);
                    for (double v : chi.values) b += std::pow(v, p);
                    a = std::pow(a * mf.mesh.cell_volume(), 1 / p);
                    b = std::pow(b * chi.mesh.cell_volume(), 1 / p);
                    exact = exact && a == b;
                }
            }
        }
        ExperimentConfig c = base_config(TheoremId::LOG_MAX_LP);
        c.trials = 50;
        c.seed = 11;
        c.p = 2.0;
        const auto r = run_experiment(c);
        const bool ok = exact && all_finite(r) && r.summary.refinement_trend <= 2.0;
        return Outcome{ok, std::string("window identity ") + (exact ? "exact" : "inexact") + ", random max ratio " +
                               sci(r.summary.max_ratio) + ", trend " + sci(r.summary.refinement_trend)};
    });

    criterion(12, "class-constant trivial anchors", 5, [] {
        bool ok = true;
        std::ostringstream d;
        for (int dim = 1; dim <= 2; ++dim) {
            const Mesh m = mesh_for(dim);
            for (double cval : {1.0, 2.0, 0.25}) {
                const MeshField w = make_weight(m, gen::Constant{cval});
                for (const auto& cs : {CubeSet::single(), CubeSet::all_grids()}) {
                    for (double p : {2.0, 3.0})
                        ok = ok && muckenhoupt_constant(ClassKind::AP, p, w, cs).value == 1.0;
                    ok = ok && muckenhoupt_constant(ClassKind::A1, 0, w, cs).value == 1.0;
                }
            }
            const MeshField one = make_weight(m, gen::Constant{1.0});
            const GrowthFunction p1 = GrowthFunction::power(1);
            const WeightSystem ws = WeightSystem::make({one}, {p1});
            const double mk = pair_class_constant(ClassKind::M, 0, ws, one, p1, CubeSet::single()).value;
            const double aa = pair_class_constant(ClassKind::A_ALPHA, 0, ws, one, p1, CubeSet::single()).value;
            const double dbl = muckenhoupt_constant(ClassKind::DOUBLING, 0, one, CubeSet::single()).value;
            ok = ok && mk == 1.0 && aa == 1.0 && dbl == std::exp2(dim);
            d << "d=" << dim << ": M " << mk << ", A_alpha " << aa << ", DOUBLING " << dbl << "; ";
        }
        d << "AP/A1 of constants " << (ok ? "exactly 1" : "not exact");
        return Outcome{ok, d.str()};
    });

    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
