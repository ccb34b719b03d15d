#include "olab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "olab/errors.hpp"

namespace olab {

using kernels::BoxSums;
using kernels::GridTree;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t ipow(std::int64_t b, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

void check_system(const WeightSystem& ws) {
    if (ws.sigmas.empty() || ws.sigmas.size() != ws.phis.size())
        throw UsageError("weight system needs one growth function per weight");
    for (std::size_t i = 1; i < ws.sigmas.size(); ++i) require_same_mesh(ws.sigmas[0], ws.sigmas[i]);
}

bool all_power(const std::vector<GrowthFunction>& phis) {
    return std::all_of(phis.begin(), phis.end(), [](const GrowthFunction& f) { return f.is_power(); });
}

// Row-major index of a cell inside a box.
std::size_t local_index(const CellBox& b, const IVec& c) {
    std::size_t idx = 0;
    for (int a = 0; a < b.dim; ++a)
        idx = idx * static_cast<std::size_t>(b.extent(a)) + static_cast<std::size_t>(c[a] - b.lo[a]);
    return idx;
}

// Minimum over cube-shaped boxes from power-of-two blocks.
class CubeMin {
public:
    CubeMin(const Mesh& m, const std::vector<double>& v) : mesh_(m) {
        tables_.push_back(v);
        const int d = m.dim();
        const std::int64_t n = m.per_side();
        for (std::int64_t half = 1; 2 * half <= n; half *= 2) {
            const auto& prev = tables_.back();
            std::vector<double> next(prev.size(), kInf);
            for (std::size_t i = 0; i < prev.size(); ++i) {
                const IVec c = cell_coords(m, i);
                bool fits = true;
                for (int a = 0; a < d; ++a) fits = fits && c[a] + 2 * half <= n;
                if (!fits) continue;
                double mn = kInf;
                for (int corner = 0; corner < (1 << d); ++corner) {
                    IVec q = c;
                    for (int a = 0; a < d; ++a) q[a] += ((corner >> a) & 1) * half;
                    mn = std::min(mn, prev[cell_index(m, q)]);
                }
                next[i] = mn;
            }
            tables_.push_back(std::move(next));
        }
    }

    double min(const CellBox& b) const {
        const std::int64_t s = b.extent(0);
        std::size_t j = 0;
        while ((std::int64_t{2} << j) <= s) ++j;
        const std::int64_t off = s - (std::int64_t{1} << j);
        double mn = kInf;
        for (int corner = 0; corner < (1 << b.dim); ++corner) {
            IVec q = b.lo;
            for (int a = 0; a < b.dim; ++a) q[a] += ((corner >> a) & 1) * off;
            mn = std::min(mn, tables_[j][cell_index(mesh_, q)]);
        }
        return mn;
    }

private:
    Mesh mesh_;
    std::vector<std::vector<double>> tables_;
};

// For the outer box B: per cell of B and per output, the max over grid cubes R meeting B of f(R),
// where f sees the channel sums over R intersected with B.
template <class F>
void inner_max(const std::vector<GridTree>& trees, const BoxSums& sums, const CellBox& B, int nout, F&& f,
               std::vector<double>& out) {
    const int d = B.dim;
    const auto nb = static_cast<std::size_t>(B.cells());
    out.assign(static_cast<std::size_t>(nout) * nb, 0.0);
    std::vector<double> s(static_cast<std::size_t>(sums.channels()));
    std::vector<double> vals(static_cast<std::size_t>(nout));
    for (const GridTree& tree : trees) {
        const auto& levels = tree.levels();
        for (std::size_t li = 0; li < levels.size(); ++li) {
            const auto& lv = levels[li];
            IVec lo{}, hi{};
            if (!tree.range_meeting(li, B, lo, hi)) continue;
            const double cells_r = static_cast<double>(ipow(lv.side, d));
            const double vol_r = std::ldexp(1.0, lv.k * d);
            IVec t = lo;
            while (true) {
                CellBox r;
                r.dim = d;
                for (int a = 0; a < d; ++a) {
                    r.lo[a] = lv.first_cell[a] + t[a] * lv.side;
                    r.hi[a] = r.lo[a] + lv.side;
                }
                const CellBox rb = r.intersect(B);
                for (int c = 0; c < sums.channels(); ++c) s[static_cast<std::size_t>(c)] = sums.sum(c, rb);
                f(s.data(), cells_r, vol_r, vals.data());
                for_each_cell(tree.mesh(), rb, [&](std::size_t, const IVec& c) {
                    const std::size_t li2 = local_index(B, c);
                    for (int o = 0; o < nout; ++o) {
                        double& slot = out[static_cast<std::size_t>(o) * nb + li2];
                        slot = std::max(slot, vals[static_cast<std::size_t>(o)]);
                    }
                });
                int a = d - 1;
                while (a >= 0) {
                    if (++t[a] < hi[a]) break;
                    t[a] = lo[a];
                    --a;
                }
                if (a < 0) break;
            }
        }
    }
}

template <class F>
ClassConstant sup_over(const CubeCatalog& cat, ClassKind kind, double param, const CubeSet& cs, Exec exec, F&& value) {
    const auto& cubes = cat.cubes();
    std::vector<double> vals(cubes.size(), 0.0);
    const auto n = static_cast<std::int64_t>(cubes.size());
    const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(dynamic, 64) if (par)
    for (std::int64_t i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = value(cubes[static_cast<std::size_t>(i)]);
    ClassConstant out;
    out.kind = kind;
    out.param = param;
    out.cube_set = cs;
    out.dim = cat.mesh().dim();
    std::size_t best = cubes.size();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (best == cubes.size() || vals[i] > vals[best] || (std::isnan(vals[i]) && !std::isnan(vals[best]))) best = i;
    }
    if (best < cubes.size()) {
        out.value = vals[best];
        out.argmax_cube = cat.descriptor(cubes[best]);
    }
    return out;
}

bool fractional_kind(ClassKind k) {
    return k == ClassKind::S_ALPHA || k == ClassKind::L_ALPHA || k == ClassKind::A_ALPHA ||
           k == ClassKind::A_TILDE_ALPHA || k == ClassKind::B_ALPHA;
}

}  // namespace

WeightSystem WeightSystem::make(std::vector<MeshField> sigmas, std::vector<GrowthFunction> phis) {
    WeightSystem ws;
    ws.phi = product_compose(phis);
    ws.sigmas = std::move(sigmas);
    ws.phis = std::move(phis);
    check_system(ws);
    return ws;
}

MeshField nu_sigma_generic(const WeightSystem& ws) {
    check_system(ws);
    MeshField nu;
    nu.mesh = ws.sigmas[0].mesh;
    nu.kind = FieldKind::Weight;
    nu.values.assign(nu.mesh.cell_count(), 0.0);
    const auto n = static_cast<std::int64_t>(nu.values.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < n; ++c) {
        const auto i = static_cast<std::size_t>(c);
        double x = 1.0;
        for (std::size_t k = 0; k < ws.sigmas.size(); ++k) x *= inverse(ws.phis[k], 1.0 / ws.sigmas[k][i]);
        nu.values[i] = 1.0 / eval(ws.phi, x);
    }
    return nu;
}

MeshField nu_sigma(const WeightSystem& ws) {
    check_system(ws);
    if (ws.sigmas.size() == 1) {
        MeshField nu = ws.sigmas[0];
        nu.kind = FieldKind::Weight;
        return nu;
    }
    if (!all_power(ws.phis)) return nu_sigma_generic(ws);
    double inv_p = 0.0;
    for (const auto& f : ws.phis) inv_p += 1.0 / f.power_exponent();
    const double p = 1.0 / inv_p;
    MeshField nu;
    nu.mesh = ws.sigmas[0].mesh;
    nu.kind = FieldKind::Weight;
    nu.values.assign(nu.mesh.cell_count(), 1.0);
    for (std::size_t k = 0; k < ws.sigmas.size(); ++k) {
        const double e = p / ws.phis[k].power_exponent();
        for (std::size_t i = 0; i < nu.values.size(); ++i) nu.values[i] *= std::pow(ws.sigmas[k][i], e);
    }
    return nu;
}

std::string to_string(ClassKind k) {
    switch (k) {
        case ClassKind::AP: return "AP";
        case ClassKind::A1: return "A1";
        case ClassKind::A_INF_FW: return "A_INF_FW";
        case ClassKind::A_INF_EXP: return "A_INF_EXP";
        case ClassKind::DOUBLING: return "DOUBLING";
        case ClassKind::M: return "M";
        case ClassKind::K: return "K";
        case ClassKind::S_ALPHA: return "S_ALPHA";
        case ClassKind::L_ALPHA: return "L_ALPHA";
        case ClassKind::A_ALPHA: return "A_ALPHA";
        case ClassKind::A_TILDE_ALPHA: return "A_TILDE_ALPHA";
        case ClassKind::B_ALPHA: return "B_ALPHA";
        case ClassKind::W: return "W";
    }
    return "";
}

ClassKind parse_class_kind(const std::string& text) {
    std::string t;
    for (char c : text) t += static_cast<char>(c == '-' ? '_' : std::toupper(static_cast<unsigned char>(c)));
    for (int k = 0; k <= static_cast<int>(ClassKind::W); ++k)
        if (to_string(static_cast<ClassKind>(k)) == t) return static_cast<ClassKind>(k);
    throw UsageError("unknown class kind: " + text);
}

nlohmann::ordered_json to_json(const ClassConstant& c) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(c.kind);
    j["params"] = nlohmann::ordered_json::object();
    if (c.kind == ClassKind::AP) j["params"]["p"] = c.param;
    if (fractional_kind(c.kind)) j["params"]["alpha"] = c.param;
    j["params"]["cube_set"] = to_string(c.cube_set, c.dim);
    if (std::isfinite(c.value))
        j["value"] = c.value;
    else
        j["value"] = std::isnan(c.value) ? "nan" : "inf";
    j["argmax_cube"] = c.argmax_cube;
    return j;
}

std::string box_descriptor(const CellBox& b) {
    std::string out = "cells=";
    for (int a = 0; a < b.dim; ++a) out += (a ? "," : "") + std::to_string(b.lo[a]);
    out += ";side=" + std::to_string(b.extent(0));
    return out;
}

CubeCatalog::CubeCatalog(const Mesh& mesh, const CubeSet& cs) : mesh_(mesh) {
    if (cs.kind == CubeSetKind::AllMeshAligned) {
        const double cs_side = mesh.cell_side();
        kernels::for_each_aligned_cube(mesh, [&](const CellBox& b) {
            CubeRef r;
            r.box = b;
            r.volume = std::pow(static_cast<double>(b.extent(0)) * cs_side, mesh.dim());
            cubes_.push_back(r);
        });
        return;
    }
    if (cs.kind == CubeSetKind::SingleGrid)
        trees_.emplace_back(mesh, cs.beta);
    else
        for (const Shift& b : all_shifts(mesh.dim())) trees_.emplace_back(mesh, b);
    for (std::size_t g = 0; g < trees_.size(); ++g) {
        const auto& levels = trees_[g].levels();
        for (std::size_t li = levels.size(); li-- > 0;) {
            for (std::size_t t = 0; t < levels[li].size; ++t) {
                CubeRef r;
                r.flat = levels[li].offset + t;
                r.box = trees_[g].box(r.flat);
                r.volume = std::ldexp(1.0, levels[li].k * mesh.dim());
                r.grid = static_cast<int>(g);
                cubes_.push_back(r);
            }
        }
    }
}

std::string CubeCatalog::descriptor(const CubeRef& r) const {
    if (r.grid < 0) return box_descriptor(r.box);
    return to_descriptor(trees_[static_cast<std::size_t>(r.grid)].cube(r.flat));
}

ClassConstant muckenhoupt_constant(ClassKind kind, double p, const MeshField& omega, const CubeSet& cs, Exec exec) {
    const bool needs_grids = kind == ClassKind::A_INF_FW;
    const Mesh mesh = needs_grids ? output_mesh(omega.mesh, CubeSet::all_grids()) : output_mesh(omega.mesh, cs);
    const MeshField w = on_mesh(omega, mesh);
    for (double v : w.values)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("weights must be positive and finite");
    const CubeCatalog cat(mesh, cs);

    switch (kind) {
        case ClassKind::AP: {
            if (!(p > 1.0)) throw UsageError("A_p needs p > 1");
            const double pp = p / (p - 1.0);
            // scale-free; dividing by the max keeps constants exact
            const double top = *std::max_element(w.values.begin(), w.values.end());
            std::vector<double> ws(w.size()), dual(w.size());
            for (std::size_t i = 0; i < dual.size(); ++i) {
                ws[i] = w[i] / top;
                dual[i] = std::pow(ws[i], 1.0 - pp);
            }
            const BoxSums sums(mesh, {ws, dual});
            return sup_over(cat, kind, p, cs, exec, [&](const CubeRef& r) {
                const double cells = static_cast<double>(r.box.cells());
                return (sums.sum(0, r.box) / cells) * std::pow(sums.sum(1, r.box) / cells, p - 1.0);
            });
        }
        case ClassKind::A1: {
            const BoxSums sums(mesh, {w.values});
            const CubeMin mins(mesh, w.values);
            return sup_over(cat, kind, 0.0, cs, exec, [&](const CubeRef& r) {
                return sums.sum(0, r.box) / static_cast<double>(r.box.cells()) / mins.min(r.box);
            });
        }
        case ClassKind::A_INF_EXP: {
            std::vector<double> logs(w.size());
            for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = std::log(w[i]);
            const BoxSums sums(mesh, {w.values, logs});
            return sup_over(cat, kind, 0.0, cs, exec, [&](const CubeRef& r) {
                const double cells = static_cast<double>(r.box.cells());
                return sums.sum(0, r.box) / cells * std::exp(-sums.sum(1, r.box) / cells);
            });
        }
        case ClassKind::A_INF_FW: {
            const BoxSums sums(mesh, {w.values});
            std::vector<GridTree> trees;
            for (const Shift& b : all_shifts(mesh.dim())) trees.emplace_back(mesh, b);
            return sup_over(cat, kind, 0.0, cs, exec, [&](const CubeRef& r) {
                std::vector<double> m;
                inner_max(trees, sums, r.box, 1,
                          [](const double* s, double cells, double, double* out) { out[0] = s[0] / cells; }, m);
                Kahan k;
                for (double v : m) k.add(v);
                return k.value() / sums.sum(0, r.box);
            });
        }
        case ClassKind::DOUBLING: {
            const BoxSums sums(mesh, {w.values});
            if (cs.kind != CubeSetKind::AllMeshAligned) {
                return sup_over(cat, kind, 0.0, cs, exec, [&](const CubeRef& r) {
                    const std::int64_t par = cat.trees()[static_cast<std::size_t>(r.grid)].parent(r.flat);
                    if (par < 0) return 1.0;
                    const CellBox pb = cat.trees()[static_cast<std::size_t>(r.grid)].box(static_cast<std::size_t>(par));
                    return std::max(1.0, sums.sum(0, pb) / sums.sum(0, r.box));
                });
            }
            // Per side s: the largest mass of a side-min(2s, N) cube containing each side-s cube.
            const int d = mesh.dim();
            const std::int64_t N = mesh.per_side();
            std::vector<std::vector<double>> best(static_cast<std::size_t>(N) + 1);
            for (std::int64_t s = 1; s <= N; ++s) {
                const std::int64_t s2 = std::min(2 * s, N);
                const std::int64_t P2 = N - s2 + 1, P = N - s + 1;
                std::vector<double> mass(static_cast<std::size_t>(ipow(P2, d)));
                for (std::size_t v = 0; v < mass.size(); ++v) {
                    CellBox b;
                    b.dim = d;
                    std::size_t rem = v;
                    for (int a = d - 1; a >= 0; --a) {
                        b.lo[a] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(P2));
                        b.hi[a] = b.lo[a] + s2;
                        rem /= static_cast<std::size_t>(P2);
                    }
                    mass[v] = sums.sum(0, b);
                }
                std::vector<std::int64_t> shape(static_cast<std::size_t>(d), P2);
                std::vector<double> tmp;
                for (int a = d - 1; a >= 0; --a) {
                    kernels::sliding_max_axis(mass, shape, a, P, s2 - s, 0, tmp);
                    mass.swap(tmp);
                }
                best[static_cast<std::size_t>(s)] = std::move(mass);
            }
            return sup_over(cat, kind, 0.0, cs, exec, [&](const CubeRef& r) {
                const std::int64_t s = r.box.extent(0);
                const std::int64_t P = N - s + 1;
                std::size_t idx = 0;
                for (int a = 0; a < d; ++a) idx = idx * static_cast<std::size_t>(P) + static_cast<std::size_t>(r.box.lo[a]);
                return std::max(1.0, best[static_cast<std::size_t>(s)][idx] / sums.sum(0, r.box));
            });
        }
        default:
            throw UsageError(to_string(kind) + " is not a single-weight class");
    }
}

ClassConstant pair_class_constant(ClassKind kind, double alpha, const WeightSystem& ws, const MeshField& omega,
                                  const GrowthFunction& psi, const CubeSet& cs, Exec exec) {
    check_system(ws);
    require_same_mesh(ws.sigmas[0], omega);
    const int n = ws.n();
    const int d = omega.mesh.dim();
    if (fractional_kind(kind) && !(alpha >= 0.0 && alpha < static_cast<double>(n) * d))
        throw UsageError("alpha must lie in [0, n*d)");
    const bool inner = kind == ClassKind::S_ALPHA || kind == ClassKind::L_ALPHA;
    const Mesh mesh = inner ? output_mesh(omega.mesh, CubeSet::all_grids()) : output_mesh(omega.mesh, cs);
    const MeshField w = on_mesh(omega, mesh);
    const MeshField nu = on_mesh(nu_sigma(ws), mesh);
    std::vector<std::vector<double>> ch{w.values, nu.values};
    for (int i = 0; i < n; ++i) ch.push_back(on_mesh(ws.sigmas[static_cast<std::size_t>(i)], mesh).values);
    if (kind == ClassKind::B_ALPHA) {
        for (int i = 0; i < n; ++i) {
            std::vector<double> logs(mesh.cell_count());
            for (std::size_t c = 0; c < logs.size(); ++c) logs[c] = std::log(ch[2 + static_cast<std::size_t>(i)][c]);
            ch.push_back(std::move(logs));
        }
    }
    const BoxSums sums(mesh, ch);
    const CubeCatalog cat(mesh, cs);

    const GrowthFunction theta = compose_inverse(psi, ws.phi);
    std::vector<GrowthFunction> k_i, dual;
    for (const auto& f : ws.phis) k_i.push_back(compose_inverse(psi, f));
    if (kind == ClassKind::A_TILDE_ALPHA)
        for (const auto& f : ws.phis) dual.push_back(f.is_power() ? complementary_function(f) : memoized_complementary(f));
    const double frac = 1.0 - alpha / (static_cast<double>(n) * d);

    auto integral = [&](int c, const CubeRef& r) { return sums.sum(c, r.box) / static_cast<double>(r.box.cells()) * r.volume; };
    auto sigma_q = [&](int i, const CubeRef& r) { return integral(2 + i, r); };
    auto averages_term = [&](const CubeRef& r) {
        double prod = 1.0;
        for (int i = 0; i < n; ++i) prod *= sigma_q(i, r) / std::pow(r.volume, frac);
        return eval(psi, prod);
    };
    auto k_prod = [&](const CubeRef& r) {
        double prod = 1.0;
        for (int i = 0; i < n; ++i) prod *= eval(k_i[static_cast<std::size_t>(i)], 1.0 / sigma_q(i, r));
        return prod;
    };
    // integral over Q of Psi(M_alpha(sigma_1 chi_Q, ..., sigma_n chi_Q)) omega
    std::vector<GridTree> trees;
    if (inner)
        for (const Shift& b : all_shifts(d)) trees.emplace_back(mesh, b);
    const double cv = mesh.cell_volume();
    auto sawyer_integral = [&](const CubeRef& r) {
        std::vector<double> m;
        inner_max(trees, sums, r.box, 1,
                  [&](const double* s, double cells, double vol, double* out) {
                      double v = alpha == 0.0 ? 1.0 : std::pow(vol, alpha / d);
                      for (int i = 0; i < n; ++i) v *= s[2 + i] / cells;
                      out[0] = v;
                  },
                  m);
        Kahan k;
        std::size_t li = 0;
        for_each_cell(mesh, r.box, [&](std::size_t idx, const IVec&) { k.add(eval(psi, m[li++]) * w[idx]); });
        return k.value() * cv;
    };

    switch (kind) {
        case ClassKind::M:
            return sup_over(cat, kind, 0.0, cs, exec,
                            [&](const CubeRef& r) { return integral(0, r) * eval(theta, 1.0 / integral(1, r)); });
        case ClassKind::K:
            return sup_over(cat, kind, 0.0, cs, exec, [&](const CubeRef& r) { return integral(0, r) * k_prod(r); });
        case ClassKind::S_ALPHA:
            return sup_over(cat, kind, alpha, cs, exec, [&](const CubeRef& r) {
                return eval(theta, 1.0 / integral(1, r)) * sawyer_integral(r);
            });
        case ClassKind::L_ALPHA:
            return sup_over(cat, kind, alpha, cs, exec, [&](const CubeRef& r) { return k_prod(r) * sawyer_integral(r); });
        case ClassKind::A_ALPHA:
            return sup_over(cat, kind, alpha, cs, exec, [&](const CubeRef& r) {
                double prod = 1.0;
                for (int i = 0; i < n; ++i) prod *= inverse(ws.phis[static_cast<std::size_t>(i)], 1.0 / sigma_q(i, r));
                return integral(0, r) * averages_term(r) * eval(psi, prod);
            });
        case ClassKind::A_TILDE_ALPHA:
            return sup_over(cat, kind, alpha, cs, exec, [&](const CubeRef& r) {
                double prod = alpha == 0.0 ? 1.0 : std::pow(r.volume, alpha / d);
                for (int i = 0; i < n; ++i)
                    prod *= inverse(dual[static_cast<std::size_t>(i)], sigma_q(i, r) / r.volume);
                return integral(0, r) / r.volume * eval(psi, prod);
            });
        case ClassKind::B_ALPHA:
            return sup_over(cat, kind, alpha, cs, exec, [&](const CubeRef& r) {
                const double cells = static_cast<double>(r.box.cells());
                double prod = 1.0;
                for (int i = 0; i < n; ++i) {
                    const double geo = std::exp(-sums.sum(2 + n + i, r.box) / cells);
                    prod *= inverse(ws.phis[static_cast<std::size_t>(i)], geo / r.volume);
                }
                return integral(0, r) * averages_term(r) * eval(psi, prod);
            });
        default:
            throw UsageError(to_string(kind) + " is not a pair class");
    }
}

ClassConstant w_class_constant(const WeightSystem& ws, const GrowthFunction& psi, const CubeSet& cs, Exec exec) {
    check_system(ws);
    const int n = ws.n();
    const Mesh mesh = output_mesh(ws.sigmas[0].mesh, CubeSet::all_grids());
    const MeshField nu = on_mesh(nu_sigma(ws), mesh);
    std::vector<std::vector<double>> ch{nu.values};
    for (const auto& s : ws.sigmas) ch.push_back(on_mesh(s, mesh).values);
    const BoxSums sums(mesh, ch);
    const CubeCatalog cat(mesh, cs);
    std::vector<GridTree> trees;
    for (const Shift& b : all_shifts(mesh.dim())) trees.emplace_back(mesh, b);
    const GrowthFunction theta = compose_inverse(psi, ws.phi);
    const double cv = mesh.cell_volume();
    return sup_over(cat, ClassKind::W, 0.0, cs, exec, [&](const CubeRef& r) {
        std::vector<double> m;
        inner_max(trees, sums, r.box, n,
                  [&](const double* s, double cells, double, double* out) {
                      for (int i = 0; i < n; ++i) out[i] = s[1 + i] / cells;
                  },
                  m);
        const auto nb = static_cast<std::size_t>(r.box.cells());
        Kahan k;
        for (std::size_t c = 0; c < nb; ++c) {
            double prod = 1.0;
            for (int i = 0; i < n; ++i)
                prod *= inverse(ws.phis[static_cast<std::size_t>(i)], m[static_cast<std::size_t>(i) * nb + c]);
            k.add(eval(psi, prod));
        }
        const double nu_q = sums.sum(0, r.box) / static_cast<double>(r.box.cells()) * r.volume;
        return eval(theta, 1.0 / nu_q) * k.value() * cv;
    });
}

ReverseHolderReport reverse_holder_check(const WeightSystem& ws, const CubeSet& cs) {
    check_system(ws);
    const Mesh mesh = output_mesh(ws.sigmas[0].mesh, cs);
    const MeshField nu = on_mesh(nu_sigma(ws), mesh);
    std::vector<std::vector<double>> ch{nu.values};
    for (const auto& s : ws.sigmas) ch.push_back(on_mesh(s, mesh).values);
    const BoxSums sums(mesh, ch);
    const CubeCatalog cat(mesh, cs);
    const auto& cubes = cat.cubes();
    std::vector<double> vals(cubes.size());
    const auto count = static_cast<std::int64_t>(cubes.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < count; ++i) {
        const CubeRef& r = cubes[static_cast<std::size_t>(i)];
        const double cells = static_cast<double>(r.box.cells());
        double x = 1.0;
        for (std::size_t k = 0; k < ws.sigmas.size(); ++k)
            x *= inverse(ws.phis[k], 1.0 / (sums.sum(1 + static_cast<int>(k), r.box) / cells * r.volume));
        vals[static_cast<std::size_t>(i)] = eval(ws.phi, x) * (sums.sum(0, r.box) / cells * r.volume);
    }
    ReverseHolderReport rep;
    if (cubes.empty()) return rep;
    std::size_t hi = 0, lo = 0;
    for (std::size_t i = 1; i < vals.size(); ++i) {
        if (vals[i] > vals[hi]) hi = i;
        if (vals[i] < vals[lo]) lo = i;
    }
    rep.upper = vals[hi];
    rep.lower = vals[lo];
    rep.upper_cube = cat.descriptor(cubes[hi]);
    rep.lower_cube = cat.descriptor(cubes[lo]);
    return rep;
}

}  // namespace olab
