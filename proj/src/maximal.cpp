#include "olab/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "olab/errors.hpp"
#include "olab/orlicz.hpp"
#include "olab/weights.hpp"

namespace olab {

using kernels::Functional;
using kernels::GridTree;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

void same_mesh(const std::vector<MeshField>& fields) {
    for (std::size_t i = 1; i < fields.size(); ++i) require_same_mesh(fields[0], fields[i]);
}

MaximalResult wrap(MeshField field, const CubeSet& cs, double alpha, int n) {
    field.kind = FieldKind::Function;
    return {std::move(field), cs, alpha, n};
}

}  // namespace

CubeSet parse_cube_set(const std::string& text, int dim) {
    if (text == "dyadic" || text == "single") return CubeSet::single();
    if (text == "all-grids") return CubeSet::all_grids();
    if (text == "all-mesh-aligned") return CubeSet::all_mesh_aligned();
    if (text.rfind("single:", 0) == 0) {
        const auto parts = split(text.substr(7), ',');
        if (static_cast<int>(parts.size()) != dim) throw UsageError("cube set shift needs " + std::to_string(dim) + " entries: " + text);
        Shift s{};
        for (int a = 0; a < dim; ++a) {
            if (parts[a] == "0")
                s[a] = 0;
            else if (parts[a] == "1/3")
                s[a] = 1;
            else
                throw UsageError("shift entries are 0 or 1/3: " + text);
        }
        return CubeSet::single(s);
    }
    throw UsageError("unknown cube set: " + text);
}

std::string to_string(const CubeSet& cs, int dim) {
    switch (cs.kind) {
        case CubeSetKind::SingleGrid:
            return "single:" + shift_descriptor(cs.beta, dim);
        case CubeSetKind::AllGrids:
            return "all-grids";
        case CubeSetKind::AllMeshAligned:
            return "all-mesh-aligned";
    }
    return "";
}

Mesh output_mesh(const Mesh& input, const CubeSet& cs) {
    if (input.subdiv == 3) return input;
    if (cs.kind == CubeSetKind::SingleGrid && is_zero(cs.beta, input.dim())) return input;
    return input.with_subdiv(3);
}

Operator weighted_operator(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs, const Mesh& mesh) {
    if (fs.empty()) throw UsageError("need at least one function");
    if (sigmas.size() != fs.size()) throw UsageError("need one weight per function");
    std::vector<MeshField> all = fs;
    all.insert(all.end(), sigmas.begin(), sigmas.end());
    same_mesh(all);
    Operator op;
    op.fn.type = Functional::Type::ProductAverage;
    op.fn.n = static_cast<int>(fs.size());
    op.fn.unit_den = false;
    op.fn.dim = mesh.dim();
    op.ch.mesh = mesh;
    const std::size_t n = fs.size();
    op.ch.data.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const MeshField f = on_mesh(fs[i], mesh);
        const MeshField s = on_mesh(sigmas[i], mesh);
        op.ch.data[i].resize(f.size());
        for (std::size_t c = 0; c < f.size(); ++c) op.ch.data[i][c] = std::abs(f[c]) * s[c];
        op.ch.data[n + i] = s.values;
    }
    return op;
}

Operator fractional_operator(const std::vector<MeshField>& fs, double alpha, const Mesh& mesh) {
    if (fs.empty()) throw UsageError("need at least one function");
    same_mesh(fs);
    const double top = static_cast<double>(fs.size()) * mesh.dim();
    if (!(alpha >= 0.0 && alpha < top)) throw UsageError("alpha must lie in [0, n*d)");
    Operator op;
    op.fn.type = Functional::Type::ProductAverage;
    op.fn.n = static_cast<int>(fs.size());
    op.fn.unit_den = true;
    op.fn.alpha = alpha;
    op.fn.dim = mesh.dim();
    op.ch.mesh = mesh;
    for (const auto& f0 : fs) {
        const MeshField f = on_mesh(f0, mesh);
        std::vector<double> v(f.size());
        for (std::size_t c = 0; c < v.size(); ++c) v[c] = std::abs(f[c]);
        op.ch.data.push_back(std::move(v));
    }
    return op;
}

Operator log_operator(const MeshField& f0, const Mesh& mesh) {
    const MeshField f = on_mesh(f0, mesh);
    Operator op;
    op.fn.type = Functional::Type::LogAverage;
    op.fn.dim = mesh.dim();
    op.ch.mesh = mesh;
    op.ch.data.assign(2, std::vector<double>(f.size(), 0.0));
    for (std::size_t c = 0; c < f.size(); ++c) {
        if (f[c] < 0.0 || std::isnan(f[c])) throw DomainError("log maximal needs a nonnegative function");
        if (f[c] > 0.0)
            op.ch.data[0][c] = std::log(f[c]);
        else
            op.ch.data[1][c] = 1.0;
    }
    return op;
}

MeshField evaluate(const Operator& op, const CubeSet& cs, Exec exec) {
    MeshField out;
    out.mesh = op.ch.mesh;
    out.kind = FieldKind::Function;
    switch (cs.kind) {
        case CubeSetKind::SingleGrid:
            out.values = kernels::dyadic_maximal(op.fn, op.ch, cs.beta, exec);
            break;
        case CubeSetKind::AllGrids: {
            out.values.assign(out.mesh.cell_count(), 0.0);
            for (const Shift& b : all_shifts(out.mesh.dim())) {
                const auto v = kernels::dyadic_maximal(op.fn, op.ch, b, exec);
                for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = std::max(out.values[i], v[i]);
            }
            break;
        }
        case CubeSetKind::AllMeshAligned:
            out.values = kernels::exhaustive_maximal(op.fn, op.ch, exec);
            break;
    }
    return out;
}

MaximalResult multilinear_weighted_maximal(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                                           const CubeSet& cs, Exec exec) {
    if (fs.empty()) throw UsageError("need at least one function");
    const Mesh mesh = output_mesh(fs[0].mesh, cs);
    return wrap(evaluate(weighted_operator(sigmas, fs, mesh), cs, exec), cs, 0.0, static_cast<int>(fs.size()));
}

MaximalResult fractional_multilinear_maximal(const std::vector<MeshField>& fs, double alpha, const CubeSet& cs,
                                             Exec exec) {
    if (fs.empty()) throw UsageError("need at least one function");
    const Mesh mesh = output_mesh(fs[0].mesh, cs);
    return wrap(evaluate(fractional_operator(fs, alpha, mesh), cs, exec), cs, alpha, static_cast<int>(fs.size()));
}

MaximalResult hardy_littlewood_maximal(const MeshField& f, const CubeSet& cs, Exec exec) {
    return fractional_multilinear_maximal({f}, 0.0, cs, exec);
}

MaximalResult log_maximal(const MeshField& f, const CubeSet& cs, Exec exec) {
    const Mesh mesh = output_mesh(f.mesh, cs);
    return wrap(evaluate(log_operator(f, mesh), cs, exec), cs, 0.0, 1);
}

namespace {

struct TreeEval {
    GridTree tree;
    std::vector<double> vals;
    std::vector<double> anc;
};

TreeEval tree_eval(const Operator& op, const Shift& beta) {
    GridTree tree(op.ch.mesh, beta);
    auto vals = tree.values(op.fn, op.ch, Exec::Parallel);
    auto anc = tree.ancestor_max(vals);
    return {std::move(tree), std::move(vals), std::move(anc)};
}

std::vector<DyadicCube> select_level(const TreeEval& te, double lambda) {
    std::vector<DyadicCube> out;
    for (std::size_t f = 0; f < te.tree.size(); ++f)
        if (te.vals[f] > lambda && te.anc[f] <= lambda) out.push_back(te.tree.cube(f));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<DyadicCube> level_cubes(const Operator& op, double lambda, const Shift& beta) {
    if (!(lambda > 0.0)) throw UsageError("level must be positive");
    return select_level(tree_eval(op, beta), lambda);
}

std::vector<DyadicCube> level_cubes(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                                    double lambda, const Shift& beta) {
    if (fs.empty()) throw UsageError("need at least one function");
    const Mesh mesh = output_mesh(fs[0].mesh, CubeSet::single(beta));
    return level_cubes(weighted_operator(sigmas, fs, mesh), lambda, beta);
}

SparseFamily sparse_decompose(const Operator& op, double base, const Shift& beta) {
    if (!(base > 1.0) || !std::isfinite(base)) throw UsageError("sparse base must exceed 1");
    const TreeEval te = tree_eval(op, beta);
    const Mesh& mesh = op.ch.mesh;

    double top = 0.0, max_m = 0.0;
    for (std::size_t f = 0; f < te.tree.size(); ++f) {
        if (te.anc[f] == 0.0) top = std::max(top, te.vals[f]);
        max_m = std::max(max_m, te.vals[f]);
    }
    double min_m = std::numeric_limits<double>::infinity();
    const auto& finest = te.tree.levels().front();
    for (std::size_t t = 0; t < finest.size; ++t) {
        const std::size_t f = finest.offset + t;
        min_m = std::min(min_m, std::max(te.vals[f], te.anc[f]));
    }
    const double floor_value = std::max(top, min_m);

    double a = base;
    double packing = 0.0;
    for (int attempt = 0; attempt <= kSparseRetries; ++attempt, a *= 2.0) {
        SparseFamily fam;
        if (max_m > 0.0 && floor_value > 0.0) {
            auto k = static_cast<int>(std::floor(std::log(floor_value) / std::log(a)));
            while (std::pow(a, k) < floor_value) ++k;
            while (std::pow(a, k - 1) >= floor_value) --k;
            std::vector<std::pair<DyadicCube, int>> picked;
            for (; std::pow(a, k) < max_m; ++k)
                for (const auto& q : select_level(te, std::pow(a, k))) picked.emplace_back(q, k);
            fam = make_sparse_family(mesh, beta, std::move(picked));
        } else {
            fam.mesh = mesh;
            fam.beta = beta;
        }
        fam.base = a;
        const SparseValidation v = validate_sparse(fam);
        if (v.ok()) return fam;
        packing = v.packing;
    }
    throw DecompositionError("sparse decomposition failed after " + std::to_string(kSparseRetries) +
                                 " retries; packing " + std::to_string(packing),
                             packing);
}

SparseFamily sparse_decompose(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs, double base,
                              const Shift& beta) {
    if (fs.empty()) throw UsageError("need at least one function");
    const Mesh mesh = output_mesh(fs[0].mesh, CubeSet::single(beta));
    return sparse_decompose(weighted_operator(sigmas, fs, mesh), base, beta);
}

WeakTypeProfile weak_type_profile(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                                  const std::vector<GrowthFunction>& phis, const GrowthFunction& phi,
                                  const std::vector<double>& lambdas, const Shift& beta) {
    if (fs.empty() || fs.size() != sigmas.size() || fs.size() != phis.size())
        throw UsageError("weak type profile needs matching functions, weights and growth functions");
    std::vector<MeshField> g;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (is_zero(fs[i])) throw UsageError("function " + std::to_string(i + 1) + " vanishes identically");
        const NormResult nr = luxemburg_norm(phis[i], fs[i], sigmas[i]);
        if (nr.infinite) throw DomainError("function " + std::to_string(i + 1) + " has infinite norm");
        g.push_back(scaled(fs[i], 1.0 / nr.value));
    }
    const MaximalResult m = multilinear_weighted_maximal(sigmas, g, CubeSet::single(beta));
    WeightSystem ws{sigmas, phis, phi};
    const MeshField nu = on_mesh(nu_sigma(ws), m.field.mesh);
    const double cv = m.field.mesh.cell_volume();

    WeakTypeProfile out;
    for (double lam : lambdas) {
        Kahan k;
        for (std::size_t c = 0; c < m.field.size(); ++c)
            if (m.field[c] > lam) k.add(nu[c]);
        out.lambda.push_back(lam);
        out.value.push_back(k.value() * cv * phi(lam));
    }
    // The profile jumps only at attained values; its supremum is approached from the left of each.
    std::vector<std::size_t> order(m.field.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m.field[a] > m.field[b]; });
    Kahan acc;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const double v = m.field[order[i]];
        acc.add(nu[order[i]]);
        if (!(v > 0.0)) break;
        if (i + 1 < order.size() && m.field[order[i + 1]] == v) continue;
        const double val = acc.value() * cv * phi(v);
        if (val > out.sup) {
            out.sup = val;
            out.sup_lambda = v;
        }
    }
    return out;
}

}  // namespace olab
