#include "olab/carleson.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "olab/errors.hpp"
#include "olab/kernels.hpp"
#include "olab/maximal.hpp"
#include "olab/orlicz.hpp"
#include "olab/weights.hpp"

namespace olab {

using kernels::GridTree;

namespace {

std::size_t locate(const GridTree& tree, const DyadicCube& q) {
    const int d = tree.mesh().dim();
    if (q.dim != d) throw UsageError("cube dimension does not match the mesh: " + to_descriptor(q));
    for (int a = 0; a < d; ++a)
        if (q.shift[a] != tree.beta()[a]) throw UsageError("cube is not on the sequence grid: " + to_descriptor(q));
    const auto& levels = tree.levels();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i].k != q.level) continue;
        IVec local{};
        for (int a = 0; a < d; ++a) {
            local[a] = q.index[a] - levels[i].first_index[a];
            if (local[a] < 0 || local[a] >= levels[i].count[a])
                throw UsageError("cube lies outside the window: " + to_descriptor(q));
        }
        return tree.flat_index(i, local);
    }
    throw UsageError("cube level not representable on the mesh: " + to_descriptor(q));
}

std::vector<MeshField> normalized(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                                  const std::vector<GrowthFunction>& phis) {
    if (fs.empty() || fs.size() != sigmas.size() || fs.size() != phis.size())
        throw UsageError("need matching functions, weights and growth functions");
    std::vector<MeshField> g;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (is_zero(fs[i])) throw UsageError("function " + std::to_string(i + 1) + " vanishes identically");
        const NormResult nr = luxemburg_norm(phis[i], fs[i], sigmas[i]);
        if (nr.infinite) throw DomainError("function " + std::to_string(i + 1) + " has infinite norm");
        g.push_back(scaled(fs[i], 1.0 / nr.value));
    }
    return g;
}

}  // namespace

CarlesonConstant carleson_constant(const CarlesonSequence& seq, const MeshField& nu, const GrowthFunction& theta) {
    const GridTree tree(seq.mesh, seq.beta);
    std::vector<double> acc(tree.size(), 0.0);
    for (const auto& [q, lam] : seq.entries) {
        if (!(lam >= 0.0) || !std::isfinite(lam)) throw UsageError("sequence values must be finite and >= 0");
        acc[locate(tree, q)] += lam;
    }
    const auto& levels = tree.levels();
    for (const auto& lv : levels)
        for (std::size_t t = 0; t < lv.size; ++t) {
            const std::int64_t p = tree.parent(lv.offset + t);
            if (p >= 0) acc[static_cast<std::size_t>(p)] += acc[lv.offset + t];
        }
    const MeshField w = on_mesh(nu, seq.mesh);
    const auto integ = tree.integrals({seq.mesh, {w.values}}, Exec::Serial);
    CarlesonConstant out;
    for (std::size_t li = levels.size(); li-- > 0;) {
        const double cells = std::pow(static_cast<double>(levels[li].side), seq.mesh.dim());
        const double vol = std::ldexp(1.0, levels[li].k * seq.mesh.dim());
        for (std::size_t t = 0; t < levels[li].size; ++t) {
            const std::size_t f = levels[li].offset + t;
            if (!(acc[f] > 0.0)) continue;
            const double v = eval(theta, 1.0 / (integ[f] / cells * vol)) * acc[f];
            if (out.argmax_cube.empty() || v > out.value) {
                out.value = v;
                out.argmax_cube = to_descriptor(tree.cube(f));
            }
        }
    }
    return out;
}

double embedding_sum(const CarlesonSequence& seq, const GrowthFunction& psi, const std::vector<MeshField>& sigmas,
                     const std::vector<MeshField>& fs, const std::vector<GrowthFunction>& phis) {
    const auto g = normalized(sigmas, fs, phis);
    const Operator op = weighted_operator(sigmas, g, seq.mesh);
    const GridTree tree(seq.mesh, seq.beta);
    const auto vals = tree.values(op.fn, op.ch, Exec::Serial);
    Kahan k;
    for (const auto& [q, lam] : seq.entries) k.add(lam * eval(psi, vals[locate(tree, q)]));
    return k.value();
}

LevelsetSums levelset_sum(const std::vector<MeshField>& sigmas, const std::vector<MeshField>& fs,
                          const std::vector<GrowthFunction>& phis, const GrowthFunction& phi,
                          const GrowthFunction& psi, double lambda, const Shift& beta) {
    if (!(lambda > 0.0)) throw UsageError("level must be positive");
    const auto g = normalized(sigmas, fs, phis);
    const Mesh mesh = output_mesh(fs[0].mesh, CubeSet::single(beta));
    const auto cubes = level_cubes(weighted_operator(sigmas, g, mesh), lambda, beta);
    const MeshField nu = on_mesh(nu_sigma(WeightSystem{sigmas, phis, phi}), mesh);
    const GrowthFunction theta = compose_inverse(psi, phi);
    LevelsetSums out;
    out.cubes = cubes.size();
    Kahan left, mass;
    for (const auto& r : cubes) {
        const double nr = integrate(nu, r);
        left.add(1.0 / eval(theta, 1.0 / nr));
        mass.add(nr);
    }
    out.left = left.value();
    out.right = eval(phi, lambda) / eval(psi, lambda) * mass.value();
    return out;
}

SparsePayload SparsePayload::weight(MeshField omega) {
    SparsePayload p;
    p.kind = Kind::WeightE;
    p.omega = std::move(omega);
    return p;
}

SparsePayload SparsePayload::psi_weighted(MeshField omega, GrowthFunction psi, MeshField sigma, MeshField g) {
    SparsePayload p;
    p.kind = Kind::PsiWeighted;
    p.omega = std::move(omega);
    p.psi = std::move(psi);
    p.sigma = std::move(sigma);
    p.g = std::move(g);
    return p;
}

CarlesonSequence sequence_from_sparse(const SparseFamily& family, const SparsePayload& payload) {
    CarlesonSequence seq;
    seq.mesh = family.mesh;
    seq.beta = family.beta;
    const double cv = family.mesh.cell_volume();
    MeshField omega, sigma, g;
    if (payload.kind != SparsePayload::Kind::LebesgueE) omega = on_mesh(payload.omega, family.mesh);
    if (payload.kind == SparsePayload::Kind::PsiWeighted) {
        sigma = on_mesh(payload.sigma, family.mesh);
        g = on_mesh(payload.g, family.mesh);
    }
    for (const auto& e : family.entries) {
        Kahan k;
        for_each_cell(family.mesh, e.box, [&](std::size_t idx, const IVec&) {
            if (!e.e_mask[idx]) return;
            k.add(payload.kind == SparsePayload::Kind::LebesgueE ? 1.0 : omega[idx]);
        });
        double lam = k.value() * cv;
        if (payload.kind == SparsePayload::Kind::PsiWeighted) lam *= eval(payload.psi, average(g, sigma, e.box));
        if (lam > 0.0) seq.entries.emplace_back(e.cube, lam);
    }
    return seq;
}

void write_sequence(std::ostream& out, const CarlesonSequence& seq) {
    out << "# sequence " << seq.mesh.descriptor() << ";beta=" << shift_descriptor(seq.beta, seq.mesh.dim()) << "\n";
    char buf[64];
    for (const auto& [q, lam] : seq.entries) {
        std::snprintf(buf, sizeof buf, "%.17g", lam);
        out << to_descriptor(q) << "," << buf << "\n";
    }
}

CarlesonSequence read_sequence(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header.rfind("# sequence ", 0) != 0) throw UsageError("missing sequence header");
    const std::string body = header.substr(11);
    const auto pos = body.find(";beta=");
    if (pos == std::string::npos) throw UsageError("sequence header needs beta");
    CarlesonSequence seq;
    seq.mesh = parse_mesh(body.substr(0, pos));
    const std::string beta = body.substr(pos + 6);
    const CubeSet cs = parse_cube_set("single:" + beta, seq.mesh.dim());
    seq.beta = cs.beta;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw UsageError("malformed sequence line: " + line);
        const DyadicCube q = parse_cube(line.substr(0, comma));
        const std::string num = line.substr(comma + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(num, &used);
        } catch (const std::exception&) {
            throw UsageError("malformed sequence value: " + line);
        }
        if (used != num.size()) throw UsageError("malformed sequence value: " + line);
        (void)cube_box(seq.mesh, q);
        seq.entries.emplace_back(q, v);
    }
    return seq;
}

}  // namespace olab
