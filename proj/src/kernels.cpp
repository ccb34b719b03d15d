#include "olab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "olab/errors.hpp"

namespace olab::kernels {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Double-double accumulation (error-free TwoSum), enough to keep tiny box sums exact next to large totals.
struct DD {
    double hi = 0.0;
    double lo = 0.0;
};

inline DD two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    const double e = (a - (s - bb)) + (b - bb);
    return {s, e};
}

inline DD dd_add(DD a, DD b) {
    DD s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return two_sum(s.hi, s.lo);
}

inline DD dd_neg(DD a) { return {-a.hi, -a.lo}; }

std::int64_t ipow(std::int64_t b, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

void check_channels(const Functional& fn, const Channels& ch) {
    if (static_cast<int>(ch.data.size()) != fn.channels()) throw UsageError("kernel: channel count mismatch");
    for (const auto& c : ch.data)
        if (c.size() != ch.mesh.cell_count()) throw UsageError("kernel: channel size mismatch");
}

}  // namespace

int Functional::channels() const {
    if (type == Type::LogAverage) return 2;
    return unit_den ? n : 2 * n;
}

double Functional::value(const double* integrals, double volume) const {
    if (type == Type::LogAverage) {
        if (integrals[1] > 0.0) return 0.0;
        return std::exp(integrals[0] / volume);
    }
    double v = alpha == 0.0 ? 1.0 : std::pow(volume, alpha / dim);
    for (int i = 0; i < n; ++i) {
        const double den = unit_den ? volume : integrals[n + i];
        if (!(den > 0.0)) return 0.0;
        v *= integrals[i] / den;
    }
    return v;
}

BoxSums::BoxSums(const Mesh& mesh, const std::vector<std::vector<double>>& data)
    : mesh_(mesh), channels_(static_cast<int>(data.size())) {
    const int d = mesh.dim();
    const std::int64_t n1 = mesh.per_side() + 1;
    std::int64_t total = 1;
    for (int a = d - 1; a >= 0; --a) {
        stride_[a] = total;
        total *= n1;
    }
    std::vector<DD> sat(static_cast<std::size_t>(total));
    sat_.assign(static_cast<std::size_t>(channels_), {});
    for (int c = 0; c < channels_; ++c) {
        std::fill(sat.begin(), sat.end(), DD{});
        // Separable running sums, one axis at a time.
        for (std::size_t i = 0; i < data[c].size(); ++i) {
            const IVec cc = cell_coords(mesh, i);
            std::int64_t idx = 0;
            for (int a = 0; a < d; ++a) idx += (cc[a] + 1) * stride_[a];
            sat[static_cast<std::size_t>(idx)] = DD{data[c][i], 0.0};
        }
        for (int a = 0; a < d; ++a) {
            for (std::int64_t idx = 0; idx < total; ++idx) {
                const std::int64_t coord = (idx / stride_[a]) % n1;
                if (coord == 0) continue;
                sat[static_cast<std::size_t>(idx)] =
                    dd_add(sat[static_cast<std::size_t>(idx)], sat[static_cast<std::size_t>(idx - stride_[a])]);
            }
        }
        auto& out = sat_[static_cast<std::size_t>(c)];
        out.resize(2 * static_cast<std::size_t>(total));
        for (std::size_t i = 0; i < sat.size(); ++i) {
            out[2 * i] = sat[i].hi;
            out[2 * i + 1] = sat[i].lo;
        }
    }
}

double BoxSums::sum(int channel, const CellBox& box) const {
    const int d = mesh_.dim();
    const auto& s = sat_[static_cast<std::size_t>(channel)];
    DD acc{};
    for (int corner = 0; corner < (1 << d); ++corner) {
        std::int64_t idx = 0;
        int lows = 0;
        for (int a = 0; a < d; ++a) {
            const bool low = (corner >> a) & 1;
            idx += (low ? box.lo[a] : box.hi[a]) * stride_[a];
            lows += low;
        }
        const DD v{s[2 * static_cast<std::size_t>(idx)], s[2 * static_cast<std::size_t>(idx) + 1]};
        acc = dd_add(acc, (lows % 2) ? dd_neg(v) : v);
    }
    return acc.hi + acc.lo;
}

GridTree::GridTree(const Mesh& mesh, const Shift& beta) : mesh_(mesh), beta_(beta) {
    if (!mesh.supports(beta)) throw ResolutionError("shifted grid needs the refined (subdiv 3) mesh");
    const int d = mesh.dim();
    for (int k = mesh.finest_level(); k <= mesh.window.level; ++k) {
        const auto cubes = enumerate_cubes(mesh.window, beta, k, k);
        if (cubes.empty()) break;
        TreeLevel lv;
        lv.k = k;
        lv.side = static_cast<std::int64_t>(mesh.subdiv) << (k - mesh.finest_level());
        lv.first_index = cubes.front().index;
        for (int a = 0; a < d; ++a) lv.count[a] = cubes.back().index[a] - lv.first_index[a] + 1;
        lv.first_cell = cube_box(mesh, cubes.front()).lo;
        lv.offset = total_;
        lv.size = cubes.size();
        total_ += lv.size;
        levels_.push_back(lv);
    }
    parent_.assign(total_, -1);
    for (std::size_t i = 0; i + 1 < levels_.size(); ++i) {
        const TreeLevel& lv = levels_[i];
        const TreeLevel& up = levels_[i + 1];
        for (std::size_t t = 0; t < lv.size; ++t) {
            std::size_t rem = t;
            IVec local{};
            for (int a = d - 1; a >= 0; --a) {
                local[a] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(lv.count[a]));
                rem /= static_cast<std::size_t>(lv.count[a]);
            }
            IVec pl{};
            bool ok = true;
            for (int a = 0; a < d; ++a) {
                const std::int64_t x = lv.first_cell[a] + local[a] * lv.side;
                pl[a] = floor_div(x - up.first_cell[a], up.side);
                if (pl[a] < 0 || pl[a] >= up.count[a]) ok = false;
            }
            if (ok) parent_[lv.offset + t] = static_cast<std::int64_t>(flat_index(i + 1, pl));
        }
    }
}

std::size_t GridTree::flat_index(std::size_t level, const IVec& local) const {
    const TreeLevel& lv = levels_[level];
    std::size_t idx = 0;
    for (int a = 0; a < mesh_.dim(); ++a) idx = idx * static_cast<std::size_t>(lv.count[a]) + static_cast<std::size_t>(local[a]);
    return lv.offset + idx;
}

std::size_t GridTree::level_of(std::size_t flat) const {
    for (std::size_t i = 0; i < levels_.size(); ++i)
        if (flat < levels_[i].offset + levels_[i].size) return i;
    throw UsageError("grid tree index out of range");
}

DyadicCube GridTree::cube(std::size_t flat) const {
    const std::size_t li = level_of(flat);
    const TreeLevel& lv = levels_[li];
    std::size_t rem = flat - lv.offset;
    DyadicCube q;
    q.dim = mesh_.dim();
    q.shift = beta_;
    q.level = lv.k;
    for (int a = q.dim - 1; a >= 0; --a) {
        q.index[a] = lv.first_index[a] + static_cast<std::int64_t>(rem % static_cast<std::size_t>(lv.count[a]));
        rem /= static_cast<std::size_t>(lv.count[a]);
    }
    return q;
}

CellBox GridTree::box(std::size_t flat) const {
    const std::size_t li = level_of(flat);
    const TreeLevel& lv = levels_[li];
    std::size_t rem = flat - lv.offset;
    CellBox b;
    b.dim = mesh_.dim();
    for (int a = b.dim - 1; a >= 0; --a) {
        const auto t = static_cast<std::int64_t>(rem % static_cast<std::size_t>(lv.count[a]));
        rem /= static_cast<std::size_t>(lv.count[a]);
        b.lo[a] = lv.first_cell[a] + t * lv.side;
        b.hi[a] = b.lo[a] + lv.side;
    }
    return b;
}

double GridTree::volume(std::size_t flat) const { return std::ldexp(1.0, levels_[level_of(flat)].k * mesh_.dim()); }

std::vector<double> GridTree::integrals(const Channels& ch, Exec exec) const {
    if (!(ch.mesh == mesh_)) throw UsageError("grid tree: channels on a different mesh");
    const int d = mesh_.dim();
    const std::size_t C = ch.data.size();
    std::vector<double> out(total_ * C, 0.0);
    const bool par = exec == Exec::Parallel;
    if (levels_.empty()) return out;
    {
        const TreeLevel& lv = levels_[0];
        const auto n = static_cast<std::int64_t>(lv.size);
#pragma omp parallel for schedule(static) if (par)
        for (std::int64_t t = 0; t < n; ++t) {
            const std::size_t flat = lv.offset + static_cast<std::size_t>(t);
            const CellBox b = box(flat);
            for (std::size_t c = 0; c < C; ++c) {
                double s = 0.0;
                for_each_cell(mesh_, b, [&](std::size_t idx, const IVec&) { s += ch.data[c][idx]; });
                out[flat * C + c] = s;
            }
        }
    }
    const int nchild = 1 << d;
    for (std::size_t i = 1; i < levels_.size(); ++i) {
        const TreeLevel& lv = levels_[i];
        const TreeLevel& dn = levels_[i - 1];
        const auto n = static_cast<std::int64_t>(lv.size);
#pragma omp parallel for schedule(static) if (par)
        for (std::int64_t t = 0; t < n; ++t) {
            const std::size_t flat = lv.offset + static_cast<std::size_t>(t);
            const CellBox b = box(flat);
            for (int cidx = 0; cidx < nchild; ++cidx) {
                IVec local{};
                for (int a = 0; a < d; ++a) {
                    const std::int64_t bit = (cidx >> (d - 1 - a)) & 1;
                    local[a] = (b.lo[a] + bit * dn.side - dn.first_cell[a]) / dn.side;
                }
                const std::size_t child = flat_index(i - 1, local);
                for (std::size_t c = 0; c < C; ++c) out[flat * C + c] += out[child * C + c];
            }
        }
    }
    return out;
}

std::vector<double> GridTree::values(const Functional& fn, const Channels& ch, Exec exec) const {
    check_channels(fn, ch);
    const std::vector<double> integ = integrals(ch, exec);
    const std::size_t C = ch.data.size();
    const double cell_vol = mesh_.cell_volume();
    std::vector<double> vals(total_, 0.0);
    const bool par = exec == Exec::Parallel;
    const auto n = static_cast<std::int64_t>(total_);
    std::vector<double> scaled(C);
#pragma omp parallel for schedule(static) if (par) firstprivate(scaled)
    for (std::int64_t f = 0; f < n; ++f) {
        const auto flat = static_cast<std::size_t>(f);
        const std::size_t li = level_of(flat);
        const double cells = static_cast<double>(ipow(levels_[li].side, mesh_.dim()));
        const double vol = std::ldexp(1.0, levels_[li].k * mesh_.dim());
        // Integrals are kept in cell units; rescale to the true measure of the cube.
        for (std::size_t c = 0; c < C; ++c) scaled[c] = integ[flat * C + c] / cells * vol;
        vals[flat] = fn.value(scaled.data(), vol);
    }
    (void)cell_vol;
    return vals;
}

std::vector<double> GridTree::ancestor_max(const std::vector<double>& vals) const {
    std::vector<double> anc(total_, 0.0);
    for (std::size_t i = levels_.size(); i-- > 0;) {
        const TreeLevel& lv = levels_[i];
        for (std::size_t t = 0; t < lv.size; ++t) {
            const std::size_t flat = lv.offset + t;
            const std::int64_t p = parent_[flat];
            if (p >= 0) anc[flat] = std::max(anc[static_cast<std::size_t>(p)], vals[static_cast<std::size_t>(p)]);
        }
    }
    return anc;
}

std::vector<double> GridTree::pointwise_max(const std::vector<double>& vals, Exec exec) const {
    std::vector<double> run = vals;
    const bool par = exec == Exec::Parallel;
    for (std::size_t i = levels_.size(); i-- > 0;) {
        const TreeLevel& lv = levels_[i];
        const auto n = static_cast<std::int64_t>(lv.size);
#pragma omp parallel for schedule(static) if (par)
        for (std::int64_t t = 0; t < n; ++t) {
            const std::size_t flat = lv.offset + static_cast<std::size_t>(t);
            const std::int64_t p = parent_[flat];
            if (p >= 0) run[flat] = std::max(run[flat], run[static_cast<std::size_t>(p)]);
        }
    }
    std::vector<double> out(mesh_.cell_count(), 0.0);
    if (levels_.empty()) return out;
    const TreeLevel& lv = levels_[0];
    const auto n = static_cast<std::int64_t>(lv.size);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t t = 0; t < n; ++t) {
        const std::size_t flat = lv.offset + static_cast<std::size_t>(t);
        for_each_cell(mesh_, box(flat), [&](std::size_t idx, const IVec&) { out[idx] = run[flat]; });
    }
    return out;
}

std::vector<std::uint8_t> GridTree::covered_cells() const {
    std::vector<std::uint8_t> out(mesh_.cell_count(), 0);
    if (levels_.empty()) return out;
    const TreeLevel& lv = levels_[0];
    for (std::size_t t = 0; t < lv.size; ++t)
        for_each_cell(mesh_, box(lv.offset + t), [&](std::size_t idx, const IVec&) { out[idx] = 1; });
    return out;
}

bool GridTree::range_meeting(std::size_t level, const CellBox& b, IVec& lo, IVec& hi) const {
    const TreeLevel& lv = levels_[level];
    for (int a = 0; a < mesh_.dim(); ++a) {
        lo[a] = std::max<std::int64_t>(0, floor_div(b.lo[a] - lv.first_cell[a], lv.side));
        hi[a] = std::min<std::int64_t>(lv.count[a], floor_div(b.hi[a] - 1 - lv.first_cell[a], lv.side) + 1);
        if (hi[a] <= lo[a]) return false;
    }
    return true;
}

std::vector<double> dyadic_maximal(const Functional& fn, const Channels& ch, const Shift& beta, Exec exec) {
    GridTree tree(ch.mesh, beta);
    return tree.pointwise_max(tree.values(fn, ch, exec), exec);
}

void sliding_max_axis(const std::vector<double>& in, std::vector<std::int64_t>& shape, int axis,
                      std::int64_t out_len, std::int64_t back, std::int64_t fwd, std::vector<double>& out) {
    const int d = static_cast<int>(shape.size());
    const std::int64_t P = shape[static_cast<std::size_t>(axis)];
    std::int64_t inner = 1, outer = 1;
    for (int a = axis + 1; a < d; ++a) inner *= shape[static_cast<std::size_t>(a)];
    for (int a = 0; a < axis; ++a) outer *= shape[static_cast<std::size_t>(a)];
    out.assign(static_cast<std::size_t>(outer * out_len * inner), 0.0);
    std::deque<std::int64_t> dq;
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t i = 0; i < inner; ++i) {
            dq.clear();
            auto at = [&](std::int64_t p) { return in[static_cast<std::size_t>((o * P + p) * inner + i)]; };
            std::int64_t next = 0;
            for (std::int64_t x = 0; x < out_len; ++x) {
                while (next < P && next <= x + fwd) {
                    while (!dq.empty() && at(dq.back()) <= at(next)) dq.pop_back();
                    dq.push_back(next);
                    ++next;
                }
                while (!dq.empty() && dq.front() < x - back) dq.pop_front();
                out[static_cast<std::size_t>((o * out_len + x) * inner + i)] = dq.empty() ? 0.0 : at(dq.front());
            }
        }
    shape[static_cast<std::size_t>(axis)] = out_len;
}

std::vector<double> exhaustive_maximal(const Functional& fn, const Channels& ch, Exec exec) {
    check_channels(fn, ch);
    const Mesh& m = ch.mesh;
    const int d = m.dim();
    const std::int64_t N = m.per_side();
    const BoxSums sums(m, ch.data);
    const int C = fn.channels();
    const double cell_side = m.cell_side();
    const std::size_t ncell = m.cell_count();
    std::vector<double> result(ncell, 0.0);
    const bool par = exec == Exec::Parallel;

#pragma omp parallel if (par)
    {
        std::vector<double> local(ncell, 0.0);
        std::vector<double> vals, tmp, integ(static_cast<std::size_t>(C));
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t s = 1; s <= N; ++s) {
            const std::int64_t P = N - s + 1;
            vals.assign(static_cast<std::size_t>(ipow(P, d)), 0.0);
            const double vol = std::pow(static_cast<double>(s) * cell_side, d);
            const double cells = static_cast<double>(ipow(s, d));
            for (std::size_t v = 0; v < vals.size(); ++v) {
                CellBox b;
                b.dim = d;
                std::size_t rem = v;
                for (int a = d - 1; a >= 0; --a) {
                    b.lo[a] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(P));
                    b.hi[a] = b.lo[a] + s;
                    rem /= static_cast<std::size_t>(P);
                }
                for (int c = 0; c < C; ++c) integ[static_cast<std::size_t>(c)] = sums.sum(c, b) / cells * vol;
                vals[v] = fn.value(integ.data(), vol);
            }
            std::vector<std::int64_t> shape(static_cast<std::size_t>(d), P);
            for (int a = d - 1; a >= 0; --a) {
                sliding_max_axis(vals, shape, a, N, s - 1, 0, tmp);
                vals.swap(tmp);
            }
            for (std::size_t i = 0; i < ncell; ++i) local[i] = std::max(local[i], vals[i]);
        }
#pragma omp critical
        for (std::size_t i = 0; i < ncell; ++i) result[i] = std::max(result[i], local[i]);
    }
    return result;
}

namespace {

std::vector<double> direct_integrals(const Channels& ch, const CellBox& b, double cells, double vol) {
    std::vector<double> I(ch.data.size(), 0.0);
    for (std::size_t c = 0; c < ch.data.size(); ++c) {
        double s = 0.0;
        for_each_cell(ch.mesh, b, [&](std::size_t idx, const IVec&) { s += ch.data[c][idx]; });
        I[c] = s / cells * vol;
    }
    return I;
}

}  // namespace

std::vector<double> reference_dyadic_maximal(const Functional& fn, const Channels& ch, const Shift& beta) {
    check_channels(fn, ch);
    const Mesh& m = ch.mesh;
    std::vector<double> out(m.cell_count(), 0.0);
    for (const DyadicCube& q : enumerate_cubes(m.window, beta, m.finest_level(), m.window.level)) {
        const CellBox b = cube_box(m, q);
        const auto I = direct_integrals(ch, b, static_cast<double>(b.cells()), q.volume());
        const double v = fn.value(I.data(), q.volume());
        for_each_cell(m, b, [&](std::size_t idx, const IVec&) { out[idx] = std::max(out[idx], v); });
    }
    return out;
}

std::vector<double> reference_exhaustive_maximal(const Functional& fn, const Channels& ch) {
    check_channels(fn, ch);
    const Mesh& m = ch.mesh;
    std::vector<double> out(m.cell_count(), 0.0);
    for_each_aligned_cube(m, [&](const CellBox& b) {
        const double vol = std::pow(static_cast<double>(b.extent(0)) * m.cell_side(), m.dim());
        const auto I = direct_integrals(ch, b, static_cast<double>(b.cells()), vol);
        const double v = fn.value(I.data(), vol);
        for_each_cell(m, b, [&](std::size_t idx, const IVec&) { out[idx] = std::max(out[idx], v); });
    });
    return out;
}

}  // namespace olab::kernels
