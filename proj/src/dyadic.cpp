#include "olab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "olab/errors.hpp"

namespace olab {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::int64_t parse_int(const std::string& s, const std::string& ctx) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        throw UsageError("malformed integer in " + ctx);
    }
    if (used != s.size()) throw UsageError("malformed integer in " + ctx);
    return v;
}

void check_dim(int d) {
    if (d < 1 || d > kMaxDim) throw UsageError("dimension must be 1.." + std::to_string(kMaxDim));
}

}  // namespace

Window Window::unit(int dim) {
    check_dim(dim);
    Window w;
    w.dim = dim;
    return w;
}

double Window::side() const { return std::ldexp(1.0, level); }
double Window::lower(int axis) const { return std::ldexp(static_cast<double>(origin[axis]), level); }

int DyadicCube::offset_thirds(int axis) const {
    if (!shift[axis]) return 0;
    return (level % 2 == 0) ? 1 : -1;
}

std::int64_t DyadicCube::scaled_lower(int axis) const { return 3 * index[axis] + offset_thirds(axis); }

double DyadicCube::lower(int axis) const {
    return std::ldexp(static_cast<double>(scaled_lower(axis)), level) / 3.0;
}

double DyadicCube::upper(int axis) const {
    return std::ldexp(static_cast<double>(scaled_lower(axis) + 3), level) / 3.0;
}

double DyadicCube::side() const { return std::ldexp(1.0, level); }
double DyadicCube::volume() const { return std::ldexp(1.0, level * dim); }

DyadicCube DyadicCube::parent() const {
    // Parent lower corner in units of 2^level/3 is 2(3M + E'), with E' the parent's offset.
    DyadicCube p = *this;
    p.level = level + 1;
    for (int a = 0; a < dim; ++a) {
        const std::int64_t e = p.offset_thirds(a);
        p.index[a] = floor_div(scaled_lower(a) - 2 * e, 6);
    }
    return p;
}

bool DyadicCube::operator<(const DyadicCube& o) const {
    if (level != o.level) return level > o.level;
    if (shift != o.shift) return shift < o.shift;
    return index < o.index;
}

std::vector<Shift> all_shifts(int dim) {
    check_dim(dim);
    std::vector<Shift> out;
    for (int mask = 0; mask < (1 << dim); ++mask) {
        Shift s{};
        for (int a = 0; a < dim; ++a) s[a] = static_cast<std::uint8_t>((mask >> (dim - 1 - a)) & 1);
        out.push_back(s);
    }
    return out;
}

Shift zero_shift() { return Shift{}; }

bool is_zero(const Shift& s, int dim) {
    for (int a = 0; a < dim; ++a)
        if (s[a]) return false;
    return true;
}

namespace {

// Per-axis interval in units of 2^base/3, where base <= level.
std::pair<std::int64_t, std::int64_t> scaled_interval(const DyadicCube& q, int axis, int base) {
    const int sh = q.level - base;
    const std::int64_t lo = q.scaled_lower(axis) * (std::int64_t{1} << sh);
    return {lo, lo + 3 * (std::int64_t{1} << sh)};
}

}  // namespace

bool contains(const DyadicCube& outer, const DyadicCube& inner) {
    if (outer.dim != inner.dim || outer.level < inner.level) return false;
    const int base = inner.level;
    for (int a = 0; a < inner.dim; ++a) {
        const auto [olo, ohi] = scaled_interval(outer, a, base);
        const auto [ilo, ihi] = scaled_interval(inner, a, base);
        if (ilo < olo || ihi > ohi) return false;
    }
    return true;
}

bool intersects(const DyadicCube& a, const DyadicCube& b) {
    if (a.dim != b.dim) return false;
    const int base = std::min(a.level, b.level);
    for (int ax = 0; ax < a.dim; ++ax) {
        const auto [alo, ahi] = scaled_interval(a, ax, base);
        const auto [blo, bhi] = scaled_interval(b, ax, base);
        if (std::max(alo, blo) >= std::min(ahi, bhi)) return false;
    }
    return true;
}

bool inside_window(const DyadicCube& q, const Window& w) {
    if (q.dim != w.dim || q.level > w.level) return false;
    const int sh = w.level - q.level;
    for (int a = 0; a < q.dim; ++a) {
        const std::int64_t wlo = 3 * w.origin[a] * (std::int64_t{1} << sh);
        const std::int64_t whi = 3 * (w.origin[a] + 1) * (std::int64_t{1} << sh);
        const std::int64_t lo = q.scaled_lower(a);
        if (lo < wlo || lo + 3 > whi) return false;
    }
    return true;
}

std::vector<DyadicCube> enumerate_cubes(const Window& w, const Shift& beta, int min_level, int max_level) {
    check_dim(w.dim);
    if (min_level > max_level) throw UsageError("enumerate_cubes: min_level > max_level");
    if (w.level - min_level > 40) throw UsageError("enumerate_cubes: level range too deep");
    std::vector<DyadicCube> out;
    for (int k = std::min(max_level, w.level); k >= min_level; --k) {
        DyadicCube proto;
        proto.dim = w.dim;
        proto.shift = beta;
        proto.level = k;
        IVec lo{}, hi{};
        bool any = true;
        const std::int64_t scale = std::int64_t{1} << (w.level - k);
        for (int a = 0; a < w.dim; ++a) {
            const std::int64_t e = proto.offset_thirds(a);
            lo[a] = ceil_div(3 * scale * w.origin[a] - e, 3);
            hi[a] = floor_div(3 * scale * (w.origin[a] + 1) - e - 3, 3);
            if (hi[a] < lo[a]) any = false;
        }
        if (!any) continue;
        IVec m = lo;
        while (true) {
            proto.index = m;
            out.push_back(proto);
            int a = w.dim - 1;
            while (a >= 0) {
                if (++m[a] <= hi[a]) break;
                m[a] = lo[a];
                --a;
            }
            if (a < 0) break;
        }
    }
    return out;
}

bool covers(const DyadicCube& r, const AxisCube& q) {
    for (int a = 0; a < q.dim; ++a) {
        const long double scale = std::ldexp(3.0L, -r.level);
        const long double lo = static_cast<long double>(q.lower[a]) * scale;
        const long double hi = (static_cast<long double>(q.lower[a]) + q.side) * scale;
        const long double rlo = static_cast<long double>(r.scaled_lower(a));
        if (lo < rlo || hi > rlo + 3.0L) return false;
    }
    return true;
}

Cover cover_cube(const AxisCube& q) {
    check_dim(q.dim);
    if (!(q.side > 0.0) || !std::isfinite(q.side)) throw UsageError("cover_cube: degenerate cube");
    int k0 = 0;
    std::frexp(q.side, &k0);  // side in [2^(k0-1), 2^k0)
    if (std::ldexp(1.0, k0 - 1) >= q.side) --k0;
    for (int k = k0; k <= k0 + 3; ++k) {
        if (std::ldexp(1.0, k) > 6.0 * q.side) break;
        for (const Shift& beta : all_shifts(q.dim)) {
            DyadicCube r;
            r.dim = q.dim;
            r.shift = beta;
            r.level = k;
            for (int a = 0; a < q.dim; ++a) {
                const long double v = static_cast<long double>(q.lower[a]) * std::ldexp(3.0L, -k) - r.offset_thirds(a);
                r.index[a] = static_cast<std::int64_t>(std::floor(v / 3.0L));
            }
            // Try the lattice neighbour below on axes where rounding of v/3 might have overshot.
            for (int trial = 0; trial < (1 << q.dim); ++trial) {
                DyadicCube c = r;
                for (int a = 0; a < q.dim; ++a)
                    if ((trial >> a) & 1) c.index[a] -= 1;
                if (covers(c, q)) return {beta, c};
            }
        }
    }
    throw Error("cover_cube: no cover found");
}

std::string shift_descriptor(const Shift& s, int dim) {
    std::string out;
    for (int a = 0; a < dim; ++a) out += (a ? "," : "") + std::string(s[a] ? "1/3" : "0");
    return out;
}

std::string to_descriptor(const DyadicCube& q) {
    std::string out = "beta=" + shift_descriptor(q.shift, q.dim) + ";k=" + std::to_string(q.level) + ";m=";
    for (int a = 0; a < q.dim; ++a) out += (a ? "," : "") + std::to_string(q.index[a]);
    return out;
}

DyadicCube parse_cube(const std::string& text) {
    std::map<std::string, std::string> kv;
    for (const auto& part : split(text, ';')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw UsageError("malformed cube descriptor: " + text);
        kv[part.substr(0, eq)] = part.substr(eq + 1);
    }
    if (!kv.count("beta") || !kv.count("k") || !kv.count("m") || kv.size() != 3)
        throw UsageError("cube descriptor needs beta, k, m: " + text);
    const auto betas = split(kv["beta"], ',');
    const auto ms = split(kv["m"], ',');
    if (betas.size() != ms.size() || betas.empty() || betas.size() > static_cast<std::size_t>(kMaxDim))
        throw UsageError("cube descriptor dimension mismatch: " + text);
    DyadicCube q;
    q.dim = static_cast<int>(betas.size());
    q.level = static_cast<int>(parse_int(kv["k"], text));
    for (int a = 0; a < q.dim; ++a) {
        if (betas[a] == "0")
            q.shift[a] = 0;
        else if (betas[a] == "1/3")
            q.shift[a] = 1;
        else
            throw UsageError("cube shift must be 0 or 1/3: " + text);
        q.index[a] = parse_int(ms[a], text);
    }
    return q;
}

std::size_t Mesh::cell_count() const {
    std::size_t n = 1;
    for (int a = 0; a < dim(); ++a) n *= static_cast<std::size_t>(per_side());
    return n;
}

double Mesh::cell_side() const { return window.side() / static_cast<double>(per_side()); }
double Mesh::cell_volume() const { return std::pow(cell_side(), dim()); }

Mesh Mesh::with_subdiv(int s) const {
    if (s != 1 && s != 3) throw UsageError("mesh subdivision must be 1 or 3");
    Mesh m = *this;
    m.subdiv = s;
    return m;
}

bool Mesh::supports(const Shift& beta) const { return subdiv == 3 || is_zero(beta, dim()); }

std::array<double, kMaxDim> Mesh::cell_center(std::size_t cell) const {
    const IVec c = cell_coords(*this, cell);
    std::array<double, kMaxDim> x{};
    for (int a = 0; a < dim(); ++a) x[a] = window.lower(a) + (static_cast<double>(c[a]) + 0.5) * cell_side();
    return x;
}

std::string window_descriptor(const Window& w) {
    std::string out = std::to_string(w.level) + ":";
    for (int a = 0; a < w.dim; ++a) out += (a ? "," : "") + std::to_string(w.origin[a]);
    return out;
}

Window parse_window(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw UsageError("window descriptor must be level:origin: " + text);
    Window w;
    w.level = static_cast<int>(parse_int(text.substr(0, colon), text));
    const auto parts = split(text.substr(colon + 1), ',');
    if (parts.empty() || parts.size() > static_cast<std::size_t>(kMaxDim))
        throw UsageError("window dimension out of range: " + text);
    w.dim = static_cast<int>(parts.size());
    for (int a = 0; a < w.dim; ++a) w.origin[a] = parse_int(parts[a], text);
    return w;
}

std::string Mesh::descriptor() const {
    return "window=" + window_descriptor(window) + ";L=" + std::to_string(level) + ";subdiv=" + std::to_string(subdiv);
}

std::int64_t CellBox::cells() const {
    std::int64_t n = 1;
    for (int a = 0; a < dim; ++a) n *= std::max<std::int64_t>(0, hi[a] - lo[a]);
    return n;
}

bool CellBox::contains(const CellBox& o) const {
    for (int a = 0; a < dim; ++a)
        if (o.lo[a] < lo[a] || o.hi[a] > hi[a]) return false;
    return true;
}

bool CellBox::contains_cell(const IVec& c) const {
    for (int a = 0; a < dim; ++a)
        if (c[a] < lo[a] || c[a] >= hi[a]) return false;
    return true;
}

CellBox CellBox::intersect(const CellBox& o) const {
    CellBox r;
    r.dim = dim;
    for (int a = 0; a < dim; ++a) {
        r.lo[a] = std::max(lo[a], o.lo[a]);
        r.hi[a] = std::max(r.lo[a], std::min(hi[a], o.hi[a]));
    }
    return r;
}

bool CellBox::empty() const {
    for (int a = 0; a < dim; ++a)
        if (hi[a] <= lo[a]) return true;
    return false;
}

IVec cell_coords(const Mesh& m, std::size_t cell) {
    IVec c{};
    const auto n = static_cast<std::size_t>(m.per_side());
    for (int a = m.dim() - 1; a >= 0; --a) {
        c[a] = static_cast<std::int64_t>(cell % n);
        cell /= n;
    }
    return c;
}

std::size_t cell_index(const Mesh& m, const IVec& c) {
    std::size_t idx = 0;
    const auto n = static_cast<std::size_t>(m.per_side());
    for (int a = 0; a < m.dim(); ++a) idx = idx * n + static_cast<std::size_t>(c[a]);
    return idx;
}

CellBox full_box(const Mesh& m) {
    CellBox b;
    b.dim = m.dim();
    for (int a = 0; a < b.dim; ++a) b.hi[a] = m.per_side();
    return b;
}

std::optional<CellBox> try_cube_box(const Mesh& m, const DyadicCube& q) {
    if (q.dim != m.dim()) return std::nullopt;
    const int j = q.level - m.finest_level();
    if (j < 0) return std::nullopt;
    if (!m.supports(q.shift)) return std::nullopt;
    CellBox b;
    b.dim = q.dim;
    const std::int64_t side = static_cast<std::int64_t>(m.subdiv) << j;
    for (int a = 0; a < q.dim; ++a) {
        const std::int64_t lo = (m.subdiv == 3 ? q.scaled_lower(a) : q.index[a]) * (std::int64_t{1} << j) -
                                m.per_side() * m.window.origin[a];
        b.lo[a] = lo;
        b.hi[a] = lo + side;
        if (lo < 0 || lo + side > m.per_side()) return std::nullopt;
    }
    return b;
}

CellBox cube_box(const Mesh& m, const DyadicCube& q) {
    if (q.dim != m.dim()) throw UsageError("cube dimension differs from mesh dimension");
    if (q.level < m.finest_level()) throw ResolutionError("cube " + to_descriptor(q) + " is finer than the mesh");
    if (!m.supports(q.shift)) throw ResolutionError("shifted cube needs the refined (subdiv 3) mesh");
    auto b = try_cube_box(m, q);
    if (!b) throw UsageError("cube " + to_descriptor(q) + " is not inside the window");
    return *b;
}

std::int64_t SparseEntry::e_cells() const {
    std::int64_t n = 0;
    for (auto v : e_mask) n += v ? 1 : 0;
    return n;
}

SparseValidation validate_sparse(const SparseFamily& family) {
    SparseValidation r;
    const Mesh& mesh = family.mesh;
    const std::size_t ncell = mesh.cell_count();
    for (const auto& e : family.entries) {
        if (e.cube.level < mesh.finest_level())
            throw ResolutionError("sparse cube " + to_descriptor(e.cube) + " is finer than the mesh");
        (void)cube_box(mesh, e.cube);
        if (e.e_mask.size() != ncell) throw UsageError("E-mask size does not match the mesh");
    }
    if (family.entries.empty()) return r;

    auto fail = [&](bool& flag, const std::string& why) {
        if (flag && r.failure.empty()) r.failure = why;
        flag = false;
    };

    std::map<int, std::vector<const SparseEntry*>> by_k;
    for (const auto& e : family.entries) by_k[e.k].push_back(&e);
    const int kmin = by_k.begin()->first, kmax = by_k.rbegin()->first;

    std::map<int, std::vector<std::uint8_t>> a_sets;
    for (int k = kmin; k <= kmax; ++k) {
        auto& mask = a_sets[k];
        mask.assign(ncell, 0);
        for (const SparseEntry* e : by_k[k]) {
            for_each_cell(mesh, cube_box(mesh, e->cube), [&](std::size_t idx, const IVec&) {
                if (mask[idx]) fail(r.level_disjoint, "cubes at level k=" + std::to_string(k) + " overlap");
                mask[idx] = 1;
            });
        }
    }
    for (int k = kmin; k < kmax; ++k) {
        const auto& a = a_sets[k];
        const auto& b = a_sets[k + 1];
        for (std::size_t i = 0; i < ncell; ++i)
            if (b[i] && !a[i]) {
                fail(r.nested, "A_" + std::to_string(k + 1) + " is not inside A_" + std::to_string(k));
                break;
            }
    }
    std::vector<std::uint8_t> e_union(ncell, 0);
    for (const auto& e : family.entries) {
        const CellBox box = cube_box(mesh, e.cube);
        const std::vector<std::uint8_t>* next = a_sets.count(e.k + 1) ? &a_sets[e.k + 1] : nullptr;
        std::int64_t inside = 0;
        for_each_cell(mesh, box, [&](std::size_t idx, const IVec&) {
            if (next && (*next)[idx]) ++inside;
        });
        const double ratio = static_cast<double>(inside) / static_cast<double>(box.cells());
        r.packing = std::max(r.packing, ratio);
        if (ratio > 0.5) fail(r.packing_ok, "packing " + std::to_string(ratio) + " at " + to_descriptor(e.cube));

        std::int64_t ecount = 0;
        for (std::size_t i = 0; i < ncell; ++i) {
            if (!e.e_mask[i]) continue;
            ++ecount;
            if (!box.contains_cell(cell_coords(mesh, i)))
                fail(r.e_contained, "E_Q leaves Q at " + to_descriptor(e.cube));
            if (e_union[i]) fail(r.e_disjoint, "E sets overlap at " + to_descriptor(e.cube));
            e_union[i] = 1;
        }
        if (2 * ecount < box.cells()) fail(r.e_large, "|E_Q| < |Q|/2 at " + to_descriptor(e.cube));
    }
    return r;
}

SparseFamily make_sparse_family(const Mesh& mesh, const Shift& beta, std::vector<std::pair<DyadicCube, int>> cubes) {
    SparseFamily fam;
    fam.mesh = mesh;
    fam.beta = beta;
    const std::size_t ncell = mesh.cell_count();
    std::map<int, std::vector<std::uint8_t>> a_sets;
    for (const auto& [q, k] : cubes) {
        auto& mask = a_sets[k];
        if (mask.empty()) mask.assign(ncell, 0);
        for_each_cell(mesh, cube_box(mesh, q), [&](std::size_t idx, const IVec&) { mask[idx] = 1; });
    }
    for (const auto& [q, k] : cubes) {
        SparseEntry e;
        e.cube = q;
        e.k = k;
        e.box = cube_box(mesh, q);
        e.e_mask.assign(ncell, 0);
        const auto it = a_sets.find(k + 1);
        for_each_cell(mesh, e.box, [&](std::size_t idx, const IVec&) {
            if (it == a_sets.end() || !it->second[idx]) e.e_mask[idx] = 1;
        });
        fam.entries.push_back(std::move(e));
    }
    fam.packing = validate_sparse(fam).packing;
    return fam;
}

void write_sparse(std::ostream& out, const SparseFamily& family) {
    out << "# sparse " << family.mesh.descriptor() << ";beta=" << shift_descriptor(family.beta, family.mesh.dim())
        << ";base=" << family.base << "\n";
    for (const auto& e : family.entries) {
        out << to_descriptor(e.cube) << " " << e.k << " ";
        // Runs over the cube's cells in row-major order, alternating absent/present, starting with absent.
        std::vector<std::int64_t> runs{0};
        std::uint8_t cur = 0;
        for_each_cell(family.mesh, e.box, [&](std::size_t idx, const IVec&) {
            const std::uint8_t v = e.e_mask[idx] ? 1 : 0;
            if (v != cur) {
                runs.push_back(0);
                cur = v;
            }
            ++runs.back();
        });
        for (std::size_t i = 0; i < runs.size(); ++i) out << (i ? "," : "") << runs[i];
        out << "\n";
    }
}

Mesh parse_mesh(const std::string& text) {
    std::map<std::string, std::string> kv;
    for (const auto& part : split(text, ';')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw UsageError("malformed mesh descriptor: " + text);
        kv[part.substr(0, eq)] = part.substr(eq + 1);
    }
    if (kv.size() != 3 || !kv.count("window") || !kv.count("L") || !kv.count("subdiv"))
        throw UsageError("mesh descriptor needs window, L, subdiv: " + text);
    Mesh m;
    m.window = parse_window(kv["window"]);
    m.level = static_cast<int>(parse_int(kv["L"], text));
    m.subdiv = static_cast<int>(parse_int(kv["subdiv"], text));
    if (m.level < 0 || (m.subdiv != 1 && m.subdiv != 3)) throw UsageError("bad mesh level or subdiv: " + text);
    return m;
}

SparseFamily read_sparse(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header.rfind("# sparse ", 0) != 0) throw UsageError("missing sparse header");
    std::map<std::string, std::string> kv;
    for (const auto& part : split(header.substr(9), ';')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw UsageError("malformed sparse header");
        kv[part.substr(0, eq)] = part.substr(eq + 1);
    }
    for (const char* key : {"window", "L", "subdiv", "beta", "base"})
        if (!kv.count(key)) throw UsageError(std::string("sparse header missing ") + key);
    SparseFamily fam;
    fam.mesh.window = parse_window(kv["window"]);
    fam.mesh.level = static_cast<int>(parse_int(kv["L"], "sparse header"));
    fam.mesh.subdiv = static_cast<int>(parse_int(kv["subdiv"], "sparse header"));
    if (fam.mesh.subdiv != 1 && fam.mesh.subdiv != 3) throw UsageError("sparse header subdiv must be 1 or 3");
    fam.base = std::stod(kv["base"]);
    const auto betas = split(kv["beta"], ',');
    for (std::size_t a = 0; a < betas.size() && a < static_cast<std::size_t>(kMaxDim); ++a)
        fam.beta[a] = betas[a] == "1/3" ? 1 : 0;
    const std::size_t ncell = fam.mesh.cell_count();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string desc, runs;
        int k = 0;
        if (!(ls >> desc >> k >> runs)) throw UsageError("malformed sparse line: " + line);
        SparseEntry e;
        e.cube = parse_cube(desc);
        e.k = k;
        e.box = cube_box(fam.mesh, e.cube);
        e.e_mask.assign(ncell, 0);
        std::vector<std::int64_t> rl;
        for (const auto& r : split(runs, ',')) rl.push_back(parse_int(r, "sparse run lengths"));
        std::size_t ri = 0;
        std::int64_t left = rl.empty() ? 0 : rl[0];
        std::uint8_t cur = 0;
        std::int64_t seen = 0;
        for_each_cell(fam.mesh, e.box, [&](std::size_t idx, const IVec&) {
            while (left == 0 && ri + 1 < rl.size()) {
                ++ri;
                left = rl[ri];
                cur ^= 1;
            }
            if (left == 0) throw UsageError("sparse run lengths shorter than the cube: " + line);
            e.e_mask[idx] = cur;
            --left;
            ++seen;
        });
        std::int64_t total = 0;
        for (auto v : rl) total += v;
        if (total != seen) throw UsageError("sparse run lengths do not match the cube: " + line);
        fam.entries.push_back(std::move(e));
    }
    fam.packing = validate_sparse(fam).packing;
    return fam;
}

}  // namespace olab
