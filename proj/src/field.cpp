#include "olab/field.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "olab/errors.hpp"

namespace olab {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw UsageError(std::string("non-finite generator parameter: ") + what);
}

double floor_weight(double v) { return v < kWeightFloor ? kWeightFloor : v; }

std::vector<double> lognormal_values(const Mesh& mesh, const gen::Lognormal& g) {
    constexpr int kModes = 16;
    const int d = mesh.dim();
    std::mt19937_64 eng(splitmix64(g.seed));
    struct Mode {
        double amp, phase;
        std::array<double, kMaxDim> freq;
    };
    std::vector<Mode> modes(kModes);
    for (auto& m : modes) {
        const double u1 = unit_uniform(eng()), u2 = unit_uniform(eng());
        m.amp = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
        m.phase = 2.0 * std::numbers::pi * unit_uniform(eng());
        for (int a = 0; a < kMaxDim; ++a) m.freq[a] = a < d ? 8.0 * unit_uniform(eng()) - 4.0 : 0.0;
    }
    const double norm = g.roughness / std::sqrt(0.5 * kModes);
    std::vector<double> out(mesh.cell_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto x = mesh.cell_center(i);
        double s = 0.0;
        for (const auto& m : modes) {
            double arg = m.phase;
            for (int a = 0; a < d; ++a) arg += 2.0 * std::numbers::pi * m.freq[a] * (x[a] - mesh.window.lower(a)) / mesh.window.side();
            s += m.amp * std::cos(arg);
        }
        out[i] = std::exp(norm * s);
    }
    return out;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

void Kahan::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

MeshField make_field(const Mesh& mesh, FieldKind kind, const Generator& g) {
    MeshField f;
    f.mesh = mesh;
    f.kind = kind;
    const std::size_t n = mesh.cell_count();
    const int d = mesh.dim();
    std::visit(
        [&](const auto& gg) {
            using T = std::decay_t<decltype(gg)>;
            if constexpr (std::is_same_v<T, gen::Constant>) {
                require_finite(gg.c, "c");
                f.values.assign(n, gg.c);
            } else if constexpr (std::is_same_v<T, gen::Indicator>) {
                f.values.assign(n, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto x = mesh.cell_center(i);
                    bool in = true;
                    for (int a = 0; a < d; ++a) {
                        require_finite(gg.lo[a], "lo");
                        require_finite(gg.hi[a], "hi");
                        if (x[a] < gg.lo[a] || x[a] >= gg.hi[a]) in = false;
                    }
                    f.values[i] = in ? 1.0 : 0.0;
                }
            } else if constexpr (std::is_same_v<T, gen::PowerSingularity>) {
                require_finite(gg.gamma, "gamma");
                for (int a = 0; a < d; ++a) require_finite(gg.center[a], "center");
                if (kind == FieldKind::Weight && !(gg.gamma > -d))
                    throw UsageError("power singularity weight needs gamma > -d");
                f.values.resize(n);
                const double half = 0.5 * mesh.cell_side();
                for (std::size_t i = 0; i < n; ++i) {
                    const auto x = mesh.cell_center(i);
                    double r2 = 0.0;
                    for (int a = 0; a < d; ++a) r2 += (x[a] - gg.center[a]) * (x[a] - gg.center[a]);
                    f.values[i] = std::pow(std::max(std::sqrt(r2), half), gg.gamma);
                }
            } else if constexpr (std::is_same_v<T, gen::Lognormal>) {
                require_finite(gg.roughness, "roughness");
                f.values = lognormal_values(mesh, gg);
            } else {
                if (gg.values.size() != n)
                    throw UsageError("from_values: expected " + std::to_string(n) + " values, got " +
                                     std::to_string(gg.values.size()));
                for (double v : gg.values) require_finite(v, "value");
                f.values = gg.values;
            }
        },
        g);
    if (kind == FieldKind::Weight) {
        for (double& v : f.values) {
            if (v < 0.0) throw UsageError("weights must be nonnegative");
            v = floor_weight(v);
        }
    }
    return f;
}

MeshField make_weight(const Mesh& mesh, const Generator& g) { return make_field(mesh, FieldKind::Weight, g); }
MeshField make_function(const Mesh& mesh, const Generator& g) { return make_field(mesh, FieldKind::Function, g); }

namespace {

std::map<std::string, std::string> parse_params(const std::string& body, char sep = ',') {
    std::map<std::string, std::string> kv;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("malformed generator parameter: " + item);
        std::string key = item.substr(0, eq);
        // repeated keys accumulate per axis
        if (kv.count(key)) kv[key] += " " + item.substr(eq + 1);
        else kv[key] = item.substr(eq + 1);
    }
    return kv;
}

std::vector<double> numbers(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw UsageError("malformed number: " + tok);
        }
        if (used != tok.size()) throw UsageError("malformed number: " + tok);
        out.push_back(v);
    }
    return out;
}

std::array<double, kMaxDim> axis_values(const std::map<std::string, std::string>& kv, const std::string& key, int dim,
                                        double fallback) {
    std::array<double, kMaxDim> out{};
    out.fill(fallback);
    auto it = kv.find(key);
    if (it == kv.end()) return out;
    auto v = numbers(it->second);
    if (v.size() == 1) v.assign(static_cast<std::size_t>(dim), v[0]);
    if (v.size() != static_cast<std::size_t>(dim)) throw UsageError("generator '" + key + "' needs one value per axis");
    for (int a = 0; a < dim; ++a) out[a] = v[static_cast<std::size_t>(a)];
    return out;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

Generator parse_generator(const std::string& text, int dim) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string body = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "values") {
        gen::FromValues g;
        std::string b = body;
        for (char& c : b)
            if (c == ';') c = ' ';
        g.values = numbers(b);
        return g;
    }
    const auto kv = body.empty() ? std::map<std::string, std::string>{} : parse_params(body);
    auto single = [&](const std::string& key, double fallback) {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        const auto v = numbers(it->second);
        if (v.size() != 1) throw UsageError("generator '" + key + "' takes one value");
        return v[0];
    };
    if (head == "constant") return gen::Constant{single("c", 1.0)};
    if (head == "indicator") {
        gen::Indicator g;
        g.lo = axis_values(kv, "lo", dim, 0.0);
        g.hi = axis_values(kv, "hi", dim, 1.0);
        return g;
    }
    if (head == "powersing") {
        gen::PowerSingularity g;
        g.center = axis_values(kv, "center", dim, 0.0);
        g.gamma = single("gamma", 0.0);
        return g;
    }
    if (head == "lognormal") {
        gen::Lognormal g;
        const double s = single("seed", 0.0);
        if (s < 0.0 || s != std::floor(s)) throw UsageError("lognormal seed must be a nonnegative integer");
        g.seed = static_cast<std::uint64_t>(s);
        g.roughness = single("roughness", 1.0);
        return g;
    }
    throw UsageError("unknown field generator: " + text);
}

std::string generator_descriptor(const Generator& g, int dim) {
    return std::visit(
        [&](const auto& gg) -> std::string {
            using T = std::decay_t<decltype(gg)>;
            auto axes = [&](const std::string& key, const std::array<double, kMaxDim>& v) {
                std::string s;
                for (int a = 0; a < dim; ++a) s += (a ? "," : "") + key + "=" + num(v[a]);
                return s;
            };
            if constexpr (std::is_same_v<T, gen::Constant>) return "constant:c=" + num(gg.c);
            else if constexpr (std::is_same_v<T, gen::Indicator>) return "indicator:" + axes("lo", gg.lo) + "," + axes("hi", gg.hi);
            else if constexpr (std::is_same_v<T, gen::PowerSingularity>)
                return "powersing:" + axes("center", gg.center) + ",gamma=" + num(gg.gamma);
            else if constexpr (std::is_same_v<T, gen::Lognormal>)
                return "lognormal:seed=" + std::to_string(gg.seed) + ",roughness=" + num(gg.roughness);
            else {
                std::string s = "values:";
                for (std::size_t i = 0; i < gg.values.size(); ++i) s += (i ? ";" : "") + num(gg.values[i]);
                return s;
            }
        },
        g);
}

MeshField refine(const MeshField& f) {
    if (f.mesh.subdiv == 3) return f;
    MeshField r;
    r.mesh = f.mesh.with_subdiv(3);
    r.kind = f.kind;
    r.values.resize(r.mesh.cell_count());
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        IVec c = cell_coords(r.mesh, i);
        for (int a = 0; a < r.mesh.dim(); ++a) c[a] /= 3;
        r.values[i] = f.values[cell_index(f.mesh, c)];
    }
    return r;
}

MeshField on_mesh(const MeshField& f, const Mesh& target) {
    if (f.mesh == target) return f;
    if (f.mesh.with_subdiv(3) == target) return refine(f);
    throw UsageError("field mesh " + f.mesh.descriptor() + " cannot be mapped to " + target.descriptor());
}

void require_same_mesh(const MeshField& a, const MeshField& b) {
    if (!(a.mesh == b.mesh)) throw UsageError("fields live on different meshes: " + a.mesh.descriptor() + " vs " + b.mesh.descriptor());
}

double integrate(const MeshField& f, const CellBox& box) {
    Kahan k;
    for_each_cell(f.mesh, box, [&](std::size_t idx, const IVec&) { k.add(f.values[idx]); });
    return k.value() * f.mesh.cell_volume();
}

double integrate(const MeshField& f, const DyadicCube& q) { return integrate(f, cube_box(f.mesh, q)); }

double integrate(const MeshField& f) { return integrate(f, full_box(f.mesh)); }

double average(const MeshField& f, const MeshField& sigma, const CellBox& box) {
    require_same_mesh(f, sigma);
    Kahan num, den;
    for_each_cell(f.mesh, box, [&](std::size_t idx, const IVec&) {
        num.add(std::abs(f.values[idx]) * sigma.values[idx]);
        den.add(sigma.values[idx]);
    });
    if (!(den.value() > 0.0)) throw DegenerateError("average over a cube of zero weight");
    return num.value() / den.value();
}

double average(const MeshField& f, const MeshField& sigma, const DyadicCube& q) {
    return average(f, sigma, cube_box(f.mesh, q));
}

MeshField map_field(const MeshField& f, FieldKind kind, const std::function<double(double)>& op) {
    MeshField r;
    r.mesh = f.mesh;
    r.kind = kind;
    r.values.resize(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) r.values[i] = op(f.values[i]);
    if (kind == FieldKind::Weight)
        for (double& v : r.values) v = floor_weight(v);
    return r;
}

MeshField product_field(const MeshField& a, const MeshField& b, FieldKind kind) {
    require_same_mesh(a, b);
    MeshField r;
    r.mesh = a.mesh;
    r.kind = kind;
    r.values.resize(a.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) r.values[i] = a.values[i] * b.values[i];
    if (kind == FieldKind::Weight)
        for (double& v : r.values) v = floor_weight(v);
    return r;
}

MeshField scaled(const MeshField& f, double c) {
    MeshField r = f;
    for (double& v : r.values) v *= c;
    return r;
}

MeshField indicator_of_box(const Mesh& mesh, const CellBox& box) {
    MeshField r;
    r.mesh = mesh;
    r.kind = FieldKind::Function;
    r.values.assign(mesh.cell_count(), 0.0);
    for_each_cell(mesh, box, [&](std::size_t idx, const IVec&) { r.values[idx] = 1.0; });
    return r;
}

bool is_zero(const MeshField& f) {
    for (double v : f.values)
        if (v != 0.0) return false;
    return true;
}

void write_field_csv(std::ostream& out, const MeshField& f) {
    out << "# field " << f.mesh.descriptor() << ";kind=" << (f.kind == FieldKind::Weight ? "weight" : "function")
        << "\n";
    std::ostringstream os;
    os.precision(17);
    for (double v : f.values) os << v << "\n";
    out << os.str();
}

MeshField read_field_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header.rfind("# field ", 0) != 0) throw UsageError("field CSV: missing header");
    std::map<std::string, std::string> kv;
    std::stringstream ss(header.substr(8));
    std::string part;
    while (std::getline(ss, part, ';')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw UsageError("field CSV: malformed header");
        kv[part.substr(0, eq)] = part.substr(eq + 1);
    }
    for (const char* key : {"window", "L", "subdiv", "kind"})
        if (!kv.count(key)) throw UsageError(std::string("field CSV header missing ") + key);
    MeshField f;
    f.mesh.window = parse_window(kv["window"]);
    try {
        f.mesh.level = std::stoi(kv["L"]);
        f.mesh.subdiv = std::stoi(kv["subdiv"]);
    } catch (const std::exception&) {
        throw UsageError("field CSV: malformed L or subdiv");
    }
    if (f.mesh.level < 0 || f.mesh.level > 24) throw UsageError("field CSV: L out of range");
    if (f.mesh.subdiv != 1 && f.mesh.subdiv != 3) throw UsageError("field CSV: subdiv must be 1 or 3");
    if (kv["kind"] == "weight")
        f.kind = FieldKind::Weight;
    else if (kv["kind"] == "function")
        f.kind = FieldKind::Function;
    else
        throw UsageError("field CSV: kind must be weight or function");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(line, &used);
        } catch (const std::exception&) {
            throw UsageError("field CSV: malformed value '" + line + "'");
        }
        while (used < line.size() && std::isspace(static_cast<unsigned char>(line[used]))) ++used;
        if (used != line.size() || !std::isfinite(v)) throw UsageError("field CSV: malformed value '" + line + "'");
        f.values.push_back(v);
    }
    if (f.values.size() != f.mesh.cell_count())
        throw UsageError("field CSV: expected " + std::to_string(f.mesh.cell_count()) + " values, got " +
                         std::to_string(f.values.size()));
    if (f.kind == FieldKind::Weight)
        for (double& v : f.values) {
            if (v < 0.0) throw UsageError("field CSV: negative weight");
            v = floor_weight(v);
        }
    return f;
}

MeshField load_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open field file: " + path);
    return read_field_csv(in);
}

void save_field_csv(const std::string& path, const MeshField& f) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write field file: " + path);
    write_field_csv(out, f);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace olab
