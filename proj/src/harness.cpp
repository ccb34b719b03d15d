#include "olab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "olab/carleson.hpp"
#include "olab/errors.hpp"
#include "olab/field.hpp"
#include "olab/growth.hpp"
#include "olab/maximal.hpp"
#include "olab/orlicz.hpp"
#include "olab/weights.hpp"

namespace olab {

const char* const kArtifactVersion = "0.4.0";

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundSlack = 1e-9;
constexpr double kTrendLimit = 2.0;

struct TheoremInfo {
    TheoremId id;
    const char* name;
    bool two_sided;
    // default cube set is the standard grid rather than all 2^d grids
    bool grid_default;
};

constexpr TheoremInfo kTheorems[] = {
    {TheoremId::WEAK_TYPE, "WEAK_TYPE", false, true},
    {TheoremId::CARLESON_EMBED, "CARLESON_EMBED", false, true},
    {TheoremId::CARLESON_CONVERSE, "CARLESON_CONVERSE", false, true},
    {TheoremId::M_CLASS_BOUND, "M_CLASS_BOUND", false, true},
    {TheoremId::M_CLASS_EQUIV, "M_CLASS_EQUIV", true, true},
    {TheoremId::K_CLASS_EQUIV, "K_CLASS_EQUIV", true, true},
    {TheoremId::SAWYER_SUFF, "SAWYER_SUFF", false, false},
    {TheoremId::SAWYER_LOCAL, "SAWYER_LOCAL", false, true},
    {TheoremId::SAWYER_PQ, "SAWYER_PQ", true, false},
    {TheoremId::S_ALPHA_BOUND, "S_ALPHA_BOUND", false, false},
    {TheoremId::S_ALPHA_NECESSITY, "S_ALPHA_NECESSITY", true, false},
    {TheoremId::NORM_B, "NORM_B", false, false},
    {TheoremId::NORM_A, "NORM_A", false, false},
    {TheoremId::NORM_ATILDE_W, "NORM_ATILDE_W", false, false},
    {TheoremId::NORM_A_PROD, "NORM_A_PROD", false, false},
    {TheoremId::ORLICZ_MAX_BOUND, "ORLICZ_MAX_BOUND", false, true},
    {TheoremId::LOG_MAX_LP, "LOG_MAX_LP", false, false},
};

const TheoremInfo& info(TheoremId id) {
    for (const auto& t : kTheorems)
        if (t.id == id) return t;
    throw UsageError("unknown theorem id");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(x)) throw ConfigError(key + ": not a finite number: '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError(key + ": not an integer: '" + v + "'");
    return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError(key + ": out of range: '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": not a boolean: '" + v + "'");
}

// "phi" -> 0, "phi2" -> 2, anything else -> -1
int indexed_key(const std::string& key, const std::string& stem) {
    if (key.rfind(stem, 0) != 0) return -1;
    const std::string rest = key.substr(stem.size());
    if (rest.empty()) return 0;
    if (rest.size() > 1 || rest[0] < '1' || rest[0] > '9') return -1;
    return rest[0] - '0';
}

void set_indexed(std::vector<std::string>& list, int idx, const std::string& v) {
    if (idx == 0) {
        list = {v};
        return;
    }
    const auto i = static_cast<std::size_t>(idx - 1);
    if (list.size() <= i) list.resize(i + 1, list.empty() ? v : list.back());
    list[i] = v;
}

const std::string& at(const std::vector<std::string>& list, int i) {
    return list.size() == 1 ? list[0] : list[static_cast<std::size_t>(i)];
}

CubeSet resolved_cube_set(const ExperimentConfig& cfg) {
    if (!cfg.cube_set.empty()) return parse_cube_set(cfg.cube_set, cfg.d);
    return info(cfg.theorem).grid_default ? CubeSet::single() : CubeSet::all_grids();
}

Window resolved_window(const ExperimentConfig& cfg) { return cfg.window ? *cfg.window : Window::unit(cfg.d); }

template <class F>
auto as_config_error(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

// Everything parsed once per experiment.
struct Setup {
    TheoremId id = TheoremId::WEAK_TYPE;
    int n = 1;
    int d = 1;
    Window window;
    std::vector<GrowthFunction> phis;
    GrowthFunction psi;
    GrowthFunction phi;
    GrowthFunction theta;  // psi o phi^{-1}
    CubeSet cs;
    Shift beta{};
    double alpha = 0.0;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("hypothesis failed: " + what);
}

bool fails(const GrowthFunction& f, GrowthProperty p, const std::optional<GrowthFunction>& aux = std::nullopt) {
    return classify(f, p, default_grid(), aux).verdict == Verdict::Fails;
}

void check_hypotheses(const Setup& s, const ExperimentConfig& cfg) {
    using P = GrowthProperty;
    const auto id = s.id;
    auto nabla2_all = [&] {
        for (int i = 0; i < s.n; ++i)
            require(!fails(s.phis[static_cast<std::size_t>(i)], P::Nabla2),
                    "Phi_" + std::to_string(i + 1) + " in nabla_2 (" + s.phis[static_cast<std::size_t>(i)].descriptor() + ")");
    };
    auto psi_tilde = [&] { require(!fails(s.psi, P::QuotientBound), "Psi quotient bound (" + s.psi.descriptor() + ")"); };
    auto psi_over_phi = [&] { require(!fails(s.phi, P::RatioMonotone, s.psi), "Psi/Phi nondecreasing"); };
    auto psi_over_each = [&] {
        for (int i = 0; i < s.n; ++i)
            require(!fails(s.phis[static_cast<std::size_t>(i)], P::RatioMonotone, s.psi),
                    "Psi/Phi_" + std::to_string(i + 1) + " nondecreasing");
    };
    auto equal_weights = [&] { require(s.n == 1 || cfg.equal_weights, "equal weights sigma_i = sigma (set equal_weights)"); };

    switch (id) {
        case TheoremId::WEAK_TYPE:
            equal_weights();
            break;
        case TheoremId::CARLESON_EMBED:
        case TheoremId::CARLESON_CONVERSE:
            psi_over_phi();
            break;
        case TheoremId::M_CLASS_BOUND:
            nabla2_all();
            psi_tilde();
            psi_over_phi();
            break;
        case TheoremId::M_CLASS_EQUIV:
            equal_weights();
            nabla2_all();
            psi_tilde();
            psi_over_phi();
            break;
        case TheoremId::K_CLASS_EQUIV:
            psi_over_each();
            break;
        case TheoremId::SAWYER_SUFF:
            nabla2_all();
            psi_tilde();
            psi_over_each();
            break;
        case TheoremId::SAWYER_LOCAL:
            require(s.n == 2, "n = 2");
            require(s.alpha < 2.0 * s.d, "alpha < 2d");
            require(!fails(s.phis[1], P::Nabla2), "Phi_2 in nabla_2");
            require(!fails(s.psi, P::DeltaPrime), "Psi in delta'");
            psi_over_each();
            break;
        case TheoremId::SAWYER_PQ:
            require(s.psi.is_power() && s.psi.power_exponent() > 1.0 && s.psi.scale() == 1.0, "Psi = power(q), q > 1");
            psi_over_each();
            break;
        case TheoremId::S_ALPHA_BOUND:
        case TheoremId::NORM_B:
        case TheoremId::NORM_A:
        case TheoremId::NORM_ATILDE_W:
            nabla2_all();
            for (int i = 0; i < s.n; ++i)
                require(!fails(s.phis[static_cast<std::size_t>(i)], P::QuotientBound),
                        "Phi_" + std::to_string(i + 1) + " quotient bound");
            psi_tilde();
            psi_over_phi();
            break;
        case TheoremId::NORM_A_PROD:
            nabla2_all();
            psi_tilde();
            psi_over_each();
            break;
        case TheoremId::S_ALPHA_NECESSITY:
            psi_tilde();
            psi_over_phi();
            break;
        case TheoremId::ORLICZ_MAX_BOUND:
            require(s.n == 1, "n = 1");
            nabla2_all();
            break;
        case TheoremId::LOG_MAX_LP:
            require(s.n == 1, "n = 1");
            break;
    }
}

Setup make_setup(const ExperimentConfig& cfg) {
    validate_config(cfg);
    Setup s;
    s.id = cfg.theorem;
    s.n = cfg.n;
    s.d = cfg.d;
    s.window = resolved_window(cfg);
    for (int i = 0; i < cfg.n; ++i) s.phis.push_back(parse_growth(at(cfg.phis, i)));
    s.psi = parse_growth(cfg.psi);
    s.phi = product_compose(s.phis);
    s.theta = compose_inverse(s.psi, s.phi);
    s.cs = resolved_cube_set(cfg);
    s.beta = s.cs.kind == CubeSetKind::SingleGrid ? s.cs.beta : zero_shift();
    s.alpha = cfg.alpha;
    check_hypotheses(s, cfg);
    return s;
}

struct Instance {
    Mesh mesh;
    std::vector<MeshField> sigmas;
    MeshField omega;
    std::vector<MeshField> fs;
};

Generator stream_generator(const std::string& desc, int dim, std::uint64_t stream) {
    Generator g = parse_generator(desc, dim);
    if (auto* ln = std::get_if<gen::Lognormal>(&g)) ln->seed = splitmix64(ln->seed ^ stream);
    return g;
}

enum Stream : std::uint64_t { kSigma = 0, kOmega = 16, kFunction = 32, kAux = 48, kCubes = 64, kLocal = 80 };

std::uint64_t stream(std::uint64_t tseed, std::uint64_t k) { return splitmix64(tseed + k); }

Instance make_instance(const Setup& s, const ExperimentConfig& cfg, int level, std::uint64_t tseed) {
    Instance in;
    in.mesh = Mesh{s.window, level, 1};
    for (int i = 0; i < s.n; ++i) {
        if (cfg.equal_weights && i > 0) {
            in.sigmas.push_back(in.sigmas[0]);
            continue;
        }
        in.sigmas.push_back(make_weight(in.mesh, stream_generator(at(cfg.sigmas, i), s.d, stream(tseed, kSigma + i))));
    }
    in.omega = make_weight(in.mesh, stream_generator(cfg.omega, s.d, stream(tseed, kOmega)));
    for (int i = 0; i < s.n; ++i)
        in.fs.push_back(make_function(in.mesh, stream_generator(at(cfg.functions, i), s.d, stream(tseed, kFunction + i))));
    return in;
}

double lux(const GrowthFunction& phi, const MeshField& f, const MeshField& w) {
    const NormResult r = luxemburg_norm(phi, f, on_mesh(w, f.mesh));
    return r.infinite ? kInf : r.value;
}

double norm_product(const Setup& s, const Instance& in) {
    double p = 1.0;
    for (int i = 0; i < s.n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        p *= lux(s.phis[k], in.fs[k], in.sigmas[k]);
    }
    return p;
}

std::vector<MeshField> weighted_inputs(const Instance& in) {
    std::vector<MeshField> out;
    for (std::size_t i = 0; i < in.fs.size(); ++i) out.push_back(product_field(in.sigmas[i], in.fs[i], FieldKind::Function));
    return out;
}

double safe_ratio(double a, double b) {
    if (b == 0.0) return a == 0.0 ? 0.0 : kInf;
    return a / b;
}

// Integral of psi(t) * w over the cells of box, t and w on the same mesh.
double local_modular(const GrowthFunction& psi, const MeshField& t, const MeshField& w, const CellBox& box) {
    Kahan k;
    for_each_cell(t.mesh, box, [&](std::size_t idx, const IVec&) { k.add(eval(psi, t[idx]) * w[idx]); });
    return k.value() * t.mesh.cell_volume();
}

double lp_norm(const MeshField& f, double p) {
    Kahan k;
    for (double v : f.values) k.add(std::pow(std::abs(v), p));
    return std::pow(k.value() * f.mesh.cell_volume(), 1.0 / p);
}

// The first cube of the enumeration (the coarsest) and count - 1 further distinct picks.
std::vector<DyadicCube> sample_cubes(const Mesh& mesh, const Shift& beta, int count, std::uint64_t seed) {
    const int top = mesh.window.level;
    const int bottom = std::min(mesh.finest_level() + 1, top);
    std::vector<DyadicCube> all;
    for (const auto& q : enumerate_cubes(mesh.window, beta, bottom, top))
        if (try_cube_box(mesh, q)) all.push_back(q);
    if (all.empty() || count <= 0) return {};
    if (static_cast<std::size_t>(count) >= all.size()) return all;
    std::vector<std::size_t> pick{0};
    std::uint64_t st = seed;
    while (pick.size() < static_cast<std::size_t>(count)) {
        st = splitmix64(st);
        const auto idx = std::min(all.size() - 1, static_cast<std::size_t>(unit_uniform(st) * static_cast<double>(all.size())));
        if (std::find(pick.begin(), pick.end(), idx) == pick.end()) pick.push_back(idx);
    }
    std::sort(pick.begin(), pick.end());
    std::vector<DyadicCube> out;
    for (auto i : pick) out.push_back(all[i]);
    return out;
}

struct Outcome {
    double lhs = 0.0;
    double rhs = 0.0;
};

CarlesonSequence trial_sequence(const Setup& s, const ExperimentConfig& cfg, const Instance& in, const MeshField& nu,
                                std::uint64_t tseed) {
    const MeshField g = make_function(in.mesh, stream_generator(at(cfg.functions, 0), s.d, stream(tseed, kAux)));
    const SparseFamily fam = sparse_decompose({nu}, {g}, 2.0, s.beta);
    return sequence_from_sparse(fam, SparsePayload::weight(on_mesh(nu, fam.mesh)));
}

std::vector<MeshField> all_on(const std::vector<MeshField>& fs, const Mesh& m) {
    std::vector<MeshField> out;
    for (const auto& f : fs) out.push_back(on_mesh(f, m));
    return out;
}

Outcome sawyer_local(const Setup& s, const ExperimentConfig& cfg, const Instance& coarse_in, std::uint64_t tseed,
                     Exec exec) {
    Instance in = coarse_in;
    if (!in.mesh.supports(s.beta)) {
        in.mesh = in.mesh.with_subdiv(3);
        for (auto& f : in.sigmas) f = refine(f);
        for (auto& f : in.fs) f = refine(f);
        in.omega = refine(in.omega);
    }
    // R is drawn on the level-L lattice so both refinement levels test the same cube.
    Mesh pick_mesh{s.window, cfg.level, in.mesh.subdiv};
    const auto cands = sample_cubes(pick_mesh, s.beta, 1 << 20, 0);
    if (cands.empty()) throw ConfigError("mesh too coarse for a localized cube");
    std::uint64_t st = stream(tseed, kLocal);
    const DyadicCube R = cands[std::min(cands.size() - 1, static_cast<std::size_t>(unit_uniform(st) * static_cast<double>(cands.size())))];

    const CellBox box = cube_box(in.mesh, R);
    const MeshField chi = indicator_of_box(in.mesh, box);
    MeshField g = product_field(in.fs[1], chi, FieldKind::Function);
    const double gn = lux(s.phis[1], g, in.sigmas[1]);
    if (!(gn > 0.0) || !std::isfinite(gn)) throw DomainError("localized function has no finite nonzero norm");
    g = scaled(g, 1.0 / gn);
    const MeshField t = fractional_multilinear_maximal({product_field(in.sigmas[0], chi, FieldKind::Function),
                                                        product_field(in.sigmas[1], g, FieldKind::Function)},
                                                       s.alpha, CubeSet::single(s.beta), exec)
                            .field;
    Outcome o;
    o.lhs = local_modular(s.psi, t, on_mesh(in.omega, t.mesh), cube_box(t.mesh, R));
    const WeightSystem ws = WeightSystem::make(coarse_in.sigmas, s.phis);
    const double l = pair_class_constant(ClassKind::L_ALPHA, s.alpha, ws, coarse_in.omega, s.psi, CubeSet::all_grids(), exec).value;
    o.rhs = l / eval(s.psi, inverse(s.phis[0], 1.0 / integrate(in.sigmas[0], R)));
    return o;
}

Outcome evaluate(const Setup& s, const ExperimentConfig& cfg, const Instance& in, std::uint64_t tseed, Exec exec) {
    Outcome o;
    auto pair = [&](ClassKind k) {
        const WeightSystem ws = WeightSystem::make(in.sigmas, s.phis);
        return pair_class_constant(k, s.alpha, ws, in.omega, s.psi, s.cs, exec).value;
    };
    auto a_inf = [&](std::size_t i) { return muckenhoupt_constant(ClassKind::A_INF_FW, 0.0, in.sigmas[i], s.cs, exec).value; };
    auto weighted_norm = [&] {
        const MeshField t = multilinear_weighted_maximal(in.sigmas, in.fs, s.cs, exec).field;
        return lux(s.psi, t, in.omega);
    };
    auto fractional_norm = [&] {
        const MeshField t = fractional_multilinear_maximal(weighted_inputs(in), s.alpha, s.cs, exec).field;
        return lux(s.psi, t, in.omega);
    };
    auto upper = [&](double constant) { return inverse(s.psi, constant) * norm_product(s, in); };

    switch (s.id) {
        case TheoremId::WEAK_TYPE: {
            const auto prof = weak_type_profile(in.sigmas, in.fs, s.phis, s.phi, log_grid(1e-3, 1e3, 64), s.beta);
            o.lhs = prof.sup;
            o.rhs = static_cast<double>(s.n);
            break;
        }
        case TheoremId::CARLESON_EMBED:
        case TheoremId::CARLESON_CONVERSE: {
            const MeshField nu = nu_sigma(WeightSystem::make(in.sigmas, s.phis));
            const CarlesonSequence seq = trial_sequence(s, cfg, in, nu, tseed);
            const CarlesonConstant lam = carleson_constant(seq, on_mesh(nu, seq.mesh), s.theta);
            const auto sig = all_on(in.sigmas, seq.mesh);
            if (s.id == TheoremId::CARLESON_EMBED) {
                o.lhs = embedding_sum(seq, s.psi, sig, all_on(in.fs, seq.mesh), s.phis);
                o.rhs = lam.value;
                break;
            }
            // Testing constant over indicators chi_R, R sampled plus the Carleson argmax.
            auto cubes = sample_cubes(seq.mesh, seq.beta, cfg.test_cubes, stream(tseed, kCubes));
            if (!lam.argmax_cube.empty()) cubes.push_back(parse_cube(lam.argmax_cube));
            double c2 = 0.0;
            for (const auto& r : cubes) {
                const MeshField chi = indicator_of_box(seq.mesh, cube_box(seq.mesh, r));
                c2 = std::max(c2, embedding_sum(seq, s.psi, sig, std::vector<MeshField>(s.n, chi), s.phis));
            }
            o.lhs = lam.value;
            o.rhs = c2;
            break;
        }
        case TheoremId::M_CLASS_BOUND:
        case TheoremId::M_CLASS_EQUIV:
            o.lhs = weighted_norm();
            o.rhs = upper(pair(ClassKind::M));
            break;
        case TheoremId::K_CLASS_EQUIV:
            for (std::size_t i = 0; i < in.sigmas.size(); ++i) {
                const double dbl = muckenhoupt_constant(ClassKind::DOUBLING, 0.0, in.sigmas[i], s.cs, exec).value;
                require(dbl <= cfg.doubling_limit, "sigma_" + std::to_string(i + 1) + " doubling constant " +
                                                       std::to_string(dbl) + " above limit");
            }
            o.lhs = weighted_norm();
            o.rhs = upper(pair(ClassKind::K));
            break;
        case TheoremId::SAWYER_SUFF:
        case TheoremId::SAWYER_PQ:
            o.lhs = fractional_norm();
            o.rhs = upper(pair(ClassKind::L_ALPHA));
            break;
        case TheoremId::SAWYER_LOCAL:
            return sawyer_local(s, cfg, in, tseed, exec);
        case TheoremId::S_ALPHA_BOUND:
        case TheoremId::S_ALPHA_NECESSITY:
            o.lhs = fractional_norm();
            o.rhs = upper(pair(ClassKind::S_ALPHA));
            break;
        case TheoremId::NORM_B:
            o.lhs = fractional_norm();
            o.rhs = upper(pair(ClassKind::B_ALPHA));
            break;
        case TheoremId::NORM_A: {
            double sum = 0.0;
            for (std::size_t i = 0; i < in.sigmas.size(); ++i) sum += eval(s.theta, a_inf(i));
            o.lhs = fractional_norm();
            o.rhs = upper(pair(ClassKind::A_ALPHA) * sum);
            break;
        }
        case TheoremId::NORM_ATILDE_W: {
            const WeightSystem ws = WeightSystem::make(in.sigmas, s.phis);
            const double w = w_class_constant(ws, s.psi, s.cs, exec).value;
            o.lhs = fractional_norm();
            o.rhs = upper(w * pair(ClassKind::A_TILDE_ALPHA));
            break;
        }
        case TheoremId::NORM_A_PROD: {
            double prod = 1.0;
            for (std::size_t i = 0; i < in.sigmas.size(); ++i)
                prod *= std::pow(a_inf(i), upper_type_exponent(compose_inverse(s.psi, s.phis[i])));
            o.lhs = fractional_norm();
            o.rhs = upper(pair(ClassKind::A_ALPHA) * prod);
            break;
        }
        case TheoremId::ORLICZ_MAX_BOUND: {
            const MeshField t = multilinear_weighted_maximal(in.sigmas, in.fs, CubeSet::single(s.beta), exec).field;
            o.lhs = modular(s.phis[0], t, on_mesh(in.sigmas[0], t.mesh));
            o.rhs = modular(s.phis[0], in.fs[0], in.sigmas[0]);
            break;
        }
        case TheoremId::LOG_MAX_LP:
            o.lhs = lp_norm(log_maximal(in.fs[0], s.cs, exec).field, cfg.p);
            o.rhs = lp_norm(in.fs[0], cfg.p);
            break;
    }
    return o;
}

LowerBoundProfile lower_profile(const Setup& s, const ExperimentConfig& cfg, const Instance& in, std::uint64_t tseed,
                                Exec exec) {
    LowerBoundProfile prof;
    const bool fractional = s.id == TheoremId::SAWYER_PQ || s.id == TheoremId::S_ALPHA_NECESSITY;
    MeshField nu;
    if (s.id == TheoremId::M_CLASS_EQUIV || s.id == TheoremId::S_ALPHA_NECESSITY)
        nu = nu_sigma(WeightSystem::make(in.sigmas, s.phis));
    for (const auto& r : sample_cubes(in.mesh, zero_shift(), cfg.test_cubes, stream(tseed, kCubes))) {
        const CellBox box = cube_box(in.mesh, r);
        const MeshField chi = indicator_of_box(in.mesh, box);
        // 1 / |chi_R| in L^{Phi_i}(sigma_i)
        std::vector<double> c(static_cast<std::size_t>(s.n));
        double cprod = 1.0, kprod = 1.0;
        for (int i = 0; i < s.n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            c[k] = inverse(s.phis[k], 1.0 / integrate(in.sigmas[k], r));
            cprod *= c[k];
            kprod *= eval(s.psi, c[k]);
        }
        double op = 0.0, contribution = 0.0;
        if (!fractional) {
            std::vector<MeshField> fs;
            for (int i = 0; i < s.n; ++i) fs.push_back(scaled(chi, c[static_cast<std::size_t>(i)]));
            const MeshField t = multilinear_weighted_maximal(in.sigmas, fs, s.cs, exec).field;
            op = lux(s.psi, t, in.omega);
            const double w = integrate(in.omega, r);
            contribution = s.id == TheoremId::K_CLASS_EQUIV ? w * kprod : w * eval(s.theta, 1.0 / integrate(nu, r));
        } else {
            std::vector<MeshField> base;
            for (const auto& sg : in.sigmas) base.push_back(product_field(sg, chi, FieldKind::Function));
            const MeshField g = fractional_multilinear_maximal(base, s.alpha, s.cs, exec).field;
            op = lux(s.psi, scaled(g, cprod), in.omega);
            const double local = local_modular(s.psi, g, on_mesh(in.omega, g.mesh), cube_box(g.mesh, r));
            contribution = s.id == TheoremId::SAWYER_PQ ? kprod * local : eval(s.theta, 1.0 / integrate(nu, r)) * local;
        }
        prof.cubes.push_back(to_descriptor(r));
        prof.ratio.push_back(safe_ratio(op, inverse(s.psi, contribution)));
    }
    if (!prof.ratio.empty()) {
        prof.min = *std::min_element(prof.ratio.begin(), prof.ratio.end());
        prof.max = *std::max_element(prof.ratio.begin(), prof.ratio.end());
    }
    return prof;
}

TrialRecord run_trial(const Setup& s, const ExperimentConfig& cfg, int t, Exec exec) {
    TrialRecord rec;
    rec.trial = t;
    rec.seed = trial_seed(cfg.seed, t);
    const Instance coarse = make_instance(s, cfg, cfg.level, rec.seed);
    const Outcome a = evaluate(s, cfg, coarse, rec.seed, exec);
    rec.lhs = a.lhs;
    rec.rhs = a.rhs;
    rec.ratio = safe_ratio(a.lhs, a.rhs);
    const Instance fine = make_instance(s, cfg, cfg.level + 2, rec.seed);
    const Outcome b = evaluate(s, cfg, fine, rec.seed, exec);
    rec.lhs_fine = b.lhs;
    rec.rhs_fine = b.rhs;
    rec.ratio_fine = safe_ratio(b.lhs, b.rhs);
    if (info(s.id).two_sided) rec.lower_ratio = lower_profile(s, cfg, coarse, rec.seed, exec).min;
    return rec;
}

std::optional<double> default_bound(const Setup& s) {
    if (s.id == TheoremId::WEAK_TYPE) return 1.0;
    // Doob's inequality for the dyadic maximal operator of any measure
    if (s.id == TheoremId::ORLICZ_MAX_BOUND && s.phis[0].is_power() && s.phis[0].power_exponent() > 1.0) {
        const double p = s.phis[0].power_exponent();
        return std::pow(p / (p - 1.0), p);
    }
    return std::nullopt;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

nlohmann::ordered_json num(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

nlohmann::ordered_json opt(const std::optional<double>& x) { return x ? num(*x) : nlohmann::ordered_json(nullptr); }

std::string fmt_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const char* const kCsvHeader = "trial,seed,lhs,rhs,ratio,lhs_fine,rhs_fine,ratio_fine,lower_ratio";

}  // namespace

std::string to_string(TheoremId id) { return info(id).name; }

TheoremId parse_theorem_id(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return c == '-' ? '_' : std::toupper(c); });
    for (const auto& i : kTheorems)
        if (t == i.name) return i.id;
    throw ConfigError("unknown theorem id: " + text);
}

const std::vector<TheoremId>& all_theorems() {
    static const std::vector<TheoremId> ids = [] {
        std::vector<TheoremId> v;
        for (const auto& i : kTheorems) v.push_back(i.id);
        return v;
    }();
    return ids;
}

bool is_two_sided(TheoremId id) { return info(id).two_sided; }

void set_config_value(ExperimentConfig& cfg, const std::string& section, const std::string& key_in,
                      const std::string& value_in) {
    const std::string key = trim(key_in), v = trim(value_in);
    const std::string name = section + "." + key;
    int idx = -1;
    if (section == "experiment") {
        if (key == "theorem") cfg.theorem = parse_theorem_id(v);
        else if (key == "d") cfg.d = to_int(name, v);
        else if (key == "n") cfg.n = to_int(name, v);
        else if (key == "L" || key == "level") cfg.level = to_int(name, v);
        else if (key == "window") cfg.window = as_config_error(name, [&] { return parse_window(v); });
        else if (key == "alpha") cfg.alpha = to_double(name, v);
        else if (key == "p") cfg.p = to_double(name, v);
        else if (key == "trials") cfg.trials = to_int(name, v);
        else if (key == "seed") cfg.seed = to_u64(name, v);
        else if (key == "cube_set") cfg.cube_set = v;
        else if (key == "bound") cfg.bound = v.empty() ? std::nullopt : std::optional<double>(to_double(name, v));
        else if (key == "test_cubes") cfg.test_cubes = to_int(name, v);
        else if (key == "doubling_limit") cfg.doubling_limit = to_double(name, v);
        else if (key == "jobs") cfg.jobs = to_int(name, v);
        else throw ConfigError("unknown key " + name);
    } else if (section == "growth") {
        if ((idx = indexed_key(key, "phi")) >= 0) set_indexed(cfg.phis, idx, v);
        else if (key == "psi") cfg.psi = v;
        else throw ConfigError("unknown key " + name);
    } else if (section == "fields") {
        if ((idx = indexed_key(key, "sigma")) >= 0) set_indexed(cfg.sigmas, idx, v);
        else if ((idx = indexed_key(key, "f")) >= 0) set_indexed(cfg.functions, idx, v);
        else if (key == "omega") cfg.omega = v;
        else if (key == "equal_weights") cfg.equal_weights = to_bool(name, v);
        else throw ConfigError("unknown key " + name);
    } else if (section == "output") {
        if (key == "path") cfg.output = v;
        else if (key == "format") cfg.format = v;
        else throw ConfigError("unknown key " + name);
    } else {
        throw ConfigError("unknown config section [" + section + "]");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config key outside a section: " + section);
        for (const auto& [key, node] : body) set_config_value(cfg, section, key, node.get_value<std::string>());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    return parse_config(in);
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.d < 1 || cfg.d > kMaxDim) throw ConfigError("d must be 1, 2 or 3");
    if (cfg.n < 1 || cfg.n > 9) throw ConfigError("n must lie in 1..9");
    if (cfg.level < 0 || cfg.level > 18) throw ConfigError("L must lie in 0..18");
    if (cfg.trials < 1) throw ConfigError("trials must be at least 1");
    if (cfg.test_cubes < 1) throw ConfigError("test_cubes must be at least 1");
    if (cfg.jobs < 0) throw ConfigError("jobs must be nonnegative");
    if (!(cfg.alpha >= 0.0 && cfg.alpha < static_cast<double>(cfg.n) * cfg.d))
        throw ConfigError("alpha must lie in [0, n*d)");
    if (!(cfg.p > 0.0)) throw ConfigError("p must be positive");
    if (!(cfg.doubling_limit >= 1.0)) throw ConfigError("doubling_limit must be at least 1");
    if (cfg.bound && !(*cfg.bound > 0.0)) throw ConfigError("bound must be positive");
    if (cfg.window && cfg.window->dim != cfg.d) throw ConfigError("window dimension differs from d");
    if (cfg.format != "json" && cfg.format != "csv") throw ConfigError("format must be json or csv");
    auto sized = [&](const std::vector<std::string>& v, const char* what) {
        if (v.size() != 1 && v.size() != static_cast<std::size_t>(cfg.n))
            throw ConfigError(std::string(what) + ": give one descriptor or n of them");
    };
    sized(cfg.phis, "phi");
    sized(cfg.sigmas, "sigma");
    sized(cfg.functions, "f");
    for (const auto& d : cfg.phis) as_config_error("phi", [&] { return parse_growth(d); });
    as_config_error("psi", [&] { return parse_growth(cfg.psi); });
    std::vector<std::string> gens = cfg.sigmas;
    gens.insert(gens.end(), cfg.functions.begin(), cfg.functions.end());
    gens.push_back(cfg.omega);
    for (const auto& d : gens) {
        const Generator g = as_config_error("generator", [&] { return parse_generator(d, cfg.d); });
        if (std::holds_alternative<gen::FromValues>(g))
            throw ConfigError("generator " + d + ": explicit values cannot follow mesh refinement");
    }
    as_config_error("cube_set", [&] { return resolved_cube_set(cfg); });
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["theorem"] = to_string(cfg.theorem);
    j["d"] = cfg.d;
    j["n"] = cfg.n;
    j["L"] = cfg.level;
    j["window"] = window_descriptor(resolved_window(cfg));
    j["alpha"] = cfg.alpha;
    j["p"] = cfg.p;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["cube_set"] = to_string(resolved_cube_set(cfg), cfg.d);
    j["bound"] = opt(cfg.bound);
    j["test_cubes"] = cfg.test_cubes;
    j["doubling_limit"] = cfg.doubling_limit;
    j["phi"] = cfg.phis;
    j["psi"] = cfg.psi;
    j["sigma"] = cfg.sigmas;
    j["omega"] = cfg.omega;
    j["f"] = cfg.functions;
    j["equal_weights"] = cfg.equal_weights;
    return j;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
    return splitmix64(seed ^ splitmix64(0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(trial) + 1)));
}

void summarize(ExperimentReport& report, TheoremId id, std::optional<double> bound) {
    ExperimentSummary& s = report.summary;
    ExperimentVerdict& v = report.verdict;
    s = {};
    v = {};
    s.bound = bound;
    std::vector<double> coarse, fine, lower;
    for (const auto& t : report.trials) {
        coarse.push_back(t.ratio);
        fine.push_back(t.ratio_fine);
        if (t.lower_ratio) lower.push_back(*t.lower_ratio);
    }
    if (!coarse.empty()) {
        s.max_ratio = *std::max_element(coarse.begin(), coarse.end());
        s.max_ratio_fine = *std::max_element(fine.begin(), fine.end());
    }
    s.median_ratio = median(coarse);
    s.median_ratio_fine = median(fine);
    s.refinement_trend = safe_ratio(s.max_ratio_fine, s.max_ratio);
    if (s.max_ratio == 0.0 && s.max_ratio_fine == 0.0) s.refinement_trend = 1.0;
    s.refinement_flag = !(s.refinement_trend <= kTrendLimit);
    if (!lower.empty()) {
        s.lower_min = *std::min_element(lower.begin(), lower.end());
        s.lower_max = *std::max_element(lower.begin(), lower.end());
    }

    auto violate = [&](int trial, std::string why) {
        v.violated = true;
        v.trial = trial;
        v.reason = std::move(why);
    };
    for (const auto& t : report.trials)
        if (!std::isfinite(t.ratio) || !std::isfinite(t.ratio_fine)) {
            violate(t.trial, "non-finite ratio");
            return;
        }
    if (bound) {
        for (const auto& t : report.trials)
            if (t.ratio > *bound * (1 + kBoundSlack) || t.ratio_fine > *bound * (1 + kBoundSlack)) {
                violate(t.trial, "ratio exceeds bound " + fmt_double(*bound));
                return;
            }
    } else if (s.refinement_flag) {
        const auto it = std::max_element(report.trials.begin(), report.trials.end(),
                                         [](const TrialRecord& a, const TrialRecord& b) { return a.ratio_fine < b.ratio_fine; });
        violate(it->trial, "refinement trend " + fmt_double(s.refinement_trend) + " exceeds 2");
        return;
    }
    if (is_two_sided(id))
        for (const auto& t : report.trials)
            if (t.lower_ratio && !(*t.lower_ratio > 0.0 && std::isfinite(*t.lower_ratio))) {
                violate(t.trial, "lower-bound ratio not positive");
                return;
            }
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    const Setup s = make_setup(cfg);
    ExperimentReport report;
    report.theorem_id = to_string(s.id);
    report.seed = cfg.seed;
    report.config = config_to_json(cfg);
    report.version = kArtifactVersion;
    report.trials.resize(static_cast<std::size_t>(cfg.trials));

    int threads = 1;
#ifdef _OPENMP
    threads = cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads();
#endif
    const bool outer = threads > 1 && cfg.trials > 1;
    const Exec inner = outer || cfg.jobs == 1 ? Exec::Serial : Exec::Parallel;
    std::vector<std::exception_ptr> errors(report.trials.size());
#pragma omp parallel for schedule(dynamic) num_threads(outer ? threads : 1)
    for (int t = 0; t < cfg.trials; ++t) {
        try {
            report.trials[static_cast<std::size_t>(t)] = run_trial(s, cfg, t, inner);
        } catch (...) {
            errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    summarize(report, s.id, cfg.bound ? cfg.bound : default_bound(s));
    return report;
}

LowerBoundProfile testing_function_lower_bound(const ExperimentConfig& cfg, int trial) {
    const Setup s = make_setup(cfg);
    if (!is_two_sided(s.id))
        throw ConfigError("indicator lower bounds apply to M_CLASS_EQUIV, K_CLASS_EQUIV, SAWYER_PQ and S_ALPHA_NECESSITY");
    const std::uint64_t ts = trial_seed(cfg.seed, trial);
    return lower_profile(s, cfg, make_instance(s, cfg, cfg.level, ts), ts, cfg.jobs == 1 ? Exec::Serial : Exec::Parallel);
}

nlohmann::ordered_json to_json(const ExperimentReport& r) {
    nlohmann::ordered_json j;
    j["theorem_id"] = r.theorem_id;
    j["seed"] = r.seed;
    j["version"] = r.version;
    j["config"] = r.config;
    j["trials"] = nlohmann::ordered_json::array();
    for (const auto& t : r.trials) {
        nlohmann::ordered_json e;
        e["trial"] = t.trial;
        e["seed"] = t.seed;
        e["lhs"] = num(t.lhs);
        e["rhs"] = num(t.rhs);
        e["ratio"] = num(t.ratio);
        e["lhs_fine"] = num(t.lhs_fine);
        e["rhs_fine"] = num(t.rhs_fine);
        e["ratio_fine"] = num(t.ratio_fine);
        e["lower_ratio"] = opt(t.lower_ratio);
        j["trials"].push_back(std::move(e));
    }
    const auto& s = r.summary;
    j["summary"] = {{"max_ratio", num(s.max_ratio)},
                    {"median_ratio", num(s.median_ratio)},
                    {"max_ratio_fine", num(s.max_ratio_fine)},
                    {"median_ratio_fine", num(s.median_ratio_fine)},
                    {"refinement_trend", num(s.refinement_trend)},
                    {"refinement_flag", s.refinement_flag},
                    {"bound", opt(s.bound)},
                    {"lower_min", opt(s.lower_min)},
                    {"lower_max", opt(s.lower_max)}};
    j["verdict"] = {{"status", r.verdict.violated ? "violated" : "bounded"},
                    {"trial", r.verdict.trial ? nlohmann::ordered_json(*r.verdict.trial) : nlohmann::ordered_json(nullptr)},
                    {"reason", r.verdict.reason}};
    return j;
}

std::string to_csv(const ExperimentReport& r) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& t : r.trials) {
        out << t.trial << ',' << t.seed << ',' << fmt_double(t.lhs) << ',' << fmt_double(t.rhs) << ','
            << fmt_double(t.ratio) << ',' << fmt_double(t.lhs_fine) << ',' << fmt_double(t.rhs_fine) << ','
            << fmt_double(t.ratio_fine) << ',' << (t.lower_ratio ? fmt_double(*t.lower_ratio) : "") << '\n';
    }
    return out.str();
}

void write_report(const ExperimentReport& r, const std::string& format, const std::string& path) {
    std::string body;
    if (format == "json") body = to_json(r).dump(2) + "\n";
    else if (format == "csv") body = to_csv(r);
    else throw UsageError("report format must be json or csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report " + path);
    out << body;
    out.flush();
    if (!out) throw IoError("failed writing report " + path);
}

namespace {

void expect(bool ok, const std::string& what) {
    if (!ok) throw UsageError("report: " + what);
}

bool number_or_null(const nlohmann::json& j) { return j.is_number() || j.is_null(); }

ReportCheck validate_json(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("report: malformed JSON: ") + e.what());
    }
    expect(j.is_object(), "top level must be an object");
    for (const char* k : {"theorem_id", "seed", "config", "trials", "summary", "verdict"})
        expect(j.contains(k), std::string("missing key ") + k);
    expect(j["theorem_id"].is_string(), "theorem_id must be a string");
    try {
        parse_theorem_id(j["theorem_id"].get<std::string>());
    } catch (const ConfigError&) {
        throw UsageError("report: unknown theorem_id");
    }
    expect(j["seed"].is_number_unsigned(), "seed must be an unsigned integer");
    expect(j["config"].is_object(), "config must be an object");
    expect(j["trials"].is_array(), "trials must be an array");
    for (const auto& t : j["trials"]) {
        expect(t.is_object(), "trial entries must be objects");
        expect(t.contains("trial") && t["trial"].is_number_integer(), "trial id must be an integer");
        for (const char* k : {"lhs", "rhs", "ratio"}) expect(t.contains(k) && number_or_null(t[k]), std::string("trial ") + k);
    }
    const auto& s = j["summary"];
    expect(s.is_object(), "summary must be an object");
    for (const char* k : {"max_ratio", "median_ratio", "refinement_trend"})
        expect(s.contains(k) && number_or_null(s[k]), std::string("summary ") + k);
    const auto& v = j["verdict"];
    expect(v.is_object() && v.contains("status") && v["status"].is_string(), "verdict status");
    const std::string st = v["status"].get<std::string>();
    expect(st == "bounded" || st == "violated", "verdict status must be bounded or violated");
    expect(v.contains("trial") && (v["trial"].is_null() || v["trial"].is_number_integer()), "verdict trial");
    return {"json", j["trials"].size(), st == "violated"};
}

ReportCheck validate_csv(std::istream& in) {
    std::string line;
    expect(static_cast<bool>(std::getline(in, line)), "empty file");
    expect(line == kCsvHeader, "unexpected CSV header");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        expect(cells.size() == 9, "row " + std::to_string(rows + 1) + " has " + std::to_string(cells.size()) + " fields");
        for (std::size_t i = 0; i < 9; ++i) {
            if (i == 8 && cells[i].empty()) continue;
            const std::string& x = cells[i];
            if (x == "inf" || x == "-inf" || x == "nan") continue;
            std::size_t pos = 0;
            try {
                std::stod(x, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            expect(!x.empty() && pos == x.size(), "row " + std::to_string(rows + 1) + ": bad value '" + x + "'");
        }
        ++rows;
    }
    return {"csv", rows, false};
}

}  // namespace

ReportCheck validate_report(std::istream& in) {
    in >> std::ws;
    return in.peek() == '{' ? validate_json(in) : validate_csv(in);
}

ReportCheck validate_report_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open report " + path);
    return validate_report(in);
}

}  // namespace olab
