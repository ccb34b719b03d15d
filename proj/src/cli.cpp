#include "olab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "olab/carleson.hpp"
#include "olab/errors.hpp"
#include "olab/field.hpp"
#include "olab/growth.hpp"
#include "olab/harness.hpp"
#include "olab/maximal.hpp"
#include "olab/orlicz.hpp"
#include "olab/weights.hpp"

namespace olab {

namespace {

std::string show(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

struct MeshOpts {
    int level = 8;
    int d = 1;
};

// A CSV path, or gen:<generator> on the unit window.
MeshField load_source(const std::string& src, FieldKind kind, const MeshOpts& m) {
    if (src.rfind("gen:", 0) == 0) {
        const Mesh mesh{Window::unit(m.d), m.level, 1};
        return make_field(mesh, kind, parse_generator(src.substr(4), m.d));
    }
    const MeshField raw = load_field_csv(src);
    return make_field(raw.mesh, kind, gen::FromValues{raw.values});
}

std::vector<MeshField> load_all(const std::vector<std::string>& srcs, FieldKind kind, const MeshOpts& m) {
    std::vector<MeshField> out;
    for (const auto& s : srcs) out.push_back(load_source(s, kind, m));
    return out;
}

std::vector<GrowthFunction> growth_list(const std::vector<std::string>& descs, std::size_t n) {
    if (descs.size() != 1 && descs.size() != n)
        throw UsageError("give one --phi or one per weight");
    std::vector<GrowthFunction> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(parse_growth(descs.size() == 1 ? descs[0] : descs[i]));
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            v.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw UsageError("grid must be lo,hi,points: " + text);
        }
    }
    if (v.size() != 3 || !(v[0] > 0) || !(v[1] > v[0]) || v[2] < 3) throw UsageError("grid must be lo,hi,points: " + text);
    return log_grid(v[0], v[1], static_cast<int>(v[2]));
}

std::string default_report_path(const ExperimentConfig& cfg) {
    const char* dir = std::getenv("OLAB_OUTPUT_DIR");
    std::string name = to_string(cfg.theorem);
    for (auto& c : name) c = static_cast<char>(c == '_' ? '-' : std::tolower(static_cast<unsigned char>(c)));
    name += "-seed" + std::to_string(cfg.seed) + "." + cfg.format;
    return (std::filesystem::path(dir && *dir ? dir : ".") / name).string();
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Weighted Orlicz maximal operator lab", "olab"};
    app.require_subcommand(1);
    app.fallthrough();
    int jobs = 0;
    app.add_option("--jobs", jobs, "Worker threads, 0 for all available")->check(CLI::NonNegativeNumber);

    MeshOpts mesh;
    auto mesh_options = [&](CLI::App* sub) {
        sub->add_option("--L", mesh.level, "Mesh level for gen: sources")->check(CLI::Range(0, 18));
        sub->add_option("--d", mesh.d, "Dimension for gen: sources")->check(CLI::Range(1, 3));
    };

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "Classify a growth function on a sample grid");
    std::string c_fn, c_prop, c_aux, c_grid;
    double c_q = 0.0;
    classify_cmd->add_option("--fn", c_fn, "Growth descriptor")->required();
    classify_cmd->add_option("--property", c_prop, "delta2, delta_prime, nabla2, upper_type, u_tilde, quotient_bound, ratio_monotone")
        ->required();
    classify_cmd->add_option("--q", c_q, "Exponent for upper-type properties");
    classify_cmd->add_option("--aux", c_aux, "Second function for ratio_monotone (aux / fn)");
    classify_cmd->add_option("--grid", c_grid, "lo,hi,points");

    // norm
    auto* norm_cmd = app.add_subcommand("norm", "Luxemburg norm of a field");
    std::string n_fn, n_field, n_weight;
    norm_cmd->add_option("--fn", n_fn, "Growth descriptor")->required();
    norm_cmd->add_option("--field", n_field, "Field CSV or gen:<generator>")->required();
    norm_cmd->add_option("--weight", n_weight, "Weight CSV or gen:<generator>, default 1");
    mesh_options(norm_cmd);

    // maximal
    auto* max_cmd = app.add_subcommand("maximal", "Maximal functions on a mesh");
    std::vector<std::string> m_fields, m_weights;
    std::string m_cube_set = "dyadic", m_out;
    double m_alpha = 0.0;
    bool m_log = false;
    max_cmd->add_option("--field", m_fields, "Input fields, one per slot")->required();
    max_cmd->add_option("--weight", m_weights, "Weights sigma_i for the weighted operator");
    max_cmd->add_option("--alpha", m_alpha, "Fractional order");
    max_cmd->add_flag("--log", m_log, "Logarithmic maximal function");
    max_cmd->add_option("--cube-set", m_cube_set, "dyadic, single:<shift>, all-grids, all-mesh-aligned");
    max_cmd->add_option("--out", m_out, "Output field CSV, default stdout");
    mesh_options(max_cmd);

    // constant
    auto* const_cmd = app.add_subcommand("constant", "Weight class constant");
    std::string k_kind, k_weight, k_omega, k_psi = "power:p=2", k_cube_set = "dyadic";
    std::vector<std::string> k_sigmas, k_phis{"power:p=2"};
    double k_p = 2.0, k_alpha = 0.0;
    const_cmd->add_option("--kind", k_kind, "AP, A1, A_INF_FW, A_INF_EXP, DOUBLING, M, K, S_ALPHA, L_ALPHA, A_ALPHA, A_TILDE_ALPHA, B_ALPHA, W")
        ->required();
    const_cmd->add_option("--p", k_p, "Exponent for AP");
    const_cmd->add_option("--alpha", k_alpha, "Fractional order");
    const_cmd->add_option("--weight", k_weight, "Weight for single-weight classes");
    const_cmd->add_option("--sigma", k_sigmas, "Weights sigma_i for pair classes");
    const_cmd->add_option("--omega", k_omega, "Target weight for pair classes");
    const_cmd->add_option("--phi", k_phis, "Growth descriptors Phi_i");
    const_cmd->add_option("--psi", k_psi, "Growth descriptor Psi");
    const_cmd->add_option("--cube-set", k_cube_set, "Cube set");
    mesh_options(const_cmd);

    // carleson
    auto* carl_cmd = app.add_subcommand("carleson", "Carleson constant of a sequence");
    std::string s_seq, s_weight, s_theta = "power:p=1", s_from, s_out;
    double s_base = 2.0;
    auto* seq_opt = carl_cmd->add_option("--sequence", s_seq, "Sequence file");
    auto* from_opt = carl_cmd->add_option("--from-field", s_from, "Build the sequence sigma(E_Q) from a sparse decomposition of this field");
    seq_opt->excludes(from_opt);
    carl_cmd->add_option("--weight", s_weight, "Weight nu (and sigma for --from-field)")->required();
    carl_cmd->add_option("--theta", s_theta, "Growth descriptor theta");
    carl_cmd->add_option("--base", s_base, "Sparse base a > 1");
    carl_cmd->add_option("--out", s_out, "Where --from-field writes the sequence");
    mesh_options(carl_cmd);

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "Run a named experiment");
    std::string e_config, e_theorem, e_psi, e_omega, e_cube_set, e_out, e_format, e_window;
    std::vector<std::string> e_phis, e_sigmas, e_fs, e_set;
    int e_n = 0, e_d = 0, e_L = -1, e_trials = 0;
    double e_alpha = -1.0;
    std::string e_seed;
    exp_cmd->add_option("--config", e_config, "INI config file");
    exp_cmd->add_option("--theorem", e_theorem, "Theorem id");
    exp_cmd->add_option("--n", e_n, "Number of functions");
    exp_cmd->add_option("--d", e_d, "Dimension");
    exp_cmd->add_option("--L", e_L, "Mesh level");
    exp_cmd->add_option("--trials", e_trials, "Trials");
    exp_cmd->add_option("--seed", e_seed, "Seed");
    exp_cmd->add_option("--alpha", e_alpha, "Fractional order");
    exp_cmd->add_option("--window", e_window, "Window level:origin");
    exp_cmd->add_option("--phi", e_phis, "Growth descriptors Phi_i");
    exp_cmd->add_option("--psi", e_psi, "Growth descriptor Psi");
    exp_cmd->add_option("--sigma", e_sigmas, "Weight generators");
    exp_cmd->add_option("--omega", e_omega, "Target weight generator");
    exp_cmd->add_option("--f", e_fs, "Function generators");
    exp_cmd->add_option("--cube-set", e_cube_set, "Cube set");
    exp_cmd->add_option("--set", e_set, "section.key=value, applied last");
    exp_cmd->add_option("--out", e_out, "Report path");
    exp_cmd->add_option("--format", e_format, "json or csv");

    // report
    auto* rep_cmd = app.add_subcommand("report", "Check a written report");
    std::string r_path;
    rep_cmd->add_option("--validate", r_path, "Report file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#endif

    try {
        if (classify_cmd->parsed()) {
            const GrowthFunction phi = parse_growth(c_fn);
            const GrowthProperty prop = parse_property(c_prop);
            std::optional<GrowthFunction> aux;
            if (!c_aux.empty()) aux = parse_growth(c_aux);
            const auto grid = c_grid.empty() ? default_grid() : parse_grid(c_grid);
            const auto r = classify(phi, prop, grid, aux, c_q);
            out << "property " << to_string(r.property) << "\n"
                << "estimate " << show(r.estimate) << "\n"
                << "witness " << show(r.witness) << "\n"
                << "verdict " << to_string(r.verdict) << "\n";
            return 0;
        }
        if (norm_cmd->parsed()) {
            const GrowthFunction phi = parse_growth(n_fn);
            const MeshField f = load_source(n_field, FieldKind::Function, mesh);
            const MeshField w = n_weight.empty() ? make_weight(f.mesh, gen::Constant{1.0})
                                                 : load_source(n_weight, FieldKind::Weight, mesh);
            const NormResult r = luxemburg_norm(phi, f, w);
            out << "norm " << (r.infinite ? std::string("inf") : show(r.value)) << "\n"
                << "iterations " << r.iterations << "\n"
                << "residual " << show(r.residual) << "\n";
            return 0;
        }
        if (max_cmd->parsed()) {
            const auto fs = load_all(m_fields, FieldKind::Function, mesh);
            const CubeSet cs = parse_cube_set(m_cube_set, fs[0].mesh.dim());
            MaximalResult r;
            if (m_log) {
                if (fs.size() != 1) throw UsageError("--log takes one field");
                r = log_maximal(fs[0], cs);
            } else if (!m_weights.empty()) {
                r = multilinear_weighted_maximal(load_all(m_weights, FieldKind::Weight, mesh), fs, cs);
            } else {
                r = fractional_multilinear_maximal(fs, m_alpha, cs);
            }
            if (m_out.empty()) {
                write_field_csv(out, r.field);
            } else {
                save_field_csv(m_out, r.field);
                double mx = 0.0;
                for (double v : r.field.values) mx = std::max(mx, v);
                out << "max " << show(mx) << "\nmesh " << r.field.mesh.descriptor() << "\nwritten " << m_out << "\n";
            }
            return 0;
        }
        if (const_cmd->parsed()) {
            const ClassKind kind = parse_class_kind(k_kind);
            ClassConstant c;
            switch (kind) {
                case ClassKind::AP:
                case ClassKind::A1:
                case ClassKind::A_INF_FW:
                case ClassKind::A_INF_EXP:
                case ClassKind::DOUBLING: {
                    if (k_weight.empty()) throw UsageError(k_kind + " needs --weight");
                    const MeshField w = load_source(k_weight, FieldKind::Weight, mesh);
                    c = muckenhoupt_constant(kind, k_p, w, parse_cube_set(k_cube_set, w.mesh.dim()));
                    break;
                }
                default: {
                    if (k_sigmas.empty()) throw UsageError(k_kind + " needs --sigma");
                    auto sig = load_all(k_sigmas, FieldKind::Weight, mesh);
                    const WeightSystem ws = WeightSystem::make(sig, growth_list(k_phis, sig.size()));
                    const CubeSet cs = parse_cube_set(k_cube_set, sig[0].mesh.dim());
                    if (kind == ClassKind::W) {
                        c = w_class_constant(ws, parse_growth(k_psi), cs);
                    } else {
                        if (k_omega.empty()) throw UsageError(k_kind + " needs --omega");
                        c = pair_class_constant(kind, k_alpha, ws, load_source(k_omega, FieldKind::Weight, mesh),
                                                parse_growth(k_psi), cs);
                    }
                }
            }
            out << to_json(c).dump() << "\n";
            return 0;
        }
        if (carl_cmd->parsed()) {
            const MeshField nu = load_source(s_weight, FieldKind::Weight, mesh);
            CarlesonSequence seq;
            if (!s_seq.empty()) {
                std::ifstream in(s_seq);
                if (!in) throw UsageError("cannot open sequence file " + s_seq);
                seq = read_sequence(in);
            } else if (!s_from.empty()) {
                const MeshField f = load_source(s_from, FieldKind::Function, mesh);
                const SparseFamily fam = sparse_decompose({nu}, {f}, s_base, zero_shift());
                seq = sequence_from_sparse(fam, SparsePayload::weight(on_mesh(nu, fam.mesh)));
                if (!s_out.empty()) {
                    std::ofstream o(s_out);
                    if (!o) throw IoError("cannot write sequence " + s_out);
                    write_sequence(o, seq);
                }
            } else {
                throw UsageError("carleson needs --sequence or --from-field");
            }
            const auto c = carleson_constant(seq, on_mesh(nu, seq.mesh), parse_growth(s_theta));
            out << "entries " << seq.entries.size() << "\nconstant " << show(c.value) << "\nargmax " << c.argmax_cube << "\n";
            return 0;
        }
        if (exp_cmd->parsed()) {
            ExperimentConfig cfg = e_config.empty() ? ExperimentConfig{} : load_config(e_config);
            auto set = [&](const char* section, const char* key, const std::string& v) { set_config_value(cfg, section, key, v); };
            if (!e_theorem.empty()) set("experiment", "theorem", e_theorem);
            if (e_n > 0) cfg.n = e_n;
            if (e_d > 0) cfg.d = e_d;
            if (e_L >= 0) cfg.level = e_L;
            if (e_trials > 0) cfg.trials = e_trials;
            if (!e_seed.empty()) set("experiment", "seed", e_seed);
            if (e_alpha >= 0.0) cfg.alpha = e_alpha;
            if (!e_window.empty()) set("experiment", "window", e_window);
            if (!e_phis.empty()) cfg.phis = e_phis;
            if (!e_psi.empty()) cfg.psi = e_psi;
            if (!e_sigmas.empty()) cfg.sigmas = e_sigmas;
            if (!e_omega.empty()) cfg.omega = e_omega;
            if (!e_fs.empty()) cfg.functions = e_fs;
            if (!e_cube_set.empty()) cfg.cube_set = e_cube_set;
            if (!e_out.empty()) cfg.output = e_out;
            if (!e_format.empty()) cfg.format = e_format;
            for (const auto& kv : e_set) {
                const auto dot = kv.find('.'), eq = kv.find('=');
                if (dot == std::string::npos || eq == std::string::npos || dot > eq)
                    throw ConfigError("--set expects section.key=value: " + kv);
                set_config_value(cfg, kv.substr(0, dot), kv.substr(dot + 1, eq - dot - 1), kv.substr(eq + 1));
            }
            cfg.jobs = jobs;
            validate_config(cfg);
            const ExperimentReport r = run_experiment(cfg);
            const std::string path = cfg.output.empty() ? default_report_path(cfg) : cfg.output;
            write_report(r, cfg.format, path);
            const auto& s = r.summary;
            out << "theorem " << r.theorem_id << "\n"
                << "trials " << r.trials.size() << "\n"
                << "max_ratio " << show(s.max_ratio) << "\n"
                << "median_ratio " << show(s.median_ratio) << "\n"
                << "refinement_trend " << show(s.refinement_trend) << (s.refinement_flag ? " (flagged)" : "") << "\n";
            if (s.bound) out << "bound " << show(*s.bound) << "\n";
            if (s.lower_min) out << "lower_ratio [" << show(*s.lower_min) << ", " << show(*s.lower_max) << "]\n";
            out << "verdict " << (r.verdict.violated ? "violated" : "bounded");
            if (r.verdict.violated) out << " (trial " << *r.verdict.trial << ": " << r.verdict.reason << ")";
            out << "\nreport " << path << "\n";
            return r.verdict.violated ? 1 : 0;
        }
        if (rep_cmd->parsed()) {
            const ReportCheck c = validate_report_file(r_path);
            out << "valid " << c.format << " report, " << c.trials << " trials";
            if (c.format == "json") out << ", verdict " << (c.violated ? "violated" : "bounded");
            out << "\n";
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace olab
