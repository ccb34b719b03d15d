#include "olab/growth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "olab/errors.hpp"

namespace olab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::shared_ptr<detail::GrowthNode> make_node(Family f) {
    auto n = std::make_shared<detail::GrowthNode>();
    n->family = f;
    return n;
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw UsageError(std::string("non-finite growth parameter: ") + what);
}

// Bracket by doubling/halving from 1, then Illinois steps in log-log coordinates.
template <class F>
double invert_increasing(F&& f, double y, double tol) {
    if (!(tol > 0.0)) throw UsageError("inverse tolerance must be positive");
    if (!(y >= 0.0) || !std::isfinite(y)) throw DomainError("inverse argument must be finite and >= 0");
    if (y == 0.0) return 0.0;

    double lo, hi, flo, fhi;
    const double f1 = f(1.0);
    if (f1 < y) {
        lo = 1.0;
        flo = f1;
        hi = 2.0;
        fhi = f(hi);
        int k = 1;
        while (fhi < y) {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            if (++k > 1023) throw OverflowError("inverse: no bracket below 2^1024");
            fhi = f(hi);
        }
    } else {
        hi = 1.0;
        fhi = f1;
        lo = 0.5;
        flo = f(lo);
        int k = 1;
        while (flo >= y) {
            hi = lo;
            fhi = flo;
            lo *= 0.5;
            if (++k > 1070) throw OverflowError("inverse: no bracket above 2^-1070");
            flo = f(lo);
        }
    }
    if (std::abs(fhi - y) <= tol * y) return hi;
    if (std::abs(flo - y) <= tol * y) return lo;

    const double ly = std::log(y);
    auto g = [&](double fv) { return fv > 0.0 ? std::log(fv) - ly : -kInf; };
    double ulo = std::log(lo), uhi = std::log(hi);
    double glo = g(flo), ghi = g(fhi);
    double best_t = hi, best_r = std::abs(fhi - y);
    int side = 0;
    double last_width = uhi - ulo;
    for (int it = 0; it < 400; ++it) {
        double u = 0.5 * (ulo + uhi);
        const bool stalled = (it % 4 == 3) && (uhi - ulo) > 0.5 * last_width;
        if (it % 4 == 3) last_width = uhi - ulo;
        if (!stalled && std::isfinite(glo) && std::isfinite(ghi) && ghi > glo) {
            const double v = ulo - glo * (uhi - ulo) / (ghi - glo);
            if (v > ulo && v < uhi) u = v;
        }
        const double t = std::exp(u);
        const double ft = f(t);
        const double r = std::abs(ft - y);
        if (r < best_r) {
            best_r = r;
            best_t = t;
        }
        if (r <= tol * y) return t;
        const double gt = g(ft);
        if (ft < y) {
            ulo = u;
            glo = gt;
            if (side == -1) ghi *= 0.5;
            side = -1;
        } else {
            uhi = u;
            ghi = gt;
            if (side == 1) glo *= 0.5;
            side = 1;
        }
        if (uhi - ulo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(u))) break;
    }
    return best_t;
}

double expml_base(double t) {
    if (t < 1e-3) {
        const double t2 = t * t;
        return t2 * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)));
    }
    return std::expm1(t) - t;
}

double entropy_base(double t) {
    if (t < 1e-3) {
        double sum = 0.0, pw = t;
        for (int n = 2; n <= 8; ++n) {
            pw *= t;
            sum += ((n % 2 == 0) ? 1.0 : -1.0) * pw / (n * (n - 1.0));
        }
        return sum;
    }
    return (1.0 + t) * std::log1p(t) - t;
}

double table_interp(const std::vector<double>& lx, const std::vector<double>& ly, double u) {
    const std::size_t n = lx.size();
    if (u <= lx[0]) {
        const double s = (ly[1] - ly[0]) / (lx[1] - lx[0]);
        return ly[0] + s * (u - lx[0]);
    }
    if (u >= lx[n - 1]) {
        const double s = (ly[n - 1] - ly[n - 2]) / (lx[n - 1] - lx[n - 2]);
        return ly[n - 1] + s * (u - lx[n - 1]);
    }
    const auto it = std::upper_bound(lx.begin(), lx.end(), u);
    const std::size_t j = static_cast<std::size_t>(it - lx.begin());
    const double w = (u - lx[j - 1]) / (lx[j] - lx[j - 1]);
    return ly[j - 1] + w * (ly[j] - ly[j - 1]);
}

double base_eval(const detail::GrowthNode& n, double t);

double base_inverse(const detail::GrowthNode& n, double y, double tol) {
    switch (n.family) {
        case Family::Power:
            return std::pow(y, 1.0 / n.p);
        case Family::Tabulated:
            return std::exp(table_interp(n.log_y, n.log_x, std::log(y)));
        case Family::Product: {
            double prod = 1.0;
            for (const auto& c : n.children) prod *= inverse(c, y, tol);
            return prod;
        }
        case Family::PsiOfPhiInverse:
            return eval(n.children[1], inverse(n.children[0], y, tol));
        case Family::Omega3: {
            const double v = eval(n.children[1], inverse(n.children[0], 1.0 / y, tol));
            return v > 0.0 ? 1.0 / v : kInf;
        }
        default:
            return invert_increasing([&](double t) { return base_eval(n, t); }, y, tol);
    }
}

double base_eval(const detail::GrowthNode& n, double t) {
    if (t == 0.0) return 0.0;
    switch (n.family) {
        case Family::Power:
            return n.p == 1.0 ? t : std::pow(t, n.p);
        case Family::PowerLog: {
            const double head = n.a == 1.0 ? t : std::pow(t, n.a);
            return n.b == 0.0 ? head : head * std::pow(std::log1p(t), n.b);
        }
        case Family::ExpMinusLinear:
            return expml_base(t);
        case Family::Entropy:
            return entropy_base(t);
        case Family::Tabulated:
            return std::exp(table_interp(n.log_x, n.log_y, std::log(t)));
        case Family::Product: {
            auto prod = [&](double y) {
                double v = 1.0;
                for (const auto& c : n.children) v *= inverse(c, y, n.tol * 1e-2);
                return v;
            };
            return invert_increasing(prod, t, n.tol);
        }
        case Family::PsiOfPhiInverse:
            return eval(n.children[0], inverse(n.children[1], t, n.tol));
        case Family::Omega3: {
            const double v = eval(n.children[0], inverse(n.children[1], 1.0 / t, n.tol));
            return v > 0.0 ? 1.0 / v : kInf;
        }
        case Family::Complementary:
            return complementary(n.children[0], t, n.tol);
    }
    return 0.0;
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

GrowthFunction::GrowthFunction() : GrowthFunction(power(1.0)) {}

GrowthFunction GrowthFunction::power(double p, double scale) {
    require_finite(p, "p");
    require_finite(scale, "scale");
    if (!(p > 0.0)) throw UsageError("power exponent must be positive");
    if (!(scale > 0.0)) throw UsageError("scale must be positive");
    auto n = make_node(Family::Power);
    n->p = p;
    n->scale = scale;
    return GrowthFunction(n);
}

GrowthFunction GrowthFunction::power_log(double a, double b, double scale) {
    require_finite(a, "a");
    require_finite(b, "b");
    require_finite(scale, "scale");
    if (!(a > 0.0) || !(b >= 0.0)) throw UsageError("power-log needs a > 0 and b >= 0");
    if (!(scale > 0.0)) throw UsageError("scale must be positive");
    auto n = make_node(Family::PowerLog);
    n->a = a;
    n->b = b;
    n->scale = scale;
    return GrowthFunction(n);
}

GrowthFunction GrowthFunction::exp_minus_linear(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw UsageError("scale must be positive");
    auto n = make_node(Family::ExpMinusLinear);
    n->scale = scale;
    return GrowthFunction(n);
}

GrowthFunction GrowthFunction::entropy(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw UsageError("scale must be positive");
    auto n = make_node(Family::Entropy);
    n->scale = scale;
    return GrowthFunction(n);
}

GrowthFunction GrowthFunction::tabulated(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw UsageError("table needs at least two (x, y) samples");
    auto n = make_node(Family::Tabulated);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw UsageError("table samples must be positive and finite");
        if (i > 0 && !(xs[i] > xs[i - 1] && ys[i] > ys[i - 1]))
            throw UsageError("table samples must be strictly increasing in both columns");
        n->log_x.push_back(std::log(xs[i]));
        n->log_y.push_back(std::log(ys[i]));
    }
    return GrowthFunction(n);
}

Family GrowthFunction::family() const { return node_->family; }
double GrowthFunction::scale() const { return node_->scale; }

std::vector<double> GrowthFunction::params() const {
    switch (node_->family) {
        case Family::Power:
            return {node_->p};
        case Family::PowerLog:
            return {node_->a, node_->b};
        default:
            return {};
    }
}

bool GrowthFunction::is_power() const { return node_->family == Family::Power; }

double GrowthFunction::power_exponent() const {
    if (!is_power()) throw UsageError("not a power function");
    return node_->p;
}

double GrowthFunction::operator()(double t) const { return eval(*this, t); }

double GrowthFunction::log_value(double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("growth argument must be finite and >= 0");
    if (t == 0.0) return -kInf;
    const auto& n = *node_;
    const double ls = std::log(n.scale);
    switch (n.family) {
        case Family::Power:
            return ls + n.p * std::log(t);
        case Family::PowerLog:
            return ls + n.a * std::log(t) + (n.b == 0.0 ? 0.0 : n.b * std::log(std::log1p(t)));
        case Family::ExpMinusLinear:
            if (t > 40.0) return ls + t + std::log1p(-(1.0 + t) * std::exp(-t));
            return ls + std::log(expml_base(t));
        case Family::Tabulated:
            return ls + table_interp(n.log_x, n.log_y, std::log(t));
        default:
            return ls + std::log(base_eval(n, t));
    }
}

std::string GrowthFunction::descriptor() const {
    const auto& n = *node_;
    std::string sc = n.scale == 1.0 ? "" : ",c=" + fmt_num(n.scale);
    switch (n.family) {
        case Family::Power:
            return "power:p=" + fmt_num(n.p) + sc;
        case Family::PowerLog:
            return "powerlog:a=" + fmt_num(n.a) + ",b=" + fmt_num(n.b) + sc;
        case Family::ExpMinusLinear:
            return n.scale == 1.0 ? "expml" : "expml:c=" + fmt_num(n.scale);
        case Family::Entropy:
            return n.scale == 1.0 ? "entropy" : "entropy:c=" + fmt_num(n.scale);
        case Family::Tabulated:
            return "table:<" + std::to_string(n.log_x.size()) + " samples>";
        case Family::Product: {
            std::string s = "product(";
            for (std::size_t i = 0; i < n.children.size(); ++i) s += (i ? ";" : "") + n.children[i].descriptor();
            return s + ")";
        }
        case Family::PsiOfPhiInverse:
            return "compose(" + n.children[0].descriptor() + ";inverse " + n.children[1].descriptor() + ")";
        case Family::Omega3:
            return "omega3(" + n.children[0].descriptor() + ";" + n.children[1].descriptor() + ")";
        case Family::Complementary:
            return "complementary(" + n.children[0].descriptor() + ")";
    }
    return "";
}

double eval(const GrowthFunction& phi, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("growth argument must be finite and >= 0");
    const auto& n = phi.node();
    return n.scale * base_eval(n, t);
}

double inverse(const GrowthFunction& phi, double y, double tol) {
    if (!(tol > 0.0)) throw UsageError("inverse tolerance must be positive");
    if (!(y >= 0.0) || !std::isfinite(y)) throw DomainError("inverse argument must be finite and >= 0");
    if (y == 0.0) return 0.0;
    const auto& n = phi.node();
    return base_inverse(n, y / n.scale, tol);
}

double complementary(const GrowthFunction& phi, double s, double tol) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("complementary argument must be finite and >= 0");
    if (!(tol > 0.0)) throw UsageError("complementary tolerance must be positive");
    if (s == 0.0) return 0.0;
    auto g = [&](double t) {
        const double v = eval(phi, t);
        return std::isfinite(v) ? s * t - v : -kInf;
    };
    double T = 1.0;
    if (g(2.0 * T) > g(T)) {
        while (g(2.0 * T) > g(T)) {
            T *= 2.0;
            if (T > 0x1p1020) throw UnboundedError("complementary: supremum unbounded");
        }
    } else {
        while (T > 1e-300 && g(0.5 * T) >= g(T)) T *= 0.5;
    }
    double a = 0.5 * T, b = 2.0 * T;
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
    double g1 = g(x1), g2 = g(x2);
    while (b - a > tol * T) {
        if (g1 < g2) {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + ratio * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - ratio * (b - a);
            g1 = g(x1);
        }
    }
    return std::max({0.0, g1, g2, g(0.5 * (a + b))});
}

GrowthFunction complementary_function(const GrowthFunction& phi, double tol) {
    if (phi.is_power() && phi.power_exponent() > 1.0) {
        // c t^p  ->  (p-1) p^{-p'} c^{1-p'} s^{p'}
        const double p = phi.power_exponent(), c = phi.scale();
        const double pp = p / (p - 1.0);
        return GrowthFunction::power(pp, (p - 1.0) * std::pow(p, -pp) * std::pow(c, 1.0 - pp));
    }
    auto n = make_node(Family::Complementary);
    n->children = {phi};
    n->tol = tol;
    return GrowthFunction(n);
}

GrowthFunction tabulate(const GrowthFunction& phi, const std::vector<double>& grid) {
    std::vector<double> ys;
    ys.reserve(grid.size());
    for (double t : grid) ys.push_back(eval(phi, t));
    return GrowthFunction::tabulated(grid, std::move(ys));
}

GrowthFunction memoized_complementary(const GrowthFunction& phi, double lo, double hi, int points) {
    return tabulate(complementary_function(phi), log_grid(lo, hi, points));
}

GrowthFunction product_compose(const std::vector<GrowthFunction>& phis) {
    if (phis.empty()) throw UsageError("product_compose needs at least one function");
    if (phis.size() == 1) return phis[0];
    const bool all_power = std::all_of(phis.begin(), phis.end(), [](const auto& f) { return f.is_power(); });
    if (all_power) {
        double inv_p = 0.0, log_k = 0.0;
        for (const auto& f : phis) {
            inv_p += 1.0 / f.power_exponent();
            log_k -= std::log(f.scale()) / f.power_exponent();
        }
        const double p = 1.0 / inv_p;
        const double scale = std::exp(-p * log_k);
        return GrowthFunction::power(p, std::abs(scale - 1.0) < 1e-15 ? 1.0 : scale);
    }
    auto n = make_node(Family::Product);
    n->children = phis;
    return GrowthFunction(n);
}

GrowthFunction compose_inverse(const GrowthFunction& psi, const GrowthFunction& phi) {
    if (psi.is_power() && phi.is_power()) {
        const double q = psi.power_exponent(), p = phi.power_exponent();
        const double scale = psi.scale() * std::pow(phi.scale(), -q / p);
        return GrowthFunction::power(q / p, scale);
    }
    auto n = make_node(Family::PsiOfPhiInverse);
    n->children = {psi, phi};
    return GrowthFunction(n);
}

double omega3(const GrowthFunction& psi, const GrowthFunction& phi, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("omega3 argument must be finite and >= 0");
    if (t == 0.0) return 0.0;
    const double v = eval(psi, inverse(phi, 1.0 / t));
    return v > 0.0 ? 1.0 / v : kInf;
}

GrowthFunction omega3_function(const GrowthFunction& psi, const GrowthFunction& phi) {
    if (psi.is_power() && phi.is_power()) {
        const double q = psi.power_exponent(), p = phi.power_exponent();
        return GrowthFunction::power(q / p, std::pow(phi.scale(), q / p) / psi.scale());
    }
    auto n = make_node(Family::Omega3);
    n->children = {psi, phi};
    return GrowthFunction(n);
}

namespace {

std::map<std::string, double> parse_kv(const std::string& body, const std::string& text) {
    std::map<std::string, double> kv;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("malformed growth descriptor: " + text);
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(val, &used);
        } catch (const std::exception&) {
            throw UsageError("malformed number in growth descriptor: " + text);
        }
        if (used != val.size()) throw UsageError("malformed number in growth descriptor: " + text);
        kv[key] = v;
    }
    return kv;
}

double take(std::map<std::string, double>& kv, const std::string& key, const std::string& text,
            std::optional<double> fallback = std::nullopt) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        if (fallback) return *fallback;
        throw UsageError("growth descriptor missing '" + key + "': " + text);
    }
    const double v = it->second;
    kv.erase(it);
    return v;
}

GrowthFunction read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open growth table: " + path);
    std::vector<double> xs, ys;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (auto& ch : line)
            if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
        std::istringstream ls(line);
        double x = 0.0, y = 0.0;
        if (!(ls >> x >> y)) {
            if (xs.empty()) continue;  // header row
            throw UsageError("malformed growth table row: " + line);
        }
        xs.push_back(x);
        ys.push_back(y);
    }
    return GrowthFunction::tabulated(std::move(xs), std::move(ys));
}

}  // namespace

GrowthFunction parse_growth(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string body = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "table") {
        if (body.empty()) throw UsageError("table descriptor needs a path");
        return read_table(body);
    }
    auto kv = parse_kv(body, text);
    GrowthFunction out;
    if (head == "power") {
        const double p = take(kv, "p", text);
        out = GrowthFunction::power(p, take(kv, "c", text, 1.0));
    } else if (head == "powerlog") {
        const double a = take(kv, "a", text);
        const double b = take(kv, "b", text);
        out = GrowthFunction::power_log(a, b, take(kv, "c", text, 1.0));
    } else if (head == "expml") {
        out = GrowthFunction::exp_minus_linear(take(kv, "c", text, 1.0));
    } else if (head == "entropy") {
        out = GrowthFunction::entropy(take(kv, "c", text, 1.0));
    } else {
        throw UsageError("unknown growth family: " + text);
    }
    if (!kv.empty()) throw UsageError("unknown growth parameter '" + kv.begin()->first + "': " + text);
    return out;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw UsageError("log grid needs 0 < lo < hi and >= 2 points");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> default_grid() { return log_grid(1e-6, 1e6, 241); }

}  // namespace olab
