#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "spectra_gap/bounds.hpp"
#include "spectra_gap/complex_eig.hpp"
#include "spectra_gap/identities.hpp"
#include "spectra_gap/operators.hpp"
#include "spectra_gap/oracle.hpp"
#include "spectra_gap/random.hpp"
#include "spectra_gap/report.hpp"
#include "spectra_gap/sym_eig.hpp"

namespace spectra_gap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Command { eig, identity, bound, convergence, randcheck };

inline std::optional<Command> parse_command(std::string_view s) {
    if (s == "eig") return Command::eig;
    if (s == "identity") return Command::identity;
    if (s == "bound") return Command::bound;
    if (s == "convergence") return Command::convergence;
    if (s == "randcheck") return Command::randcheck;
    return std::nullopt;
}

enum ExitStatus : int { kPass = 0, kCheckFailed = 1, kConfigError = 2, kNumericalFailure = 3 };

/// Input problems exit 2, numerical trouble exits 3.
inline int exit_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::NoConvergence:
        case ErrorCode::NonFinite:
        case ErrorCode::DefectiveOperator:
        case ErrorCode::NearSingularDenominator:
        case ErrorCode::NonMonotone:
            return kNumericalFailure;
        default:
            return kConfigError;
    }
}

/// A potential or coefficient: a builtin name, polynomial coefficients, or a sampled CSV file.
struct FieldSource {
    enum class Kind { builtin, polynomial, sampled } kind = Kind::builtin;
    std::string name = "zero";
    RealVector coeffs;
    fs::path path;
};

struct ProblemConfig {
    std::string kind = "laplacian"; // laplacian|schrodinger|varicoeff|elasticity|pair
    std::string domain = "interval";
    double a1 = 0.0, b1 = 1.0, a2 = 0.0, b2 = 1.0;
    std::optional<fs::path> mask;
    std::vector<std::size_t> n{200};
    BoundaryCondition bc = BoundaryCondition::dirichlet;
    FieldSource potential;
    std::optional<FieldSource> potential2;
    FieldSource coefficients{FieldSource::Kind::builtin, "identity", {}, {}};
    double alpha = 1.0;
    BallArrangement balls;
    std::vector<std::size_t> m{1};
    std::vector<std::size_t> j; // 1-based; empty means 1..5
    std::string z_policy = "next"; // next|interior|both
    std::size_t z_count = 5;
    std::optional<double> p;
    std::size_t eigenvalues = 0; // 0: command default
    std::vector<std::string> identities;
    std::vector<std::string> bounds;
    std::string g = "x1"; // x1|x2|potential
    std::uint64_t seed = 42;
    std::size_t rand_n = 40;
    std::size_t rand_trials = 100;
    std::optional<double> identity_tolerance; // randcheck default 1e-9
    double eigen_residual = 1e-8;
    double min_order = 1.0;
    std::size_t max_dense = 2000;

    bool two_d() const { return domain == "rectangle"; }
};

namespace detail {

inline void config_require(bool ok, const std::string& what) { require(ok, ErrorCode::ConfigError, what); }

inline void allowed_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    config_require(obj.is_object(), where + " must be an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) config_require(ok.count(k) > 0, "unknown key '" + k + "' in " + where);
}

template <typename T>
T get(const json& v, const std::string& what) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::ConfigError, "bad value for " + what);
    }
}

inline std::vector<std::size_t> index_list(const json& v, const std::string& what) {
    std::vector<std::size_t> out;
    if (v.is_array())
        for (const auto& x : v) out.push_back(get<std::size_t>(x, what));
    else
        out.push_back(get<std::size_t>(v, what));
    config_require(!out.empty(), what + " must not be empty");
    for (auto x : out) config_require(x >= 1, what + " entries are 1-based");
    return out;
}

inline FieldSource field_source(const json& v, const fs::path& base, const std::string& what) {
    FieldSource f;
    if (v.is_string()) {
        f.kind = FieldSource::Kind::builtin;
        f.name = v.get<std::string>();
        return f;
    }
    allowed_keys(v, {"polynomial", "csv"}, what);
    config_require(v.size() == 1, what + " needs exactly one of polynomial or csv");
    if (v.contains("polynomial")) {
        f.kind = FieldSource::Kind::polynomial;
        f.coeffs = get<RealVector>(v["polynomial"], what + ".polynomial");
        config_require(!f.coeffs.empty(), what + ".polynomial must not be empty");
    } else {
        f.kind = FieldSource::Kind::sampled;
        f.path = base / get<std::string>(v["csv"], what + ".csv");
        config_require(fs::exists(f.path), what + ".csv file not found: " + f.path.string());
    }
    return f;
}

} // namespace detail

namespace detail {

inline ProblemConfig parse_config_fields(const json& j, const fs::path& base) {
    using detail::config_require;
    using detail::get;
    detail::allowed_keys(j, {"problem", "domain", "grid", "bc", "potential", "potential2", "coefficients", "alpha",
                             "balls", "m", "j", "z", "p", "eigenvalues", "identities", "bounds", "g", "seed",
                             "randcheck", "tolerance", "convergence"},
                         "config");
    ProblemConfig c;
    config_require(j.contains("problem"), "missing 'problem'");
    detail::allowed_keys(j["problem"], {"kind"}, "problem");
    c.kind = get<std::string>(j["problem"].at("kind"), "problem.kind");
    static const std::set<std::string> kinds{"laplacian", "schrodinger", "varicoeff", "elasticity", "pair"};
    config_require(kinds.count(c.kind) > 0, "unknown problem.kind '" + c.kind + "'");

    if (j.contains("domain")) {
        const auto& d = j["domain"];
        detail::allowed_keys(d, {"type", "bounds", "mask"}, "domain");
        c.domain = get<std::string>(d.at("type"), "domain.type");
        config_require(c.domain == "interval" || c.domain == "rectangle", "domain.type is interval or rectangle");
        if (d.contains("bounds")) {
            if (c.domain == "interval") {
                auto b = get<std::array<double, 2>>(d["bounds"], "domain.bounds");
                c.a1 = b[0];
                c.b1 = b[1];
            } else {
                auto b = get<std::array<std::array<double, 2>, 2>>(d["bounds"], "domain.bounds");
                c.a1 = b[0][0];
                c.b1 = b[0][1];
                c.a2 = b[1][0];
                c.b2 = b[1][1];
            }
        }
        if (d.contains("mask")) {
            config_require(c.domain == "rectangle", "masks apply to rectangles");
            c.mask = base / get<std::string>(d["mask"], "domain.mask");
            config_require(fs::exists(*c.mask), "mask file not found: " + c.mask->string());
        }
    }
    if (j.contains("grid")) {
        detail::allowed_keys(j["grid"], {"n"}, "grid");
        c.n = detail::index_list(j["grid"].at("n"), "grid.n");
    }
    config_require(c.n.size() == (c.two_d() ? 2u : 1u) || (c.two_d() && c.n.size() == 1),
                   "grid.n needs one size per direction");
    if (c.two_d() && c.n.size() == 1) c.n.push_back(c.n[0]);
    if (j.contains("bc")) {
        const auto bc = get<std::string>(j["bc"], "bc");
        config_require(bc == "dirichlet" || bc == "neumann", "bc is dirichlet or neumann");
        c.bc = bc == "dirichlet" ? BoundaryCondition::dirichlet : BoundaryCondition::neumann;
    }
    if (j.contains("potential")) c.potential = detail::field_source(j["potential"], base, "potential");
    if (j.contains("potential2")) c.potential2 = detail::field_source(j["potential2"], base, "potential2");
    if (j.contains("coefficients")) c.coefficients = detail::field_source(j["coefficients"], base, "coefficients");
    if (j.contains("alpha")) c.alpha = get<double>(j["alpha"], "alpha");
    c.balls.dim = c.two_d() ? 2 : 1;
    if (j.contains("balls")) {
        config_require(j["balls"].is_array(), "balls must be an array");
        for (const auto& b : j["balls"]) {
            detail::allowed_keys(b, {"center", "radius"}, "balls[]");
            auto ctr = get<RealVector>(b.at("center"), "balls[].center");
            config_require(ctr.size() == static_cast<std::size_t>(c.balls.dim), "ball center dimension mismatch");
            c.balls.centers.push_back({ctr[0], ctr.size() > 1 ? ctr[1] : 0.0});
            c.balls.radii.push_back(get<double>(b.at("radius"), "balls[].radius"));
        }
    }
    if (j.contains("m")) c.m = detail::index_list(j["m"], "m");
    if (j.contains("j")) c.j = detail::index_list(j["j"], "j");
    if (j.contains("z")) {
        detail::allowed_keys(j["z"], {"policy", "count"}, "z");
        if (j["z"].contains("policy")) c.z_policy = get<std::string>(j["z"]["policy"], "z.policy");
        if (j["z"].contains("count")) c.z_count = get<std::size_t>(j["z"]["count"], "z.count");
        config_require(c.z_policy == "next" || c.z_policy == "interior" || c.z_policy == "both",
                       "z.policy is next, interior or both");
    }
    if (j.contains("p")) c.p = get<double>(j["p"], "p");
    if (j.contains("eigenvalues")) c.eigenvalues = get<std::size_t>(j["eigenvalues"], "eigenvalues");
    if (j.contains("identities")) c.identities = get<std::vector<std::string>>(j["identities"], "identities");
    if (j.contains("bounds")) c.bounds = get<std::vector<std::string>>(j["bounds"], "bounds");
    if (j.contains("g")) {
        c.g = get<std::string>(j["g"], "g");
        config_require(c.g == "x1" || c.g == "x2" || c.g == "potential", "g is x1, x2 or potential");
    }
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j["seed"], "seed");
    if (j.contains("randcheck")) {
        detail::allowed_keys(j["randcheck"], {"n", "trials"}, "randcheck");
        if (j["randcheck"].contains("n")) c.rand_n = get<std::size_t>(j["randcheck"]["n"], "randcheck.n");
        if (j["randcheck"].contains("trials"))
            c.rand_trials = get<std::size_t>(j["randcheck"]["trials"], "randcheck.trials");
        config_require(c.rand_n >= 2 && c.rand_trials >= 1, "randcheck needs n >= 2 and trials >= 1");
    }
    if (j.contains("tolerance")) {
        detail::allowed_keys(j["tolerance"], {"identity", "eigen_residual"}, "tolerance");
        if (j["tolerance"].contains("identity"))
            c.identity_tolerance = get<double>(j["tolerance"]["identity"], "tolerance.identity");
        if (j["tolerance"].contains("eigen_residual"))
            c.eigen_residual = get<double>(j["tolerance"]["eigen_residual"], "tolerance.eigen_residual");
    }
    if (j.contains("convergence")) {
        detail::allowed_keys(j["convergence"], {"min_order"}, "convergence");
        c.min_order = get<double>(j["convergence"].at("min_order"), "convergence.min_order");
    }

    const bool one_d_only = c.kind == "schrodinger" || c.kind == "pair";
    config_require(!(one_d_only && c.two_d()), c.kind + " problems live on an interval");
    config_require(!(c.kind == "elasticity" && !c.two_d()), "elasticity problems live on a rectangle");
    config_require(!(c.kind == "elasticity" && c.bc != BoundaryCondition::dirichlet), "elasticity is Dirichlet only");
    config_require(!(c.kind == "pair" && j.contains("bc")), "pair problems fix Neumann for H1 and Dirichlet for H2");
    config_require(!(c.g == "x2" && !c.two_d()), "g = x2 needs a rectangle");
    return c;
}

} // namespace detail

/// Parse a JSON problem; relative file names resolve against `base`.
inline ProblemConfig parse_config(const json& j, const fs::path& base = ".") {
    try {
        return detail::parse_config_fields(j, base);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
    }
}

inline ProblemConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    detail::config_require(static_cast<bool>(in), "cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Problem assembly

struct SampledRow {
    std::size_t index;
    double x, y, value;
};

/// Sampled field CSV: header row, then node index, x, [y], value.
inline std::vector<SampledRow> read_sampled_csv(const fs::path& path, int dim) {
    std::ifstream in(path);
    detail::config_require(static_cast<bool>(in), "cannot open " + path.string());
    auto rows = read_csv(in);
    detail::config_require(rows.size() >= 2, path.string() + " needs a header and data rows");
    std::vector<SampledRow> out;
    const std::size_t width = dim == 1 ? 3 : 4;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        detail::config_require(f.size() == width, path.string() + ": expected " + std::to_string(width) + " columns");
        SampledRow s{static_cast<std::size_t>(std::stoull(f[0])), parse_double(f[1]), dim == 2 ? parse_double(f[2]) : 0.0,
                     parse_double(f.back())};
        out.push_back(s);
    }
    return out;
}

inline Potential make_potential(const FieldSource& f) {
    switch (f.kind) {
        case FieldSource::Kind::builtin:
            if (f.name == "zero") return Potential::zero();
            if (f.name == "harmonic") return Potential::harmonic();
            throw Error(ErrorCode::ConfigError, "unknown builtin potential '" + f.name + "'");
        case FieldSource::Kind::polynomial:
            return Potential::polynomial(f.coeffs);
        case FieldSource::Kind::sampled: {
            RealVector xs, vs;
            for (const auto& r : read_sampled_csv(f.path, 1)) {
                xs.push_back(r.x);
                vs.push_back(r.value);
            }
            return Potential::sampled(std::move(xs), std::move(vs));
        }
    }
    throw Error(ErrorCode::ConfigError, "bad potential");
}

/// Scalar coefficient a(x, y) I on a full tensor table, bilinear in between.
inline std::function<double(double, double)> tensor_table(const std::vector<SampledRow>& rows) {
    std::set<double> xs_set, ys_set;
    for (const auto& r : rows) {
        xs_set.insert(r.x);
        ys_set.insert(r.y);
    }
    RealVector xs(xs_set.begin(), xs_set.end()), ys(ys_set.begin(), ys_set.end());
    detail::config_require(xs.size() >= 2 && ys.size() >= 2 && xs.size() * ys.size() == rows.size(),
                           "2D coefficient samples must fill a tensor grid");
    RealVector v(rows.size());
    for (const auto& r : rows) {
        const auto i = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), r.x) - xs.begin());
        const auto k = static_cast<std::size_t>(std::lower_bound(ys.begin(), ys.end(), r.y) - ys.begin());
        v[i + xs.size() * k] = r.value;
    }
    return [xs, ys, v](double x, double y) {
        auto locate = [](const RealVector& t, double s) {
            auto it = std::upper_bound(t.begin(), t.end(), s);
            std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
            i = std::min(i, t.size() - 2);
            const double f = std::clamp((s - t[i]) / (t[i + 1] - t[i]), 0.0, 1.0);
            return std::pair{i, f};
        };
        const auto [i, fx] = locate(xs, x);
        const auto [k, fy] = locate(ys, y);
        const std::size_t nx = xs.size();
        const double v00 = v[i + nx * k], v10 = v[i + 1 + nx * k], v01 = v[i + nx * (k + 1)],
                     v11 = v[i + 1 + nx * (k + 1)];
        return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11;
    };
}

inline CoefficientField make_coefficients(const FieldSource& f, int dim) {
    switch (f.kind) {
        case FieldSource::Kind::builtin:
            if (f.name == "identity") return CoefficientField::identity(dim);
            throw Error(ErrorCode::ConfigError, "unknown builtin coefficient '" + f.name + "'");
        case FieldSource::Kind::polynomial:
            return CoefficientField::polynomial(dim, f.coeffs);
        case FieldSource::Kind::sampled: {
            const auto rows = read_sampled_csv(f.path, dim);
            if (dim == 1) {
                RealVector xs, vs;
                for (const auto& r : rows) {
                    xs.push_back(r.x);
                    vs.push_back(r.value);
                }
                auto p = Potential::sampled(std::move(xs), std::move(vs));
                return CoefficientField(1, [p](double x, double) {
                    const double a = p.value(x);
                    return CoefficientTensor{a, 0.0, a};
                });
            }
            auto t = tensor_table(rows);
            return CoefficientField(2, [t](double x, double y) {
                const double a = t(x, y);
                return CoefficientTensor{a, 0.0, a};
            });
        }
    }
    throw Error(ErrorCode::ConfigError, "bad coefficients");
}

inline std::vector<bool> read_mask(const fs::path& path, std::size_t n1, std::size_t n2) {
    std::vector<bool> mask(n1 * n2, false);
    for (const auto& r : read_sampled_csv(path, 2)) {
        detail::config_require(r.index < mask.size(), "mask node index out of range");
        mask[r.index] = r.value != 0.0;
    }
    return mask;
}

using AnyGrid = std::variant<Grid1D, Grid2D>;

struct Problem {
    Problem(AnyGrid g, RealSymMatrix op) : grid(std::move(g)), h(std::move(op)) {}

    AnyGrid grid;
    RealSymMatrix h;
    std::optional<CoefficientField> field;
    // pair problems: H1 Neumann on `grid`, H2 Dirichlet on `grid2`
    std::optional<Grid1D> grid2;
    std::optional<RealSymMatrix> h2;
    std::optional<Potential> v1, v2;

    int dim() const { return std::holds_alternative<Grid2D>(grid) ? 2 : 1; }
    std::size_t size() const { return h.size(); }
};

inline AnyGrid make_grid(const ProblemConfig& c, std::size_t scale_level = 0) {
    auto refine = [&](std::size_t n) {
        for (std::size_t k = 0; k < scale_level; ++k) n = c.bc == BoundaryCondition::dirichlet ? 2 * n + 1 : 2 * n;
        return n;
    };
    if (!c.two_d()) return Grid1D(c.a1, c.b1, refine(c.n[0]), c.bc);
    std::optional<std::vector<bool>> mask;
    if (c.mask) {
        detail::config_require(scale_level == 0, "masked domains cannot be refined");
        mask = read_mask(*c.mask, c.n[0], c.n[1]);
    }
    return Grid2D(c.a1, c.b1, c.a2, c.b2, refine(c.n[0]), refine(c.n[1]), c.bc, std::move(mask));
}

inline Problem build_problem(const ProblemConfig& c, std::size_t scale_level = 0) {
    if (c.kind == "pair") {
        std::size_t n = c.n[0];
        for (std::size_t k = 0; k < scale_level; ++k) n *= 2;
        Grid1D gn(c.a1, c.b1, n, BoundaryCondition::neumann);
        Grid1D gd(c.a1, c.b1, n, BoundaryCondition::dirichlet, NodeLayout::cell);
        auto v1 = make_potential(c.potential);
        auto v2 = c.potential2 ? make_potential(*c.potential2) : v1;
        Problem p(gn, schrodinger(gn, v1));
        p.grid2 = gd;
        p.h2 = schrodinger(gd, v2);
        p.v1 = v1;
        p.v2 = v2;
        return p;
    }
    AnyGrid grid = make_grid(c, scale_level);
    if (c.kind == "laplacian")
        return std::visit([&](const auto& g) { return Problem(g, laplacian(g)); }, grid);
    if (c.kind == "schrodinger") {
        const auto& g = std::get<Grid1D>(grid);
        auto v = make_potential(c.potential);
        Problem p(g, schrodinger(g, v));
        p.v1 = v;
        return p;
    }
    if (c.kind == "varicoeff") {
        auto a = make_coefficients(c.coefficients, c.two_d() ? 2 : 1);
        Problem p = std::visit([&](const auto& g) { return Problem(g, variable_coeff_elliptic(g, a)); }, grid);
        p.field = a;
        return p;
    }
    const auto& g = std::get<Grid2D>(grid);
    return Problem(g, elasticity_2d(g, c.alpha));
}

/// Lowest `count` eigenpairs, or all when count reaches the dimension; residuals are checked.
inline Spectrum solve(const RealSymMatrix& h, std::size_t count, double tol) {
    Spectrum s = count >= h.size() ? sym_eig(h) : sym_eig_lowest(h, count);
    const auto chk = check_spectrum(h, s);
    require(chk.max_scaled_residual <= tol && chk.max_orthonormality_defect <= tol, ErrorCode::NoConvergence,
            "eigenpair residual above tolerance");
    return s;
}

inline RealVector coordinate(const Problem& p, int l) {
    if (const auto* g = std::get_if<Grid1D>(&p.grid)) return g->nodes();
    return std::get<Grid2D>(p.grid).coordinate(l);
}

/// Centered first difference along l as a dense antisymmetric matrix.
inline RealMatrix centered_difference_matrix(const Problem& p, int l) {
    const std::size_t n = p.size();
    RealMatrix f(n, n);
    if (const auto* g = std::get_if<Grid1D>(&p.grid)) {
        require(g->bc == BoundaryCondition::dirichlet, ErrorCode::ConfigError, "id3bis uses a Dirichlet grid");
        for (std::size_t i = 0; i + 1 < n; ++i) {
            f(i, i + 1) = 0.5 / g->h();
            f(i + 1, i) = -0.5 / g->h();
        }
        return f;
    }
    const auto& g = std::get<Grid2D>(p.grid);
    require(g.bc() == BoundaryCondition::dirichlet, ErrorCode::ConfigError, "id3bis uses a Dirichlet grid");
    RealVector e(n, 0.0);
    for (std::size_t q = 0; q < n; ++q) {
        e[q] = 1.0;
        const RealVector col = centered_gradient(g, e, l);
        for (std::size_t r = 0; r < n; ++r) f(r, q) = col[r];
        e[q] = 0.0;
    }
    return f;
}

inline RealMatrix auxiliary_g(const ProblemConfig& c, const Problem& p) {
    if (c.g == "potential") {
        require(p.v1.has_value(), ErrorCode::ConfigError, "g = potential needs a schrodinger problem");
        const auto& grid = std::get<Grid1D>(p.grid);
        RealVector v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = p.v1->value(grid.x(i));
        return multiplication_operator(v).matrix();
    }
    return multiplication_operator(coordinate(p, c.g == "x2" ? 2 : 1)).matrix();
}

// ---------------------------------------------------------------------------
// Commands

struct RunOptions {
    fs::path out_dir = "reports";
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    std::ostream* log = &std::cout;
};

namespace detail {

inline std::ofstream open_report(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::ConfigError, "cannot write " + (dir / name).string());
    return out;
}

inline std::vector<std::size_t> j_list(const ProblemConfig& c, std::size_t available) {
    std::vector<std::size_t> js = c.j;
    if (js.empty())
        for (std::size_t k = 1; k <= std::min<std::size_t>(5, available); ++k) js.push_back(k);
    for (auto k : js) require(k <= available, ErrorCode::IndexOutOfRange, "j exceeds the spectrum size");
    return js;
}

inline std::size_t max_of(const std::vector<std::size_t>& v) { return *std::max_element(v.begin(), v.end()); }

/// Run `work(i)` for i < count on `jobs` threads; results land by index.
template <typename R, typename F>
std::vector<R> parallel_map(std::size_t count, std::size_t jobs, F work) {
    std::vector<R> out(count);
    std::vector<std::exception_ptr> errors(count);
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += jobs) {
                try {
                    out[i] = work(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

inline std::vector<double> z_values(const ProblemConfig& c, double lo, double hi) {
    std::vector<double> zs;
    if (c.z_policy != "next")
        for (std::size_t k = 1; k <= c.z_count; ++k)
            zs.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(c.z_count + 1));
    if (c.z_policy != "interior") zs.push_back(hi);
    return zs;
}

struct PairSetup {
    Spectrum spec1;
    ComplexSpectrum spec2;
    CommutatorBundle bundle;
};

inline PairSetup pair_setup(const Problem& p, double tol) {
    const auto& gd = *p.grid2;
    auto spec1 = solve(p.h, p.size(), tol);
    auto spec2 = as_complex(solve(*p.h2, p.h2->size(), tol));
    const ComplexMatrix g2 = derivative_operator(gd, DerivativeRows::ghost);
    auto bd = pair_bundle(p.h, to_complex(p.h2->matrix()), adjoint(g2), g2, spec2);
    return {std::move(spec1), std::move(spec2), std::move(bd)};
}

} // namespace detail

inline int run_eig(const ProblemConfig& c, const RunOptions& o) {
    const Problem p = build_problem(c);
    const std::size_t count = std::min(p.size(), c.eigenvalues ? c.eigenvalues : std::size_t{20});
    const Spectrum s = solve(p.h, count, c.eigen_residual);
    auto out = detail::open_report(o.out_dir, "spectrum.csv");
    write_spectrum_csv(out, s.values);
    if (p.h2) {
        const Spectrum s2 = solve(*p.h2, std::min(p.h2->size(), count), c.eigen_residual);
        auto out2 = detail::open_report(o.out_dir, "spectrum2.csv");
        write_spectrum_csv(out2, s2.values);
    }
    *o.log << "eig: " << s.count() << " eigenvalues, lowest " << format_double(s.values[0]) << '\n';
    return kPass;
}

inline int run_identity(const ProblemConfig& c, const RunOptions& o) {
    const Problem p = build_problem(c);
    require(p.size() <= c.max_dense, ErrorCode::ConfigError, "identity needs a full spectrum; grid too large");
    std::vector<IdentityReport> rows;
    if (c.kind == "pair") {
        const auto ps = detail::pair_setup(p, c.eigen_residual);
        std::vector<std::string> names = c.identities.empty() ? std::vector<std::string>{"ti1", "ti2", "ti3", "ti4"}
                                                              : c.identities;
        const auto pol = pair_policy(ps.spec1, ps.spec2);
        const auto js = detail::j_list(c, p.size());
        for (const auto& name : names) {
            auto which = parse_pair_identity(name);
            require(which.has_value(), ErrorCode::ConfigError, "unknown pair identity '" + name + "'");
            for (auto j : js) rows.push_back(pair_identity(ps.bundle, ps.spec1, ps.spec2, *which, j - 1, pol));
        }
    } else {
        const Spectrum spec = solve(p.h, p.size(), c.eigen_residual);
        const auto pol = DegeneracyPolicy::for_spectrum(spec);
        const RealMatrix g = auxiliary_g(c, p);
        std::vector<std::string> names = c.identities.empty()
                                             ? std::vector<std::string>{"id1", "id2", "id3", "id4"}
                                             : c.identities;
        const auto js = detail::j_list(c, p.size());
        for (const auto& name : names) {
            auto which = parse_identity(name);
            require(which.has_value(), ErrorCode::ConfigError, "unknown identity '" + name + "'");
            if (*which == Identity::id3bis) {
                const RealMatrix f = centered_difference_matrix(p, c.g == "x2" ? 2 : 1);
                for (auto j : js) rows.push_back(skew_identity(p.h, spec, f, j - 1, pol));
            } else {
                for (auto j : js) rows.push_back(single_identity(p.h, spec, g, *which, j - 1, pol));
            }
        }
    }
    if (c.identity_tolerance)
        for (auto& r : rows) {
            r.tolerance = *c.identity_tolerance;
            r.pass = r.rel_residual <= r.tolerance || r.abs_residual <= r.tolerance * r.scale;
        }
    auto out = detail::open_report(o.out_dir, "identity_report.csv");
    write_identity_csv(out, rows);
    const auto passed = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
    *o.log << "identity: " << passed << "/" << rows.size() << " pass\n";
    return static_cast<std::size_t>(passed) == rows.size() ? kPass : kCheckFailed;
}

inline std::vector<std::string> default_bounds(const ProblemConfig& c, const Problem& p) {
    if (c.kind == "laplacian") {
        if (c.bc == BoundaryCondition::neumann) return {"neumann_ball"};
        std::vector<std::string> b{"ppw", "hp", "yang1", "yang2"};
        if (p.dim() == 2) b.push_back("multigap");
        return b;
    }
    if (c.kind == "schrodinger") return {"abstract_gap", "abstract_yang"};
    if (c.kind == "varicoeff") return {"varicoeff"};
    if (c.kind == "elasticity") return {"elasticity"};
    return {"nonsaest"};
}

inline int run_bound(const ProblemConfig& c, const RunOptions& o) {
    const Problem p = build_problem(c);
    const auto names = c.bounds.empty() ? default_bounds(c, p) : c.bounds;
    const std::size_t mmax = detail::max_of(c.m);
    std::vector<BoundReport> rows;
    if (c.kind == "pair") {
        for (const auto& name : names) require(name == "nonsaest", ErrorCode::ConfigError, "pair problems support nonsaest");
        const auto ps = detail::pair_setup(p, c.eigen_residual);
        for (auto j : detail::j_list(c, p.size())) {
            auto e = pair_estimates(ps.bundle, ps.spec1, ps.spec2, j - 1);
            const auto q = schrodinger_pair_quantities(*p.v1, *p.v2, *p.grid2, ps.spec2, j - 1, &ps.bundle);
            e[1].metadata["d_minus"] = q.d_minus_bundle;
            e[1].metadata["min_second"] = q.min_second;
            e[1].metadata["sqrt_min_second"] = q.sqrt_min_second;
            e[2].metadata["d_plus"] = std::abs(q.d_plus_bundle);
            rows.insert(rows.end(), e.begin(), e.end());
        }
    } else {
        const std::size_t count = std::min(p.size(), std::max(c.eigenvalues, mmax + 2));
        const Spectrum spec = solve(p.h, count, c.eigen_residual);
        const int n_dim = p.dim();
        for (const auto& name : names) {
            for (auto m : c.m) {
                if (auto cb = parse_classic_bound(name)) {
                    if (*cb == ClassicBound::yang1) {
                        for (double z : detail::z_values(c, spec.values[m - 1], spec.values[m]))
                            rows.push_back(classic_bound(spec, m, n_dim, *cb, z));
                    } else {
                        rows.push_back(classic_bound(spec, m, n_dim, *cb));
                    }
                } else if (name == "abstract_gap") {
                    rows.push_back(abstract_gap_bound(p.h, spec, auxiliary_g(c, p), m));
                } else if (name == "abstract_yang") {
                    const RealMatrix g = auxiliary_g(c, p);
                    for (double z : detail::z_values(c, spec.values[m - 1], spec.values[m]))
                        rows.push_back(abstract_yang_bound(p.h, spec, g, m, z));
                } else if (name == "varicoeff") {
                    require(p.field.has_value(), ErrorCode::ConfigError, "varicoeff needs a varicoeff problem");
                    rows.push_back(std::visit(
                        [&](const auto& g) { return varicoeff_bound(*p.field, g, spec.values, m, c.p); }, p.grid));
                } else if (name == "multigap") {
                    require(p.dim() == 2, ErrorCode::ConfigError, "multigap needs a rectangle");
                    auto r = multigap_rotation(spec, std::get<Grid2D>(p.grid), m);
                    rows.push_back(r.aggregate);
                    rows.insert(rows.end(), r.directions.begin(), r.directions.end());
                } else if (name == "neumann_ball") {
                    rows.push_back(std::visit(
                        [&](const auto& g) { return neumann_ball_bound(p.h, g, c.balls, spec, m); }, p.grid));
                } else if (name == "elasticity") {
                    require(c.kind == "elasticity", ErrorCode::ConfigError, "elasticity needs an elasticity problem");
                    rows.push_back(elasticity_bound(spec, std::get<Grid2D>(p.grid), c.alpha, m));
                } else {
                    throw Error(ErrorCode::ConfigError, "unknown bound '" + name + "'");
                }
            }
        }
    }
    auto out = detail::open_report(o.out_dir, "bound_report.csv");
    write_bound_csv(out, rows);
    const auto ok = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.satisfied; });
    *o.log << "bound: " << ok << "/" << rows.size() << " satisfied\n";
    return static_cast<std::size_t>(ok) == rows.size() ? kPass : kCheckFailed;
}

/// Analytic eigenvalues for plain Laplacians on intervals and rectangles.
inline std::optional<RealVector> reference_values(const ProblemConfig& c, std::size_t count) {
    if (c.kind != "laplacian" || c.mask) return std::nullopt;
    oracle::AnalyticProblem a;
    const bool d = c.bc == BoundaryCondition::dirichlet;
    if (c.two_d()) {
        a.kind = d ? oracle::AnalyticKind::rectangle_dirichlet : oracle::AnalyticKind::rectangle_neumann;
        a.length2 = c.b2 - c.a2;
    } else {
        a.kind = d ? oracle::AnalyticKind::interval_dirichlet : oracle::AnalyticKind::interval_neumann;
    }
    a.length1 = c.b1 - c.a1;
    return oracle::analytic_spectrum(a, count);
}

inline int run_convergence(const ProblemConfig& c, const RunOptions& o) {
    require(!c.mask, ErrorCode::ConfigError, "convergence studies need an unmasked domain");
    const std::size_t count = c.eigenvalues ? c.eigenvalues : 5;
    std::vector<RealVector> levels;
    for (std::size_t level = 0; level < 3; ++level) {
        const Problem p = build_problem(c, level);
        require(count <= p.size(), ErrorCode::ConfigError, "more eigenvalues requested than unknowns");
        levels.push_back(solve(p.h, count, c.eigen_residual).values);
    }
    const auto ref = reference_values(c, count);
    std::vector<RichardsonRow> rows;
    bool ok = true;
    for (std::size_t k = 0; k < count; ++k) {
        RichardsonRow r;
        r.index = k + 1;
        r.v_h = levels[0][k];
        r.v_h2 = levels[1][k];
        r.v_h4 = levels[2][k];
        if (ref) r.reference = (*ref)[k];
        try {
            r.result = oracle::richardson(r.v_h, r.v_h2, r.v_h4);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NonMonotone) throw;
            r.result.extrapolated = r.v_h4;
            r.result.order = std::numeric_limits<double>::quiet_NaN();
        }
        ok = ok && (r.result.converged || r.result.order >= c.min_order);
        rows.push_back(r);
    }
    auto out = detail::open_report(o.out_dir, "richardson.csv");
    write_richardson_csv(out, rows);
    *o.log << "convergence: " << (ok ? "pass" : "FAIL") << " (min order " << c.min_order << ")\n";
    return ok ? kPass : kCheckFailed;
}

struct RandcheckTally {
    std::string identity;
    std::size_t trials = 0;
    std::size_t passed = 0;
    double max_rel_residual = 0.0;
};

/// One trial: every j of every identity in a suite must reach rel <= tol (or abs <= tol * scale).
struct TrialOutcome {
    std::map<std::string, std::pair<bool, double>> by_identity;
};

inline void record(TrialOutcome& t, const IdentityReport& r, double tol) {
    auto& [ok, worst] = t.by_identity.try_emplace(r.name, true, 0.0).first->second;
    ok = ok && (r.rel_residual <= tol || r.abs_residual <= tol * r.scale);
    worst = std::max(worst, r.rel_residual);
}

/// Seeded property trial number `trial` of size n.
inline TrialOutcome randcheck_trial(std::size_t n, std::uint64_t seed, std::size_t trial, double tol) {
    auto s = [&](std::uint64_t k) { return seed * 1000003ULL + trial * 16ULL + k; };
    TrialOutcome out;
    // Single-operator identities.
    {
        RealSymMatrix h(random_symmetric(n, s(0)));
        const RealMatrix g = random_symmetric(n, s(1));
        const RealMatrix f = random_antisymmetric(n, s(2));
        const Spectrum spec = sym_eig(h);
        const auto pol = DegeneracyPolicy::for_spectrum(spec);
        for (std::size_t j = 0; j < n; ++j) {
            for (auto w : {Identity::id1, Identity::id2, Identity::id3, Identity::id4})
                record(out, single_identity(h, spec, g, w, j, pol), tol);
            record(out, skew_identity(h, spec, f, j, pol), tol);
        }
    }
    // Pair identities: general intertwiners, adjoint intertwiners, self-adjoint pair.
    RealSymMatrix h1(random_symmetric(n, s(3)));
    const Spectrum spec1 = sym_eig(h1);
    const ComplexMatrix h2 = random_complex(n, s(4));
    const ComplexSpectrum spec2 = complex_eig(h2);
    const auto pol = pair_policy(spec1, spec2);
    {
        auto bd = pair_bundle(h1, h2, random_complex(n, s(5)), random_complex(n, s(6)), spec2);
        for (std::size_t j = 0; j < n; ++j)
            for (auto w : {PairIdentity::ti1, PairIdentity::ti2}) record(out, pair_identity(bd, spec1, spec2, w, j, pol), tol);
    }
    {
        const ComplexMatrix g1 = random_complex(n, s(7));
        auto bd = pair_bundle(h1, h2, g1, adjoint(g1), spec2);
        for (std::size_t j = 0; j < n; ++j)
            for (auto w : {PairIdentity::ti3, PairIdentity::ti4}) record(out, pair_identity(bd, spec1, spec2, w, j, pol), tol);
    }
    {
        ComplexMatrix a = random_complex(n, s(8));
        ComplexMatrix herm = a + adjoint(a);
        for (auto& x : herm.data()) x *= 0.5;
        ComplexMatrix gh = random_complex(n, s(9));
        ComplexMatrix g = gh + adjoint(gh);
        const ComplexSpectrum spec_h = complex_eig(herm);
        auto bd = pair_bundle(h1, herm, g, g, spec_h);
        const auto pol_h = pair_policy(spec1, spec_h);
        for (std::size_t j = 0; j < n; ++j) record(out, pair_identity(bd, spec1, spec_h, PairIdentity::ti5, j, pol_h), tol);
    }
    return out;
}

inline std::vector<RandcheckTally> randcheck(std::size_t n, std::size_t trials, std::uint64_t seed, double tol,
                                             std::size_t jobs) {
    auto outcomes = detail::parallel_map<TrialOutcome>(trials, jobs, [&](std::size_t t) {
        return randcheck_trial(n, seed, t, tol);
    });
    std::vector<RandcheckTally> tally;
    for (const char* name : {"id1", "id2", "id3", "id4", "id3bis", "ti1", "ti2", "ti3", "ti4", "ti5"}) {
        RandcheckTally r{name, trials, 0, 0.0};
        for (const auto& o : outcomes) {
            const auto& [ok, worst] = o.by_identity.at(name);
            r.passed += ok ? 1 : 0;
            r.max_rel_residual = std::max(r.max_rel_residual, worst);
        }
        tally.push_back(r);
    }
    return tally;
}

inline int run_randcheck(const ProblemConfig& c, const RunOptions& o) {
    const std::uint64_t seed = o.seed.value_or(c.seed);
    const auto tally = randcheck(c.rand_n, c.rand_trials, seed, c.identity_tolerance.value_or(1e-9), o.jobs);
    auto out = detail::open_report(o.out_dir, "randcheck_summary.csv");
    out << "identity,trials,passed,max_rel_residual\n";
    bool ok = true;
    for (const auto& t : tally) {
        out << t.identity << ',' << t.trials << ',' << t.passed << ',' << format_double(t.max_rel_residual) << '\n';
        *o.log << t.identity << ": " << t.passed << "/" << t.trials << " pass\n";
        ok = ok && t.passed == t.trials;
    }
    return ok ? kPass : kCheckFailed;
}

/// Dispatch one command; library errors become exit statuses.
inline int run(const ProblemConfig& c, Command cmd, const RunOptions& o, std::ostream& err = std::cerr) {
    try {
        switch (cmd) {
            case Command::eig: return run_eig(c, o);
            case Command::identity: return run_identity(c, o);
            case Command::bound: return run_bound(c, o);
            case Command::convergence: return run_convergence(c, o);
            case Command::randcheck: return run_randcheck(c, o);
        }
    } catch (const Error& e) {
        err << e.what() << '\n';
        return exit_status(e.code());
    }
    return kConfigError;
}

} // namespace spectra_gap::cli
