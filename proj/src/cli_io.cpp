#include "perfstokes/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "perfstokes/acceptance.hpp"
#include "perfstokes/discretization.hpp"
#include "perfstokes/dns.hpp"
#include "perfstokes/format.hpp"
#include "perfstokes/geometry.hpp"
#include "perfstokes/homogenized.hpp"
#include "perfstokes/regimes.hpp"

#ifndef PERFSTOKES_VERSION
#define PERFSTOKES_VERSION "0.0.0"
#endif

namespace perfstokes::cli {

namespace fs = std::filesystem;
using KeyList = std::vector<std::pair<std::string, std::string>>;

std::string_view version() { return PERFSTOKES_VERSION; }

const std::vector<std::string>& commands() {
    static const std::vector<std::string> list{"classify", "cell", "sweep", "poincare", "limit", "dns", "compare", "check"};
    return list;
}

namespace {

const std::string kInvPi = format_real(1.0 / std::numbers::pi);

KeyList with_common(std::string command, KeyList keys) {
    keys.insert(keys.begin(), {"out", "runs/" + command});
    keys.emplace_back("dump_fields", "false");
    // Off by default so identical runs write identical CSVs.
    keys.emplace_back("timing", "false");
    return keys;
}

const KeyList kHoleKeys{{"hole", "disk:1"}, {"hole.kind", ""}, {"hole.radius", ""}};

KeyList join(KeyList a, const KeyList& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

const std::map<std::string, KeyList>& key_table() {
    static const std::map<std::string, KeyList> table{
        {"classify", with_common("classify", {{"dim", "2"}, {"family", "powerlaw:0.2,1"}})},
        {"cell", with_common("cell", join(join({{"dim", "2"}, {"eta", "0.25"}}, kHoleKeys),
                                          {{"delta3", "auto"},
                                           {"N", "auto"},
                                           {"N_rule", "16"},
                                           {"tol", "1e-8"},
                                           {"max_iter", "500"},
                                           {"tartar", "false"}}))},
        {"sweep", with_common("sweep", join(join({{"dim", "2"}}, kHoleKeys),
                                            {{"etas", "0.2,0.1,0.05,0.025"},
                                             {"N_rule", "16"},
                                             {"N_cap", "2048"},
                                             {"tol", "1e-8"},
                                             {"poincare", "true"},
                                             {"poincare_tol", "1e-6"},
                                             {"band", "3"},
                                             {"poincare_band", "4"}}))},
        {"poincare", with_common("poincare", join(join({{"dim", "2"}, {"eta", "0.25"}}, kHoleKeys),
                                                  {{"delta3", "auto"}, {"N", "auto"}, {"N_rule", "16"}, {"tol", "1e-6"}}))},
        {"limit", with_common("limit", {{"dim", "2"},
                                        {"system", "stokes"},
                                        {"f", "sinshear"},
                                        {"A", "scalar:" + kInvPi},
                                        {"sigma_star", "1"},
                                        {"N", "128"},
                                        {"tol", "1e-8"}})},
        {"dns", with_common("dns", join(join({{"dim", "2"}, {"epsilon", "1/8"}, {"a_eps", "1/40"}}, kHoleKeys),
                                        {{"f", "sinshear"},
                                         {"N", "auto"},
                                         {"N_rule", "8"},
                                         {"N_cap", "auto"},
                                         {"tol", "1e-6"},
                                         {"max_iter", "5000"}}))},
        {"compare", with_common("compare", join(join({{"dim", "2"}, {"family", "powerlaw:0.2,1"}}, kHoleKeys),
                                                {{"f", "sinshear"},
                                                 {"eps", "1/8,1/16,1/32"},
                                                 {"N_rule", "8"},
                                                 {"N_cap", "auto"},
                                                 {"tol", "1e-6"},
                                                 {"window_factor", "2"},
                                                 {"A", "auto"},
                                                 {"sweep_etas", "0.2,0.1,0.05,0.025"},
                                                 {"sweep_tol", "1e-8"},
                                                 {"band", "3"},
                                                 {"trend", "true"}}))},
        {"check", with_common("check", {{"criteria", "1-13"}})},
    };
    return table;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorCode::ConfigError, key + ": expected true or false, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    int out = 0;
    try {
        out = std::stoi(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    require(pos == v.size() && !v.empty(), ErrorCode::ConfigError, key + ": expected an integer, got '" + v + "'");
    return out;
}

double parse_positive(const std::string& key, const std::string& v) {
    const double x = parse_real(v);
    require(x > 0.0 && std::isfinite(x), ErrorCode::ConfigError, key + " must be positive");
    return x;
}

std::vector<int> parse_criteria(const std::string& v) {
    std::vector<int> ids;
    for (const auto& part : split(v, ',')) {
        const auto dash = part.find('-');
        int lo = 0, hi = 0;
        if (dash == std::string::npos) {
            lo = hi = parse_int("criteria", trim(part));
        } else {
            lo = parse_int("criteria", trim(part.substr(0, dash)));
            hi = parse_int("criteria", trim(part.substr(dash + 1)));
        }
        require(lo >= 1 && hi <= 13 && lo <= hi, ErrorCode::ConfigError,
                "criteria must lie in 1-13 (14 compares two check runs; run the acceptance binary)");
        for (int i = lo; i <= hi; ++i) {
            if (std::find(ids.begin(), ids.end(), i) == ids.end()) ids.push_back(i);
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

homogenized::Matrix3 parse_matrix(const std::string& v, int dim) {
    homogenized::Matrix3 a{};
    const auto colon = v.find(':');
    require(colon != std::string::npos, ErrorCode::ConfigError, "A must look like scalar:s, diag:a,b or matrix:a11,a12,...");
    const std::string kind = v.substr(0, colon);
    const auto vals = parse_real_list(v.substr(colon + 1));
    if (kind == "scalar") {
        require(vals.size() == 1, ErrorCode::ConfigError, "scalar A takes one value");
        return homogenized::scalar_matrix(vals[0], dim);
    }
    if (kind == "diag") {
        require(static_cast<int>(vals.size()) == dim, ErrorCode::ConfigError, "diag A takes dim values");
        for (int i = 0; i < dim; ++i) a[i][i] = vals[i];
        return a;
    }
    if (kind == "matrix") {
        require(static_cast<int>(vals.size()) == dim * dim, ErrorCode::ConfigError, "matrix A takes dim^2 values");
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) a[i][j] = vals[i * dim + j];
        }
        return a;
    }
    fail(ErrorCode::ConfigError, "unknown matrix kind '" + kind + "'");
}

// Typed view of a resolved config. Only the keys of the command are set.
struct Settings {
    std::string command;
    fs::path out;
    bool dump_fields = false;
    int dim = 2;
    regimes::ScalingFamily family;
    geometry::HoleShape hole = geometry::HoleShape::ball(1.0);
    double eta = 0.25;
    std::optional<double> delta3;
    std::optional<int> n;
    double n_rule = 16.0;
    std::optional<int> n_cap;
    double tol = 1e-8;
    int max_iter = 500;
    bool tartar = false;
    std::vector<double> etas;
    bool poincare = true;
    double poincare_tol = 1e-6;
    double band = 3.0;
    double poincare_band = 4.0;
    homogenized::System system = homogenized::System::Stokes;
    std::string forcing_text;
    std::optional<homogenized::Matrix3> a;
    double sigma_star = 1.0;
    double epsilon = 0.125;
    double a_eps = 0.025;
    std::vector<double> eps;
    double window_factor = 2.0;
    std::vector<double> sweep_etas;
    double sweep_tol = 1e-8;
    bool trend = true;
    std::vector<int> criteria;
    bool timing = false;
};

Settings settings_from(const RunConfig& c) {
    Settings s;
    s.command = c.command;
    auto has = [&](const std::string& k) { return c.values.count(k) > 0; };
    auto get = [&](const std::string& k) { return c.values.at(k); };

    s.out = get("out");
    require(!s.out.empty(), ErrorCode::ConfigError, "out must name a directory");
    s.dump_fields = parse_bool("dump_fields", get("dump_fields"));
    if (has("dim")) {
        s.dim = parse_int("dim", get("dim"));
        require(s.dim == 2 || s.dim == 3, ErrorCode::ConfigError, "dim must be 2 or 3");
    }
    if (has("family")) s.family = regimes::parse_family(get("family"), s.dim);
    if (has("hole")) {
        if (!get("hole.kind").empty() || !get("hole.radius").empty()) {
            require(!get("hole.kind").empty() && !get("hole.radius").empty(), ErrorCode::ConfigError,
                    "hole.kind and hole.radius go together");
            s.hole = geometry::HoleShape::parse(get("hole.kind") + ":" + get("hole.radius"));
        } else {
            s.hole = geometry::HoleShape::parse(get("hole"));
        }
    }
    if (has("eta")) s.eta = parse_positive("eta", get("eta"));
    if (has("delta3") && get("delta3") != "auto") s.delta3 = parse_positive("delta3", get("delta3"));
    if (has("N") && get("N") != "auto") {
        s.n = parse_int("N", get("N"));
        require(*s.n >= 4, ErrorCode::ConfigError, "N must be at least 4");
    }
    if (has("N_rule")) s.n_rule = parse_positive("N_rule", get("N_rule"));
    if (has("N_cap") && get("N_cap") != "auto") s.n_cap = parse_int("N_cap", get("N_cap"));
    if (has("tol")) {
        s.tol = parse_positive("tol", get("tol"));
        require(s.tol <= 1e-2, ErrorCode::ConfigError, "tol must lie in (0, 1e-2]");
    }
    if (has("max_iter")) s.max_iter = parse_int("max_iter", get("max_iter"));
    if (has("tartar")) s.tartar = parse_bool("tartar", get("tartar"));
    if (has("etas")) s.etas = parse_real_list(get("etas"));
    if (has("poincare")) s.poincare = parse_bool("poincare", get("poincare"));
    if (has("poincare_tol")) s.poincare_tol = parse_positive("poincare_tol", get("poincare_tol"));
    if (has("band")) s.band = parse_positive("band", get("band"));
    if (has("poincare_band")) s.poincare_band = parse_positive("poincare_band", get("poincare_band"));
    if (has("system")) s.system = homogenized::parse_system(get("system"));
    if (has("f")) {
        s.forcing_text = get("f");
        if (s.forcing_text.rfind("file:", 0) == 0) {
            require(fs::exists(s.forcing_text.substr(5)), ErrorCode::ConfigError,
                    "forcing file '" + s.forcing_text.substr(5) + "' does not exist");
        } else {
            homogenized::Forcing::parse(s.forcing_text);
        }
    }
    if (has("A") && get("A") != "auto") s.a = parse_matrix(get("A"), s.dim);
    if (has("sigma_star")) s.sigma_star = parse_positive("sigma_star", get("sigma_star"));
    if (has("epsilon")) s.epsilon = parse_positive("epsilon", get("epsilon"));
    if (has("a_eps")) s.a_eps = parse_positive("a_eps", get("a_eps"));
    if (has("eps")) s.eps = parse_real_list(get("eps"));
    if (has("window_factor")) s.window_factor = parse_positive("window_factor", get("window_factor"));
    if (has("sweep_etas")) s.sweep_etas = parse_real_list(get("sweep_etas"));
    if (has("sweep_tol")) s.sweep_tol = parse_positive("sweep_tol", get("sweep_tol"));
    if (has("trend")) s.trend = parse_bool("trend", get("trend"));
    if (has("criteria")) s.criteria = parse_criteria(get("criteria"));
    if (has("timing")) s.timing = parse_bool("timing", get("timing"));
    return s;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::IoError, "cannot write '" + path.string() + "'");
    return f;
}

std::string matrix_text(const homogenized::Matrix3& a, int dim) {
    std::string s;
    for (int i = 0; i < dim; ++i) {
        s += "  ";
        for (int j = 0; j < dim; ++j) s += (j ? " " : "") + format_real(a[i][j]);
        s += "\n";
    }
    return s;
}

homogenized::Forcing make_forcing(const std::string& text) {
    if (text.rfind("file:", 0) == 0) return homogenized::Forcing::from_field(read_velocity_file(text.substr(5)));
    return homogenized::Forcing::parse(text);
}

class Runner {
public:
    Runner(const Settings& s, const RunConfig& resolved, std::ostream& out)
        : s_(s), resolved_(resolved), out_(out) {
        log_.timing = s.timing;
    }

    void run() {
        if (s_.command == "classify") classify();
        else if (s_.command == "cell") cell_cmd();
        else if (s_.command == "sweep") sweep();
        else if (s_.command == "poincare") poincare();
        else if (s_.command == "limit") limit();
        else if (s_.command == "dns") dns_cmd();
        else if (s_.command == "compare") compare();
        else if (s_.command == "check") check();
    }

    const RunLog& log() const { return log_; }
    std::vector<Failure>& failures() { return failures_; }

private:
    void expect(bool ok, std::string check, std::string expected, double observed) {
        if (!ok) failures_.push_back({std::move(check), std::move(expected), format_real(observed)});
    }

    void matrix_checks(const std::string& tag, const homogenized::Matrix3& a, int dim) {
        const double a11 = a[0][0];
        expect(cell::asymmetry(a, dim) <= 1e-8 * std::abs(a11), tag + " symmetry", "<= 1e-8 A11", cell::asymmetry(a, dim));
        const double tr = cell::trace(a, dim);
        expect(cell::min_eigenvalue(a, dim) >= -1e-10 * tr, tag + " psd", ">= -1e-10 trace", cell::min_eigenvalue(a, dim));
    }

    geometry::CellGeometry cell_geometry() const {
        const double d3 = s_.delta3 ? *s_.delta3 : cell::default_delta3(s_.hole, s_.dim, s_.eta);
        return geometry::build_cell(s_.dim, s_.eta, s_.hole, d3);
    }

    int cell_n() const { return s_.n ? *s_.n : cell::n_rule(s_.hole, s_.dim, s_.eta, s_.n_rule); }

    void classify() {
        const auto regime = regimes::classify(s_.family);
        out_ << regimes::describe(regime) << "\n";
    }

    void cell_cmd() {
        const auto geom = cell_geometry();
        const int n = cell_n();
        cell::CellOptions co;
        co.tol = s_.tol;
        co.max_iter = s_.max_iter;
        co.tartar = s_.tartar;
        const auto sol = cell::solve_cell(geom, n, co);
        auto f = open_out(s_.out / "cell.csv");
        f << "direction,N,iterations,residual,l2_w,h1_w,l2_q\n";
        for (int i = 0; i < s_.dim; ++i) {
            log_.add("cell eta=" + format_shortest(s_.eta) + " direction=" + std::to_string(i + 1), n, sol.reports[i]);
            f << i + 1 << ',' << n << ',' << sol.reports[i].iterations << ',' << format_real(sol.reports[i].residual)
              << ',' << format_real(sol.norms[i].l2_w) << ',' << format_real(sol.norms[i].h1_w) << ','
              << format_real(sol.norms[i].l2_q) << '\n';
        }
        const auto a = cell::permeability(sol);
        auto pf = open_out(s_.out / "permeability.csv");
        pf << "i,j,A_energy,A_average\n";
        for (int i = 0; i < s_.dim; ++i) {
            for (int j = 0; j < s_.dim; ++j) {
                pf << i + 1 << ',' << j + 1 << ',' << format_real(a.energy[i][j]) << ',' << format_real(a.average[i][j])
                   << '\n';
            }
        }
        out_ << "eta=" << format_shortest(s_.eta) << " c_eta=" << format_real(sol.c_eta) << " N=" << n << "\n";
        out_ << "A_energy\n" << matrix_text(a.energy, s_.dim) << "A_average\n" << matrix_text(a.average, s_.dim);
        matrix_checks("A_energy", a.energy, s_.dim);
        matrix_checks("A_average", a.average, s_.dim);
        if (s_.dump_fields) {
            open_out(s_.out / "masks.txt") << sol.masks->to_text(-1);
            for (int i = 0; i < s_.dim; ++i) {
                auto wf = open_out(s_.out / ("w" + std::to_string(i + 1) + ".txt"));
                write_field(wf, sol.w[i]);
                auto qf = open_out(s_.out / ("q" + std::to_string(i + 1) + ".txt"));
                write_field(qf, sol.q[i]);
            }
        }
    }

    void sweep() {
        cell::SweepOptions so;
        so.dim = s_.dim;
        so.hole = s_.hole;
        so.etas = s_.etas;
        so.cells_across = s_.n_rule;
        so.n_cap = s_.n_cap ? *s_.n_cap : 2048;
        so.tol = s_.tol;
        so.poincare = s_.poincare;
        so.poincare_tol = s_.poincare_tol;
        const auto rep = cell::sweep_eta(so);
        for (const auto& r : rep.rows) {
            log_.add("sweep eta=" + format_shortest(r.eta), r.n, SolveReport{r.iterations, r.residual, r.seconds});
            matrix_checks("eta=" + format_shortest(r.eta) + " A_energy", r.a.energy, s_.dim);
            matrix_checks("eta=" + format_shortest(r.eta) + " A_average", r.a.average, s_.dim);
        }
        auto f = open_out(s_.out / "sweep.csv");
        write_sweep_csv(f, rep, s_.timing);
        out_ << "extrapolated A11=" << format_real(rep.limit[0][0]);
        if (rep.reference) out_ << " reference=" << format_real(*rep.reference);
        out_ << "\n";
        if (rep.rows.size() >= 2) {
            const std::string b = "<= " + format_shortest(s_.band);
            expect(rep.bands.grad_w <= s_.band, "band grad_w/c_eta", b, rep.bands.grad_w);
            expect(rep.bands.q <= s_.band, "band q/c_eta", b, rep.bands.q);
            expect(rep.bands.w <= s_.band, "band w", b, rep.bands.w);
            if (s_.poincare) {
                expect(rep.bands.poincare <= s_.poincare_band, "band poincare*c_eta",
                       "<= " + format_shortest(s_.poincare_band), rep.bands.poincare);
            }
        }
    }

    void poincare() {
        const auto geom = cell_geometry();
        const int n = cell_n();
        const auto r = cell::poincare_constant(geom, n, s_.tol);
        const double c = regimes::c_eta(s_.dim, s_.eta);
        log_.add("poincare eta=" + format_shortest(s_.eta), n, SolveReport{r.iterations, 0.0, 0.0});
        auto f = open_out(s_.out / "poincare.csv");
        f << "eta,c_eta,N,lambda,constant,constant_times_c_eta,iterations\n";
        f << format_real(s_.eta) << ',' << format_real(c) << ',' << n << ',' << format_real(r.lambda) << ','
          << format_real(r.constant) << ',' << format_real(r.constant * c) << ',' << r.iterations << '\n';
        out_ << "lambda=" << format_real(r.lambda) << " constant=" << format_real(r.constant) << "\n";
    }

    void limit() {
        const int n = s_.n ? *s_.n : 128;
        const auto f = make_forcing(s_.forcing_text);
        const auto a = s_.a ? *s_.a : homogenized::scalar_matrix(1.0 / std::numbers::pi, s_.dim);
        homogenized::LimitSolution sol;
        switch (s_.system) {
            case homogenized::System::Stokes: sol = homogenized::solve_stokes(f, s_.dim, n, s_.tol); break;
            case homogenized::System::Darcy: sol = homogenized::solve_darcy(f, a, s_.dim, n, s_.tol); break;
            case homogenized::System::Brinkman:
                sol = homogenized::solve_brinkman(f, a, s_.sigma_star, s_.dim, n, s_.tol);
                break;
        }
        const std::string name = homogenized::system_name(s_.system);
        log_.add("limit " + name, n, sol.report);
        const bool darcy = s_.system == homogenized::System::Darcy;
        const double gap = darcy ? 0.0 : std::abs(sol.energy - sol.work) / std::max(std::abs(sol.work), 1e-300);
        const auto un = norms(sol.u);
        auto out = open_out(s_.out / "limit.csv");
        out << "system,N,iterations,residual,energy,work,energy_gap,divergence,l2_u,h1_u\n";
        out << name << ',' << n << ',' << sol.report.iterations << ',' << format_real(sol.report.residual) << ','
            << format_real(sol.energy) << ',' << format_real(sol.work) << ',' << format_real(gap) << ','
            << format_real(sol.divergence) << ',' << format_real(un.l2) << ',' << format_real(un.h1semi) << '\n';
        out_ << name << " N=" << n << " l2_u=" << format_real(un.l2) << " energy_gap=" << format_real(gap) << "\n";
        if (!darcy && sol.work != 0.0) expect(gap <= s_.tol, "energy identity", "<= tol", gap);
        if (darcy) expect(sol.divergence <= s_.tol, "darcy divergence", "<= tol", sol.divergence);
        if (s_.dump_fields) {
            auto uf = open_out(s_.out / "u.txt");
            write_field(uf, sol.u);
            auto pf = open_out(s_.out / "p.txt");
            write_field(pf, sol.p);
        }
    }

    void dns_cmd() {
        const auto geom = geometry::build_perforated(s_.dim, s_.epsilon, s_.a_eps, s_.hole);
        const int cap = s_.n_cap ? *s_.n_cap : dns::default_cap(s_.dim);
        const int n = s_.n ? *s_.n : dns::grid_for(geom, cap, s_.n_rule);
        dns::DnsOptions opt;
        opt.tol = s_.tol;
        opt.max_iter = s_.max_iter;
        const auto d = dns::solve_dns(geom, make_forcing(s_.forcing_text), n, opt);
        log_.add("dns eps=" + format_shortest(s_.epsilon), n, d.report);
        const double gap = d.work != 0.0 ? std::abs(d.energy - d.work) / std::abs(d.work) : std::abs(d.energy - d.work);
        const double ext = std::max(std::abs(d.ext_norms.l2 - d.u_norms.l2), std::abs(d.ext_norms.h1semi - d.u_norms.h1semi));
        auto f = open_out(s_.out / "dns.csv");
        f << "epsilon,a_eps,eta,sigma,N,holes,l2,h1,l2_ext,h1_ext,energy,work,energy_gap,extension_gap,iterations,residual\n";
        const double eta = s_.a_eps / s_.epsilon;
        const double sigma = geom.k_set.empty() ? 0.0 : regimes::sigma(s_.dim, s_.epsilon, s_.a_eps);
        f << format_real(s_.epsilon) << ',' << format_real(s_.a_eps) << ',' << format_real(eta) << ','
          << format_real(sigma) << ',' << n << ',' << geom.k_set.size() << ',' << format_real(d.u_norms.l2) << ','
          << format_real(d.u_norms.h1semi) << ',' << format_real(d.ext_norms.l2) << ','
          << format_real(d.ext_norms.h1semi) << ',' << format_real(d.energy) << ',' << format_real(d.work) << ','
          << format_real(gap) << ',' << format_real(ext) << ',' << d.report.iterations << ','
          << format_real(d.report.residual) << '\n';
        out_ << "N=" << n << " holes=" << geom.k_set.size() << " l2=" << format_real(d.u_norms.l2)
             << " energy_gap=" << format_real(gap) << "\n";
        expect(gap <= s_.tol, "energy identity", "<= tol", gap);
        expect(ext == 0.0, "extension norms", "== 0", ext);
        if (s_.dump_fields) {
            open_out(s_.out / "masks.txt") << d.masks->to_text(-1);
            auto uf = open_out(s_.out / "u.txt");
            write_field(uf, d.u);
            auto ef = open_out(s_.out / "u_ext.txt");
            write_field(ef, d.u_ext);
            auto pf = open_out(s_.out / "p.txt");
            write_field(pf, d.p);
        }
    }

    void compare() {
        dns::CompareOptions co;
        co.family = s_.family;
        co.hole = s_.hole;
        co.forcing = make_forcing(s_.forcing_text);
        co.eps_list = s_.eps;
        co.tol = s_.tol;
        co.n_cap = s_.n_cap ? *s_.n_cap : 0;
        co.cells_across = s_.n_rule;
        co.window_factor = s_.window_factor;
        co.permeability = s_.a;
        co.sweep_etas = s_.sweep_etas;
        co.sweep_tol = s_.sweep_tol;
        const auto cmp = dns::compare_regime(co);
        auto f = open_out(s_.out / "comparison.csv");
        f << "# perfstokes " << version() << "\n";
        f << "# regime=" << regimes::describe(cmp.regime) << "\n";
        if (!cmp.permeability_source.empty()) {
            f << "# permeability source=" << cmp.permeability_source;
            for (int i = 0; i < s_.dim; ++i) {
                for (int j = 0; j < s_.dim; ++j) f << " A" << i + 1 << j + 1 << '=' << format_real(cmp.permeability[i][j]);
            }
            f << "\n";
        }
        for (const auto& [k, v] : resolved_.values) f << "# " << k << '=' << v << "\n";
        dns::write_comparison_csv(f, cmp, s_.timing);

        for (const auto& r : cmp.rows) {
            log_.add("dns eps=" + format_shortest(r.epsilon), r.n, SolveReport{r.iterations, r.residual, r.seconds});
            const std::string tag = "eps=" + format_shortest(r.epsilon);
            expect(r.energy_gap <= s_.tol, tag + " energy identity", "<= tol", r.energy_gap);
            expect(r.extension_gap == 0.0, tag + " extension norms", "== 0", r.extension_gap);
            out_ << tag << " N=" << r.n << " rel_l2_velocity=" << format_real(r.rel_l2_velocity)
                 << " rel_l2_pressure=" << format_real(r.rel_l2_pressure) << "\n";
        }
        if (s_.trend) {
            for (std::size_t k = 1; k < cmp.rows.size(); ++k) {
                expect(cmp.rows[k].rel_l2_velocity < cmp.rows[k - 1].rel_l2_velocity,
                       "velocity error decreasing at eps=" + format_shortest(cmp.rows[k].epsilon),
                       "< " + format_real(cmp.rows[k - 1].rel_l2_velocity), cmp.rows[k].rel_l2_velocity);
            }
        }
        if (std::holds_alternative<regimes::LargeHoles>(cmp.regime) && cmp.rows.size() >= 2) {
            const auto b = dns::perforated_bands(cmp.rows);
            const std::string e = "<= " + format_shortest(s_.band);
            expect(b.poincare <= s_.band, "band |u|/(|grad u| sigma)", e, b.poincare);
            expect(b.gradient <= s_.band, "band |grad u|/sigma", e, b.gradient);
            expect(b.l2 <= s_.band, "band |u|/sigma^2", e, b.l2);
        }
    }

    void check() {
        std::vector<acceptance::CriterionResult> results;
        for (int id : acceptance::in_process_ids()) {
            if (std::find(s_.criteria.begin(), s_.criteria.end(), id) == s_.criteria.end()) continue;
            auto r = acceptance::run_criterion(id, s_.out, log_);
            out_ << acceptance::summary_line(r) << std::endl;
            if (!r.passed()) {
                failures_.push_back({"criterion " + std::to_string(id) + " " + r.title, r.expected,
                                     r.value_passed ? "over the runtime budget (see criteria_status.tsv)" : r.observed});
            }
            results.push_back(std::move(r));
        }
        auto f = open_out(s_.out / "acceptance.csv");
        acceptance::write_summary_csv(f, results);
        // Machine-readable status including runtime, kept out of the CSV set.
        auto st = open_out(s_.out / "criteria_status.tsv");
        for (const auto& r : results) {
            st << r.id << '\t' << (r.passed() ? 1 : 0) << '\t' << (r.value_passed ? 1 : 0) << '\t'
               << format_shortest(r.seconds) << '\t' << format_shortest(r.budget) << '\t' << r.title << '\n';
        }
    }

    const Settings& s_;
    const RunConfig& resolved_;
    std::ostream& out_;
    RunLog log_;
    std::vector<Failure> failures_;
};

void report_failures(const std::vector<Failure>& failures, const fs::path& dir, std::ostream& err) {
    write_failures(err, failures);
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream f(dir / "failures.csv", std::ios::binary);
    if (f) write_failures(f, failures);
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& command_keys(const std::string& command) {
    const auto& table = key_table();
    const auto it = table.find(command);
    if (it == table.end()) fail(ErrorCode::ConfigError, "unknown command '" + command + "'");
    return it->second;
}

void parse_config_text(std::string_view text, RunConfig& config) {
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        require(eq != std::string::npos, ErrorCode::ConfigError, "line " + std::to_string(number) + ": expected key=value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        require(!key.empty(), ErrorCode::ConfigError, "line " + std::to_string(number) + ": empty key");
        if (key == "command") {
            config.command = value;
        } else {
            config.values[key] = value;
        }
    }
}

bool is_flag_key(const std::string& key) {
    return key == "dump_fields" || key == "tartar" || key == "poincare" || key == "trend" || key == "timing";
}

RunConfig resolve(const RunConfig& config) {
    const auto& keys = command_keys(config.command);
    RunConfig out;
    out.command = config.command;
    for (const auto& [k, v] : keys) out.values[k] = v;
    std::vector<std::string> unknown;
    for (const auto& [k, v] : config.values) {
        if (out.values.count(k)) {
            out.values[k] = v;
        } else {
            unknown.push_back(k);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
        fail(ErrorCode::ConfigError, "unknown key(s) for '" + config.command + "': " + list);
    }
    settings_from(out);
    return out;
}

std::string manifest_text(const RunConfig& resolved) {
    std::string s = "# perfstokes " + std::string(version()) + "\ncommand=" + resolved.command + "\n";
    for (const auto& [k, v] : resolved.values) s += k + "=" + v + "\n";
    return s;
}

void RunLog::add(std::string problem, int n, const SolveReport& report) {
    rows.push_back({std::move(problem), n, report.iterations, report.residual, report.seconds});
}

void RunLog::write(std::ostream& out) const {
    out << "problem_id,N,iterations,residual,seconds\n";
    for (const auto& r : rows) {
        out << r.problem << ',' << r.n << ',' << r.iterations << ',' << format_real(r.residual) << ','
            << format_real(timing ? r.seconds : 0.0) << '\n';
    }
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string s = "\"";
    for (char ch : text) {
        if (ch == '"') s += '"';
        s += ch == '\n' ? ' ' : ch;
    }
    return s + "\"";
}

void write_failures(std::ostream& out, const std::vector<Failure>& failures) {
    out << "check,expected,observed\n";
    for (const auto& f : failures) {
        out << csv_field(f.check) << ',' << csv_field(f.expected) << ',' << csv_field(f.observed) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const cell::PermeabilityReport& report, bool with_timing) {
    out << "eta,c_eta,N,A11_energy,A12_energy,A11_avg,A12_avg,norm_w,norm_gradw,norm_q,poincare,iterations,seconds\n";
    for (const auto& r : report.rows) {
        out << format_real(r.eta) << ',' << format_real(r.c_eta) << ',' << r.n << ',' << format_real(r.a.energy[0][0])
            << ',' << format_real(r.a.energy[0][1]) << ',' << format_real(r.a.average[0][0]) << ','
            << format_real(r.a.average[0][1]) << ',' << format_real(r.norms.l2_w) << ',' << format_real(r.norms.h1_w)
            << ',' << format_real(r.norms.l2_q) << ',' << (r.poincare ? format_real(r.poincare->constant) : "")
            << ',' << r.iterations << ',' << format_real(with_timing ? r.seconds : 0.0) << '\n';
    }
    out << "# extrapolated";
    for (int i = 0; i < report.dim; ++i) {
        for (int j = 0; j < report.dim; ++j) out << " A" << i + 1 << j + 1 << '=' << format_real(report.limit[i][j]);
    }
    out << " slope11=" << format_real(report.slope11);
    if (report.reference) out << " reference=" << format_real(*report.reference);
    out << '\n';
}

VelocityField read_velocity_file(const fs::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot read '" + path.string() + "'");
    int dim = 0, n = 0, comps = 0;
    in >> dim >> n >> comps;
    require(in && (dim == 2 || dim == 3) && n >= 4 && comps == dim, ErrorCode::IoError,
            "'" + path.string() + "' is not a velocity field dump");
    auto u = VelocityField::zeros(homogenized::box_masks(dim, n));
    for (auto& v : u.data) {
        std::string tok;
        in >> tok;
        require(static_cast<bool>(in), ErrorCode::IoError, "'" + path.string() + "' ends early");
        v = parse_real(tok);
    }
    return u;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    RunConfig resolved;
    Settings s;
    try {
        resolved = resolve(config);
        s = settings_from(resolved);
    } catch (const Error& e) {
        fs::path dir;
        const auto it = config.values.find("out");
        if (it != config.values.end()) dir = it->second;
        report_failures({{"config", "valid configuration", e.what()}}, dir, err);
        return 1;
    }

    std::error_code ec;
    fs::create_directories(s.out, ec);
    if (ec) {
        report_failures({{"output", "writable directory", s.out.string()}}, {}, err);
        return 1;
    }
    Runner runner(s, resolved, out);
    try {
        open_out(s.out / "manifest") << manifest_text(resolved);
        runner.run();
    } catch (const Error& e) {
        runner.failures().push_back({std::string(to_string(e.code())), "successful solve", e.what()});
    }
    {
        std::ofstream f(s.out / "run.csv", std::ios::binary);
        runner.log().write(f);
    }
    if (!runner.failures().empty()) {
        report_failures(runner.failures(), s.out, err);
        return 1;
    }
    return 0;
}

}  // namespace perfstokes::cli
