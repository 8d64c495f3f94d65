// Subcommand pipelines and the command-line driver.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <tuple>

#include "sepx/melnikov.hpp"
#include "sepx/report.hpp"
#include "sepx/splitting.hpp"
#include "sepx/trees.hpp"

namespace sepx {

namespace {

std::string num(double x) { return format_double(x); }
std::string num(long x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }

Report make_report(const ExperimentConfig& c, const std::string& command) {
    Report r;
    r.command = command;
    r.config = config_json(c);
    r.inputs_hash = "sha256:" + sha256_hex(dump_json(r.config));
    return r;
}

void rethrow_first(const std::vector<std::exception_ptr>& err) {
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
}

// f = c cos(phi + q.psi) + c cos(-phi + q.psi) with c = 1/2, i.e. cos(phi) cos(q.psi)
std::optional<Mode> single_harmonic(const ModelParams& p) {
    const auto& h = p.f.harmonics;
    if (h.size() != 2 || h[0].q != h[1].q || h[0].m + h[1].m != 0 || std::abs(h[0].m) != 1) return std::nullopt;
    if (h[0].coeff != 0.5 || h[1].coeff != 0.5) return std::nullopt;
    return h[0].q;
}

void matrix_rows(CsvTable& t, const std::vector<std::string>& key, const Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            auto row = key;
            row.push_back(num(i + 1));
            row.push_back(num(j + 1));
            row.push_back(num(m(i, j)));
            t.add(std::move(row));
        }
}

Json matrix_json(const Mat& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json r = Json::array();
        for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

std::vector<Mat> melnikov_over_grid(const ExperimentConfig& c, std::vector<MelnikovResult>* full = nullptr) {
    std::vector<MelnikovResult> res(c.g_grid.size());
    JobScheduler js(c.jobs);
    rethrow_first(js.run(res.size(), [&](size_t k) { res[k] = melnikov_matrix(c.params(c.g_grid[k], 0)); }));
    std::vector<Mat> out;
    for (auto& m : res) out.push_back(m.upsilon1);
    if (full) *full = std::move(res);
    return out;
}

}  // namespace

Report run_melnikov(const ExperimentConfig& c) {
    Report r = make_report(c, "melnikov");
    std::vector<MelnikovResult> res;
    melnikov_over_grid(c, &res);
    CsvTable t{"melnikov", {"g", "i", "j", "value"}, {}};
    Json per_g = Json::array();
    const ModelParams p0 = c.params(c.g_grid.front(), 0);
    const auto q = single_harmonic(p0);
    bool oracle_ok = true, finite = true;
    for (size_t k = 0; k < res.size(); ++k) {
        const double g = c.g_grid[k];
        matrix_rows(t, {num(g)}, res[k].upsilon1);
        Json e = {{"g", g}, {"quadrature_error", res[k].quadrature_error}, {"norm", res[k].upsilon1.norm()},
                  {"upsilon1", matrix_json(res[k].upsilon1)}};
        finite = finite && res[k].upsilon1.allFinite();
        if (q) {
            const double err = rel_err(res[k].upsilon1, single_harmonic_oracle(*q, g, p0.omega));
            e["oracle_rel_error"] = err;
            oracle_ok = oracle_ok && err <= 1e-8;
        }
        per_g.push_back(e);
    }
    r.tables.push_back(std::move(t));
    r.summary["per_g"] = per_g;
    r.checks["finite"] = finite;
    if (q) r.checks["closed_form_match"] = oracle_ok;
    return r;
}

Report run_fit(const ExperimentConfig& c) {
    if (c.g_grid.size() < 4) throw ConfigError("a fit needs at least 4 values of g", "model.g");
    Report r = make_report(c, "fit");
    const auto values = melnikov_over_grid(c);
    const ModelParams p0 = c.params(c.g_grid.front(), 0);
    const auto q = single_harmonic(p0);
    CsvTable t{"fit", {"model", "g", "observed", "predicted", "log_residual"}, {}};
    Json fits = Json::array();
    for (FitModel m : {FitModel::single_harmonic, FitModel::diophantine}) {
        const std::string tag = to_string(m);
        try {
            const auto f = smallness_fit(c.g_grid, values, m, c.nu);
            for (size_t k = 0; k < values.size(); ++k) {
                const double y = values[k].norm();
                t.add({tag, num(c.g_grid[k]), num(y), num(f.predicted[k]), num(std::log(y / f.predicted[k]))});
            }
            Json e = {{"model", tag}, {"nu", f.nu}, {"c_fit", f.c_fit}, {"C_fit", f.C_fit}, {"residual", f.residual}};
            if (m == FitModel::single_harmonic && q) {
                const double expect = std::numbers::pi * std::abs(p0.omega.dot(*q)) / 2;
                e["expected_c"] = expect;
                r.checks["single_harmonic_slope"] = std::abs(f.c_fit - expect) <= 0.05 * expect;
            }
            if (m == FitModel::diophantine)
                r.checks["diophantine_fit"] = f.c_fit > 0 && f.residual < 0.1;
            fits.push_back(e);
        } catch (const FitDomainError& e) {
            fits.push_back({{"model", tag}, {"error", e.what()}});
            r.checks[tag + "_fit_domain"] = false;
        }
    }
    r.tables.push_back(std::move(t));
    r.summary["fits"] = fits;
    return r;
}

Report run_whisker(const ExperimentConfig& c) {
    Report r = make_report(c, "whisker");
    struct Row {
        std::vector<double> residual, gamma, drift, mismatch;
        std::vector<int> degree;
        std::vector<double> gamma_eps;
    };
    std::vector<Row> rows(c.g_grid.size());
    JobScheduler js(c.jobs);
    rethrow_first(js.run(rows.size(), [&](size_t k) {
        const auto w = build_whisker(c.params(c.g_grid[k], 0), c.whisker_options(), c.domain);
        const std::vector<double> th(size_t(w.params.dim()), 0.0);
        const auto at = whisker_at(w, Jet(1.0), th, true);
        const auto st = whisker_stable_at(w, Jet(1.0), th, true);
        for (int l = 0; l <= w.solved(); ++l) {
            const auto& o = w.orders[size_t(l)];
            rows[k].residual.push_back(residual_norm(w, l));
            rows[k].gamma.push_back(o.gamma_coeff);
            rows[k].degree.push_back(o.degree);
            rows[k].drift.push_back(o.picard_drift);
            // the normalization point: X^l(1, 0) = 0 for l >= 1 and the two whiskers meet there
            double m = 0;
            for (size_t i = 0; i < at.X.size(); ++i) {
                if (l > 0) m = std::max(m, std::abs(at.X[i].c[size_t(l)]));
                m = std::max({m, std::abs(st.X[i].c[size_t(l)] - at.X[i].c[size_t(l)]),
                              std::abs(st.Y[i].c[size_t(l)] - at.Y[i].c[size_t(l)])});
            }
            rows[k].mismatch.push_back(m);
        }
        for (double e : c.eps_grid) rows[k].gamma_eps.push_back(w.gamma_at(e));
    }));

    const int N = c.params(c.g_grid.front(), 0).f.degree();
    CsvTable orders{"whisker_orders", {"g", "ell", "residual", "gamma_coeff", "degree", "degree_bound", "picard_drift",
                                       "homoclinic_mismatch"}, {}};
    CsvTable gam{"whisker_gamma", {"g", "eps", "gamma", "gamma_ratio"}, {}};
    bool res_ok = true, deg_ok = true, hom_ok = true, gam_ok = true;
    double C = 0;
    for (size_t k = 0; k < rows.size(); ++k) {
        const double g = c.g_grid[k];
        for (size_t l = 0; l < rows[k].residual.size(); ++l) {
            orders.add({num(g), num(long(l)), num(rows[k].residual[l]), num(rows[k].gamma[l]), num(rows[k].degree[l]),
                        num(long(l) * N), num(rows[k].drift[l]), num(rows[k].mismatch[l])});
            if (l <= 2) res_ok = res_ok && rows[k].residual[l] < 1e-7;
            deg_ok = deg_ok && rows[k].degree[l] <= int(l) * N;
            hom_ok = hom_ok && rows[k].mismatch[l] < 1e-10;
        }
        for (size_t e = 0; e < c.eps_grid.size(); ++e) {
            const double eps = c.eps_grid[e], ga = rows[k].gamma_eps[e];
            const double ratio = eps == 0 ? 0 : std::abs(ga - g) / (g * std::abs(eps));
            gam.add({num(g), num(eps), num(ga), num(ratio)});
            gam_ok = gam_ok && std::isfinite(ratio);
            C = std::max(C, ratio);
        }
    }
    r.tables.push_back(std::move(orders));
    r.tables.push_back(std::move(gam));
    r.summary["gamma_ratio_max"] = C;
    r.summary["degree_N"] = N;
    r.checks["residual_below_1e-7"] = res_ok;
    r.checks["degree_bound"] = deg_ok;
    r.checks["homoclinic_agreement"] = hom_ok;
    r.checks["gamma_ratio_finite"] = gam_ok;
    return r;
}

Report run_trees(const ExperimentConfig& c) {
    Report r = make_report(c, "trees");
    CsvTable counts{"trees", {"max_degree", "ordered_trees", "classes", "root_trees", "bound_2^6l"}, {}};
    CsvTable list{"tree_list", {"degree", "tree", "multiplicity"}, {}};
    Json ordered = Json::array();
    bool bound_ok = true, node_ok = true;
    for (int L = 1; L <= c.max_degree; ++L) {
        const auto T = enumerate_trees(L);
        const auto R = enumerate_root_trees(L);
        const double bound = std::pow(2.0, 6 * L);
        counts.add({num(L), num(long(T.size())), num(long(canonical_classes(T).size())), num(long(R.size())),
                    num(bound)});
        ordered.push_back(long(T.size()));
        bound_ok = bound_ok && double(T.size()) <= bound && double(R.size()) <= bound;
        for (auto& t : R) {
            const int d = degree(t);
            node_ok = node_ok && t.n_end_nodes() <= d - 1 && (d < 2 || t.n_nodes() <= 2 * (d - 1));
        }
        if (L == c.max_degree)
            for (auto& t : T) list.add({num(degree(t)), to_text(t), num(multiplicity(canonical(t)))});
    }
    bool plane_ok = true;
    Json plane = Json::array();
    for (int k = 1; k <= 7; ++k) {
        const long n = plane_tree_count(k);
        plane.push_back(n);
        plane_ok = plane_ok && n == long(plane_tree_shapes(k).size());
    }
    r.tables.push_back(std::move(counts));
    r.tables.push_back(std::move(list));
    r.summary["ordered_counts"] = ordered;
    r.summary["plane_tree_counts"] = plane;
    r.checks["tree_count_bound"] = bound_ok;
    r.checks["node_count_lemma"] = node_ok;
    r.checks["plane_tree_count"] = plane_ok;
    return r;
}

Report run_audit(const ExperimentConfig& c) {
    Report r = make_report(c, "audit");
    const auto roots = enumerate_root_trees(c.audit_degree);
    struct Tot {
        long labelings = 0, orders = 0, steps = 0, paths = 0, terminated = 0, sr = 0, index = 0, range = 0, sum = 0;
    };
    std::vector<Tot> per(roots.size());
    JobScheduler js(c.jobs);
    rethrow_first(js.run(roots.size(), [&](size_t k) {
        Tot& t = per[k];
        for_each_labeling(roots[k], [&](const Tree& lab) {
            if (n_integrated(lab) > c.audit_max_integrated) return true;
            ++t.labelings;
            for (auto& o : exhaustions(lab)) {
                ++t.orders;
                const auto A = contraction_audit(lab, o);
                t.steps += A.steps;
                t.paths += A.k_paths;
                t.terminated += A.terminated;
                t.sr += A.sr_violations;
                t.index += A.index_violations;
                t.range += A.range_violations;
                t.sum += A.sum_violations;
            }
            return true;
        });
    }));
    std::map<int, Tot> by_degree;
    std::map<int, long> trees_at;
    for (size_t k = 0; k < roots.size(); ++k) {
        const int d = degree(roots[k]);
        Tot& a = by_degree[d];
        const Tot& b = per[k];
        ++trees_at[d];
        a.labelings += b.labelings;
        a.orders += b.orders;
        a.steps += b.steps;
        a.paths += b.paths;
        a.terminated += b.terminated;
        a.sr += b.sr;
        a.index += b.index;
        a.range += b.range;
        a.sum += b.sum;
    }
    CsvTable t{"audit", {"degree", "root_trees", "labelings", "exhaustions", "steps", "k_paths", "terminated",
                         "sr_violations", "index_violations", "range_violations", "sum_violations"}, {}};
    long viol = 0, labelings = 0, orders = 0;
    for (auto& [d, a] : by_degree) {
        t.add({num(d), num(trees_at[d]), num(a.labelings), num(a.orders), num(a.steps), num(a.paths),
               num(a.terminated), num(a.sr), num(a.index), num(a.range), num(a.sum)});
        viol += a.sr + a.index + a.range + a.sum;
        labelings += a.labelings;
        orders += a.orders;
    }
    r.tables.push_back(std::move(t));
    r.summary["labelings"] = labelings;
    r.summary["exhaustions"] = orders;
    r.summary["violations"] = viol;
    r.checks["zero_violations"] = viol == 0;
    r.checks["nonempty"] = labelings > 0;
    return r;
}

Report run_dichotomy(const ExperimentConfig& c) {
    Report r = make_report(c, "dichotomy");
    CsvTable t{"dichotomy", {"g", "eps", "status", "n_g", "eps_tilde", "decay", "head", "tail", "bound"}, {}};
    long violations = 0;
    for (double g : c.g_grid)
        for (double e : c.eps_grid) {
            DichotomyInput in{c.dich_C, c.dich_eps1, c.dich_c, c.nu, g, e};
            try {
                const auto b = dichotomy_bound(in);
                t.add({num(g), num(e), "ok", num(b.n_g), num(b.eps_tilde), num(b.decay), num(b.head), num(b.tail),
                       num(b.bound)});
            } catch (const HypothesisViolation&) {
                ++violations;
                t.add({num(g), num(e), "violation", "", "", "", "", "", ""});
            }
        }
    r.tables.push_back(std::move(t));
    r.summary["violations"] = violations;
    r.checks["small_eps_tilde"] = violations == 0;
    return r;
}

Report run_split(const ExperimentConfig& c) {
    const bool want_pert = std::count(c.methods.begin(), c.methods.end(), "perturbative-l2") > 0;
    const bool want_direct = std::count(c.methods.begin(), c.methods.end(), "direct") > 0;
    if (want_pert && c.l_max < 2) throw ConfigError("perturbative-l2 needs l_max >= 2", "whisker.l_max");
    Report r = make_report(c, "split");
    JobScheduler js(c.jobs);

    std::vector<std::unique_ptr<WhiskerExpansion>> ws(c.g_grid.size());
    if (want_pert || want_direct)
        rethrow_first(js.run(ws.size(), [&](size_t k) {
            ws[k] = std::make_unique<WhiskerExpansion>(
                build_whisker(c.params(c.g_grid[k], 0), c.whisker_options(), c.domain));
        }));

    struct Job {
        size_t g;
        double eps, t;
        std::string method;
    };
    std::vector<Job> jobs;
    for (size_t k = 0; k < c.g_grid.size(); ++k)
        for (double e : c.eps_grid)
            for (double t : c.t_grid)
                for (auto& m : c.methods) jobs.push_back({k, e, t, m});
    std::vector<std::optional<SplittingResult>> res(jobs.size());
    std::vector<Mat> jet_ref(jobs.size());
    std::vector<std::string> why(jobs.size());
    DirectOptions opt;
    opt.tol = c.ode_tol;
    opt.fd_step = c.fd_step;
    opt.T0 = c.T0;
    opt.budget_ratio = c.budget_ratio;
    auto errs = js.run(jobs.size(), [&](size_t i) {
        const Job& J = jobs[i];
        if (J.method == "melnikov") {
            res[i] = splitting_melnikov(J.t, c.params(c.g_grid[J.g], J.eps));
        } else if (J.method == "perturbative-l2") {
            res[i] = splitting_perturbative(J.t, *ws[J.g], J.eps, 2);
        } else {
            try {
                res[i] = splitting_direct(J.t, *ws[J.g], J.eps, opt);
                if (ws[J.g]->solved() >= 3) jet_ref[i] = splitting_perturbative(J.t, *ws[J.g], J.eps, 3).matrix;
            } catch (const InconclusiveMeasurement& e) {
                why[i] = e.what();
            }
        }
    });
    rethrow_first(errs);

    const int d = c.params(c.g_grid.front(), 0).dim();
    CsvTable rows{"split", {}, {}};
    {
        std::string h = splitting_csv_header(d);
        for (size_t a = 0, b; a <= h.size(); a = b + 1) {
            b = h.find(',', a);
            if (b == std::string::npos) b = h.size();
            rows.header.push_back(h.substr(a, b - a));
        }
    }
    CsvTable mats{"split_matrices", {"method", "t", "g", "eps", "i", "j", "value"}, {}};
    CsvTable budgets{"split_budgets", {"t", "g", "eps", "T0", "expected", "truncation", "linearization", "fd",
                                       "rounding", "error_estimate", "jet_gap"}, {}};
    Json inconclusive = Json::array();
    bool jets_ok = true, have_jets = false;
    std::map<std::tuple<size_t, double, double>, const SplittingResult*> direct_at;
    for (size_t i = 0; i < jobs.size(); ++i) {
        const Job& J = jobs[i];
        if (!res[i]) {
            inconclusive.push_back({{"t", J.t}, {"g", c.g_grid[J.g]}, {"eps", J.eps}, {"reason", why[i]}});
            continue;
        }
        const auto& s = *res[i];
        std::vector<std::string> fields;
        {
            const std::string line = splitting_csv_row(s);
            for (size_t a = 0, b; a <= line.size(); a = b + 1) {
                b = line.find(',', a);
                if (b == std::string::npos) b = line.size();
                fields.push_back(line.substr(a, b - a));
            }
        }
        rows.add(fields);
        matrix_rows(mats, {J.method, num(J.t), num(c.g_grid[J.g]), num(J.eps)}, s.matrix);
        if (J.method == "direct") {
            double gap = std::nan("");
            if (jet_ref[i].size() > 0) {
                have_jets = true;
                gap = (s.matrix - jet_ref[i]).norm();
                jets_ok = jets_ok && gap <= 10 * s.error_estimate;
            }
            budgets.add({num(J.t), num(c.g_grid[J.g]), num(J.eps), num(s.T0), num(s.expected),
                         num(s.truncation_budget), num(s.linearization_budget), num(s.fd_budget),
                         num(s.rounding_budget), num(s.error_estimate), num(gap)});
            direct_at[{J.g, J.eps, J.t}] = &s;
        }
    }
    // reflected times present in the grid
    bool sym_ok = true, have_sym = false;
    for (auto& [key, s] : direct_at) {
        auto [g, e, t] = key;
        if (t <= 0) continue;
        auto it = direct_at.find({g, e, -t});
        if (it == direct_at.end()) continue;
        have_sym = true;
        sym_ok = sym_ok && (s->matrix - it->second->matrix).norm() <= 10 * (s->error_estimate + it->second->error_estimate);
    }
    r.tables.push_back(std::move(rows));
    r.tables.push_back(std::move(mats));
    if (want_direct) r.tables.push_back(std::move(budgets));
    r.summary["jobs"] = long(jobs.size());
    r.summary["inconclusive"] = inconclusive;
    r.checks["conclusive"] = inconclusive.empty();
    if (have_jets) r.checks["direct_matches_jets"] = jets_ok;
    if (have_sym) r.checks["reversibility"] = sym_ok;
    return r;
}

namespace {

const std::map<std::string, Report (*)(const ExperimentConfig&)>& pipelines() {
    static const std::map<std::string, Report (*)(const ExperimentConfig&)> m{
        {"melnikov", run_melnikov}, {"fit", run_fit},     {"whisker", run_whisker},     {"trees", run_trees},
        {"split", run_split},       {"audit", run_audit}, {"dichotomy", run_dichotomy}};
    return m;
}

std::string default_out_dir(const ExperimentConfig& c) {
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* e = std::getenv("SEPX_OUT_DIR"); e && *e) return e;
    return "sepx_out";
}

}  // namespace

int run_command(int argc, const char* const* argv) {
    CLI::App app{"Separatrix splitting experiments. Results go to --out, $SEPX_OUT_DIR or ./sepx_out.", "sepx"};
    app.require_subcommand(1, 1);
    struct Opts {
        std::string config, out;
        int jobs = 0;
        int max_degree = 0, max_integrated = 0;
    } o;
    std::map<std::string, CLI::App*> subs;
    const std::map<std::string, std::string> help{
        {"melnikov", "first-order splitting matrix over the g-grid"},
        {"fit", "exponential-smallness fits of the first-order matrix"},
        {"whisker", "whisker construction residuals, degrees, normalization and gamma"},
        {"trees", "tree enumeration counts and bounds"},
        {"split", "splitting matrices over the (g, eps, t) grid"},
        {"audit", "integration-by-parts audits over labeled trees"},
        {"dichotomy", "dichotomy bound over the (g, eps) grid"}};
    for (auto& [name, fn] : pipelines()) {
        CLI::App* s = app.add_subcommand(name, help.at(name));
        s->add_option("-c,--config", o.config, "TOML config, or a JSON report to re-run")->check(CLI::ExistingFile);
        s->add_option("-o,--out", o.out, "output directory");
        s->add_option("-j,--jobs", o.jobs, "parallel jobs")->check(CLI::PositiveNumber);
        if (name == "trees" || name == "audit") s->add_option("--max-degree", o.max_degree, "largest tree degree");
        if (name == "audit") s->add_option("--max-integrated", o.max_integrated, "largest number of integrated nodes");
        subs[name] = s;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    std::string name;
    for (auto& [n, s] : subs)
        if (s->parsed()) name = n;

    ExperimentConfig cfg;
    try {
        if (!o.config.empty()) cfg = load_config(o.config);
        if (o.jobs > 0) cfg.jobs = o.jobs;
        if (o.max_degree > 0) (name == "trees" ? cfg.max_degree : cfg.audit_degree) = o.max_degree;
        if (o.max_integrated > 0) cfg.audit_max_integrated = o.max_integrated;
        cfg.validate();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    const std::string dir = o.out.empty() ? default_out_dir(cfg) : o.out;
    try {
        const Report r = pipelines().at(name)(cfg);
        for (auto& f : emit_report(r, dir)) std::cout << "wrote " << f << "\n";
        for (auto& [k, v] : r.checks.items()) std::cout << (v.get<bool>() ? "pass " : "FAIL ") << k << "\n";
        return r.passed() ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ReportIOError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << name << " failed: " << e.what() << "\n";
        return 1;
    }
}

int run_command(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    return run_command(int(argv.size()), argv.data());
}

}  // namespace sepx
