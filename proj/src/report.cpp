// Config parsing, canonical JSON, CSV tables and report files.
// toml++ is included here and nowhere else: it is a heavy header.

#include "sepx/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace sepx {

namespace fs = std::filesystem;

ConfigError::ConfigError(const std::string& msg, std::string f, int l)
    : std::invalid_argument((l > 0 ? "line " + std::to_string(l) + ": " : std::string()) +
                            (f.empty() ? "" : f + ": ") + msg),
      field(std::move(f)),
      line(l) {}

namespace {

using Lines = std::map<std::string, int>;

std::string join_path(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

Json toml_to_json(const toml::node& n, const std::string& path, Lines& lines) {
    lines[path] = int(n.source().begin.line);
    switch (n.type()) {
        case toml::node_type::table: {
            Json j = Json::object();
            for (auto&& [k, v] : *n.as_table()) j[std::string(k.str())] = toml_to_json(v, join_path(path, std::string(k.str())), lines);
            return j;
        }
        case toml::node_type::array: {
            Json j = Json::array();
            const auto& a = *n.as_array();
            for (size_t i = 0; i < a.size(); ++i)
                j.push_back(toml_to_json(a[i], path + "[" + std::to_string(i) + "]", lines));
            return j;
        }
        case toml::node_type::string: return n.as_string()->get();
        case toml::node_type::integer: return n.as_integer()->get();
        case toml::node_type::floating_point: return n.as_floating_point()->get();
        case toml::node_type::boolean: return n.as_boolean()->get();
        default: throw ConfigError("dates and times are not config values", path, int(n.source().begin.line));
    }
}

// typed access to a config object with field paths (and lines, for TOML) in every error
class Reader {
public:
    Reader(const Json& root, const Lines* lines) : root_(root), lines_(lines) {}

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        int l = 0;
        if (lines_) {
            auto it = lines_->find(path);
            if (it != lines_->end()) l = it->second;
        }
        throw ConfigError(msg, path, l);
    }

    void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> known) const {
        if (!obj.is_object()) fail(path, "expected a table");
        std::set<std::string> k(known.begin(), known.end());
        for (auto& [key, v] : obj.items())
            if (!k.count(key)) fail(join_path(path, key), "unknown key");
    }

    static const Json* find(const Json& obj, const char* key) {
        auto it = obj.find(key);
        return it == obj.end() ? nullptr : &*it;
    }

    double number(const Json& v, const std::string& path) const {
        if (!v.is_number()) fail(path, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(path, "expected a finite number");
        return x;
    }
    long integer(const Json& v, const std::string& path) const {
        if (!v.is_number_integer()) fail(path, "expected an integer");
        return v.get<long>();
    }
    std::string string(const Json& v, const std::string& path) const {
        if (!v.is_string()) fail(path, "expected a string");
        return v.get<std::string>();
    }
    // a number or an array of numbers
    std::vector<double> grid(const Json& v, const std::string& path) const {
        if (v.is_number()) return {number(v, path)};
        if (!v.is_array() || v.empty()) fail(path, "expected a number or a nonempty array of numbers");
        std::vector<double> out;
        for (size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    template <class Fn>
    void section(const char* name, std::initializer_list<const char*> keys, Fn&& fn) const {
        if (auto* s = find(root_, name)) {
            check_keys(*s, name, keys);
            fn(*s, std::string(name));
        }
    }

    const Json& root() const { return root_; }

private:
    const Json& root_;
    const Lines* lines_;
};

ExperimentConfig from_json(const Json& j, const Lines* lines) {
    ExperimentConfig c;
    Reader r(j, lines);
    r.check_keys(j, "", {"model", "domain", "tolerances", "whisker", "split", "dichotomy", "trees", "audit", "output"});
    auto get = [&](const Json& s, const std::string& sec, const char* key, auto&& assign) {
        if (auto* v = Reader::find(s, key)) assign(*v, join_path(sec, key));
    };
    r.section("model", {"g", "eps", "omega", "nu", "harmonics"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "g", [&](const Json& v, const std::string& p) { c.g_grid = r.grid(v, p); });
        get(s, sec, "eps", [&](const Json& v, const std::string& p) { c.eps_grid = r.grid(v, p); });
        get(s, sec, "nu", [&](const Json& v, const std::string& p) { c.nu = r.number(v, p); });
        get(s, sec, "omega", [&](const Json& v, const std::string& p) {
            if (v.is_string()) {
                const std::string name = v.get<std::string>();
                if (name == "golden")
                    c.omega = {1.0, (1 + std::sqrt(5.0)) / 2};
                else if (name == "sqrt2")
                    c.omega = {1.0, std::sqrt(2.0)};
                else
                    r.fail(p, "expected \"golden\", \"sqrt2\" or an array of numbers");
            } else {
                c.omega = r.grid(v, p);
            }
        });
        get(s, sec, "harmonics", [&](const Json& v, const std::string& p) {
            if (!v.is_array()) r.fail(p, "expected an array of {m, q, coeff} tables");
            c.harmonics.clear();
            for (size_t i = 0; i < v.size(); ++i) {
                const std::string hp = p + "[" + std::to_string(i) + "]";
                r.check_keys(v[i], hp, {"m", "q", "coeff"});
                Harmonic h;
                auto* m = Reader::find(v[i], "m");
                auto* q = Reader::find(v[i], "q");
                auto* a = Reader::find(v[i], "coeff");
                if (!m || !q || !a) r.fail(hp, "a harmonic needs m, q and coeff");
                h.m = int(r.integer(*m, hp + ".m"));
                if (!q->is_array() || q->empty()) r.fail(hp + ".q", "expected an array of integers");
                for (size_t k = 0; k < q->size(); ++k)
                    h.q.push_back(int(r.integer((*q)[k], hp + ".q[" + std::to_string(k) + "]")));
                h.coeff = r.number(*a, hp + ".coeff");
                c.harmonics.push_back(h);
            }
        });
    });
    r.section("domain", {"tau", "vartheta", "sigma"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "tau", [&](const Json& v, const std::string& p) { c.domain.tau = r.number(v, p); });
        get(s, sec, "vartheta", [&](const Json& v, const std::string& p) { c.domain.vartheta = r.number(v, p); });
        get(s, sec, "sigma", [&](const Json& v, const std::string& p) { c.domain.sigma = r.number(v, p); });
    });
    r.section("tolerances", {"ode", "whisker_ode", "solvability", "fd_step"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "ode", [&](const Json& v, const std::string& p) { c.ode_tol = r.number(v, p); });
        get(s, sec, "whisker_ode", [&](const Json& v, const std::string& p) { c.whisker_ode_tol = r.number(v, p); });
        get(s, sec, "solvability", [&](const Json& v, const std::string& p) { c.solv_tol = r.number(v, p); });
        get(s, sec, "fd_step", [&](const Json& v, const std::string& p) { c.fd_step = r.number(v, p); });
    });
    r.section("whisker", {"l_max", "K", "r_seed"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "l_max", [&](const Json& v, const std::string& p) { c.l_max = int(r.integer(v, p)); });
        get(s, sec, "K", [&](const Json& v, const std::string& p) { c.K = int(r.integer(v, p)); });
        get(s, sec, "r_seed", [&](const Json& v, const std::string& p) { c.r_seed = r.number(v, p); });
    });
    r.section("split", {"t", "methods", "T0", "budget_ratio"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "t", [&](const Json& v, const std::string& p) { c.t_grid = r.grid(v, p); });
        get(s, sec, "T0", [&](const Json& v, const std::string& p) { c.T0 = r.number(v, p); });
        get(s, sec, "budget_ratio", [&](const Json& v, const std::string& p) { c.budget_ratio = r.number(v, p); });
        get(s, sec, "methods", [&](const Json& v, const std::string& p) {
            if (!v.is_array() || v.empty()) r.fail(p, "expected a nonempty array of method names");
            c.methods.clear();
            for (size_t i = 0; i < v.size(); ++i) c.methods.push_back(r.string(v[i], p + "[" + std::to_string(i) + "]"));
        });
    });
    r.section("dichotomy", {"C", "eps1", "c"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "C", [&](const Json& v, const std::string& p) { c.dich_C = r.number(v, p); });
        get(s, sec, "eps1", [&](const Json& v, const std::string& p) { c.dich_eps1 = r.number(v, p); });
        get(s, sec, "c", [&](const Json& v, const std::string& p) { c.dich_c = r.number(v, p); });
    });
    r.section("trees", {"max_degree"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "max_degree", [&](const Json& v, const std::string& p) { c.max_degree = int(r.integer(v, p)); });
    });
    r.section("audit", {"max_degree", "max_integrated"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "max_degree", [&](const Json& v, const std::string& p) { c.audit_degree = int(r.integer(v, p)); });
        get(s, sec, "max_integrated",
            [&](const Json& v, const std::string& p) { c.audit_max_integrated = int(r.integer(v, p)); });
    });
    r.section("output", {"dir", "jobs", "seed"}, [&](const Json& s, const std::string& sec) {
        get(s, sec, "dir", [&](const Json& v, const std::string& p) { c.output_dir = r.string(v, p); });
        get(s, sec, "jobs", [&](const Json& v, const std::string& p) { c.jobs = int(r.integer(v, p)); });
        get(s, sec, "seed", [&](const Json& v, const std::string& p) { c.seed = r.integer(v, p); });
    });

    // range checks, reported against the field that carries the value
    auto bad = [&](bool cond, const std::string& path, const std::string& msg) {
        if (cond) r.fail(path, msg);
    };
    for (double g : c.g_grid) bad(!(g > 0), "model.g", "every g must be positive");
    for (double e : c.eps_grid) bad(!std::isfinite(e), "model.eps", "every eps must be finite");
    bad(!(c.nu > 0), "model.nu", "must be positive");
    const size_t d = c.omega.empty() ? 2 : c.omega.size();
    for (size_t i = 0; i < c.harmonics.size(); ++i)
        bad(c.harmonics[i].q.size() != d, "model.harmonics[" + std::to_string(i) + "].q",
            "needs " + std::to_string(d) + " entries, one per frequency");
    bad(!(c.domain.tau > 0 && c.domain.tau <= 0.5), "domain.tau", "must lie in (0, 0.5]");
    bad(!(c.domain.vartheta > 0 && c.domain.vartheta < std::numbers::pi / 2), "domain.vartheta", "must lie in (0, pi/2)");
    bad(!(c.domain.sigma > 0), "domain.sigma", "must be positive");
    bad(!(c.ode_tol > 0), "tolerances.ode", "must be positive");
    bad(!(c.whisker_ode_tol > 0), "tolerances.whisker_ode", "must be positive");
    bad(!(c.solv_tol > 0), "tolerances.solvability", "must be positive");
    bad(!(c.fd_step > 0 && c.fd_step < 0.1), "tolerances.fd_step", "must lie in (0, 0.1)");
    bad(c.l_max < 1 || c.l_max >= kJetN, "whisker.l_max", "must lie in 1.." + std::to_string(kJetN - 1));
    bad(c.K < 8, "whisker.K", "must be at least 8");
    bad(!(c.r_seed > 0 && c.r_seed <= 0.4), "whisker.r_seed", "must lie in (0, 0.4]");
    bad(c.T0 < 0, "split.T0", "must be >= 0 (0 picks 6/gamma)");
    bad(!(c.budget_ratio > 0), "split.budget_ratio", "must be positive");
    for (auto& m : c.methods)
        bad(m != "melnikov" && m != "perturbative-l2" && m != "direct", "split.methods",
            "unknown method '" + m + "' (melnikov, perturbative-l2, direct)");
    bad(!(c.dich_C > 0), "dichotomy.C", "must be positive");
    bad(!(c.dich_eps1 > 0), "dichotomy.eps1", "must be positive");
    bad(!(c.dich_c > 0), "dichotomy.c", "must be positive");
    bad(c.max_degree < 1 || c.max_degree > 6, "trees.max_degree", "must lie in 1..6");
    bad(c.audit_degree < 1 || c.audit_degree > 5, "audit.max_degree", "must lie in 1..5");
    bad(c.audit_max_integrated < 1, "audit.max_integrated", "must be positive");
    bad(c.jobs < 1, "output.jobs", "must be at least 1");
    return c;
}

void print_number(std::string& out, const Json& j) {
    if (j.is_number_float())
        out += std::isfinite(j.get<double>()) ? format_double(j.get<double>()) : Json(format_double(j.get<double>())).dump();
    else
        out += j.dump();
}

void dump_rec(std::string& out, const Json& j, int indent) {
    const std::string pad(size_t(2 * (indent + 1)), ' '), close(size_t(2 * indent), ' ');
    if (j.is_object()) {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto& [k, v] : j.items()) {  // std::map storage: sorted
            if (!first) out += ",\n";
            first = false;
            out += pad + Json(k).dump() + ": ";
            dump_rec(out, v, indent + 1);
        }
        out += "\n" + close + "}";
    } else if (j.is_array()) {
        if (j.empty()) {
            out += "[]";
            return;
        }
        const bool flat = std::all_of(j.begin(), j.end(), [](const Json& v) { return v.is_primitive(); });
        out += flat ? "[" : "[\n";
        for (size_t i = 0; i < j.size(); ++i) {
            if (i) out += flat ? ", " : ",\n";
            if (!flat) out += pad;
            dump_rec(out, j[i], indent + 1);
        }
        out += flat ? "]" : "\n" + close + "]";
    } else if (j.is_number()) {
        print_number(out, j);
    } else {
        out += j.dump();
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw ReportIOError("cannot write " + p.string());
    f.write(bytes.data(), std::streamsize(bytes.size()));
    f.close();
    if (!f) throw ReportIOError("write failed: " + p.string());
}

}  // namespace

ModelParams ExperimentConfig::params(double g, double eps) const {
    ModelParams p;
    p.g = g;
    p.epsilon = eps;
    const std::vector<double> w = omega.empty() ? std::vector<double>{1.0, (1 + std::sqrt(5.0)) / 2} : omega;
    // the Diophantine scan is O(Q^{d-1}) per call
    p.omega = FrequencyVector::make(w, nu, w.size() <= 2 ? 1000 : 40);
    if (harmonics.empty()) {
        Mode q(w.size(), 0);
        q[0] = 1;
        p.f.harmonics = {{1, q, 0.5}, {-1, q, 0.5}};
    } else {
        p.f.harmonics = harmonics;
    }
    return p;
}

WhiskerOptions ExperimentConfig::whisker_options() const {
    WhiskerOptions o;
    o.l_max = l_max;
    o.K = K;
    o.r_seed = r_seed;
    o.ode_tol = whisker_ode_tol;
    o.solv_tol = solv_tol;
    return o;
}

void ExperimentConfig::validate() const { (void)from_json(config_json(*this), nullptr); }

ExperimentConfig parse_config_toml(const std::string& text, const std::string& source) {
    toml::table tbl;
    try {
        tbl = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        throw ConfigError(std::string(e.description()), source, int(e.source().begin.line));
    }
    Lines lines;
    const Json j = toml_to_json(tbl, "", lines);
    return from_json(j, &lines);
}

ExperimentConfig parse_config_json(const Json& j) {
    if (j.is_object() && j.contains("config") && j.contains("command")) return from_json(j.at("config"), nullptr);
    return from_json(j, nullptr);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file", path);
    std::stringstream ss;
    ss << f.rdbuf();
    if (fs::path(path).extension() == ".json") {
        Json j;
        try {
            j = Json::parse(ss.str());
        } catch (const Json::parse_error& e) {
            throw ConfigError(e.what(), path);
        }
        return parse_config_json(j);
    }
    return parse_config_toml(ss.str(), path);
}

Json config_json(const ExperimentConfig& c) {
    const ModelParams p = c.params(c.g_grid.front(), 0);
    Json harm = Json::array();
    for (auto& h : p.f.harmonics) harm.push_back({{"m", h.m}, {"q", h.q}, {"coeff", h.coeff}});
    Json j;
    j["model"] = {{"g", c.g_grid}, {"eps", c.eps_grid}, {"omega", p.omega.omega}, {"nu", c.nu}, {"harmonics", harm}};
    j["domain"] = {{"tau", c.domain.tau}, {"vartheta", c.domain.vartheta}, {"sigma", c.domain.sigma}};
    j["tolerances"] = {
        {"ode", c.ode_tol}, {"whisker_ode", c.whisker_ode_tol}, {"solvability", c.solv_tol}, {"fd_step", c.fd_step}};
    j["whisker"] = {{"l_max", c.l_max}, {"K", c.K}, {"r_seed", c.r_seed}};
    j["split"] = {{"t", c.t_grid}, {"methods", c.methods}, {"T0", c.T0}, {"budget_ratio", c.budget_ratio}};
    j["dichotomy"] = {{"C", c.dich_C}, {"eps1", c.dich_eps1}, {"c", c.dich_c}};
    j["trees"] = {{"max_degree", c.max_degree}};
    j["audit"] = {{"max_degree", c.audit_degree}, {"max_integrated", c.audit_max_integrated}};
    // where the files go and how many threads do the work never change a number
    j["output"] = {{"seed", c.seed}};
    return j;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &n, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string dump_json(const Json& j) {
    std::string out;
    dump_rec(out, j, 0);
    return out + "\n";
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& v) {
        for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + csv_field(v[i]);
        out += "\n";
    };
    line(header);
    for (auto& r : rows) line(r);
    return out;
}

bool Report::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Json& v) { return v.get<bool>(); });
}

Json Report::to_json() const {
    Json t = Json::array();
    for (auto& tab : tables) t.push_back(tab.name + ".csv");
    return {{"command", command}, {"config", config}, {"inputs_hash", inputs_hash}, {"tables", t},
            {"summary", summary}, {"checks", checks},   {"passed", passed()}};
}

std::vector<std::string> emit_report(const Report& r, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ReportIOError("output directory unusable: " + dir);
    std::vector<std::string> written;
    for (auto& t : r.tables) {
        const fs::path p = fs::path(dir) / (t.name + ".csv");
        write_file(p, t.str());
        written.push_back(p.string());
    }
    const fs::path p = fs::path(dir) / (r.command + ".json");
    write_file(p, dump_json(r.to_json()));
    written.push_back(p.string());
    return written;
}

JobScheduler::JobScheduler(int workers) : workers_(std::max(1, workers)) {}

std::vector<std::exception_ptr> JobScheduler::run(size_t n, const std::function<void(size_t)>& job) const {
    std::vector<std::exception_ptr> err(n);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                job(i);
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    const size_t nt = std::min<size_t>(size_t(workers_), n);
    if (nt <= 1) {
        worker();
        return err;
    }
    std::vector<std::thread> pool;
    for (size_t k = 0; k < nt; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return err;
}

}  // namespace sepx
