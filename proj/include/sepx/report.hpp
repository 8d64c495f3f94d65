#pragma once
// Experiment configs (TOML in), reports (JSON + CSV out), the sweep scheduler
// and the command-line driver.

#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sepx/dynamics.hpp"
#include "sepx/manifold.hpp"

namespace sepx {

using Json = nlohmann::json;

// malformed or invalid config; line = 0 when the source has no position (JSON, defaults)
class ConfigError : public std::invalid_argument {
public:
    std::string field;
    int line;
    ConfigError(const std::string& msg, std::string f, int l = 0);
};

class ReportIOError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    // model
    std::vector<double> g_grid{1.0};
    std::vector<double> eps_grid{1e-3};
    std::vector<double> omega;  // empty -> golden pair
    double nu = 1;
    std::vector<Harmonic> harmonics;  // empty -> cos(phi) cos(psi_1)
    // wedge / strip
    WedgeDomain domain;
    // tolerances
    double ode_tol = 1e-13;   // direct measurements
    double whisker_ode_tol = 1e-12;
    double solv_tol = 1e-10;
    double fd_step = 1e-4;
    // whisker
    int l_max = 3;
    int K = 60;
    double r_seed = 0.3;
    // split
    std::vector<double> t_grid{0.0};
    std::vector<std::string> methods{"melnikov", "perturbative-l2", "direct"};
    double T0 = 0;
    double budget_ratio = 1e-2;
    // dichotomy constants (never fixed by the theory)
    double dich_C = 1, dich_eps1 = 1, dich_c = 1;
    // trees / audit
    int max_degree = 3;
    int audit_degree = 4;
    int audit_max_integrated = 5;
    // output
    std::string output_dir;  // empty: $SEPX_OUT_DIR, then ./sepx_out
    int jobs = 1;
    long seed = 0;

    ModelParams params(double g, double eps) const;
    WhiskerOptions whisker_options() const;
    void validate() const;  // ConfigError
};

ExperimentConfig parse_config_toml(const std::string& text, const std::string& source = "<config>");
// the "config" object of a report, or a bare config object
ExperimentConfig parse_config_json(const Json& j);
// .json -> report/config JSON, anything else -> TOML
ExperimentConfig load_config(const std::string& path);

// every field resolved (defaults and omega filled in); the content that gets hashed
Json config_json(const ExperimentConfig& c);
std::string sha256_hex(const std::string& bytes);

// sorted keys, doubles at 17 significant digits, two-space indent, trailing newline
std::string dump_json(const Json& j);
std::string format_double(double x);  // %.17g, "nan"/"inf" spelled out

struct CsvTable {
    std::string name;  // file stem
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    std::string str() const;
};

struct Report {
    std::string command;
    Json config;            // resolved
    std::string inputs_hash;
    std::vector<CsvTable> tables;
    Json summary = Json::object();
    Json checks = Json::object();  // name -> bool

    bool passed() const;
    Json to_json() const;  // tables listed by file name
};
// writes <dir>/<command>.json and <dir>/<table>.csv; ReportIOError if dir is unusable
std::vector<std::string> emit_report(const Report& r, const std::string& dir);

// Jobs fill preallocated slots, so results keep the sweep order whatever the
// completion order. Writing stays with the caller.
class JobScheduler {
public:
    explicit JobScheduler(int workers);
    int workers() const { return workers_; }
    // job(i) for every i < n; slot i of the result holds what job i threw, if anything
    std::vector<std::exception_ptr> run(size_t n, const std::function<void(size_t)>& job) const;

private:
    int workers_;
};

// subcommand pipelines; each fills tables, summary and checks
Report run_melnikov(const ExperimentConfig& c);
Report run_fit(const ExperimentConfig& c);
Report run_whisker(const ExperimentConfig& c);
Report run_trees(const ExperimentConfig& c);
Report run_split(const ExperimentConfig& c);
Report run_audit(const ExperimentConfig& c);
Report run_dichotomy(const ExperimentConfig& c);

// exit 0 success, 1 check failure, 2 input error
int run_command(int argc, const char* const* argv);
int run_command(const std::vector<std::string>& args);  // args[0] = program name

}  // namespace sepx
