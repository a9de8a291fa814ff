#pragma once

#include <string>
#include <string_view>

#include "mw/master.hpp"
#include "radtrans/grid.hpp"

namespace cli {

// Merged operator configuration: `key = value` file plus command-line
// overrides (overrides win). Unknown and duplicate keys are rejected by
// name; types and ranges are checked with the offending line.
struct RunConfig {
    // application
    std::string app = "stromgren";  // stromgren | synth

    // grid (stromgren)
    uint32_t n = 0;               // required
    double dx = 1.0;
    std::string source = "auto";  // "auto" (box center) or "x y z"
    double density = -1.0;        // uniform value; required unless density_file
    std::string density_file;     // raw binary64 array, n³ cells
    double neutral0 = 1.0;

    // physics (stromgren)
    double Q = -1.0;      // required
    double sigma = -1.0;  // required
    double alpha = -1.0;  // required
    double eps_cut = 1e-6;
    double f_split = 1.0;
    uint32_t base_level = 1;
    double tol = 1e-4;
    uint32_t max_epochs = 200;

    // synth app
    uint64_t synth_tasks = 64;

    // master
    uint32_t min_workers = 1;
    double heartbeat_s = 1.0;
    double death_multiplier = 3.0;
    uint32_t max_attempts = 0;  // 0 = unlimited
    double stall_timeout_s = 300.0;
    std::string listen = "0.0.0.0:7477";

    // simulation
    double task_cost_s = 1.0;
    double msg_latency_s = 0.0;

    // outputs
    std::string out_grid;    // binary64 neutral-fraction array
    std::string out_csv;     // i,j,k,x export
    std::string out_report;  // key=value report text

    std::string config_dir;  // directory of the loaded file, for density_file

    mw::MasterConfig master_config() const;
    radtrans::PhysicsParams physics() const;
    radtrans::Vec3 source_pos() const;
    radtrans::Grid build_grid() const;

    std::string serialize() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parses without checking required keys (flags may still fill them).
RunConfig parse_config_text(std::string_view text, const std::string& name);
RunConfig load_config_file(const std::string& path);

// Applies one `key=value` override; throws ConfigError on unknown key or
// bad value.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Required keys present and every value in range; throws ConfigError
// naming the offender.
void validate(const RunConfig& cfg);

// The full default table in config syntax.
std::string default_config_text();

}  // namespace cli
