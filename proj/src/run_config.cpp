#include "cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "radtrans/grid_io.hpp"

namespace cli {

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double to_double(const std::string& v, const std::string& where) {
    const char* first = v.data();
    const char* last = v.data() + v.size();
    double out = 0;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError(where + ": expected a number, got '" + v + "'");
    return out;
}

uint64_t to_u64(const std::string& v, const std::string& where) {
    const char* first = v.data();
    const char* last = v.data() + v.size();
    uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError(where + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

uint32_t to_u32(const std::string& v, const std::string& where) {
    uint64_t out = to_u64(v, where);
    if (out > UINT32_MAX) throw ConfigError(where + ": value out of range");
    return static_cast<uint32_t>(out);
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;  // empty result → omitted
};

const std::vector<Field>& fields() {
    auto dbl = [](double RunConfig::* m) {
        return Field{nullptr,
                     [m](RunConfig& c, const std::string& v, const std::string& w) {
                         c.*m = to_double(v, w);
                     },
                     [m](const RunConfig& c) { return fmt_g17(c.*m); }};
    };
    auto u32f = [](uint32_t RunConfig::* m) {
        return Field{nullptr,
                     [m](RunConfig& c, const std::string& v, const std::string& w) {
                         c.*m = to_u32(v, w);
                     },
                     [m](const RunConfig& c) { return std::to_string(c.*m); }};
    };
    auto str = [](std::string RunConfig::* m, bool omit_empty) {
        return Field{nullptr,
                     [m](RunConfig& c, const std::string& v, const std::string&) { c.*m = v; },
                     [m, omit_empty](const RunConfig& c) -> std::string {
                         if (omit_empty && (c.*m).empty()) return {};
                         return c.*m;
                     }};
    };
    auto named = [](Field f, const char* key) {
        f.key = key;
        return f;
    };

    static const std::vector<Field> table = [&] {
        std::vector<Field> t;
        t.push_back(named(str(&RunConfig::app, false), "app"));
        t.push_back(named(u32f(&RunConfig::n), "n"));
        t.push_back(named(dbl(&RunConfig::dx), "dx"));
        t.push_back(named(str(&RunConfig::source, false), "source"));
        t.push_back({"density",
                     [](RunConfig& c, const std::string& v, const std::string& w) {
                         c.density = to_double(v, w);
                     },
                     [](const RunConfig& c) -> std::string {
                         if (c.density < 0) return {};
                         return fmt_g17(c.density);
                     }});
        t.push_back(named(str(&RunConfig::density_file, true), "density_file"));
        t.push_back(named(dbl(&RunConfig::neutral0), "neutral0"));
        t.push_back({"Q",
                     [](RunConfig& c, const std::string& v, const std::string& w) {
                         c.Q = to_double(v, w);
                     },
                     [](const RunConfig& c) -> std::string {
                         if (c.Q < 0) return {};
                         return fmt_g17(c.Q);
                     }});
        t.push_back({"sigma",
                     [](RunConfig& c, const std::string& v, const std::string& w) {
                         c.sigma = to_double(v, w);
                     },
                     [](const RunConfig& c) -> std::string {
                         if (c.sigma < 0) return {};
                         return fmt_g17(c.sigma);
                     }});
        t.push_back({"alpha",
                     [](RunConfig& c, const std::string& v, const std::string& w) {
                         c.alpha = to_double(v, w);
                     },
                     [](const RunConfig& c) -> std::string {
                         if (c.alpha < 0) return {};
                         return fmt_g17(c.alpha);
                     }});
        t.push_back(named(dbl(&RunConfig::eps_cut), "eps_cut"));
        t.push_back(named(dbl(&RunConfig::f_split), "f_split"));
        t.push_back(named(u32f(&RunConfig::base_level), "base_level"));
        t.push_back(named(dbl(&RunConfig::tol), "tol"));
        t.push_back(named(u32f(&RunConfig::max_epochs), "max_epochs"));
        t.push_back({"synth_tasks",
                     [](RunConfig& c, const std::string& v, const std::string& w) {
                         c.synth_tasks = to_u64(v, w);
                     },
                     [](const RunConfig& c) { return std::to_string(c.synth_tasks); }});
        t.push_back(named(u32f(&RunConfig::min_workers), "min_workers"));
        t.push_back(named(dbl(&RunConfig::heartbeat_s), "heartbeat_s"));
        t.push_back(named(dbl(&RunConfig::death_multiplier), "death_multiplier"));
        t.push_back(named(u32f(&RunConfig::max_attempts), "max_attempts"));
        t.push_back(named(dbl(&RunConfig::stall_timeout_s), "stall_timeout_s"));
        t.push_back(named(str(&RunConfig::listen, false), "listen"));
        t.push_back(named(dbl(&RunConfig::task_cost_s), "task_cost_s"));
        t.push_back(named(dbl(&RunConfig::msg_latency_s), "msg_latency_s"));
        t.push_back(named(str(&RunConfig::out_grid, true), "out_grid"));
        t.push_back(named(str(&RunConfig::out_csv, true), "out_csv"));
        t.push_back(named(str(&RunConfig::out_report, true), "out_report"));
        return t;
    }();
    return table;
}

const Field* find_field(std::string_view key) {
    for (const Field& f : fields())
        if (key == f.key) return &f;
    return nullptr;
}

}  // namespace

RunConfig parse_config_text(std::string_view text, const std::string& name) {
    RunConfig cfg;
    std::map<std::string, size_t> seen;

    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;

        std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;

        size_t eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(name + " line " + std::to_string(line_no) +
                              ": expected `key = value`");
        std::string key(trim(body.substr(0, eq)));
        std::string value(trim(body.substr(eq + 1)));
        std::string where = name + " line " + std::to_string(line_no) + " (" + key + ")";

        const Field* f = find_field(key);
        if (!f) throw ConfigError(name + " line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
        auto [it, inserted] = seen.emplace(key, line_no);
        if (!inserted)
            throw ConfigError(name + " line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "' (first set on line " + std::to_string(it->second) + ")");
        f->set(cfg, value, where);
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg = parse_config_text(ss.str(), path);
    size_t slash = path.find_last_of('/');
    cfg.config_dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "': expected key=value");
    std::string key(trim(std::string_view(assignment).substr(0, eq)));
    std::string value(trim(std::string_view(assignment).substr(eq + 1)));
    const Field* f = find_field(key);
    if (!f) throw ConfigError("override: unknown key '" + key + "'");
    f->set(cfg, value, "override (" + key + ")");
}

void validate(const RunConfig& cfg) {
    auto need = [](bool ok, const std::string& why) {
        if (!ok) throw ConfigError(why);
    };

    need(cfg.app == "stromgren" || cfg.app == "synth",
         "app: must be 'stromgren' or 'synth', got '" + cfg.app + "'");
    need(cfg.min_workers >= 1, "min_workers: must be >= 1");
    need(cfg.heartbeat_s > 0, "heartbeat_s: must be > 0");
    need(cfg.death_multiplier > 1, "death_multiplier: must be > 1 (death timeout must exceed "
                                   "the heartbeat interval)");
    need(cfg.stall_timeout_s >= 0, "stall_timeout_s: must be >= 0");
    need(cfg.task_cost_s > 0, "task_cost_s: must be > 0");
    need(cfg.msg_latency_s >= 0, "msg_latency_s: must be >= 0");

    if (cfg.app == "synth") {
        need(cfg.synth_tasks >= 1, "synth_tasks: must be >= 1");
        return;
    }

    need(cfg.n != 0, "missing required key 'n'");
    need(cfg.n >= 2 && cfg.n <= 4096, "n: must be in [2, 4096]");
    need(cfg.dx > 0, "dx: must be > 0");
    need(cfg.Q >= 0, "missing required key 'Q'");
    need(cfg.sigma > 0, "missing required key 'sigma' (must be > 0)");
    need(cfg.alpha > 0, "missing required key 'alpha' (must be > 0)");
    need(cfg.density >= 0 || !cfg.density_file.empty(),
         "missing required key 'density' (or 'density_file')");
    need(cfg.density < 0 || cfg.density_file.empty(),
         "density and density_file are mutually exclusive");
    need(cfg.neutral0 >= 0 && cfg.neutral0 <= 1, "neutral0: must be in [0, 1]");
    need(cfg.eps_cut > 0 && cfg.eps_cut < 1, "eps_cut: must be in (0, 1)");
    need(cfg.f_split > 0, "f_split: must be > 0");
    need(cfg.base_level <= 10, "base_level: must be <= 10");
    need(cfg.tol > 0 && cfg.tol < 1, "tol: must be in (0, 1)");
    need(cfg.max_epochs >= 1, "max_epochs: must be >= 1");

    radtrans::Vec3 s = cfg.source_pos();
    double ext = cfg.n * cfg.dx;
    need(s.x > 0 && s.x < ext && s.y > 0 && s.y < ext && s.z > 0 && s.z < ext,
         "source: must lie strictly inside the grid");
}

radtrans::Vec3 RunConfig::source_pos() const {
    if (source == "auto") {
        double mid = n * dx / 2.0;
        return {mid, mid, mid};
    }
    std::istringstream ss(source);
    radtrans::Vec3 v;
    if (!(ss >> v.x >> v.y >> v.z))
        throw ConfigError("source: expected 'auto' or three numbers, got '" + source + "'");
    std::string rest;
    if (ss >> rest) throw ConfigError("source: trailing content '" + rest + "'");
    return v;
}

mw::MasterConfig RunConfig::master_config() const {
    mw::MasterConfig m;
    m.min_workers = min_workers;
    m.heartbeat_s = heartbeat_s;
    m.death_multiplier = death_multiplier;
    m.max_attempts = max_attempts;
    m.stall_timeout_s = stall_timeout_s;
    return m;
}

radtrans::PhysicsParams RunConfig::physics() const {
    radtrans::PhysicsParams p;
    p.source_rate = Q;
    p.cross_section = sigma;
    p.recombination = alpha;
    p.cutoff_fraction = eps_cut;
    p.split_factor = f_split;
    p.base_level = base_level;
    p.tolerance = tol;
    p.max_epochs = max_epochs;
    return p;
}

radtrans::Grid RunConfig::build_grid() const {
    radtrans::Grid g;
    if (!density_file.empty()) {
        std::string path = density_file;
        if (!path.starts_with('/') && !config_dir.empty())
            path = config_dir + "/" + density_file;
        g = radtrans::Grid::uniform(n, dx, source_pos(), 0.0, neutral0);
        g.density = radtrans::read_doubles_le(path, g.cells());
        for (double v : g.density)
            if (v < 0) throw ConfigError(path + ": negative density value");
    } else {
        g = radtrans::Grid::uniform(n, dx, source_pos(), density, neutral0);
    }
    return g;
}

std::string RunConfig::serialize() const {
    std::ostringstream os;
    for (const Field& f : fields()) {
        std::string v = f.get(*this);
        if (!v.empty()) os << f.key << " = " << v << '\n';
    }
    return os.str();
}

std::string default_config_text() {
    RunConfig defaults;
    // representative required values so the emitted table is loadable
    defaults.n = 32;
    defaults.Q = 2144.660584850632;  // analytic ionized radius = 8 cells
    defaults.sigma = 1.0;
    defaults.alpha = 1.0;
    defaults.density = 1.0;
    return defaults.serialize();
}

}  // namespace cli
