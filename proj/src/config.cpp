#include "heatpack/config.hpp"

#include "heatpack/error.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

namespace heatpack {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(trim(cur));
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value)
{
    fail(ErrorKind::ConfigError, "invalid value for '" + key + "': '" + value + "'");
}

double to_double(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        bad_value(key, v);
    }
    if (pos != v.size())
        bad_value(key, v);
    return d;
}

long long to_int(const std::string& key, const std::string& v)
{
    long long x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        bad_value(key, v);
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v)
{
    std::uint64_t x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        bad_value(key, v);
    return x;
}

Point to_point(const std::string& key, const std::string& v)
{
    const auto parts = split(v, ',');
    if (parts.empty() || parts.size() > static_cast<std::size_t>(kMaxDim))
        bad_value(key, v);
    Point p{};
    for (std::size_t i = 0; i < parts.size(); ++i)
        p[i] = to_double(key, parts[i]);
    if (parts.size() == 1)
        p[1] = p[0];
    return p;
}

std::string fmt(double v) { return format_double(v); }

std::string fmt_point(const Point& p, int dim)
{
    std::string s = fmt(p[0]);
    for (int k = 1; k < dim; ++k)
        s += "," + fmt(p[k]);
    return s;
}

std::string fmt_list(const std::vector<int>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

struct Key {
    const char* name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define HP_DOUBLE(field)                                                                                   \
    Key                                                                                                    \
    {                                                                                                      \
        #field, [](ExperimentConfig& c, const std::string& v) { c.field = to_double(#field, v); },         \
            [](const ExperimentConfig& c) { return fmt(c.field); }                                         \
    }
#define HP_INT(field)                                                                                      \
    Key                                                                                                    \
    {                                                                                                      \
        #field, [](ExperimentConfig& c, const std::string& v) { c.field = static_cast<int>(to_int(#field, v)); }, \
            [](const ExperimentConfig& c) { return std::to_string(c.field); }                              \
    }
#define HP_POINT(field)                                                                                    \
    Key                                                                                                    \
    {                                                                                                      \
        #field, [](ExperimentConfig& c, const std::string& v) { c.field = to_point(#field, v); },          \
            [](const ExperimentConfig& c) { return fmt_point(c.field, c.dim); }                            \
    }

const std::vector<Key>& keys()
{
    static const std::vector<Key> table = {
        HP_INT(dim),
        HP_POINT(lo),
        HP_POINT(hi),
        HP_INT(resolution),
        HP_DOUBLE(epsilon0),
        HP_DOUBLE(delta),
        HP_POINT(bump_center),
        HP_DOUBLE(eta),
        {"policy", [](ExperimentConfig& c, const std::string& v) { c.policy = parse_policy(v); },
         [](const ExperimentConfig& c) { return std::string(policy_name(c.policy)); }},
        HP_DOUBLE(epsilon),
        {"mode", [](ExperimentConfig& c, const std::string& v) { c.mode = parse_mode(v); },
         [](const ExperimentConfig& c) { return std::string(mode_name(c.mode)); }},
        HP_INT(k),
        {"max_modes",
         [](ExperimentConfig& c, const std::string& v) { c.max_modes = static_cast<std::size_t>(to_u64("max_modes", v)); },
         [](const ExperimentConfig& c) { return std::to_string(c.max_modes); }},
        HP_INT(frame_resolution),
        {"mask_type", [](ExperimentConfig& c, const std::string& v) { c.mask_type = v; },
         [](const ExperimentConfig& c) { return c.mask_type; }},
        HP_POINT(mask_center),
        HP_DOUBLE(mask_radius),
        HP_POINT(mask_lo),
        HP_POINT(mask_hi),
        {"mask_file", [](ExperimentConfig& c, const std::string& v) { c.mask_file = v; },
         [](const ExperimentConfig& c) { return c.mask_file; }},
        HP_DOUBLE(M),
        HP_DOUBLE(T),
        HP_INT(N),
        {"stability", [](ExperimentConfig& c, const std::string& v) { c.stability = parse_int_list(v); },
         [](const ExperimentConfig& c) { return fmt_list(c.stability); }},
        HP_INT(iters),
        HP_DOUBLE(tol),
        HP_DOUBLE(step_c),
        HP_INT(pencil_size),
        HP_INT(trials),
        {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        HP_INT(modes_cap),
        HP_DOUBLE(c_sd),
        HP_DOUBLE(sandwich_fraction),
        {"sandwich_max_packets",
         [](ExperimentConfig& c, const std::string& v) {
             c.sandwich_max_packets = static_cast<std::size_t>(to_u64("sandwich_max_packets", v));
         },
         [](const ExperimentConfig& c) { return std::to_string(c.sandwich_max_packets); }},
        HP_DOUBLE(kac_T),
        HP_DOUBLE(kac_tol),
        HP_DOUBLE(fault_perturb),
    };
    return table;
}

#undef HP_DOUBLE
#undef HP_INT
#undef HP_POINT

void check(const ExperimentConfig& c)
{
    auto need = [](bool ok, const std::string& what) {
        if (!ok)
            fail(ErrorKind::ConfigError, what);
    };
    need(c.dim == 1 || c.dim == 2, "dim must be 1 or 2");
    need(c.resolution >= 4, "resolution must be at least 4");
    need(c.frame_resolution >= 4, "frame_resolution must be at least 4");
    need(c.N >= 0, "N must be nonnegative");
    need(c.iters >= 1, "iters must be positive");
    need(c.pencil_size >= 1, "pencil_size must be positive");
    need(c.trials >= 1, "trials must be positive");
    need(c.modes_cap >= 1, "modes_cap must be positive");
    need(c.mask_type == "ball" || c.mask_type == "box" || c.mask_type == "whole" || c.mask_type == "empty" ||
             c.mask_type == "file",
         "mask_type must be ball, box, whole, empty or file");
    for (int k = 0; k < c.dim; ++k)
        need(c.lo[k] < c.hi[k], "lo must be below hi on every axis");
}

} // namespace

std::vector<int> parse_int_list(const std::string& s)
{
    std::vector<int> out;
    for (const auto& part : split(s, ','))
        if (!part.empty())
            out.push_back(static_cast<int>(to_int("list", part)));
    return out;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& k : keys())
        if (key == k.name) {
            try {
                k.set(cfg, value);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::ConfigError)
                    throw;
                fail(ErrorKind::ConfigError, "invalid value for '" + key + "': " + e.what());
            }
            return;
        }
    fail(ErrorKind::ConfigError, "unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
        set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    check(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text(path)); }

std::string config_text(const ExperimentConfig& cfg)
{
    std::string s;
    for (const auto& k : keys())
        s += std::string(k.name) + " = " + k.get(cfg) + "\n";
    return s;
}

std::uint64_t config_hash(const ExperimentConfig& cfg)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : config_text(cfg)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json config_json(const ExperimentConfig& cfg)
{
    json j = json::object();
    for (const auto& k : keys())
        j[k.name] = k.get(cfg);
    return j;
}

BoxDomain config_domain(const ExperimentConfig& cfg)
{
    BoxDomain d;
    d.dim = cfg.dim;
    d.lo = cfg.lo;
    d.hi = cfg.hi;
    if (cfg.dim == 1)
        d.lo[1] = d.hi[1] = 0.0;
    d.validate();
    return d;
}

Resolution config_resolution(const ExperimentConfig& cfg) { return uniform_resolution(cfg.dim, cfg.resolution); }

BumpSpec config_bump(const ExperimentConfig& cfg)
{
    BumpSpec b;
    b.dim = cfg.dim;
    b.epsilon0 = cfg.epsilon0;
    b.delta = cfg.delta;
    b.center = cfg.bump_center;
    if (cfg.dim == 1)
        b.center[1] = 0.0;
    return b;
}

EpsilonSearch config_search(const ExperimentConfig& cfg)
{
    EpsilonSearch s;
    s.policy = cfg.policy;
    s.fixed_epsilon = cfg.epsilon;
    s.max_modes = cfg.max_modes;
    s.mode = cfg.mode;
    s.k = cfg.k;
    s.omega = config_domain(cfg);
    s.resolution = cfg.frame_resolution;
    return s;
}

ObservationSet config_observation(const ExperimentConfig& cfg)
{
    const BoxDomain omega = config_domain(cfg);
    const Resolution res = config_resolution(cfg);
    if (cfg.mask_type == "ball")
        return ball_observation(omega, res, cfg.mask_center, cfg.mask_radius);
    if (cfg.mask_type == "box")
        return box_observation(omega, res, cfg.mask_lo, cfg.mask_hi);
    if (cfg.mask_type == "whole")
        return whole_domain(omega, res);
    if (cfg.mask_type == "empty")
        return observation_from_mask(RealField(omega, res, 0.0));
    RealField m = real_from_hpgrid(read_text(cfg.mask_file));
    if (m.dim() != cfg.dim)
        fail(ErrorKind::ConfigError, "mask file dimension does not match the config");
    return observation_from_mask(m);
}

} // namespace heatpack
