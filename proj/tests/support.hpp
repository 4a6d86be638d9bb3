// Shared fixtures for the unit tests.
#pragma once

#include "heatpack/config.hpp"
#include "heatpack/error.hpp"
#include "heatpack/packet_frame.hpp"

#include <deque>
#include <string>

namespace testing_support {

inline std::string config_path(const std::string& name)
{
    return std::string(HEATPACK_SOURCE_DIR) + "/configs/" + name;
}

inline heatpack::ExperimentConfig config(const std::string& name) { return heatpack::load_config(config_path(name)); }

// Frames are expensive; each shipped config is built once per test binary.
inline const heatpack::Frame& shipped_frame(const std::string& name)
{
    struct Entry {
        std::string name;
        heatpack::Frame frame;
    };
    static std::deque<Entry> cache; // stable references
    for (const auto& e : cache)
        if (e.name == name)
            return e.frame;
    const heatpack::ExperimentConfig c = config(name);
    cache.push_back({name, heatpack::build_frame_or_best(heatpack::config_bump(c), c.eta, heatpack::config_search(c)).frame});
    return cache.back().frame;
}

inline heatpack::BoxDomain interval(double lo, double hi)
{
    heatpack::BoxDomain b;
    b.dim = 1;
    b.lo = {lo, 0.0};
    b.hi = {hi, 0.0};
    return b;
}

inline heatpack::BoxDomain square(double lo, double hi)
{
    heatpack::BoxDomain b;
    b.dim = 2;
    b.lo = {lo, lo};
    b.hi = {hi, hi};
    return b;
}

} // namespace testing_support
