#pragma once

#include "heatpack/gramian.hpp"
#include "heatpack/json_io.hpp"
#include "heatpack/packet_frame.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace heatpack {

struct ExperimentConfig {
    // domain and grid
    int dim = 1;
    Point lo{-0.6, -0.6};
    Point hi{0.6, 0.6};
    int resolution = 256;

    // bump
    double epsilon0 = 0.1;
    double delta = 0.5;
    Point bump_center{0.0, 0.0};

    // frame
    double eta = 0.1;
    EpsilonPolicy policy = EpsilonPolicy::Measured;
    double epsilon = 0.0;
    TruncationMode mode = TruncationMode::Box;
    int k = 1;
    std::size_t max_modes = 200000;
    int frame_resolution = 256;

    // observation set: ball, box, whole, empty or file
    std::string mask_type = "ball";
    Point mask_center{0.0, 0.0};
    double mask_radius = 0.18;
    Point mask_lo{-0.1, -0.1};
    Point mask_hi{0.1, 0.1};
    std::string mask_file;

    // design
    double M = 0.3;
    double T = 0.03;
    int N = 16;
    std::vector<int> stability{4, 8, 16, 32};
    int iters = 4000;
    double tol = 1e-6;
    double step_c = 1.0;

    // observability
    int pencil_size = 20;
    int trials = 20;
    std::uint64_t seed = 1;
    int modes_cap = 64;
    double c_sd = 1.0;
    double sandwich_fraction = 0.5;
    std::size_t sandwich_max_packets = 256;

    // oracle checks
    double kac_T = 0.03;
    double kac_tol = 1e-4;
    double fault_perturb = 0.0;
};

// key = value lines; '#' starts a comment. Unknown keys and malformed values
// throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Canonical key = value text with every key, in a fixed order.
std::string config_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t h);
json config_json(const ExperimentConfig& cfg);

BoxDomain config_domain(const ExperimentConfig& cfg);
Resolution config_resolution(const ExperimentConfig& cfg);
BumpSpec config_bump(const ExperimentConfig& cfg);
EpsilonSearch config_search(const ExperimentConfig& cfg);
ObservationSet config_observation(const ExperimentConfig& cfg);

std::vector<int> parse_int_list(const std::string& s);

} // namespace heatpack
