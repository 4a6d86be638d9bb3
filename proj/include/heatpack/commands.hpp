#pragma once

#include "heatpack/config.hpp"
#include "heatpack/error.hpp"
#include "heatpack/json_io.hpp"

#include <string>
#include <vector>

namespace heatpack {

struct CommandOptions {
    std::string out_dir;              // empty: no files written
    std::string mask_path;            // observe: HPGRID mask overriding the config
    std::vector<int> stability;       // design: N list for the stabilization table
    std::vector<std::string> suites;  // validate: empty runs all
};

struct CommandResult {
    int exit_code = 0;
    json report;
    json timings; // wall-clock seconds, kept out of the report
};

CommandResult cmd_decompose(const ExperimentConfig& cfg, const CommandOptions& opt);
CommandResult cmd_design(const ExperimentConfig& cfg, const CommandOptions& opt);
CommandResult cmd_observe(const ExperimentConfig& cfg, const CommandOptions& opt);
CommandResult cmd_validate(const ExperimentConfig& cfg, const CommandOptions& opt);

// Table of free_kernel and kac_bound on the config grid for source y = bump center.
CommandResult cmd_kernel(const ExperimentConfig& cfg, const CommandOptions& opt, const std::vector<double>& times);

const std::vector<std::string>& suite_names();

json error_json(const Error& e);
json report_header(const std::string& command, const ExperimentConfig& cfg);

} // namespace heatpack
