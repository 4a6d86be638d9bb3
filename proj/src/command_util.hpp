#pragma once

#include "heatpack/commands.hpp"
#include "heatpack/design_solver.hpp"
#include "heatpack/gramian.hpp"
#include "heatpack/heat_oracle.hpp"
#include "heatpack/observability.hpp"

#include <chrono>
#include <optional>
#include <string>

namespace heatpack::detail {

class Stopwatch {
public:
    Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

// Shared lazily built state of one run.
struct RunContext {
    explicit RunContext(const ExperimentConfig& c);

    const ExperimentConfig& cfg;
    BoxDomain omega;
    Resolution res;
    BumpSpec bump;

    const FrameOutcome& frame();
    const ObservationSet& observation();
    void set_observation(ObservationSet o) { obs_ = std::move(o); }

private:
    std::optional<FrameOutcome> frame_;
    std::optional<ObservationSet> obs_;
};

json frame_summary(const FrameOutcome& f);
json solution_json(const DesignSolution& s, int dim);
json levelset_json(const LevelSetReport& r);
json gamma_json(const GammaReport& r, int dim);
json stability_json(const StabilityReport& r);
json sandwich_json(const SandwichReport& r);

// Smallest eta0 consistent with the observed bump amplitude: eta m0 / M0.
double default_eta0(const ExperimentConfig& cfg, const BumpSpec& bump, const ObservationSet& omega);

// Assembles the pencil on the first `size` indices, halving on PencilDegenerate.
struct PencilAttempt {
    GramianPencil pencil;
    std::vector<int> tried;
    std::string note;
};
PencilAttempt pencil_with_halving(const Frame& frame, const ObservationSet& omega, const Resolution& res, double T,
                                  int size);

SaddleOptions saddle_options(const ExperimentConfig& cfg);

void write_report(const std::string& dir, const std::string& name, const json& j);

} // namespace heatpack::detail
