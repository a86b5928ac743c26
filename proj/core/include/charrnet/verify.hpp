#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace charrnet {

struct VerifyConfig {
    std::size_t cases = 100;           // equivariance / invariance cases
    std::size_t gradient_configs = 10;
    std::size_t fig2_trials = 100;
    std::uint64_t seed = 1;
    double tolerance = 1e-10;          // exact-action properties
    double gradient_tolerance = 1e-4;  // relative error of the finite-difference check
    double gradient_step = 1e-5;
    std::size_t channel_taps = 8;      // physical-action channels
};

struct SuiteResult {
    std::string suite;
    bool passed = true;
    std::size_t cases = 0;
    std::size_t checked = 0;           // scalar comparisons (or parameters for gradients)
    double max_error = 0.0;
    double tolerance = 0.0;
    std::size_t skipped_degenerate = 0;
    std::string failure;               // first failing case with its inputs and seed
    std::string csv;                   // fig2 only
};

// Random spectrograms and per-bin actions; layer(act x) vs act(layer x).
SuiteResult verify_equivariance(const VerifyConfig& cfg);
// Invariant-layer output (alone and after an equivariant layer) under per-bin actions.
SuiteResult verify_invariance(const VerifyConfig& cfg);
// Central finite differences on every parameter of both models over random small configs.
SuiteResult verify_gradients(const VerifyConfig& cfg);

struct Fig2Row {
    std::string layer;   // baseline | equivariant | invariant
    std::string action;  // ideal | physical | physical_windowed
    double deviation = 0.0;
};

struct Fig2Result {
    std::vector<Fig2Row> rows;
    double invariant_windowed = 0.0;  // Kaiser beta 8.6
    double invariant_rect = 0.0;      // beta 0
    double baseline_physical = 0.0;
    bool ordering_holds = false;
    std::string csv() const;          // layer,action,mean_relative_deviation
};

// Mean relative feature deviation under random fading channels, 3 layers x 3 actions.
Fig2Result run_fig2(const VerifyConfig& cfg);
SuiteResult verify_fig2(const VerifyConfig& cfg);

}  // namespace charrnet
