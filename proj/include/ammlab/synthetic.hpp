#pragma once

#include <cstdint>

#include "ammlab/backtest.hpp"
#include "ammlab/dynamics.hpp"

namespace amm::backtest {

// Event fixture drawn from a Model I market: pool trades every
// trade_interval_s with the simulated pool rate and constant depth, oracle
// ticks interleaved half a step earlier so decisions always see a fresh
// oracle print.
struct SyntheticSpec {
    dynamics::Model1Params market;  // market.T covers the full span in days
    double kappa0 = 1e7;
    std::int64_t start_ms = 0;
    double trade_interval_s = 13.0;
    double order_scale = 1.0;       // lognormal scale of recorded |delta_y|
    std::uint64_t seed = 1;
};

EventDataset make_synthetic_model1(const SyntheticSpec& spec);

void write_events_csv(const EventDataset& data, const std::string& swaps_csv,
                      const std::string& oracle_csv);

} // namespace amm::backtest
