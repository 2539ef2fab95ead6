#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ammlab/cpmm.hpp"
#include "ammlab/estimation.hpp"
#include "ammlab/strategy.hpp"

namespace amm::backtest {

// Window or feed content cannot support the requested replay.
struct ReplayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Cumulative liquidity in some range went negative.
struct DepthUnderflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SwapEvent {
    std::int64_t timestamp_ms = 0;
    double delta_y = 0.0;
    double delta_x = 0.0;
    double rate = 0.0;   // pool rate after the trade
    double depth = 0.0;  // optional; valid when has_depth
    bool has_depth = false;
};

struct LpEvent {
    std::int64_t timestamp_ms = 0;
    double tick_lower = 0.0;
    double tick_upper = 0.0;
    double liquidity_delta = 0.0; // signed depth contribution
};

struct OracleTick {
    std::int64_t timestamp_ms = 0;
    double rate = 0.0;
};

struct ParseReport {
    std::size_t swap_rows = 0;
    std::size_t lp_rows = 0;
    std::size_t oracle_rows = 0;
    std::size_t out_of_order = 0; // rows arriving with decreasing timestamps
};

struct EventDataset {
    std::vector<SwapEvent> swaps;
    std::vector<LpEvent> lp_events;
    std::vector<OracleTick> oracle;
    ParseReport report;
};

// CSV schemas (header row, '.' decimal):
//   swaps.csv:     timestamp_ms,delta_y,delta_x,rate,depth
//   lp_events.csv: timestamp_ms,tick_lower,tick_upper,liquidity_delta
//   oracle.csv:    timestamp_ms,rate
// Empty path = feed absent. Rows are re-sorted by timestamp; the number of
// out-of-order rows is reported.
EventDataset load_events(const std::string& swaps_csv, const std::string& lp_csv,
                         const std::string& oracle_csv);

// Cumulative per-range depth after each LP event, queryable at any time.
class LiquidityTimeline {
public:
    explicit LiquidityTimeline(const std::vector<LpEvent>& events,
                               std::optional<cpmm::LiquidityProfile> initial = std::nullopt);

    // nullopt while the pool is empty
    std::optional<cpmm::LiquidityProfile> profile_at(std::int64_t ts_ms) const;

private:
    std::vector<double> boundaries_;           // elementary range edges
    std::vector<std::int64_t> change_times_;
    std::vector<std::vector<double>> snapshots_; // depth per range after each change
    std::vector<double> initial_depths_;
};

struct FeeModel {
    double gas_per_tx = 5.0;   // X units, flat
    double amm_fee_bps = 1.0;  // basis points of the X-leg value
};

struct Fill {
    std::int64_t timestamp_ms = 0;
    double delta_y = 0.0;
    double exec_rate = 0.0;
    double gas_fee = 0.0;
    double amm_fee = 0.0;
};

struct ExecutionReport {
    std::string strategy;
    double y0 = 0.0;
    double z0 = 0.0;
    double z_terminal = 0.0;
    std::vector<Fill> fills;
    std::vector<std::int64_t> path_times_ms; // decision times
    std::vector<double> inventory_path;      // after each decision
    std::vector<double> cash_path;
    double gross_pnl = 0.0; // x_T + y_T Z_T - y0 Z0, fee-free
    double net_pnl = 0.0;   // gross - gas - amm fees
    double gas_total = 0.0;
    double amm_total = 0.0;
    std::size_t trade_count = 0;
    std::size_t clamped_fills = 0; // inventory-overshoot guards triggered

    double terminal_inventory() const;
    double recompute_gross() const; // from fills alone, for the accounting identity
    nlohmann::json to_json() const;
};

struct Window {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    double days() const { return static_cast<double>(end_ms - start_ms) / 86400000.0; }
};

// Model-strategy replay configuration. control.T should equal the window
// length in days; the rate bracket defaults to [Z0/2, 2 Z0].
struct StrategyRunConfig {
    strategy::ControlParams control;
    double y0 = 0.0;
    double min_trade = 1e-6;   // fills below this are skipped, no fees burned
    double bracket_lo = 0.0;   // 0 = derive from Z0
    double bracket_hi = 0.0;
    // 0 trades at the observed pool-trade timestamps; > 0 switches to a fixed
    // decision clock (synthetic runs)
    std::int64_t decision_interval_ms = 0;
    strategy::ClosedFormStrategy::Config lattice;
};

// Closed-form liquidation replay at the observed pool-trade times. Investor
// fills do not feed back into recorded market rates.
ExecutionReport run_liquidation(const EventDataset& data, const Window& window,
                                const StrategyRunConfig& cfg, const FeeModel& fees);

// Same engine with zero initial inventory (enforced); the speed is then
// dominated by the oracle spread term.
ExecutionReport run_speculative(const EventDataset& data, const Window& window,
                                const StrategyRunConfig& cfg, const FeeModel& fees);

ExecutionReport run_twap(const EventDataset& data, const Window& window, double y0,
                         const FeeModel& fees, double min_trade = 1e-6,
                         double fallback_kappa = 0.0);

ExecutionReport run_single_order(const EventDataset& data, const Window& window, double y0,
                                 const FeeModel& fees, double fallback_kappa = 0.0);

struct CampaignConfig {
    double in_sample_days = 1.0;
    double horizon_days = 2.0 / 24.0;
    double shift_days = 2.0 / 24.0;
    double participation = 0.5;
    double phi_liquidation = 0.005;
    double phi_speculative = 0.001;
    double alpha = 10.0;
    FeeModel fees;
    std::vector<std::string> strategies{"liquidation", "twap", "single_order", "speculative"};
    unsigned jobs = 1;
    double min_trade = 1e-6;
    double default_kappa = 0.0; // used when the swap feed carries no depth
    strategy::ClosedFormStrategy::Config lattice;
};

struct WindowResult {
    Window in_sample;
    Window horizon;
    bool skipped = false;
    std::string skip_reason;
    estimation::EstimationResult estimates;
    double y0 = 0.0;
    std::map<std::string, ExecutionReport> reports;
};

struct StrategySummary {
    std::string strategy;
    std::size_t windows = 0;
    double mean_gross_pnl = 0.0;
    double sd_gross_pnl = 0.0;
    double mean_trades = 0.0;
    double mean_fees = 0.0;
};

struct CampaignResult {
    std::vector<WindowResult> windows;
    std::size_t skipped = 0;
    std::vector<StrategySummary> summary;

    // columns mirror the performance tables: strategy, gross avg PnL,
    // std dev, avg num trades, avg fees
    void write_summary_csv(const std::string& file, const std::string& fingerprint = "") const;
};

// Estimate on one in-sample window, then run the configured strategies on the
// adjacent horizon.
WindowResult run_window(const EventDataset& data, const Window& in_sample,
                        const Window& horizon, const CampaignConfig& cfg);

// Rolling in-sample/out-of-sample campaign over the dataset span.
CampaignResult rolling_campaign(const EventDataset& data, const CampaignConfig& cfg);

std::vector<StrategySummary> summarize(const std::vector<WindowResult>& windows);

} // namespace amm::backtest
