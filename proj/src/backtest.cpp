#include "ammlab/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <set>

#include "ammlab/csv.hpp"

namespace amm::backtest {

namespace {

constexpr double kMsPerDay = 86400000.0;

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

template <typename T>
std::size_t count_out_of_order(const std::vector<T>& v) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i].timestamp_ms < v[i - 1].timestamp_ms) ++n;
    return n;
}

// last known (Z, S, kappa) while walking a window; "before" means strictly
// earlier than the queried timestamp, so decisions never see the current event
struct MarketCursor {
    const EventDataset& data;
    std::size_t swap_idx = 0;
    std::size_t oracle_idx = 0;
    double z = 0.0, s = 0.0, kappa = 0.0;
    bool has_z = false, has_s = false, has_kappa = false;

    explicit MarketCursor(const EventDataset& d) : data(d) {}

    void absorb(const SwapEvent& e) {
        z = e.rate;
        has_z = true;
        if (e.has_depth) {
            kappa = e.depth;
            has_kappa = true;
        }
    }

    void advance_before(std::int64_t ts) {
        while (swap_idx < data.swaps.size() && data.swaps[swap_idx].timestamp_ms < ts)
            absorb(data.swaps[swap_idx++]);
        while (oracle_idx < data.oracle.size() && data.oracle[oracle_idx].timestamp_ms < ts) {
            s = data.oracle[oracle_idx++].rate;
            has_s = true;
        }
    }

    void advance_through(std::int64_t ts) {
        while (swap_idx < data.swaps.size() && data.swaps[swap_idx].timestamp_ms <= ts)
            absorb(data.swaps[swap_idx++]);
        while (oracle_idx < data.oracle.size() && data.oracle[oracle_idx].timestamp_ms <= ts) {
            s = data.oracle[oracle_idx++].rate;
            has_s = true;
        }
    }
};

struct ReplayState {
    ExecutionReport report;
    double inventory = 0.0;
    double cash = 0.0;

    void record(std::int64_t ts) {
        report.path_times_ms.push_back(ts);
        report.inventory_path.push_back(inventory);
        report.cash_path.push_back(cash);
    }

    void fill(std::int64_t ts, double dy, const cpmm::SwapFill& f, const FeeModel& fees) {
        const double amm_fee = fees.amm_fee_bps * 1e-4 * std::abs(dy) * f.exec_rate;
        report.fills.push_back(Fill{ts, dy, f.exec_rate, fees.gas_per_tx, amm_fee});
        report.gas_total += fees.gas_per_tx;
        report.amm_total += amm_fee;
        report.trade_count += 1;
        cash += f.delta_x;
        inventory -= dy;
    }

    void finalize(double y0, double z0, double zT) {
        report.y0 = y0;
        report.z0 = z0;
        report.z_terminal = zT;
        report.gross_pnl = cash + inventory * zT - y0 * z0;
        report.net_pnl = report.gross_pnl - report.gas_total - report.amm_total;
    }
};

std::vector<std::int64_t> decision_times(const EventDataset& data, const Window& w,
                                         std::int64_t fixed_interval_ms) {
    std::vector<std::int64_t> out;
    if (fixed_interval_ms > 0) {
        for (std::int64_t ts = w.start_ms + fixed_interval_ms; ts <= w.end_ms;
             ts += fixed_interval_ms)
            out.push_back(ts);
    } else {
        for (const auto& e : data.swaps)
            if (e.timestamp_ms > w.start_ms && e.timestamp_ms <= w.end_ms)
                out.push_back(e.timestamp_ms);
    }
    return out;
}

double resolve_kappa(const MarketCursor& cursor, double fallback) {
    if (cursor.has_kappa) return cursor.kappa;
    if (fallback > 0.0) return fallback;
    throw ReplayError("no pool depth available: feed carries none and no fallback given");
}

enum class SpeedSource { model, twap };

ExecutionReport replay(const EventDataset& data, const Window& window,
                       const StrategyRunConfig& cfg, const FeeModel& fees,
                       SpeedSource source, const char* name) {
    require(window.end_ms > window.start_ms, "window must have positive length");
    const auto decisions = decision_times(data, window, cfg.decision_interval_ms);
    if (decisions.empty())
        throw ReplayError("window underflow: no pool trades inside the execution window");

    MarketCursor cursor(data);
    cursor.advance_through(window.start_ms);
    if (!cursor.has_z)
        throw ReplayError("no pool rate observed at or before the window start");
    const double z0 = cursor.z;
    const double T = window.days();

    std::optional<strategy::ClosedFormStrategy> strat;
    if (source == SpeedSource::model) {
        if (data.oracle.empty())
            throw ReplayError("missing oracle coverage for the execution window");
        const double lo = cfg.bracket_lo > 0.0 ? cfg.bracket_lo : 0.5 * z0;
        const double hi = cfg.bracket_hi > 0.0 ? cfg.bracket_hi : 2.0 * z0;
        strat.emplace(cfg.control, lo, hi, cfg.lattice);
    }

    ReplayState state;
    state.report.strategy = name;
    state.inventory = cfg.y0;
    state.record(window.start_ms);

    std::int64_t last_ts = window.start_ms;
    for (const std::int64_t ts : decisions) {
        cursor.advance_before(ts);
        const double dt = static_cast<double>(ts - last_ts) / kMsPerDay;
        if (dt > 0.0) {
            double dy = 0.0;
            if (source == SpeedSource::model) {
                if (!cursor.has_s)
                    throw ReplayError("missing oracle coverage for the execution window");
                const double t_rel =
                    std::min(static_cast<double>(ts - window.start_ms) / kMsPerDay, T);
                dy = strat->speed(t_rel, state.inventory, cursor.z, cursor.s) * dt;
            } else {
                dy = cfg.y0 / T * dt;
            }
            // an inventory-closing fill never overshoots past zero; protects the
            // terminal layer when real event spacing is irregular
            if (std::signbit(dy) == std::signbit(state.inventory) &&
                std::abs(dy) > std::abs(state.inventory) && state.inventory != 0.0) {
                dy = state.inventory;
                state.report.clamped_fills += 1;
            }
            if (std::abs(dy) >= cfg.min_trade) {
                const double kappa = resolve_kappa(cursor, cfg.control.kappa);
                const auto pool = cpmm::PoolState::from_rate_depth(cursor.z, kappa);
                const auto [next, f] = cpmm::apply_swap(pool, dy);
                (void)next;
                state.fill(ts, dy, f, fees);
            }
        }
        cursor.advance_through(ts);
        last_ts = ts;
        state.record(ts);
    }

    cursor.advance_through(window.end_ms);
    state.finalize(cfg.y0, z0, cursor.z);
    return state.report;
}

} // namespace

EventDataset load_events(const std::string& swaps_csv, const std::string& lp_csv,
                         const std::string& oracle_csv) {
    EventDataset ds;

    if (!swaps_csv.empty()) {
        io::CsvReader reader(swaps_csv, {"timestamp_ms", "delta_y", "delta_x", "rate", "depth"});
        std::vector<std::string> f;
        while (reader.next(f)) {
            SwapEvent e;
            e.timestamp_ms = io::parse_int(f[0], swaps_csv, reader.row(), "timestamp_ms");
            e.delta_y = io::parse_double(f[1], swaps_csv, reader.row(), "delta_y");
            e.delta_x = io::parse_double(f[2], swaps_csv, reader.row(), "delta_x");
            e.rate = io::parse_double(f[3], swaps_csv, reader.row(), "rate");
            if (!(e.rate > 0.0))
                throw io::SchemaError(swaps_csv + " row " + std::to_string(reader.row()) +
                                      ": rate must be positive");
            if (!f[4].empty()) {
                e.depth = io::parse_double(f[4], swaps_csv, reader.row(), "depth");
                e.has_depth = true;
            }
            ds.swaps.push_back(e);
        }
        ds.report.swap_rows = ds.swaps.size();
    }

    if (!lp_csv.empty()) {
        io::CsvReader reader(lp_csv, {"timestamp_ms", "tick_lower", "tick_upper", "liquidity_delta"});
        std::vector<std::string> f;
        while (reader.next(f)) {
            LpEvent e;
            e.timestamp_ms = io::parse_int(f[0], lp_csv, reader.row(), "timestamp_ms");
            e.tick_lower = io::parse_double(f[1], lp_csv, reader.row(), "tick_lower");
            e.tick_upper = io::parse_double(f[2], lp_csv, reader.row(), "tick_upper");
            e.liquidity_delta = io::parse_double(f[3], lp_csv, reader.row(), "liquidity_delta");
            if (!(e.tick_lower < e.tick_upper))
                throw io::SchemaError(lp_csv + " row " + std::to_string(reader.row()) +
                                      ": tick_lower must be below tick_upper");
            ds.lp_events.push_back(e);
        }
        ds.report.lp_rows = ds.lp_events.size();
    }

    if (!oracle_csv.empty()) {
        io::CsvReader reader(oracle_csv, {"timestamp_ms", "rate"});
        std::vector<std::string> f;
        while (reader.next(f)) {
            OracleTick e;
            e.timestamp_ms = io::parse_int(f[0], oracle_csv, reader.row(), "timestamp_ms");
            e.rate = io::parse_double(f[1], oracle_csv, reader.row(), "rate");
            if (!(e.rate > 0.0))
                throw io::SchemaError(oracle_csv + " row " + std::to_string(reader.row()) +
                                      ": rate must be positive");
            ds.oracle.push_back(e);
        }
        ds.report.oracle_rows = ds.oracle.size();
    }

    ds.report.out_of_order = count_out_of_order(ds.swaps) + count_out_of_order(ds.lp_events) +
                             count_out_of_order(ds.oracle);
    auto by_ts = [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; };
    std::stable_sort(ds.swaps.begin(), ds.swaps.end(), by_ts);
    std::stable_sort(ds.lp_events.begin(), ds.lp_events.end(), by_ts);
    std::stable_sort(ds.oracle.begin(), ds.oracle.end(), by_ts);
    return ds;
}

LiquidityTimeline::LiquidityTimeline(const std::vector<LpEvent>& events,
                                     std::optional<cpmm::LiquidityProfile> initial) {
    std::set<double> edges;
    if (initial)
        edges.insert(initial->boundaries.begin(), initial->boundaries.end());
    for (const auto& e : events) {
        edges.insert(e.tick_lower);
        edges.insert(e.tick_upper);
    }
    boundaries_.assign(edges.begin(), edges.end());
    if (boundaries_.size() < 2) return; // no liquidity ever

    const std::size_t n_ranges = boundaries_.size() - 1;
    initial_depths_.assign(n_ranges, 0.0);
    if (initial) {
        for (std::size_t r = 0; r < n_ranges; ++r) {
            const double mid = 0.5 * (boundaries_[r] + boundaries_[r + 1]);
            if (mid >= initial->boundaries.front() && mid < initial->boundaries.back())
                initial_depths_[r] = initial->depths[initial->range_index(mid)];
        }
    }

    std::vector<double> depth = initial_depths_;
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
    for (const auto& e : events) {
        require(e.timestamp_ms >= prev_ts, "lp events must be sorted by timestamp");
        prev_ts = e.timestamp_ms;
        for (std::size_t r = 0; r < n_ranges; ++r) {
            const double mid = 0.5 * (boundaries_[r] + boundaries_[r + 1]);
            if (mid > e.tick_lower && mid < e.tick_upper) depth[r] += e.liquidity_delta;
        }
        double scale = 0.0;
        for (double d : depth) scale = std::max(scale, std::abs(d));
        for (double& d : depth) {
            if (d < -1e-9 * std::max(scale, 1.0))
                throw DepthUnderflowError("liquidity withdrawal exceeds supply at timestamp " +
                                          std::to_string(e.timestamp_ms));
            if (d < 0.0 || std::abs(d) < 1e-12 * scale) d = 0.0;
        }
        change_times_.push_back(e.timestamp_ms);
        snapshots_.push_back(depth);
    }
}

std::optional<cpmm::LiquidityProfile> LiquidityTimeline::profile_at(std::int64_t ts_ms) const {
    if (boundaries_.size() < 2) return std::nullopt;
    const std::vector<double>* depths = &initial_depths_;
    const auto it = std::upper_bound(change_times_.begin(), change_times_.end(), ts_ms);
    if (it != change_times_.begin())
        depths = &snapshots_[static_cast<std::size_t>(it - change_times_.begin()) - 1];
    bool any = false;
    for (double d : *depths) any = any || d > 0.0;
    if (!any) return std::nullopt;
    return cpmm::LiquidityProfile(boundaries_, *depths);
}

double ExecutionReport::terminal_inventory() const {
    double y = y0;
    for (const auto& f : fills) y -= f.delta_y;
    return y;
}

double ExecutionReport::recompute_gross() const {
    double cash = 0.0, y = y0;
    for (const auto& f : fills) {
        cash += f.delta_y * f.exec_rate;
        y -= f.delta_y;
    }
    return cash + y * z_terminal - y0 * z0;
}

nlohmann::json ExecutionReport::to_json() const {
    nlohmann::json j;
    j["strategy"] = strategy;
    j["y0"] = y0;
    j["z0"] = z0;
    j["z_terminal"] = z_terminal;
    j["gross_pnl"] = gross_pnl;
    j["net_pnl"] = net_pnl;
    j["gas_total"] = gas_total;
    j["amm_total"] = amm_total;
    j["trade_count"] = trade_count;
    j["clamped_fills"] = clamped_fills;
    j["terminal_inventory"] = terminal_inventory();
    nlohmann::json jf = nlohmann::json::array();
    for (const auto& f : fills)
        jf.push_back({{"timestamp_ms", f.timestamp_ms},
                      {"delta_y", f.delta_y},
                      {"exec_rate", f.exec_rate},
                      {"gas_fee", f.gas_fee},
                      {"amm_fee", f.amm_fee}});
    j["fills"] = jf;
    j["path"] = {{"timestamp_ms", path_times_ms},
                 {"inventory", inventory_path},
                 {"cash", cash_path}};
    return j;
}

ExecutionReport run_liquidation(const EventDataset& data, const Window& window,
                                const StrategyRunConfig& cfg, const FeeModel& fees) {
    return replay(data, window, cfg, fees, SpeedSource::model, "liquidation");
}

ExecutionReport run_speculative(const EventDataset& data, const Window& window,
                                const StrategyRunConfig& cfg, const FeeModel& fees) {
    StrategyRunConfig spec = cfg;
    spec.y0 = 0.0; // speculation starts flat
    auto report = replay(data, window, spec, fees, SpeedSource::model, "speculative");
    return report;
}

ExecutionReport run_twap(const EventDataset& data, const Window& window, double y0,
                         const FeeModel& fees, double min_trade, double fallback_kappa) {
    StrategyRunConfig cfg;
    cfg.y0 = y0;
    cfg.min_trade = min_trade;
    cfg.control.kappa = fallback_kappa;
    return replay(data, window, cfg, fees, SpeedSource::twap, "twap");
}

ExecutionReport run_single_order(const EventDataset& data, const Window& window, double y0,
                                 const FeeModel& fees, double fallback_kappa) {
    require(window.end_ms > window.start_ms, "window must have positive length");
    MarketCursor cursor(data);
    cursor.advance_through(window.start_ms);
    if (!cursor.has_z)
        throw ReplayError("no pool rate observed at or before the window start");
    const double z0 = cursor.z;

    ReplayState state;
    state.report.strategy = "single_order";
    state.inventory = y0;
    state.record(window.start_ms);
    if (y0 != 0.0) {
        const double kappa = resolve_kappa(cursor, fallback_kappa);
        const auto pool = cpmm::PoolState::from_rate_depth(z0, kappa);
        const auto [next, f] = cpmm::apply_swap(pool, y0);
        (void)next;
        state.fill(window.start_ms, y0, f, fees);
        state.record(window.start_ms);
    }
    cursor.advance_through(window.end_ms);
    state.finalize(y0, z0, cursor.z);
    return state.report;
}

namespace {

// in-sample series at the observed trade times: Z from swaps, S sampled
// at-or-before each swap
struct AlignedSeries {
    std::vector<double> Z, S;
    std::vector<std::int64_t> ts;
    std::vector<double> depths;
    double volume = 0.0;
};

AlignedSeries align_in_sample(const EventDataset& data, const Window& w) {
    AlignedSeries out;
    std::size_t oi = 0;
    double s_last = 0.0;
    bool has_s = false;
    for (const auto& e : data.swaps) {
        if (e.timestamp_ms < w.start_ms || e.timestamp_ms > w.end_ms) continue;
        while (oi < data.oracle.size() && data.oracle[oi].timestamp_ms <= e.timestamp_ms) {
            s_last = data.oracle[oi++].rate;
            has_s = true;
        }
        if (!has_s) continue;
        out.Z.push_back(e.rate);
        out.S.push_back(s_last);
        out.ts.push_back(e.timestamp_ms);
        if (e.has_depth) out.depths.push_back(e.depth);
        out.volume += std::abs(e.delta_y);
    }
    return out;
}

} // namespace

WindowResult run_window(const EventDataset& data, const Window& in_sample,
                        const Window& horizon, const CampaignConfig& cfg) {
    WindowResult result;
    result.in_sample = in_sample;
    result.horizon = horizon;

    try {
        const auto series = align_in_sample(data, in_sample);
        if (series.Z.size() < 31) {
            result.skipped = true;
            result.skip_reason = "insufficient in-sample data";
            return result;
        }

        estimation::EstimationResult est;
        est.window_start_ms = in_sample.start_ms;
        est.window_end_ms = in_sample.end_ms;
        est.execution = estimation::calibrate_execution(
            series.ts, series.depths.empty() ? std::vector<double>{cfg.default_kappa}
                                             : series.depths);
        est.oracle = estimation::estimate_oracle_vol(series.S, est.execution.dt_bar);
        est.pool = estimation::estimate_pool_dynamics(series.Z, series.S, est.execution.dt_bar);
        result.estimates = est;

        if (!est.pool.beta_defined) {
            result.skipped = true;
            result.skip_reason = "degenerate regressor: S equals Z throughout the window";
            return result;
        }
        if (!(est.execution.kappa0 > 0.0)) {
            result.skipped = true;
            result.skip_reason = "no pool depth observed in sample";
            return result;
        }

        result.y0 = estimation::size_inventory(series.volume, cfg.in_sample_days,
                                               cfg.horizon_days, cfg.participation);

        strategy::ControlParams control;
        control.alpha = cfg.alpha;
        control.eta = est.execution.eta;
        control.T = horizon.days();
        control.beta = std::max(est.pool.beta_hat, 0.0);
        control.gamma = est.pool.gamma_hat;
        control.sigma = est.oracle.sigma_hat;
        control.kappa = est.execution.kappa0;

        for (const auto& name : cfg.strategies) {
            if (name == "liquidation") {
                StrategyRunConfig rc;
                rc.control = control;
                rc.control.phi = cfg.phi_liquidation;
                rc.y0 = result.y0;
                rc.min_trade = cfg.min_trade;
                rc.lattice = cfg.lattice;
                result.reports[name] = run_liquidation(data, horizon, rc, cfg.fees);
            } else if (name == "speculative") {
                StrategyRunConfig rc;
                rc.control = control;
                rc.control.phi = cfg.phi_speculative;
                rc.min_trade = cfg.min_trade;
                rc.lattice = cfg.lattice;
                result.reports[name] = run_speculative(data, horizon, rc, cfg.fees);
            } else if (name == "twap") {
                result.reports[name] = run_twap(data, horizon, result.y0, cfg.fees,
                                                cfg.min_trade, est.execution.kappa0);
            } else if (name == "single_order") {
                result.reports[name] =
                    run_single_order(data, horizon, result.y0, cfg.fees, est.execution.kappa0);
            } else {
                throw std::invalid_argument("unknown strategy '" + name + "'");
            }
        }
    } catch (const ReplayError& e) {
        result.skipped = true;
        result.skip_reason = e.what();
        result.reports.clear();
    } catch (const std::invalid_argument& e) {
        result.skipped = true;
        result.skip_reason = e.what();
        result.reports.clear();
    }
    return result;
}

std::vector<StrategySummary> summarize(const std::vector<WindowResult>& windows) {
    std::map<std::string, std::vector<const ExecutionReport*>> by_strategy;
    for (const auto& w : windows) {
        if (w.skipped) continue;
        for (const auto& [name, report] : w.reports) by_strategy[name].push_back(&report);
    }
    std::vector<StrategySummary> out;
    for (const auto& [name, reports] : by_strategy) {
        StrategySummary s;
        s.strategy = name;
        s.windows = reports.size();
        const double n = static_cast<double>(reports.size());
        for (const auto* r : reports) {
            s.mean_gross_pnl += r->gross_pnl;
            s.mean_trades += static_cast<double>(r->trade_count);
            s.mean_fees += r->gas_total + r->amm_total;
        }
        s.mean_gross_pnl /= n;
        s.mean_trades /= n;
        s.mean_fees /= n;
        double ss = 0.0;
        for (const auto* r : reports)
            ss += (r->gross_pnl - s.mean_gross_pnl) * (r->gross_pnl - s.mean_gross_pnl);
        s.sd_gross_pnl = reports.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        out.push_back(s);
    }
    return out;
}

CampaignResult rolling_campaign(const EventDataset& data, const CampaignConfig& cfg) {
    require(!data.swaps.empty(), "dataset has no pool trades");
    require(cfg.in_sample_days > 0.0 && cfg.horizon_days > 0.0 && cfg.shift_days > 0.0,
            "window lengths must be positive");

    const std::int64_t t0 = data.swaps.front().timestamp_ms;
    const std::int64_t t1 = data.swaps.back().timestamp_ms;
    const auto in_ms = static_cast<std::int64_t>(cfg.in_sample_days * kMsPerDay);
    const auto horizon_ms = static_cast<std::int64_t>(cfg.horizon_days * kMsPerDay);
    const auto shift_ms = static_cast<std::int64_t>(cfg.shift_days * kMsPerDay);

    std::vector<std::pair<Window, Window>> windows;
    for (std::int64_t start = t0; start + in_ms + horizon_ms <= t1; start += shift_ms)
        windows.push_back({Window{start, start + in_ms},
                           Window{start + in_ms, start + in_ms + horizon_ms}});

    CampaignResult result;
    result.windows.resize(windows.size());

    const unsigned jobs = std::max(1u, cfg.jobs);
    if (jobs == 1) {
        for (std::size_t k = 0; k < windows.size(); ++k)
            result.windows[k] = run_window(data, windows[k].first, windows[k].second, cfg);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<std::size_t> next{0};
        for (unsigned j = 0; j < jobs; ++j)
            futures.push_back(std::async(std::launch::async, [&] {
                for (std::size_t k = next.fetch_add(1); k < windows.size();
                     k = next.fetch_add(1))
                    result.windows[k] = run_window(data, windows[k].first, windows[k].second, cfg);
            }));
        for (auto& f : futures) f.get();
    }

    for (const auto& w : result.windows)
        if (w.skipped) ++result.skipped;
    result.summary = summarize(result.windows);
    return result;
}

void CampaignResult::write_summary_csv(const std::string& file,
                                       const std::string& fingerprint) const {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    if (!fingerprint.empty()) out << "# config " << fingerprint << '\n';
    out << "strategy,gross_avg_pnl,std_dev_pnl,avg_num_trades,avg_fees,windows\n";
    for (const auto& s : summary)
        out << s.strategy << ',' << io::format_double(s.mean_gross_pnl) << ','
            << io::format_double(s.sd_gross_pnl) << ',' << io::format_double(s.mean_trades)
            << ',' << io::format_double(s.mean_fees) << ',' << s.windows << '\n';
}

} // namespace amm::backtest
