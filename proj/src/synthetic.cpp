#include "ammlab/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ammlab/csv.hpp"
#include "ammlab/rng.hpp"

namespace amm::backtest {

EventDataset make_synthetic_model1(const SyntheticSpec& spec) {
    if (!(spec.trade_interval_s > 0.0))
        throw std::invalid_argument("trade interval must be positive");
    if (!(spec.kappa0 > 0.0)) throw std::invalid_argument("kappa0 must be positive");

    // half-step path: pool rate sampled on even indices, oracle on odd ones
    const double half_days = spec.trade_interval_s / 2.0 / 86400.0;
    const auto path = dynamics::simulate_model1(spec.market, half_days, spec.seed);

    Philox order_noise(spec.seed, 2);
    EventDataset ds;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto ts = spec.start_ms +
                        static_cast<std::int64_t>(std::llround(
                            static_cast<double>(k) * spec.trade_interval_s * 500.0));
        if (k % 2 == 0) {
            SwapEvent e;
            e.timestamp_ms = ts;
            const double mag = spec.order_scale * std::exp(0.5 * order_noise.normal());
            const double sign = order_noise.uniform() < 0.5 ? -1.0 : 1.0;
            e.delta_y = sign * mag;
            e.rate = path.Z[k];
            e.delta_x = -e.delta_y * e.rate;
            e.depth = spec.kappa0;
            e.has_depth = true;
            ds.swaps.push_back(e);
        } else {
            ds.oracle.push_back(OracleTick{ts, path.S[k]});
        }
    }
    ds.report.swap_rows = ds.swaps.size();
    ds.report.oracle_rows = ds.oracle.size();
    return ds;
}

void write_events_csv(const EventDataset& data, const std::string& swaps_csv,
                      const std::string& oracle_csv) {
    if (!swaps_csv.empty()) {
        std::ofstream out(swaps_csv);
        if (!out) throw std::runtime_error("cannot write " + swaps_csv);
        out << "timestamp_ms,delta_y,delta_x,rate,depth\n";
        for (const auto& e : data.swaps) {
            out << e.timestamp_ms << ',' << io::format_double(e.delta_y) << ','
                << io::format_double(e.delta_x) << ',' << io::format_double(e.rate) << ',';
            if (e.has_depth) out << io::format_double(e.depth);
            out << '\n';
        }
    }
    if (!oracle_csv.empty()) {
        std::ofstream out(oracle_csv);
        if (!out) throw std::runtime_error("cannot write " + oracle_csv);
        out << "timestamp_ms,rate\n";
        for (const auto& e : data.oracle)
            out << e.timestamp_ms << ',' << io::format_double(e.rate) << '\n';
    }
}

} // namespace amm::backtest
