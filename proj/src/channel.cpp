#include "sdvec/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdvec {

double path_loss_db(double distance, const ChannelParams& params)
{
    const double d = std::max(distance, params.d0);
    return params.pl0_db + 10.0 * params.exponent * std::log10(d / params.d0);
}

SignalQuality signal_quality(double distance, const ChannelParams& params, double tx_power_dbm)
{
    return {tx_power_dbm - path_loss_db(distance, params) - params.noise_dbm};
}

SignalQuality signal_quality(double distance, const ChannelParams& params)
{
    return signal_quality(distance, params, params.tx_power_dbm);
}

SignalQuality signal_quality(const Eigen::Vector2d& vehicle, const Eigen::Vector2d& ap, const ChannelParams& params)
{
    return signal_quality((vehicle - ap).norm(), params);
}

void rank_by_snr(std::vector<RankedAp>& aps)
{
    std::sort(aps.begin(), aps.end(), [](const RankedAp& a, const RankedAp& b) {
        if (a.snr_db != b.snr_db) {
            return a.snr_db > b.snr_db;
        }
        return a.ap < b.ap;
    });
}

std::vector<RankedAp> candidate_aps(const Eigen::Vector2d& vehicle, std::span<const Eigen::Vector2d> aps,
                                    double threshold_db, const ChannelParams& params)
{
    std::vector<RankedAp> out;
    for (std::size_t i = 0; i < aps.size(); ++i) {
        const double snr = signal_quality(vehicle, aps[i], params).snr_db;
        if (snr >= threshold_db) {
            out.push_back({ApId(i), snr});
        }
    }
    rank_by_snr(out);
    return out;
}

double db_to_linear(double db)
{
    return std::pow(10.0, db / 10.0);
}

double linear_to_db(double linear)
{
    if (linear <= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(linear);
}

double watts_to_dbm(double watts)
{
    return linear_to_db(watts * 1000.0);
}

} // namespace sdvec
