#pragma once

#include "sdvec/types.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace sdvec {

/// Log-distance path-loss parameters. Fading is folded into the BLER curve.
struct ChannelParams {
    double tx_power_dbm = 23.0;
    double pl0_db = 40.0;   // path loss at the reference distance
    double exponent = 3.0;
    double d0 = 1.0;        // reference distance, meters
    double noise_dbm = -90.0;
};

struct SignalQuality {
    double snr_db = 0.0;
};

double path_loss_db(double distance, const ChannelParams& params);

/// snr_db = tx_power_dbm - PL(max(d, d0)) - noise_dbm.
SignalQuality signal_quality(double distance, const ChannelParams& params, double tx_power_dbm);
SignalQuality signal_quality(double distance, const ChannelParams& params);
SignalQuality signal_quality(const Eigen::Vector2d& vehicle, const Eigen::Vector2d& ap, const ChannelParams& params);

struct RankedAp {
    ApId ap;
    double snr_db = 0.0;
};

/// APs with snr >= threshold_db, descending SNR, ascending id on ties.
std::vector<RankedAp> candidate_aps(const Eigen::Vector2d& vehicle, std::span<const Eigen::Vector2d> aps,
                                    double threshold_db, const ChannelParams& params);

/// Sorts in place by descending SNR with AP-id tiebreak.
void rank_by_snr(std::vector<RankedAp>& aps);

double db_to_linear(double db);
double linear_to_db(double linear);
double watts_to_dbm(double watts);

} // namespace sdvec
