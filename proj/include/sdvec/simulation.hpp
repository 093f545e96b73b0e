#pragma once

#include "sdvec/association.hpp"
#include "sdvec/cipher.hpp"
#include "sdvec/cluster.hpp"
#include "sdvec/kernel.hpp"
#include "sdvec/metrics.hpp"
#include "sdvec/predictor.hpp"
#include "sdvec/scenario.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace sdvec {

/// Observation model derived from the channel: an AP bit is expected when the
/// AP would be in the vehicle's cluster and receive at least one replica,
/// weighted by the per-path decode probability; clamped to [floor, 1-floor].
ObservationModel<double> derive_observation_model(const ScenarioConfig& config);

/// One scenario instance: entity state plus the phase handlers registered on
/// a SlotEngine. Not thread-safe; independent instances share nothing.
class Simulation {
public:
    /// Throws std::invalid_argument naming every invalid field.
    explicit Simulation(ScenarioConfig config);
    ~Simulation();

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Runs the remaining slots up to the horizon and returns the report.
    MetricsReport run();

    /// Executes one slot and returns the advanced clock. Throws std::logic_error past the horizon.
    SlotTime advance_slot();

    bool finished() const noexcept;
    const SlotEngine& engine() const noexcept;
    const ScenarioConfig& config() const noexcept;
    const MetricsReport& report() const noexcept;

    /// Called with every slice assignment produced in the downlink phase.
    void on_slices(std::function<void(std::uint64_t slot, const SliceAssignment&)> observer);

    std::vector<CellId> vehicle_cells() const;
    std::vector<Key256> secret_material() const;

private:
    struct World;
    std::unique_ptr<World> world_;
};

MetricsReport run(const ScenarioConfig& config);

} // namespace sdvec
