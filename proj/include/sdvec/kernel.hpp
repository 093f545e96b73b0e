#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdvec {

struct SlotTime {
    std::uint64_t index = 0;
    double slot_duration = 1e-3;

    double seconds() const noexcept { return static_cast<double>(index) * slot_duration; }
};

/// Per-slot phases, executed in this order every slot.
enum class Phase : std::uint8_t {
    mobility,
    uplink,
    relay_decode,
    prediction,
    downlink,
    control_plane,
    edge_compute,
    cipher,
    metrics,
};

inline constexpr std::array<Phase, 9> kPhaseOrder = {
    Phase::mobility,     Phase::uplink,        Phase::relay_decode,
    Phase::prediction,   Phase::downlink,      Phase::control_plane,
    Phase::edge_compute, Phase::cipher,        Phase::metrics,
};

std::string_view to_string(Phase phase) noexcept;

/// Raised when a phase handler fails; carries the slot it failed in.
class SimulationError : public std::runtime_error {
public:
    SimulationError(std::uint64_t slot, std::string phase, const std::string& what);

    std::uint64_t slot() const noexcept { return slot_; }
    const std::string& phase() const noexcept { return phase_; }

private:
    std::uint64_t slot_;
    std::string phase_;
};

/// Slotted clock plus phase dispatch. Handlers registered on the same phase
/// run in registration order.
class SlotEngine {
public:
    using Handler = std::function<void(const SlotTime&)>;

    explicit SlotEngine(double slot_duration);

    void on(Phase phase, std::string name, Handler handler);

    /// Runs every phase of the current slot once and moves the clock forward;
    /// returns the advanced clock.
    SlotTime advance_slot();

    const SlotTime& now() const noexcept { return clock_; }
    std::uint64_t advance_calls() const noexcept { return advance_calls_; }

private:
    struct Registration {
        std::string name;
        Handler handler;
    };

    SlotTime clock_;
    std::uint64_t advance_calls_ = 0;
    std::array<std::vector<Registration>, kPhaseOrder.size()> handlers_;
};

} // namespace sdvec
