#include "sdvec/kernel.hpp"

namespace sdvec {

std::string_view to_string(Phase phase) noexcept
{
    switch (phase) {
    case Phase::mobility: return "mobility";
    case Phase::uplink: return "uplink";
    case Phase::relay_decode: return "relay_decode";
    case Phase::prediction: return "prediction";
    case Phase::downlink: return "downlink";
    case Phase::control_plane: return "control_plane";
    case Phase::edge_compute: return "edge_compute";
    case Phase::cipher: return "cipher";
    case Phase::metrics: return "metrics";
    }
    return "unknown";
}

SimulationError::SimulationError(std::uint64_t slot, std::string phase, const std::string& what)
    : std::runtime_error("slot " + std::to_string(slot) + " [" + phase + "]: " + what)
    , slot_(slot)
    , phase_(std::move(phase))
{
}

SlotEngine::SlotEngine(double slot_duration)
{
    if (!(slot_duration > 0.0)) {
        throw std::invalid_argument("slot_duration must be > 0");
    }
    clock_.slot_duration = slot_duration;
}

void SlotEngine::on(Phase phase, std::string name, Handler handler)
{
    handlers_[static_cast<std::size_t>(phase)].push_back({std::move(name), std::move(handler)});
}

SlotTime SlotEngine::advance_slot()
{
    ++advance_calls_;
    for (Phase phase : kPhaseOrder) {
        for (const auto& reg : handlers_[static_cast<std::size_t>(phase)]) {
            try {
                reg.handler(clock_);
            } catch (const SimulationError&) {
                throw;
            } catch (const std::exception& e) {
                throw SimulationError(clock_.index, std::string(to_string(phase)) + "/" + reg.name, e.what());
            }
        }
    }
    ++clock_.index;
    return clock_;
}

} // namespace sdvec
