#pragma once

#include "sdvec/types.hpp"

#include <cstdint>
#include <vector>

namespace sdvec {

/// Per-slot record of which APs decoded a vehicle's uplink (1 = associated).
struct AssociationVector {
    VehicleId vehicle;
    std::uint64_t slot = 0;
    std::vector<std::uint8_t> bits; // one entry per AP, 0 or 1

    std::size_t ones() const
    {
        std::size_t n = 0;
        for (auto b : bits) {
            n += b != 0;
        }
        return n;
    }

    bool operator==(const AssociationVector&) const = default;
};

/// Fraction of matching bits; vectors must have equal length.
double hamming_accuracy(const AssociationVector& a, const AssociationVector& b);

} // namespace sdvec
