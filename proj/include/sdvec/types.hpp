#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>

namespace sdvec {

/// Integer identifier tagged by entity kind so vehicle, AP and AN ids cannot be mixed up.
template <typename Tag>
struct Id {
    std::uint32_t value = 0;

    constexpr Id() = default;
    constexpr explicit Id(std::uint32_t v) noexcept : value(v) {}
    constexpr explicit Id(std::size_t v) noexcept : value(static_cast<std::uint32_t>(v)) {}
    constexpr explicit Id(int v) noexcept : value(static_cast<std::uint32_t>(v)) {}

    constexpr std::size_t index() const noexcept { return value; }
    constexpr auto operator<=>(const Id&) const = default;
};

template <typename Tag>
std::ostream& operator<<(std::ostream& os, Id<Tag> id)
{
    return os << id.value;
}

using VehicleId = Id<struct VehicleTag>;
using ApId = Id<struct ApTag>;
using AnId = Id<struct AnTag>;
using CellId = Id<struct CellTag>;
using ServiceId = Id<struct ServiceTag>;

} // namespace sdvec

template <typename Tag>
struct std::hash<sdvec::Id<Tag>> {
    std::size_t operator()(sdvec::Id<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
