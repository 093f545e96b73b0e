#pragma once

#include "sdvec/association.hpp"
#include "sdvec/rng.hpp"
#include "sdvec/types.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <vector>

namespace sdvec {

using Key256 = std::array<std::uint8_t, 32>;
using Digest256 = std::array<std::uint8_t, 32>;

/// Construction identifiers accepted in scenario files.
inline constexpr const char* kPrfName = "hmac-sha256";
inline constexpr const char* kDigestName = "sha256";

/// Sliding window over a vehicle's last W association vectors.
class Fingerprint {
public:
    Fingerprint(VehicleId vehicle, std::size_t width);

    VehicleId vehicle() const noexcept { return vehicle_; }
    std::size_t width() const noexcept { return width_; }
    const std::deque<AssociationVector>& history() const noexcept { return history_; }

    /// Appends and drops the oldest entry once the window is full.
    void push(AssociationVector v);
    void assign(const Fingerprint& other) { history_ = other.history_; }

    /// Canonical, injective byte encoding: slot-ascending vectors, each as
    /// slot, length and AP-id-ascending packed bits.
    std::vector<std::uint8_t> serialize() const;

    bool operator==(const Fingerprint&) const = default;

private:
    VehicleId vehicle_;
    std::size_t width_;
    std::deque<AssociationVector> history_;
};

Digest256 sha256(std::span<const std::uint8_t> data);
Digest256 fingerprint_digest(const Fingerprint& fp);

/// Packed bit string, MSB first; bits beyond `bits` in the last byte are zero.
struct BitString {
    std::vector<std::uint8_t> bytes;
    std::size_t bits = 0;

    static BitString random(std::size_t bits, RngStream& rng);
    bool operator==(const BitString&) const = default;
};

struct CipherState {
    Key256 key{};
    std::uint64_t counter = 0; // PRF blocks consumed
    Digest256 last_verified{};
    std::uint64_t epoch = 0;   // re-keys since session start
};

struct SessionPair {
    CipherState vehicle;
    CipherState an;
};

Key256 draw_key(RngStream& rng);

/// AN draws a starting key; both endpoints begin from identical state, counter 0.
SessionPair start_session(VehicleId vehicle, AnId an, RngStream& rng);

/// Counter-mode keystream: block i = HMAC-SHA256(key, counter+i || digest(fp)),
/// truncated to `bits`. Advances the counter by the blocks consumed.
BitString keystream_block(CipherState& state, const Fingerprint& fp, std::size_t bits);

/// XOR with a fresh keystream of equal length; decrypt is the same operation.
BitString encrypt(CipherState& state, const Fingerprint& fp, const BitString& message);
BitString decrypt(CipherState& state, const Fingerprint& fp, const BitString& ciphertext);

/// In-band check value the vehicle sends: digest(serialize(fp) || counter).
Digest256 integrity_check(const Fingerprint& fp, std::uint64_t counter);

enum class KeyCheck { ok, resync };

/// Compares the AN-side check value with the vehicle's. Records the digest on success.
KeyCheck verify_key(const Fingerprint& an_fp, const Digest256& vehicle_check, CipherState& state);

/// Per-vehicle master keys held by the AN; issued keys are pairwise distinct.
class MasterKeyring {
public:
    const Key256& issue(VehicleId vehicle, RngStream& rng);
    const Key256& at(VehicleId vehicle) const { return keys_.at(vehicle); }
    bool contains(VehicleId vehicle) const { return keys_.contains(vehicle); }
    std::size_t size() const noexcept { return keys_.size(); }

private:
    std::map<VehicleId, Key256> keys_;
};

/// Master-key recovery: the vehicle adopts the AN's association record and
/// both endpoints re-key from HMAC(master, epoch || digest(AN fingerprint)).
void resync(const Key256& master, const Fingerprint& an_fp, Fingerprint& vehicle_fp, CipherState& vehicle,
            CipherState& an);

} // namespace sdvec
