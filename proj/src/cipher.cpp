#include "sdvec/cipher.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace sdvec {

namespace {

void ensure_sodium()
{
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialisation failed");
        }
    });
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

Digest256 hmac(const Key256& key, std::span<const std::uint8_t> msg)
{
    ensure_sodium();
    Digest256 out{};
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, msg.data(), msg.size());
    crypto_auth_hmacsha256_final(&st, out.data());
    sodium_memzero(&st, sizeof st);
    return out;
}

void mask_tail(BitString& s)
{
    const std::size_t rem = s.bits % 8;
    if (rem != 0 && !s.bytes.empty()) {
        s.bytes.back() &= static_cast<std::uint8_t>(0xff << (8 - rem));
    }
}

} // namespace

Fingerprint::Fingerprint(VehicleId vehicle, std::size_t width)
    : vehicle_(vehicle)
    , width_(width)
{
    if (width == 0) {
        throw std::invalid_argument("fingerprint window must be >= 1");
    }
}

void Fingerprint::push(AssociationVector v)
{
    history_.push_back(std::move(v));
    while (history_.size() > width_) {
        history_.pop_front();
    }
}

std::vector<std::uint8_t> Fingerprint::serialize() const
{
    std::vector<const AssociationVector*> sorted;
    for (const auto& v : history_) {
        sorted.push_back(&v);
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const AssociationVector* a, const AssociationVector* b) { return a->slot < b->slot; });

    std::vector<std::uint8_t> out;
    put_u64(out, vehicle_.value);
    put_u64(out, sorted.size());
    for (const auto* v : sorted) {
        put_u64(out, v->slot);
        put_u64(out, v->bits.size());
        std::uint8_t acc = 0;
        std::size_t n = 0;
        for (auto b : v->bits) {
            acc = static_cast<std::uint8_t>((acc << 1) | (b ? 1 : 0));
            if (++n % 8 == 0) {
                out.push_back(acc);
                acc = 0;
            }
        }
        if (n % 8 != 0) {
            out.push_back(static_cast<std::uint8_t>(acc << (8 - n % 8)));
        }
    }
    return out;
}

Digest256 sha256(std::span<const std::uint8_t> data)
{
    ensure_sodium();
    Digest256 out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Digest256 fingerprint_digest(const Fingerprint& fp)
{
    const auto bytes = fp.serialize();
    return sha256(bytes);
}

BitString BitString::random(std::size_t bits, RngStream& rng)
{
    BitString s;
    s.bits = bits;
    s.bytes.resize((bits + 7) / 8);
    for (auto& b : s.bytes) {
        b = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
    }
    mask_tail(s);
    return s;
}

Key256 draw_key(RngStream& rng)
{
    Key256 k{};
    for (std::size_t i = 0; i < k.size(); i += 8) {
        const std::uint64_t v = rng.next_u64();
        for (std::size_t j = 0; j < 8; ++j) {
            k[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
        }
    }
    return k;
}

SessionPair start_session(VehicleId, AnId, RngStream& rng)
{
    CipherState s;
    s.key = draw_key(rng);
    return {s, s};
}

BitString keystream_block(CipherState& state, const Fingerprint& fp, std::size_t bits)
{
    if (bits == 0) {
        throw std::invalid_argument("keystream_block: length must be >= 1");
    }
    const Digest256 fp_digest = fingerprint_digest(fp);
    BitString out;
    out.bits = bits;
    const std::size_t bytes = (bits + 7) / 8;
    out.bytes.reserve(bytes + 32);
    std::vector<std::uint8_t> input;
    while (out.bytes.size() < bytes) {
        input.clear();
        put_u64(input, state.counter);
        input.insert(input.end(), fp_digest.begin(), fp_digest.end());
        const Digest256 block = hmac(state.key, input);
        out.bytes.insert(out.bytes.end(), block.begin(), block.end());
        ++state.counter;
    }
    out.bytes.resize(bytes);
    mask_tail(out);
    return out;
}

BitString encrypt(CipherState& state, const Fingerprint& fp, const BitString& message)
{
    BitString ks = keystream_block(state, fp, message.bits);
    for (std::size_t i = 0; i < ks.bytes.size(); ++i) {
        ks.bytes[i] ^= message.bytes.at(i);
    }
    mask_tail(ks);
    return ks;
}

BitString decrypt(CipherState& state, const Fingerprint& fp, const BitString& ciphertext)
{
    return encrypt(state, fp, ciphertext);
}

Digest256 integrity_check(const Fingerprint& fp, std::uint64_t counter)
{
    auto bytes = fp.serialize();
    put_u64(bytes, counter);
    return sha256(bytes);
}

KeyCheck verify_key(const Fingerprint& an_fp, const Digest256& vehicle_check, CipherState& state)
{
    const Digest256 mine = integrity_check(an_fp, state.counter);
    if (sodium_memcmp(mine.data(), vehicle_check.data(), mine.size()) != 0) {
        return KeyCheck::resync;
    }
    state.last_verified = fingerprint_digest(an_fp);
    return KeyCheck::ok;
}

const Key256& MasterKeyring::issue(VehicleId vehicle, RngStream& rng)
{
    Key256 k = draw_key(rng);
    // keys must be pairwise distinct
    while (std::any_of(keys_.begin(), keys_.end(), [&](const auto& kv) { return kv.second == k; })) {
        k = draw_key(rng);
    }
    return keys_[vehicle] = k;
}

void resync(const Key256& master, const Fingerprint& an_fp, Fingerprint& vehicle_fp, CipherState& vehicle,
            CipherState& an)
{
    vehicle_fp.assign(an_fp);
    const std::uint64_t epoch = std::max(vehicle.epoch, an.epoch) + 1;
    std::vector<std::uint8_t> input{'r', 'e', 's', 'y', 'n', 'c'};
    put_u64(input, epoch);
    const Digest256 d = fingerprint_digest(an_fp);
    input.insert(input.end(), d.begin(), d.end());
    CipherState fresh;
    fresh.key = hmac(master, input);
    fresh.epoch = epoch;
    fresh.last_verified = d;
    vehicle = fresh;
    an = fresh;
}

} // namespace sdvec
