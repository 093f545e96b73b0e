#include "sdvec/cipher.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace sdvec;

namespace {

AssociationVector av(std::uint64_t slot, std::vector<std::uint8_t> bits)
{
    AssociationVector v;
    v.vehicle = VehicleId(0u);
    v.slot = slot;
    v.bits = std::move(bits);
    return v;
}

Fingerprint sample_fp()
{
    Fingerprint fp(VehicleId(0u), 3);
    fp.push(av(0, {1, 0, 1}));
    fp.push(av(1, {0, 1, 1}));
    return fp;
}

} // namespace

TEST(Sha256, KnownVector)
{
    const std::string msg = "abc";
    const auto d = sha256({reinterpret_cast<const std::uint8_t*>(msg.data()), msg.size()});
    const Digest256 want{0xba, 0x78, 0x16, 0xbf, 0x8f, 0x01, 0xcf, 0xea, 0x41, 0x41, 0x40,
                         0xde, 0x5d, 0xae, 0x22, 0x23, 0xb0, 0x03, 0x61, 0xa3, 0x96, 0x17,
                         0x7a, 0x9c, 0xb4, 0x10, 0xff, 0x61, 0xf2, 0x00, 0x15, 0xad};
    EXPECT_EQ(d, want);
}

TEST(Fingerprint, WindowDropsOldest)
{
    Fingerprint fp(VehicleId(0u), 2);
    fp.push(av(0, {1}));
    fp.push(av(1, {0}));
    fp.push(av(2, {1}));
    ASSERT_EQ(fp.history().size(), 2u);
    EXPECT_EQ(fp.history().front().slot, 1u);
    EXPECT_THROW(Fingerprint(VehicleId(0u), 0), std::invalid_argument);
}

TEST(Fingerprint, SerializationDistinguishesNearbyHistories)
{
    std::set<std::vector<std::uint8_t>> seen;
    std::size_t made = 0;
    // every history of up to two vectors with up to 9 bits each
    for (std::size_t len0 = 0; len0 <= 9; len0 += 3) {
        for (std::size_t len1 = 0; len1 <= 9; len1 += 3) {
            for (std::uint32_t p0 = 0; p0 < (1u << len0); p0 += 1 + len0) {
                for (std::uint32_t p1 = 0; p1 < (1u << len1); p1 += 1 + len1) {
                    Fingerprint fp(VehicleId(0u), 4);
                    std::vector<std::uint8_t> b0(len0), b1(len1);
                    for (std::size_t i = 0; i < len0; ++i) {
                        b0[i] = (p0 >> i) & 1u;
                    }
                    for (std::size_t i = 0; i < len1; ++i) {
                        b1[i] = (p1 >> i) & 1u;
                    }
                    fp.push(av(5, b0));
                    fp.push(av(6, b1));
                    seen.insert(fp.serialize());
                    ++made;
                }
            }
        }
    }
    EXPECT_EQ(seen.size(), made);
    Fingerprint one(VehicleId(0u), 4);
    one.push(av(5, {}));
    EXPECT_EQ(seen.count(one.serialize()), 0u);
}

TEST(BitString, TailBitsAreZero)
{
    RngStream rng(1, stream_id(StreamKind::test, 9));
    for (std::size_t bits = 1; bits < 64; ++bits) {
        const auto s = BitString::random(bits, rng);
        ASSERT_EQ(s.bytes.size(), (bits + 7) / 8);
        if (bits % 8 != 0) {
            EXPECT_EQ(s.bytes.back() & (0xff >> (bits % 8)), 0) << bits;
        }
    }
}

TEST(Cipher, RoundTripAcrossLengths)
{
    RngStream rng(2, stream_id(StreamKind::test, 2));
    const auto fp = sample_fp();
    auto pair = start_session(VehicleId(0u), AnId(0u), rng);
    EXPECT_EQ(pair.vehicle.key, pair.an.key);
    for (std::size_t bits : {1u, 7u, 8u, 255u, 256u, 257u, 1000u}) {
        const auto m = BitString::random(bits, rng);
        const auto c = encrypt(pair.vehicle, fp, m);
        EXPECT_EQ(c.bits, bits);
        EXPECT_EQ(decrypt(pair.an, fp, c), m);
    }
    EXPECT_EQ(pair.vehicle.counter, pair.an.counter);
}

TEST(Cipher, KeystreamDependsOnFingerprintAndCounter)
{
    CipherState a;
    a.key.fill(7);
    CipherState b = a;
    auto fp1 = sample_fp();
    auto fp2 = sample_fp();
    fp2.push(av(2, {1, 1, 1}));
    const auto k1 = keystream_block(a, fp1, 256);
    const auto k2 = keystream_block(b, fp2, 256);
    EXPECT_NE(k1, k2);
    EXPECT_EQ(a.counter, 1u);
    const auto k3 = keystream_block(a, fp1, 257);
    EXPECT_NE(k1.bytes, std::vector<std::uint8_t>(k3.bytes.begin(), k3.bytes.begin() + 32));
    EXPECT_EQ(a.counter, 3u);
}

TEST(Cipher, DivergentFingerprintTriggersResyncAndRecovers)
{
    RngStream rng(4, stream_id(StreamKind::test, 4));
    MasterKeyring ring;
    const Key256 master = ring.issue(VehicleId(0u), rng);
    auto pair = start_session(VehicleId(0u), AnId(0u), rng);
    Fingerprint an_fp = sample_fp();
    Fingerprint veh_fp = sample_fp();
    veh_fp.push(av(2, {0, 0, 1}));
    an_fp.push(av(2, {1, 0, 1}));

    const auto check = integrity_check(veh_fp, pair.vehicle.counter);
    EXPECT_EQ(verify_key(an_fp, check, pair.an), KeyCheck::resync);

    resync(master, an_fp, veh_fp, pair.vehicle, pair.an);
    EXPECT_EQ(veh_fp.serialize(), an_fp.serialize());
    EXPECT_EQ(pair.vehicle.key, pair.an.key);
    EXPECT_EQ(pair.vehicle.epoch, 1u);
    EXPECT_EQ(verify_key(an_fp, integrity_check(veh_fp, pair.vehicle.counter), pair.an), KeyCheck::ok);

    const auto m = BitString::random(300, rng);
    EXPECT_EQ(decrypt(pair.an, an_fp, encrypt(pair.vehicle, veh_fp, m)), m);
}

TEST(MasterKeyring, KeysArePairwiseDistinct)
{
    RngStream rng(5, stream_id(StreamKind::test, 5));
    MasterKeyring ring;
    std::set<Key256> keys;
    for (std::uint32_t v = 0; v < 200; ++v) {
        keys.insert(ring.issue(VehicleId(v), rng));
    }
    EXPECT_EQ(keys.size(), 200u);
    EXPECT_EQ(ring.size(), 200u);
    EXPECT_TRUE(ring.contains(VehicleId(199u)));
}
