#include "sdvec/edge_compute.hpp"

#include "sdvec/rng.hpp"

#include <gtest/gtest.h>

using namespace sdvec;

namespace {

double brute_force_best(const std::vector<Service>& catalog, const std::vector<double>& w, double cap)
{
    double best = 0.0;
    const std::size_t n = catalog.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double size = 0.0;
        double weight = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::size_t{1} << i)) {
                size += catalog[i].size;
                weight += w[i];
            }
        }
        if (size <= cap && weight > best) {
            best = weight;
        }
    }
    return best;
}

Service svc(std::uint32_t id, double size, double cycles = 1e6)
{
    return Service{ServiceId(id), size, cycles, 1.0};
}

} // namespace

TEST(Cache, BestSingleBeatsDensityGreedy)
{
    // greedy by density takes the 1-unit item and then cannot fit the big one
    const std::vector<Service> cat{svc(0, 1.0), svc(1, 10.0)};
    const std::vector<double> w{2.0, 10.0};
    EXPECT_EQ(decide_cache(cat, w, 10.0), (std::set<ServiceId>{ServiceId(1u)}));
}

TEST(Cache, WithinHalfOfOptimumOnRandomInstances)
{
    RngStream rng(3, stream_id(StreamKind::test, 3));
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t n = 1 + rng.uniform_index(9);
        std::vector<Service> cat;
        std::vector<double> w;
        for (std::size_t i = 0; i < n; ++i) {
            cat.push_back(svc(static_cast<std::uint32_t>(i), 0.5 + 4.5 * rng.uniform()));
            w.push_back(rng.uniform());
        }
        const double cap = 10.0 * rng.uniform();
        const auto chosen = decide_cache(cat, w, cap);
        double used = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            used += chosen.contains(cat[i].id) ? cat[i].size : 0.0;
        }
        EXPECT_LE(used, cap * (1.0 + 1e-9));
        EXPECT_GE(cache_hit_weight(cat, w, chosen), 0.5 * brute_force_best(cat, w, cap) - 1e-12);
    }
}

TEST(Cache, RejectsWeightLengthMismatch)
{
    const std::vector<Service> cat{svc(0, 1.0)};
    EXPECT_THROW(decide_cache(cat, std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST(Offload, LatencyAndEnergyModels)
{
    EdgeRates r;
    const Service s = svc(0, 1.0, 2e6);
    const Task t{ServiceId(0u), VehicleId(0u), 1e5, 0};
    EXPECT_NEAR(local_latency(s, 1e6, r), 3e6 / 1e9, 1e-15);
    EXPECT_NEAR(cloud_latency(s, t, r), 0.01 + 2e6 / 1e10 + 1e5 / 1e8, 1e-15);
    EXPECT_NEAR(local_energy(s, r), 2e-3, 1e-15);
    EXPECT_NEAR(cloud_energy(t, r), 1e-3, 1e-15);
}

TEST(Offload, UncachedServiceForcedToCloud)
{
    const Service s = svc(4, 1.0);
    const Task t{ServiceId(4u), VehicleId(0u), 0.0, 0};
    const CacheState empty{AnId(0u), {}, 1.0};
    const EnergyLedger ledger{AnId(0u), 0.0, 1.0, 1.0};
    const auto d = decide_offload(t, s, empty, ledger, 0.0, EdgeRates{});
    EXPECT_EQ(d.target, OffloadTarget::cloud);
    EXPECT_TRUE(d.forced);
    const auto dl = decide_offload(OffloadPolicy::always_local, t, s, empty, ledger, 0.0, EdgeRates{});
    EXPECT_EQ(dl.target, OffloadTarget::cloud);
    EXPECT_TRUE(dl.forced);
}

TEST(Offload, TieGoesLocal)
{
    // local: 1e6 cycles at 1e8 c/s = 0.01 s; cloud: rtt 0.01 s, free compute and transfer
    EdgeRates r;
    r.cpu_rate = 1e8;
    r.cloud_rate = 1e300;
    r.backhaul_rtt = 0.01;
    r.joules_per_cycle = 0.0;
    r.joules_per_bit = 0.0;
    const Service s = svc(1, 1.0);
    const Task t{ServiceId(1u), VehicleId(0u), 0.0, 0};
    const CacheState cache{AnId(0u), {ServiceId(1u)}, 1.0};
    const EnergyLedger ledger{AnId(0u), 0.0, 1.0, 1.0};
    const auto d = decide_offload(t, s, cache, ledger, 0.0, r);
    EXPECT_DOUBLE_EQ(d.local_score, d.cloud_score);
    EXPECT_EQ(d.target, OffloadTarget::local);
}

TEST(Offload, DeficitPushesWorkToCloud)
{
    EdgeRates r;
    const Service s = svc(1, 1.0, 1e6);
    const Task t{ServiceId(1u), VehicleId(0u), 0.0, 0};
    const CacheState cache{AnId(0u), {ServiceId(1u)}, 1.0};
    EnergyLedger ledger{AnId(0u), 0.0, 1.0, 1.0};
    EXPECT_EQ(decide_offload(t, s, cache, ledger, 0.0, r).target, OffloadTarget::local);
    // local score 1e-3 + Q*1e-3 exceeds cloud score 0.0101 once Q > 9.1
    ledger.deficit = 10.0;
    EXPECT_EQ(decide_offload(t, s, cache, ledger, 0.0, r).target, OffloadTarget::cloud);
    EXPECT_EQ(decide_offload(OffloadPolicy::always_local, t, s, cache, ledger, 0.0, r).target,
              OffloadTarget::local);
    EXPECT_EQ(decide_offload(OffloadPolicy::always_cloud, t, s, cache, ledger, 0.0, r).target,
              OffloadTarget::cloud);
}

TEST(Offload, RejectsMismatchedTask)
{
    const Task t{ServiceId(2u), VehicleId(0u), 0.0, 0};
    EXPECT_THROW(decide_offload(t, svc(1, 1.0), CacheState{}, EnergyLedger{}, 0.0, EdgeRates{}),
                 std::invalid_argument);
}

TEST(EnergyLedger, DeficitQueueUpdate)
{
    EnergyLedger l{AnId(0u), 0.0, 2.0, 1.0};
    settle_slot(l, 3.5);
    EXPECT_DOUBLE_EQ(l.deficit, 1.5);
    settle_slot(l, 1.0);
    EXPECT_DOUBLE_EQ(l.deficit, 0.5);
    settle_slot(l, 0.0);
    EXPECT_DOUBLE_EQ(l.deficit, 0.0);
    EXPECT_THROW(settle_slot(l, -1.0), std::invalid_argument);
}
