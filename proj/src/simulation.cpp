#include "sdvec/simulation.hpp"

#include "sdvec/channel.hpp"
#include "sdvec/control_plane.hpp"
#include "sdvec/edge_compute.hpp"
#include "sdvec/mac.hpp"
#include "sdvec/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>

namespace sdvec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<Eigen::Vector2d> ap_positions(const ScenarioConfig& cfg)
{
    std::vector<Eigen::Vector2d> out;
    for (const auto& ap : cfg.aps) {
        out.push_back(ap.position);
    }
    return out;
}

std::string invalid_config_message(const std::vector<FieldError>& errors)
{
    std::string msg = "invalid scenario:";
    for (const auto& e : errors) {
        msg += "\n  " + (e.path.empty() ? std::string("<root>") : e.path) + ": " + e.message;
    }
    return msg;
}

ScenarioConfig checked(ScenarioConfig cfg)
{
    const auto errors = validate(cfg);
    if (!errors.empty()) {
        throw std::invalid_argument(invalid_config_message(errors));
    }
    return cfg;
}

} // namespace

ObservationModel<double> derive_observation_model(const ScenarioConfig& cfg)
{
    const auto aps = ap_positions(cfg);
    const std::size_t cells = cfg.road.graph.cell_count();
    ObservationModel<double> model;
    model.p_observed = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(aps.size()));
    const std::size_t replicas = cfg.mac.replicas;
    for (std::size_t c = 0; c < cells; ++c) {
        const auto cand = candidate_aps(cfg.road.graph.centers[c], aps, cfg.candidate_threshold_db, cfg.channel);
        const VirtualCluster cl = form_cluster(VehicleId(0u), cand, cfg.cluster.k_cluster);
        for (std::size_t i = 0; i < cl.members.size(); ++i) {
            // CTUs are handed to members round-robin
            std::size_t copies = 0;
            for (std::size_t r = 0; r < replicas; ++r) {
                copies += (r % cl.members.size()) == i;
            }
            if (copies == 0) {
                continue;
            }
            const double eff = effective_snr_db(cand[i].snr_db, cfg.mac.relay_snr_db, cfg.mac.relay);
            const double fail = cfg.mac.bler.bler(eff, cfg.mac.payload_bits);
            model.p_observed(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(cl.members[i].index())) =
                1.0 - std::pow(fail, static_cast<double>(copies));
        }
    }
    const double floor = cfg.predictor.obs_floor;
    model.p_observed = model.p_observed.cwiseMax(floor).cwiseMin(1.0 - floor);
    return model;
}

struct Simulation::World {
    struct Vehicle {
        Vehicle(VehicleId vid, MobilityState start, std::vector<VelocityChange> changes, std::uint64_t seed)
            : id(vid)
            , mobility(start)
            , schedule(std::move(changes))
            , mobility_rng(seed, stream_id(StreamKind::mobility, vid.index()))
            , traffic_rng(seed, stream_id(StreamKind::traffic, vid.index()))
            , uplink_rng(seed, stream_id(StreamKind::uplink, vid.index()))
            , decode_rng(seed, stream_id(StreamKind::decode, vid.index()))
            , bandit_rng(seed, stream_id(StreamKind::bandit, vid.index()))
            , downlink_rng(seed, stream_id(StreamKind::downlink, vid.index()))
            , edge_rng(seed, stream_id(StreamKind::edge, vid.index()))
            , divergence_rng(seed, stream_id(StreamKind::divergence, vid.index()))
        {
        }

        VehicleId id;
        MobilityState mobility;
        std::vector<VelocityChange> schedule;

        RngStream mobility_rng;
        RngStream traffic_rng;
        RngStream uplink_rng;
        RngStream decode_rng;
        RngStream bandit_rng;
        RngStream downlink_rng;
        RngStream edge_rng;
        RngStream divergence_rng;

        std::optional<ReplicaBandit> bandit;
        std::optional<DecodeOutcome> last_outcome;
        std::optional<std::size_t> last_replicas;

        // per-slot
        bool emitted = false;
        std::vector<RankedAp> candidates;
        VirtualCluster cluster;
        std::optional<CtuSelection> selection;
        AssociationVector association;
        bool observed = false;
        AnId home;

        // AN-side prediction state
        Belief<double> belief;
        std::optional<AssociationVector> last_observation;
        std::optional<AssociationVector> observation_before_now;
        std::optional<AssociationVector> prediction_for_now; // made last slot
        AssociationVector prediction_for_next;
        Eigen::VectorXd marginals_for_now;
        Eigen::VectorXd marginals_for_next;

        // cipher endpoints
        std::optional<SessionPair> session;
        AnId session_an;
        std::optional<Fingerprint> vehicle_fp;
        std::optional<Fingerprint> an_fp;
        std::size_t session_resyncs = 0;
        bool compromised = false;
    };

    struct AccessNode {
        AnId id;
        std::optional<QLearner> learner;
        RngStream eco_rng;
        CacheState cache;
        EnergyLedger ledger;
        double queued_cycles = 0.0;
        std::deque<std::vector<double>> request_window;
        double edge_energy_slot = 0.0;
        std::size_t downlink_load = 0;
    };

    ScenarioConfig cfg;
    MarkovJumpModel<double> model;
    std::vector<Eigen::Vector2d> aps;
    std::vector<AnId> ap_to_an;
    ObservationModel<double> obs_model;
    ControlTopology topology;
    std::vector<Vehicle> vehicles;
    std::vector<AccessNode> ans;
    MasterKeyring keyring;
    RngStream cipher_rng;
    RngStream master_rng;
    SlotEngine engine;
    MetricsReport report;
    std::vector<std::function<void(std::uint64_t, const SliceAssignment&)>> slice_observers;

    explicit World(ScenarioConfig config)
        : cfg(checked(std::move(config)))
        , model(build_mobility_model(cfg))
        , aps(ap_positions(cfg))
        , obs_model(cfg.predictor.derived ? derive_observation_model(cfg) : ObservationModel<double>{})
        , topology(build_control_topology(cfg))
        , cipher_rng(cfg.seed, stream_id(StreamKind::cipher, 0))
        , master_rng(cfg.seed, stream_id(StreamKind::master_key, 0))
        , engine(cfg.slot_duration)
    {
        for (const auto& ap : cfg.aps) {
            ap_to_an.emplace_back(ap.an);
        }
        if (!cfg.predictor.derived) {
            const auto rows = static_cast<Eigen::Index>(cfg.predictor.matrix.size());
            const auto cols = static_cast<Eigen::Index>(aps.size());
            obs_model.p_observed.resize(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) {
                    obs_model.p_observed(r, c) =
                        cfg.predictor.matrix[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                }
            }
        }

        const std::uint64_t seed = cfg.seed;
        for (std::size_t i = 0; i < cfg.vehicles.size(); ++i) {
            const auto& spec = cfg.vehicles[i];
            vehicles.emplace_back(VehicleId(i), MobilityState{CellId(spec.cell), spec.velocity_class},
                                  spec.velocity_schedule, seed);
            auto& v = vehicles.back();
            if (cfg.mac.bandit.enabled) {
                v.bandit.emplace(cfg.mac.bandit.r_max, cfg.mac.bandit.epsilon, cfg.mac.bandit.cost);
            }
            v.belief = uniform_belief<double>(model.cell_count());
            v.association.vehicle = v.id;
            v.association.bits.assign(aps.size(), 0);
        }

        const std::size_t actions = cfg.cluster.k_cluster * cfg.cluster.power_levels_w.size();
        for (std::size_t a = 0; a < cfg.ans.size(); ++a) {
            AccessNode node{AnId(a),
                            std::nullopt,
                            RngStream(seed, stream_id(StreamKind::eco, a)),
                            CacheState{AnId(a), {}, cfg.ans[a].storage_capacity},
                            EnergyLedger{AnId(a), 0.0, cfg.edge.energy_budget, cfg.edge.tradeoff},
                            0.0,
                            {},
                            0.0,
                            0};
            node.learner.emplace(AnId(a), cfg.cluster.states.size(), actions, cfg.cluster.eta, cfg.cluster.gamma,
                                 cfg.cluster.epsilon);
            ans.push_back(std::move(node));
        }

        report.seed = cfg.seed;
        report.horizon = cfg.horizon;
        report.slot_duration = cfg.slot_duration;
        report.deadline = cfg.deadline;
        report.energy_per_an = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.horizon),
                                                     static_cast<Eigen::Index>(cfg.ans.size()));
        report.predictor.enabled = cfg.predictor.enabled;
        report.edge.energy_budget_j = cfg.edge.energy_budget;

        engine.on(Phase::mobility, "markov-jump", [this](const SlotTime& t) { mobility_phase(t); });
        engine.on(Phase::uplink, "grant-free-uplink", [this](const SlotTime& t) { uplink_phase(t); });
        engine.on(Phase::relay_decode, "relay-combine", [this](const SlotTime& t) { decode_phase(t); });
        engine.on(Phase::prediction, "bayes-filter", [this](const SlotTime& t) { prediction_phase(t); });
        engine.on(Phase::downlink, "slices-eco-routing", [this](const SlotTime& t) { downlink_phase(t); });
        engine.on(Phase::control_plane, "sdn-control", [this](const SlotTime& t) { control_phase(t); });
        engine.on(Phase::edge_compute, "cache-offload", [this](const SlotTime& t) { edge_phase(t); });
        engine.on(Phase::cipher, "fingerprint-cipher", [this](const SlotTime& t) { cipher_phase(t); });
        engine.on(Phase::metrics, "energy", [this](const SlotTime& t) { metrics_phase(t); });
    }

    const Eigen::Vector2d& position(const Vehicle& v) const
    {
        return cfg.road.graph.centers[v.mobility.cell.index()];
    }

    double snr_to(const Vehicle& v, ApId ap) const
    {
        return signal_quality(position(v), aps[ap.index()], cfg.channel).snr_db;
    }

    void mobility_phase(const SlotTime& t)
    {
        for (auto& v : vehicles) {
            for (const auto& ch : v.schedule) {
                if (ch.slot == t.index) {
                    v.mobility.velocity_class = ch.velocity_class;
                }
            }
            if (t.index > 0) {
                v.mobility = advance(v.mobility, model, v.mobility_rng);
            }
        }
    }

    void uplink_phase(const SlotTime& t)
    {
        const double no_threshold = kNegInf;
        for (auto& v : vehicles) {
            v.selection.reset();
            v.observed = false;
            v.association.slot = t.index;
            std::fill(v.association.bits.begin(), v.association.bits.end(), 0);

            v.emitted = v.traffic_rng.bernoulli(cfg.mac.packet_prob);
            v.candidates = candidate_aps(position(v), aps, cfg.candidate_threshold_db, cfg.channel);
            v.cluster = form_cluster(v.id, v.candidates, cfg.cluster.k_cluster, t.index);
            const auto all = candidate_aps(position(v), aps, no_threshold, cfg.channel);
            v.home = ap_to_an[all.front().ap.index()];

            if (!v.emitted) {
                continue;
            }
            if (v.cluster.members.empty()) {
                ++report.mac.unserved;
                report.packets.push_back({v.id, t.index, false, 0, 0, 0});
                continue;
            }
            std::size_t replicas = cfg.mac.replicas;
            if (v.bandit) {
                replicas = bandit_select_and_update(*v.bandit, v.last_outcome, v.last_replicas, v.bandit_rng);
            }
            std::vector<RankedAp> members(v.candidates.begin(),
                                          v.candidates.begin() + static_cast<std::ptrdiff_t>(v.cluster.members.size()));
            std::span<const CtuId> fixed;
            if (const auto it = cfg.mac.preconfigured.find(v.id.index()); it != cfg.mac.preconfigured.end()) {
                fixed = it->second;
            }
            v.selection = select_ctus(v.id, members, replicas, cfg.mac.policy, cfg.mac.pool, v.uplink_rng, fixed);
        }
    }

    void decode_phase(const SlotTime& t)
    {
        std::vector<CtuSelection> selections;
        for (const auto& v : vehicles) {
            if (v.selection) {
                selections.push_back(*v.selection);
            }
        }
        const OccupancyMap occupancy = detect_collisions(selections);
        for (const auto& [ctu, occupants] : occupancy) {
            if (occupants.size() >= 2) {
                ++report.mac.collision_ctus;
            }
        }
        for (auto& v : vehicles) {
            if (!v.selection) {
                continue;
            }
            std::vector<bool> flags;
            bool mud_used = false;
            std::vector<ApId> paths;
            for (const auto& a : v.selection->ctus) {
                const std::size_t occ = occupancy.at(a.ctu).size();
                const bool resolvable = mud_resolvable(occ, cfg.mac.k_max);
                const bool decoded = decode_path(SignalQuality{snr_to(v, a.ap)}, cfg.mac.payload_bits, cfg.mac.relay,
                                                 SignalQuality{cfg.mac.relay_snr_db}, cfg.mac.bler, v.decode_rng);
                const bool ok = resolvable && decoded;
                if (!resolvable) {
                    ++report.mac.unresolved_paths;
                } else if (occ >= 2) {
                    ++report.mac.mud_resolved_paths;
                    mud_used = mud_used || ok;
                }
                flags.push_back(ok);
                if (ok) {
                    v.association.bits[a.ap.index()] = 1;
                }
                if (std::find(paths.begin(), paths.end(), a.ap) == paths.end()) {
                    paths.push_back(a.ap);
                }
            }
            DecodeOutcome outcome = combine(flags);
            outcome.resolved_by_mud = mud_used;
            v.observed = true;
            v.last_outcome = outcome;
            v.last_replicas = v.selection->ctus.size();
            report.mac.replicas_total += v.selection->ctus.size();
            report.packets.push_back({v.id, t.index, outcome.combined, outcome.combined ? 1u : 0u,
                                      static_cast<std::uint32_t>(v.selection->ctus.size()),
                                      static_cast<std::uint32_t>(paths.size())});
        }
    }

    void prediction_phase(const SlotTime& t)
    {
        for (auto& v : vehicles) {
            v.prediction_for_now.reset();
            if (cfg.predictor.enabled && t.index > 0) {
                v.prediction_for_now = v.prediction_for_next;
                v.marginals_for_now = v.marginals_for_next;
            }
            if (v.observed && v.last_observation) {
                std::optional<double> predicted;
                const double persist = hamming_accuracy(*v.last_observation, v.association);
                if (!cfg.predictor.enabled) {
                    predicted = persist;
                } else if (v.prediction_for_now) {
                    predicted = hamming_accuracy(*v.prediction_for_now, v.association);
                }
                if (predicted) {
                    const auto n = static_cast<double>(v.association.bits.size());
                    auto& pc = report.predictor;
                    pc.predicted_hits += static_cast<std::uint64_t>(std::llround(*predicted * n));
                    pc.persistence_hits += static_cast<std::uint64_t>(std::llround(persist * n));
                    pc.scored_bits += v.association.bits.size();
                }
            }

            if (cfg.predictor.enabled) {
                const auto& transition = model.transition(v.mobility.velocity_class);
                if (v.observed) {
                    auto upd = update_belief(v.belief, v.association, transition, obs_model);
                    v.belief = std::move(upd.belief);
                    if (upd.zero_likelihood) {
                        ++report.predictor.zero_likelihood_fallbacks;
                    }
                } else {
                    v.belief = predict_prior(v.belief, transition);
                }
                v.prediction_for_next = predict_association(v.belief, transition, obs_model, cfg.predictor.threshold);
                v.prediction_for_next.vehicle = v.id;
                v.prediction_for_next.slot = t.index + 1;
                v.marginals_for_next = association_marginals(v.belief, transition, obs_model);
            }
            v.observation_before_now = v.last_observation;
            if (v.observed) {
                v.last_observation = v.association;
            }
        }
    }

    // Downlink AP candidates in preference order.
    std::vector<ApId> downlink_targets(const Vehicle& v) const
    {
        std::vector<ApId> out;
        if (cfg.predictor.enabled) {
            const bool current = cfg.predictor.downlink_uses_current_slot;
            const AssociationVector* pred = current ? &v.prediction_for_next
                                                    : (v.prediction_for_now ? &*v.prediction_for_now : nullptr);
            const Eigen::VectorXd& marg = current ? v.marginals_for_next : v.marginals_for_now;
            if (pred && marg.size() == static_cast<Eigen::Index>(aps.size())) {
                std::vector<RankedAp> ranked;
                for (std::size_t a = 0; a < pred->bits.size(); ++a) {
                    if (pred->bits[a]) {
                        ranked.push_back({ApId(a), marg(static_cast<Eigen::Index>(a))});
                    }
                }
                rank_by_snr(ranked);
                for (const auto& r : ranked) {
                    out.push_back(r.ap);
                }
            }
        } else {
            const bool current = cfg.predictor.downlink_uses_current_slot;
            const std::optional<AssociationVector>& src = current ? v.last_observation : v.observation_before_now;
            const AssociationVector* last = src ? &*src : nullptr;
            if (last) {
                for (std::size_t a = 0; a < last->bits.size(); ++a) {
                    if (last->bits[a]) {
                        out.push_back(ApId(a));
                    }
                }
            }
        }
        if (out.empty()) {
            out = v.cluster.members;
        }
        return out;
    }

    void downlink_phase(const SlotTime& t)
    {
        std::vector<VirtualCluster> clusters;
        for (const auto& v : vehicles) {
            if (!v.cluster.members.empty()) {
                clusters.push_back(v.cluster);
            }
        }
        std::vector<std::size_t> demands(clusters.size(), cfg.cluster.ctu_demand);
        std::vector<double> budgets;
        for (const auto& an : cfg.ans) {
            budgets.push_back(an.power_budget_w);
        }
        const SliceAssignment slices = allocate_slices(clusters, cfg.mac.pool, demands, ap_to_an, budgets);
        ++report.slicing.assignments;
        report.slicing.overlaps += count_overlaps(slices);
        report.slicing.unsatisfied_ctus += slices.unsatisfied();
        for (const auto& obs : slice_observers) {
            obs(t.index, slices);
        }

        for (auto& an : ans) {
            an.downlink_load = 0;
        }
        const std::size_t levels = cfg.cluster.power_levels_w.size();
        for (auto& v : vehicles) {
            ++report.downlink.attempted;
            const std::vector<ApId> targets = downlink_targets(v);
            const Slice* slice = slices.find(v.id);
            if (targets.empty() || slice == nullptr || slice->ctus.empty()) {
                ++report.downlink.no_slice;
                continue;
            }
            AccessNode& an = ans[ap_to_an[targets.front().index()].index()];
            double snr_sum = 0.0;
            for (const auto& c : v.candidates) {
                snr_sum += c.snr_db;
            }
            const double mean_snr = v.candidates.empty() ? kNegInf : snr_sum / static_cast<double>(v.candidates.size());
            const std::size_t state = cfg.cluster.states.encode(an.downlink_load, mean_snr);
            ++an.downlink_load;

            double used_power = 0.0;
            bool delivered = false;
            auto act = [&](std::size_t action) {
                const std::size_t rank = std::min(action / levels, targets.size() - 1);
                const ApId ap = targets[rank];
                used_power = std::min(cfg.cluster.power_levels_w[action % levels], slice->power_w);
                const double snr = signal_quality((position(v) - aps[ap.index()]).norm(), cfg.channel,
                                                  watts_to_dbm(used_power))
                                       .snr_db;
                delivered = v.downlink_rng.uniform() >= cfg.mac.bler.bler(snr, cfg.mac.payload_bits);
                return EcoFeedback{eco_reward(cfg.cluster.reward, delivered, used_power), state};
            };
            if (cfg.cluster.eco_routing) {
                eco_route_step(*an.learner, state, act, an.eco_rng);
            } else {
                act(static_cast<std::size_t>(an.eco_rng.uniform_index(an.learner->actions())));
            }
            report.downlink.delivered += delivered ? 1 : 0;
            report.downlink.power_w_total += used_power;
            report.energy_per_an(static_cast<Eigen::Index>(t.index), static_cast<Eigen::Index>(an.id.index())) +=
                used_power * cfg.slot_duration;
        }
    }

    void control_phase(const SlotTime& t)
    {
        if (!cfg.control.enabled || t.index % cfg.control.period != 0) {
            return;
        }
        ++report.control.invocations;
        std::vector<ControlDemand> demands;
        for (const auto& v : vehicles) {
            demands.push_back({v.id, v.home, cfg.control.vehicle_demand});
        }
        Placement placement;
        try {
            placement = place_controllers(topology, demands, cfg.control.latency_bound);
        } catch (const PlacementInfeasible& e) {
            ++report.control.infeasible;
            report.decisions.push_back({t.index, "placement_infeasible", -1, -1,
                                        e.binding() == BindingConstraint::latency ? "latency" : "capacity", 0.0});
            return;
        }
        const FeedbackParams fp{cfg.control.theta, cfg.control.max_iters, cfg.control.kappa, cfg.control.max_paths};
        auto routing = balance_control_traffic(placement, topology, demands, fp.kappa, fp.max_paths);
        if (routing.mean_latency > cfg.control.target_latency) {
            const auto fb = replace_on_feedback(placement, routing.mean_latency, cfg.control.target_latency, topology,
                                                demands, cfg.control.latency_bound, fp);
            report.control.feedback_tightenings += fb.tightenings;
            if (fb.placement != placement) {
                placement = fb.placement;
                routing = balance_control_traffic(placement, topology, demands, fp.kappa, fp.max_paths);
            }
        }

        const auto overlay = controller_overlay(topology, placement.controllers);
        const auto n = static_cast<Eigen::Index>(placement.controllers.size());
        VersionMatrix views = VersionMatrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            views(i, i) = t.index + 1;
        }
        const SyncResult sync = sync_controllers(overlay, views);

        auto& cc = report.control;
        cc.controllers_last = placement.controllers.size();
        cc.mean_latency_last = routing.mean_latency;
        cc.sync_rounds_last = sync.rounds;
        cc.controller_set_last.clear();
        for (AnId c : placement.controllers) {
            cc.controller_set_last.push_back(c.value);
            report.decisions.push_back({t.index, "controller", static_cast<std::int64_t>(c.value), -1, "open",
                                        routing.mean_latency});
        }
        for (const auto& [vehicle, controller] : placement.domain) {
            report.decisions.push_back({t.index, "domain", static_cast<std::int64_t>(controller.value),
                                        static_cast<std::int64_t>(vehicle.value), "assign", 0.0});
        }
        if (routing.congested()) {
            report.decisions.push_back({t.index, "routing_congested", -1, -1, "congested",
                                        static_cast<double>(routing.congested_edges.size())});
        }
    }

    void edge_phase(const SlotTime& t)
    {
        if (!cfg.edge.enabled) {
            return;
        }
        const auto& catalog = cfg.edge.services;
        std::vector<double> priors;
        for (const auto& s : catalog) {
            priors.push_back(s.popularity);
        }
        for (auto& an : ans) {
            an.edge_energy_slot = 0.0;
            if (t.index % cfg.edge.recache_period == 0) {
                std::vector<double> counts(catalog.size(), 0.0);
                double total = 0.0;
                for (const auto& slot_counts : an.request_window) {
                    for (std::size_t s = 0; s < catalog.size(); ++s) {
                        counts[s] += slot_counts[s];
                        total += slot_counts[s];
                    }
                }
                an.cache.cached = decide_cache(catalog, total > 0.0 ? counts : priors, an.cache.capacity);
                for (ServiceId s : an.cache.cached) {
                    report.decisions.push_back({t.index, "cache", static_cast<std::int64_t>(an.id.value),
                                                static_cast<std::int64_t>(s.value), "cached", 0.0});
                }
            }
            an.request_window.emplace_back(catalog.size(), 0.0);
            while (an.request_window.size() > cfg.edge.stats_window) {
                an.request_window.pop_front();
            }
        }

        std::vector<double> request_probs = priors;
        double prior_total = 0.0;
        for (double p : priors) {
            prior_total += p;
        }
        for (double& p : request_probs) {
            p = prior_total > 0.0 ? p / prior_total : 1.0 / static_cast<double>(priors.size());
        }
        for (auto& v : vehicles) {
            const bool arrives = v.edge_rng.bernoulli(cfg.edge.task_prob);
            const std::size_t service = v.edge_rng.categorical(request_probs);
            if (!arrives) {
                continue;
            }
            AccessNode& an = ans[v.home.index()];
            an.request_window.back()[service] += 1.0;
            const Task task{catalog[service].id, v.id, cfg.edge.input_bits, t.index};
            EdgeRates rates = cfg.edge.rates;
            rates.cpu_rate = cfg.ans[an.id.index()].cpu_rate;
            const OffloadDecision d =
                decide_offload(cfg.edge.policy, task, catalog[service], an.cache, an.ledger, an.queued_cycles, rates);
            auto& ec = report.edge;
            ++ec.tasks;
            if (d.target == OffloadTarget::local) {
                ++ec.local;
                an.queued_cycles += catalog[service].cycles;
            } else {
                ++ec.cloud;
                ec.forced_cloud += d.forced ? 1 : 0;
            }
            ec.latency_total_s += d.latency;
            ec.energy_total_j += d.energy;
            an.edge_energy_slot += d.energy;
            report.decisions.push_back({t.index, "offload", static_cast<std::int64_t>(an.id.value),
                                        static_cast<std::int64_t>(v.id.value),
                                        d.target == OffloadTarget::local ? "local" : "cloud", d.latency});
        }

        for (auto& an : ans) {
            const double capacity = cfg.ans[an.id.index()].cpu_rate * cfg.slot_duration;
            an.queued_cycles = std::max(0.0, an.queued_cycles - capacity);
            if (cfg.edge.policy == OffloadPolicy::drift_plus_penalty) {
                settle_slot(an.ledger, an.edge_energy_slot);
            }
            report.energy_per_an(static_cast<Eigen::Index>(t.index), static_cast<Eigen::Index>(an.id.index())) +=
                an.edge_energy_slot;
        }
    }

    void cipher_phase(const SlotTime& t)
    {
        if (!cfg.cipher.enabled) {
            return;
        }
        auto& cc = report.cipher;
        for (auto& v : vehicles) {
            if (!keyring.contains(v.id)) {
                keyring.issue(v.id, master_rng);
            }
            if (!v.session || v.session_an != v.home) {
                v.session = start_session(v.id, v.home, cipher_rng);
                v.session_an = v.home;
                v.session_resyncs = 0;
                v.compromised = false;
                ++cc.sessions;
                if (!v.vehicle_fp) {
                    v.vehicle_fp.emplace(v.id, cfg.cipher.window);
                    v.an_fp.emplace(v.id, cfg.cipher.window);
                }
            }
            v.an_fp->push(v.association);
            AssociationVector seen = v.association;
            for (auto& bit : seen.bits) {
                if (bit && v.divergence_rng.bernoulli(cfg.cipher.association_loss_prob)) {
                    bit = 0;
                }
            }
            v.vehicle_fp->push(std::move(seen));

            if ((t.index + 1) % cfg.cipher.window != 0) {
                continue;
            }
            ++cc.checks;
            const BitString message = BitString::random(cfg.cipher.message_bits, cipher_rng);
            const Digest256 check = integrity_check(*v.vehicle_fp, v.session->vehicle.counter);
            const BitString ct = encrypt(v.session->vehicle, *v.vehicle_fp, message);
            if (verify_key(*v.an_fp, check, v.session->an) == KeyCheck::ok) {
                if (decrypt(v.session->an, *v.an_fp, ct) == message) {
                    ++cc.roundtrip_ok;
                } else {
                    ++cc.roundtrip_failures;
                }
                continue;
            }
            ++cc.resyncs;
            if (++v.session_resyncs > cfg.cipher.max_resync && !v.compromised) {
                v.compromised = true;
                ++cc.compromised_sessions;
            }
            resync(keyring.at(v.id), *v.an_fp, *v.vehicle_fp, v.session->vehicle, v.session->an);
            const BitString retry = encrypt(v.session->vehicle, *v.vehicle_fp, message);
            if (decrypt(v.session->an, *v.an_fp, retry) == message) {
                ++cc.recovered;
            } else {
                ++cc.roundtrip_failures;
            }
        }
    }

    void metrics_phase(const SlotTime& t)
    {
        if (t.index + 1 == cfg.horizon) {
            report.edge.final_deficit.clear();
            for (const auto& an : ans) {
                report.edge.final_deficit.push_back(an.ledger.deficit);
            }
        }
    }
};

Simulation::Simulation(ScenarioConfig config)
    : world_(std::make_unique<World>(std::move(config)))
{
}

Simulation::~Simulation() = default;

bool Simulation::finished() const noexcept
{
    return world_->engine.now().index >= world_->cfg.horizon;
}

SlotTime Simulation::advance_slot()
{
    if (finished()) {
        throw std::logic_error("simulation horizon reached");
    }
    return world_->engine.advance_slot();
}

MetricsReport Simulation::run()
{
    while (!finished()) {
        advance_slot();
    }
    return world_->report;
}

const SlotEngine& Simulation::engine() const noexcept
{
    return world_->engine;
}

const ScenarioConfig& Simulation::config() const noexcept
{
    return world_->cfg;
}

const MetricsReport& Simulation::report() const noexcept
{
    return world_->report;
}

void Simulation::on_slices(std::function<void(std::uint64_t, const SliceAssignment&)> observer)
{
    world_->slice_observers.push_back(std::move(observer));
}

std::vector<CellId> Simulation::vehicle_cells() const
{
    std::vector<CellId> out;
    for (const auto& v : world_->vehicles) {
        out.push_back(v.mobility.cell);
    }
    return out;
}

std::vector<Key256> Simulation::secret_material() const
{
    std::vector<Key256> out;
    for (const auto& v : world_->vehicles) {
        if (world_->keyring.contains(v.id)) {
            out.push_back(world_->keyring.at(v.id));
        }
        if (v.session) {
            out.push_back(v.session->vehicle.key);
            out.push_back(v.session->an.key);
        }
    }
    return out;
}

MetricsReport run(const ScenarioConfig& config)
{
    Simulation sim(config);
    return sim.run();
}

} // namespace sdvec
