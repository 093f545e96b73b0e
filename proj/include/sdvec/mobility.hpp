#pragma once

#include "sdvec/rng.hpp"
#include "sdvec/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdvec {

/// Road cells (2-D centers in meters) with directed adjacency.
struct RoadGraph {
    std::vector<Eigen::Vector2d> centers;
    std::vector<std::vector<std::size_t>> adjacency;

    std::size_t cell_count() const noexcept { return centers.size(); }

    bool adjacent(std::size_t from, std::size_t to) const
    {
        for (std::size_t c : adjacency[from]) {
            if (c == to) {
                return true;
            }
        }
        return false;
    }
};

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws ModelError if an edge references a missing cell or a cell has no outgoing edge.
void check_road_graph(const RoadGraph& graph);

template <typename Scalar>
using TransitionMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Markov jump model over road cells: one row-stochastic transition matrix
/// per velocity class, rows indexed by the current cell.
template <typename Scalar = double>
class MarkovJumpModel {
public:
    using Matrix = TransitionMatrix<Scalar>;

    static constexpr double kRowTolerance = 1e-12;

    MarkovJumpModel(RoadGraph graph, std::vector<Matrix> per_class)
        : graph_(std::move(graph))
        , classes_(std::move(per_class))
    {
        check_road_graph(graph_);
        if (classes_.empty()) {
            throw ModelError("transition model needs at least one velocity class");
        }
        for (std::size_t k = 0; k < classes_.size(); ++k) {
            check_class(k);
        }
    }

    const RoadGraph& graph() const noexcept { return graph_; }
    std::size_t cell_count() const noexcept { return graph_.cell_count(); }
    std::size_t class_count() const noexcept { return classes_.size(); }

    const Matrix& transition(std::size_t velocity_class) const { return classes_.at(velocity_class); }

    /// Replaces one class's matrix; the stochastic-matrix check is re-run.
    void set_transition(std::size_t velocity_class, Matrix m)
    {
        Matrix old = std::move(classes_.at(velocity_class));
        classes_[velocity_class] = std::move(m);
        try {
            check_class(velocity_class);
        } catch (...) {
            classes_[velocity_class] = std::move(old);
            throw;
        }
    }

private:
    void check_class(std::size_t k) const
    {
        const Matrix& m = classes_[k];
        const auto n = static_cast<Eigen::Index>(graph_.cell_count());
        if (m.rows() != n || m.cols() != n) {
            throw ModelError("velocity class " + std::to_string(k) + ": transition matrix must be "
                             + std::to_string(n) + "x" + std::to_string(n));
        }
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = 0; c < n; ++c) {
                const double p = static_cast<double>(m(r, c));
                if (!std::isfinite(p) || p < 0.0) {
                    throw ModelError("velocity class " + std::to_string(k) + ", row " + std::to_string(r)
                                     + ": negative or non-finite probability");
                }
                if (p > 0.0 && !graph_.adjacent(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) {
                    throw ModelError("velocity class " + std::to_string(k) + ", row " + std::to_string(r)
                                     + ": probability on non-adjacent cell " + std::to_string(c));
                }
            }
            const double sum = static_cast<double>(m.row(r).sum());
            if (std::abs(sum - 1.0) > kRowTolerance) {
                throw ModelError("velocity class " + std::to_string(k) + ", row " + std::to_string(r)
                                 + ": sums to " + std::to_string(sum) + ", expected 1");
            }
        }
    }

    RoadGraph graph_;
    std::vector<Matrix> classes_;
};

struct MobilityState {
    CellId cell;
    std::size_t velocity_class = 0;
};

/// One Markov jump: next cell drawn from the row of (cell, velocity_class).
template <typename Scalar>
MobilityState advance(const MobilityState& state, const MarkovJumpModel<Scalar>& model, RngStream& rng)
{
    const auto& row = model.transition(state.velocity_class).row(static_cast<Eigen::Index>(state.cell.index()));
    const Eigen::VectorXd probs = row.transpose().template cast<double>();
    const std::size_t next = rng.categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())));
    return MobilityState{CellId(next), state.velocity_class};
}

} // namespace sdvec
