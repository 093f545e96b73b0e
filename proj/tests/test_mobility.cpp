#include "sdvec/mobility.hpp"

#include <gtest/gtest.h>

using namespace sdvec;

namespace {

RoadGraph ring(std::size_t n)
{
    RoadGraph g;
    for (std::size_t i = 0; i < n; ++i) {
        g.centers.emplace_back(static_cast<double>(i) * 10.0, 0.0);
        g.adjacency.push_back({i, (i + 1) % n});
    }
    return g;
}

Eigen::MatrixXd ring_matrix(std::size_t n, double stay)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = stay;
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>((i + 1) % n)) += 1.0 - stay;
    }
    return m;
}

} // namespace

TEST(MarkovJumpModel, AcceptsStochasticRowsOnAdjacency)
{
    EXPECT_NO_THROW(MarkovJumpModel<double>(ring(4), {ring_matrix(4, 0.3), ring_matrix(4, 0.9)}));
}

TEST(MarkovJumpModel, RejectsRowNotSummingToOne)
{
    Eigen::MatrixXd m = ring_matrix(3, 0.5);
    m(1, 1) = 0.4;
    try {
        MarkovJumpModel<double>(ring(3), {m});
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    }
}

TEST(MarkovJumpModel, RejectsMassOnNonAdjacentCell)
{
    Eigen::MatrixXd m = ring_matrix(4, 0.5);
    m(0, 1) = 0.25;
    m(0, 2) = 0.25;
    EXPECT_THROW(MarkovJumpModel<double>(ring(4), {m}), ModelError);
}

TEST(MarkovJumpModel, RejectsNegativeEntries)
{
    Eigen::MatrixXd m = ring_matrix(2, 0.5);
    m(0, 0) = 1.5;
    m(0, 1) = -0.5;
    EXPECT_THROW(MarkovJumpModel<double>(ring(2), {m}), ModelError);
}

TEST(MarkovJumpModel, SetTransitionKeepsOldMatrixOnFailure)
{
    MarkovJumpModel<double> model(ring(3), {ring_matrix(3, 0.5)});
    Eigen::MatrixXd bad = ring_matrix(3, 0.5);
    bad(2, 2) = 0.9;
    EXPECT_THROW(model.set_transition(0, bad), ModelError);
    EXPECT_DOUBLE_EQ(model.transition(0)(2, 2), 0.5);
}

TEST(RoadGraph, DeadEndCellRejected)
{
    RoadGraph g = ring(3);
    g.adjacency[2].clear();
    EXPECT_THROW(check_road_graph(g), ModelError);
}

TEST(Advance, EmpiricalTransitionsMatchRow)
{
    MarkovJumpModel<double> model(ring(5), {ring_matrix(5, 0.25)});
    RngStream rng(4, stream_id(StreamKind::mobility, 0));
    int moved = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const auto next = advance(MobilityState{CellId(2u), 0}, model, rng);
        ASSERT_TRUE(next.cell == CellId(2u) || next.cell == CellId(3u));
        moved += next.cell == CellId(3u);
    }
    EXPECT_NEAR(static_cast<double>(moved) / n, 0.75, 0.01);
}

TEST(Advance, VelocityClassSelectsMatrix)
{
    MarkovJumpModel<double> model(ring(3), {ring_matrix(3, 1.0), ring_matrix(3, 0.0)});
    RngStream rng(1, 1);
    EXPECT_EQ(advance(MobilityState{CellId(0u), 0}, model, rng).cell, CellId(0u));
    EXPECT_EQ(advance(MobilityState{CellId(0u), 1}, model, rng).cell, CellId(1u));
}

TEST(MarkovJumpModel, FloatScalarInstantiates)
{
    Eigen::MatrixXf m = ring_matrix(3, 0.5).cast<float>();
    MarkovJumpModel<float> model(ring(3), {m});
    RngStream rng(1, 1);
    EXPECT_LT(advance(MobilityState{CellId(0u), 0}, model, rng).cell.index(), 2u);
}
