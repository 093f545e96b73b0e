#include "sdvec/mobility.hpp"

namespace sdvec {

void check_road_graph(const RoadGraph& graph)
{
    if (graph.centers.empty()) {
        throw ModelError("road graph has no cells");
    }
    if (graph.adjacency.size() != graph.centers.size()) {
        throw ModelError("road graph adjacency must list every cell");
    }
    for (std::size_t c = 0; c < graph.adjacency.size(); ++c) {
        if (graph.adjacency[c].empty()) {
            throw ModelError("road cell " + std::to_string(c) + " has no outgoing edge");
        }
        for (std::size_t to : graph.adjacency[c]) {
            if (to >= graph.centers.size()) {
                throw ModelError("road cell " + std::to_string(c) + " links to missing cell " + std::to_string(to));
            }
        }
    }
}

} // namespace sdvec
