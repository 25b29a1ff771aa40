#pragma once

#include <vector>

#include "gransformer/common.hpp"
#include "gransformer/graph.hpp"

namespace gransformer {

// rows x cols lattice; node (r, c) is r * cols + c.
Graph grid_graph(int rows, int cols);

// Two dense blocks joined by sparse cross edges. A random bridge is added
// when the cross draw comes up empty; resamples until connected.
Graph two_community_graph(int n1, int n2, double p_in, double p_out, Rng& rng);

// Alternating grids and two-community graphs with sizes in [n_lo, n_hi].
// n_lo must be at least 6 so both families have room.
std::vector<Graph> synthetic_set(int count, int n_lo, int n_hi, Rng& rng);

}  // namespace gransformer
