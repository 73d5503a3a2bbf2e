// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "roadnet.hpp"

namespace tsc {

struct GridOptions {
  int rows = 1;
  int cols = 1;
  // lane counts are drawn uniformly per road; roads into signalised
  // intersections need one dedicated lane per turn, so min_lanes >= 3
  int min_lanes = 3;
  int max_lanes = 3;
  double min_length_m = 300.0;
  double max_length_m = 300.0;
  // demand, per entry road
  double vehicles_per_hour = 300.0;
  double demand_start_s = 0.0;
  double demand_duration_s = 3600.0;
  double left_ratio = 0.2;
  double right_ratio = 0.2;
  int routes_per_entry = 4;
  // fraction of a flow's headway used as per-vehicle entry jitter
  double jitter_fraction = 0.5;
  SimSettings sim;
  std::uint64_t seed = 0;
};

// Rectangular grid of rows*cols real 4-arm intersections ringed by virtual
// intersections, with random routes. Same options give the same bytes.
std::string generate_grid(const GridOptions& options);

}  // namespace tsc
