#pragma once

#include <string>
#include <vector>

#include "characterize.hpp"
#include "config.hpp"

namespace spdsim {

struct SweepRow {
  double temperature;
  double v_ex;
  std::uint64_t seed;
  CalibrationReport report;
};

// Grid run over sweep.temperature_k (outer) x sweep.v_ex (inner). Each point
// gets a lit run and a companion dark run; the point seed is the base seed
// XOR the point index, so any point can be reproduced standalone. jobs <= 0
// uses the hardware thread count. Row order is independent of jobs.
std::vector<SweepRow> run_sweep(const Config& cfg, int jobs);

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepRow>& rows);

}  // namespace spdsim
