#pragma once

#include <chrono>
#include <vector>

#include "hopc/benchmark.hpp"

namespace bench {

struct Dataset {
  hopc::PipelineParams params;
  std::vector<hopc::TaggedFeatures> samples;
};

struct Timing {
  double features = 0.0;
};

inline Dataset build(Timing& timing) {
  const auto t0 = std::chrono::steady_clock::now();
  Dataset d;
  d.params = hopc::synthetic_benchmark_params();
  d.samples = hopc::featurize(hopc::synthetic_benchmark(), d.params);
  timing.features = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

}  // namespace bench
