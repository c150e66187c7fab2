// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/threads.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace fovea {

int configure_threads_from_env() {
  if (const char* env = std::getenv("FOVEA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
  return omp_get_max_threads();
}

}  // namespace fovea
