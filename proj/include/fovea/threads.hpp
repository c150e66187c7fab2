// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace fovea {

// Applies the FOVEA_THREADS cap (when set and positive) to the OpenMP pool
// and returns the resulting worker count.
int configure_threads_from_env();

}  // namespace fovea
