// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Umbrella header for the promptpool library: prompt-guided compression of
// visual token grids. Pulls in the tensor container and npy file I/O, the
// alignment-score kernel, score-weighted 3-D pooling with exact adjoints,
// positional-embedding context extension, and the certificate-length
// redundancy metric.

#include "promptpool/alignment.hpp"
#include "promptpool/context_extension.hpp"
#include "promptpool/npy.hpp"
#include "promptpool/parallel.hpp"
#include "promptpool/pooling.hpp"
#include "promptpool/redundancy.hpp"
#include "promptpool/tensor.hpp"
