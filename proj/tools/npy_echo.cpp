// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

// Round-trips a tensor file: reads SRC, writes it to DST unchanged. Used by
// the interoperability tests to prove that files produced by this library
// survive a load/store cycle and stay readable by third-party tooling.

#include <cstdio>
#include <exception>

#include "promptpool/npy.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: npy_echo SRC DST\n");
        return 2;
    }
    try {
        promptpool::npy::write_tensor(promptpool::npy::read_tensor(argv[1]), argv[2]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
