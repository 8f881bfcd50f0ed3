#pragma once

namespace kens::parallel {

// Caps OpenMP worker count for the kernels. 0 restores the runtime default.
void set_threads(int n);
int threads();

// Deterministic mode routes every kernel through its serial reference path.
void set_deterministic(bool on);
bool deterministic();

// True when the parallel kernel variants should run.
bool enabled();

}  // namespace kens::parallel
