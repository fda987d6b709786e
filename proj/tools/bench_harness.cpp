// SPDX-License-Identifier: Apache-2.0
//
// Compares the OpenMP experiment runner against the serial reference:
// wall time for both, speedup, and a byte-identity check of the CSV
// output (the parallel runner must not change results).

#include <chrono>
#include <cstdio>

#include "noma/experiments.hpp"

int main(int argc, char** argv) {
    int trials = argc > 1 ? std::atoi(argv[1]) : 40;

    noma::ExperimentSpec spec;
    spec.scheme = noma::Scheme::noma_sdr;
    spec.sweep = noma::SweepVariable::target_rate;
    spec.sweep_values = {1.0, 2.0, 3.0};
    spec.trials = trials;
    spec.system.num_users = 3;
    spec.system.num_antennas = 3;
    spec.system.noise_variance = 0.01;
    spec.system.rng_seed = 7;
    spec.channel.pathloss_exponent = 0.0;
    spec.eval_samples = 0;

    using clock = std::chrono::steady_clock;

    const auto t0 = clock::now();
    const noma::ResultTable serial = noma::run_experiment(spec, false);
    const auto t1 = clock::now();
    const noma::ResultTable parallel = noma::run_experiment(spec, true);
    const auto t2 = clock::now();

    const double serial_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double parallel_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    const bool identical = noma::to_csv(serial) == noma::to_csv(parallel);

    std::printf("tasks: %zu (%d trials x %zu sweep points)\n",
                spec.sweep_values.size() * static_cast<std::size_t>(trials), trials,
                spec.sweep_values.size());
    std::printf("serial reference: %8.1f ms\n", serial_ms);
    std::printf("openmp runner:    %8.1f ms\n", parallel_ms);
    std::printf("speedup:          %8.2fx\n", serial_ms / parallel_ms);
    std::printf("outputs byte-identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
