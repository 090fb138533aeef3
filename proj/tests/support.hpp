#pragma once

#include "recon_net/recon_net.hpp"

#include <cstdint>
#include <vector>

namespace support {

inline recon_net::DirectedNetwork random_network(std::size_t n, double p, recon_net::Rng& rng) {
    recon_net::DirectedNetwork net(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && rng.uniform() < p) net.set_link(i, j);
    return net;
}

inline recon_net::FitnessData unit_fitness(std::size_t n) {
    recon_net::FitnessData f;
    f.assets.assign(n, 1.0);
    f.liabilities.assign(n, 1.0);
    return f;
}

inline recon_net::FitnessData lognormal_fitness(std::size_t n, double sigma, std::uint64_t seed) {
    return recon_net::synth_fitness(n, {recon_net::DistributionSpec::Kind::lognormal, 0.0, sigma}, seed);
}

inline std::vector<std::size_t> random_permutation(std::size_t n, recon_net::Rng& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.next() % i]);
    return perm;
}

}  // namespace support
