#include "gucnet/prototypes.hpp"

#include <algorithm>

#include "gucnet/errors.hpp"
#include "gucnet/rng.hpp"

namespace gucnet {

PrototypeSet make_multi_hot(std::size_t C, std::size_t K, std::size_t m) {
    if (C == 0) {
        throw ContractError("make_multi_hot: need at least one class");
    }
    if (K < C) {
        throw ContractError("make_multi_hot: K=" + std::to_string(K) +
                            " must be >= C=" + std::to_string(C));
    }
    const std::size_t m_max = K / C;
    if (m < 1 || m > m_max) {
        throw ContractError(
            "make_multi_hot: m=" + std::to_string(m) +
            " does not admit disjoint supports (need 1 <= m <= " +
            std::to_string(m_max) + " for C=" + std::to_string(C) +
            ", K=" + std::to_string(K) + ")");
    }
    PrototypeSet p;
    p.num_classes = C;
    p.dim = K;
    p.kind = PrototypeKind::MultiHotBlock;
    p.ones_per_prototype = m;
    p.vectors = Matrix2D(C, K, 0.0);
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = i * m; j < (i + 1) * m; ++j) {
            p.vectors(i, j) = 1.0;
        }
    }
    return p;
}

PrototypeSet make_hmax_variant(std::size_t C, std::size_t K,
                               HammingLevel level) {
    if (C == 0) {
        throw ContractError("make_hmax_variant: need at least one class");
    }
    if (K < C) {
        throw ContractError("make_hmax_variant: K=" + std::to_string(K) +
                            " must be >= C=" + std::to_string(C));
    }
    const std::size_t m_max = K / C;
    std::size_t m = 1;
    switch (level) {
    case HammingLevel::HMax:
        m = m_max;
        break;
    case HammingLevel::HHalf:
        m = std::max<std::size_t>(1, m_max / 2);
        break;
    case HammingLevel::H2:
        m = 1;
        break;
    }
    return make_multi_hot(C, K, m);
}

PrototypeSet make_random_unit(std::size_t C, std::size_t K,
                              std::uint64_t seed) {
    if (K < 1) {
        throw ContractError("make_random_unit: K must be >= 1");
    }
    PrototypeSet p;
    p.num_classes = C;
    p.dim = K;
    p.kind = PrototypeKind::RandomUnit;
    p.seed = seed;
    p.vectors = Matrix2D(C, K);
    Rng64 rng(seed);
    for (double& v : p.vectors.data) {
        v = rng.uniform();
    }
    return p;
}

std::vector<std::vector<std::size_t>> pairwise_hamming(const PrototypeSet& p) {
    if (p.kind != PrototypeKind::MultiHotBlock) {
        throw ContractError(
            "pairwise_hamming: only defined for MultiHotBlock prototype sets");
    }
    const std::size_t C = p.num_classes;
    std::vector<std::vector<std::size_t>> d(C, std::vector<std::size_t>(C, 0));
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = i + 1; j < C; ++j) {
            std::size_t count = 0;
            for (std::size_t k = 0; k < p.dim; ++k) {
                if (p.vectors(i, k) != p.vectors(j, k)) {
                    ++count;
                }
            }
            d[i][j] = count;
            d[j][i] = count;
        }
    }
    return d;
}

} // namespace gucnet
