#pragma once

#include <cstdint>
#include <vector>

#include "gucnet/matrix.hpp"

namespace gucnet {

// Hamming-separability levels for the multi-hot construction. HMax uses the
// widest disjoint blocks that fit (m = floor(K/C), distance 2m); HHalf halves
// the block width; H2 degenerates to one-hot (distance 2).
enum class HammingLevel { HMax, HHalf, H2 };

enum class PrototypeKind { MultiHotBlock, RandomUnit };

// The guide matrix g: one fixed K-dimensional prototype per class. Latents of
// class i are pulled toward row i by the matching loss, so the geometry of the
// rows (their mutual Hamming distance, or lack of structure for the random
// variant) is the experimental variable of the separability ablation.
struct PrototypeSet {
    std::size_t num_classes = 0; // C
    std::size_t dim = 0;         // K
    Matrix2D vectors;            // C x K
    PrototypeKind kind = PrototypeKind::MultiHotBlock;
    std::size_t ones_per_prototype = 0; // m, MultiHotBlock only
    std::uint64_t seed = 0;             // RandomUnit only
};

// Prototype i has ones exactly at columns [i*m, (i+1)*m) and zeros elsewhere;
// supports are pairwise disjoint, so every pair of prototypes differs in
// exactly 2m positions. Columns beyond C*m stay zero in every prototype,
// which keeps the pairwise distance exactly constant.
// Requires K >= C and 1 <= m <= floor(K/C).
PrototypeSet make_multi_hot(std::size_t C, std::size_t K, std::size_t m);

// The three block-prototype conditions of the separability ablation,
// expressed as choices of m.
PrototypeSet make_hmax_variant(std::size_t C, std::size_t K,
                               HammingLevel level);

// C*K entries i.i.d. uniform in [0,1): prototypes with no designed
// separation, giving highly variable inter-prototype distances.
PrototypeSet make_random_unit(std::size_t C, std::size_t K,
                              std::uint64_t seed);

// Pairwise Hamming distance matrix (CxC counts). Only defined for
// MultiHotBlock sets; RandomUnit entries are not binary.
std::vector<std::vector<std::size_t>> pairwise_hamming(const PrototypeSet& p);

} // namespace gucnet
