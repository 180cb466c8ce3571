#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gucnet/matrix.hpp"
#include "gucnet/rng.hpp"

namespace gucnet {

// A labeled feature table: N rows of D features plus one class id per row.
struct DatasetBundle {
    Matrix2D features; // N x D
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    std::string name;
};

// Throws ContractError if labels are out of range, a class is empty, or the
// label count does not match the feature rows.
void validate_bundle(const DatasetBundle& b);

enum class BinningKind { Identity, Shuffled };

// Assignment of guide clusters to experimental classes: guide label c is
// trained against experimental class mapping[c]. Always a bijection on
// [0, C) — co-binning relabels classes, it never merges them.
struct CoBinning {
    std::vector<std::size_t> mapping;
    BinningKind kind = BinningKind::Identity;
    std::uint64_t seed = 0; // Shuffled only
};

struct SplitView {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    double ratio = 0.7;
};

// Synthetic stand-in for precomputed backbone features: C isotropic Gaussian
// blobs whose means are drawn uniformly on the radius-`center_radius` sphere.
//
// sigma is a dimension-free clutter dial. Means on the sphere sit at typical
// distance sqrt(2)*center_radius from each other, so the generator uses a
// per-coordinate noise std of sigma * center_radius / 2; two typical classes
// then overlap with pairwise Bayes error Phi(-sqrt(2)/sigma) regardless of D.
// sigma near 0 gives cleanly separable blobs; sigma near 1 gives heavily
// cluttered ones.
DatasetBundle gen_gaussian_mixture(std::size_t C, std::size_t D,
                                   std::size_t n_per_class,
                                   double center_radius, double sigma,
                                   std::uint64_t seed);

// GFV1 feature file: "GFV1", then little-endian u32 N, u32 D, u32 C, then N
// u32 labels, then N*D doubles row-major. Round-trips bit-exactly.
void save_gfv1(const DatasetBundle& b, const std::string& path);
DatasetBundle load_gfv1(const std::string& path);

// Comma-separated numeric rows; lines starting with '#' are skipped. The
// label column holds non-negative integers; the remaining columns become
// features in their original order. C = max label + 1.
DatasetBundle load_csv(const std::string& path, std::size_t label_column);

// Per-class split at `ratio` (train fraction), deterministic per seed. Every
// class must have at least 2 samples, and both sides of the split stay
// non-empty for every class. The assignment depends only on sample positions,
// never on class numbering, so relabeling classes leaves the index sets
// unchanged.
SplitView stratified_split(const DatasetBundle& b, double ratio,
                           std::uint64_t seed);

CoBinning make_cobinning(std::size_t C, BinningKind kind, std::uint64_t seed);

struct PairedBatch {
    std::vector<std::size_t> x_indices;
    std::vector<std::size_t> x_labels;
    std::vector<std::size_t> y_indices;
    std::vector<std::size_t> y_labels; // already remapped through the binning
};

// Batch pairing for texture training: each step yields up to half_batch
// X-training samples (a fresh uniform shuffle every epoch, every index
// visited exactly once) plus an equally sized draw from the Y-training
// stream with labels remapped through the co-binning. The Y stream cycles:
// when fewer than the needed samples remain it reshuffles and starts over.
class PairedBatches {
public:
    PairedBatches(const DatasetBundle& x, const SplitView& x_split,
                  const DatasetBundle& y, const SplitView& y_split,
                  const CoBinning& binning, std::size_t half_batch,
                  std::uint64_t seed);

    // Reshuffles the X order; call before each pass.
    void begin_epoch();

    // Fills `out` with the next paired batch; false once the epoch's X
    // indices are exhausted.
    bool next(PairedBatch& out);

    std::size_t steps_per_epoch() const;

private:
    const DatasetBundle* x_;
    const DatasetBundle* y_;
    std::vector<std::size_t> x_order_;
    std::vector<std::size_t> y_order_;
    std::vector<std::size_t> mapping_;
    std::size_t half_batch_;
    std::size_t x_cursor_ = 0;
    std::size_t y_cursor_ = 0;
    Rng64 rng_x_;
    Rng64 rng_y_;
};

} // namespace gucnet
