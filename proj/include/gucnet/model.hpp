#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gucnet/matrix.hpp"
#include "gucnet/prototypes.hpp"
#include "gucnet/rng.hpp"

namespace gucnet {

struct DenseLayer {
    Matrix2D W;            // fan_in x fan_out
    std::vector<double> b; // fan_out
};

// Feature tower: (linear -> ReLU -> dropout) for every hidden layer, then a
// final linear to the K-dimensional latent with no activation and no dropout.
struct FcnTower {
    std::vector<std::size_t> dims;  // [D_in, hidden..., K]
    std::vector<DenseLayer> layers; // dims.size() - 1 entries
    double dropout = 0.5;           // hidden layers only
};

// Shared classifier over the unified latent space: a single linear K->C whose
// softmax produces class probabilities.
struct ClassifierHead {
    Matrix2D W;            // K x C
    std::vector<double> b; // C
};

enum class Mode { Baseline, Prototype, Texture };

struct GucnetModel {
    Mode mode = Mode::Baseline;
    FcnTower tower_x;
    std::optional<FcnTower> tower_y;        // texture mode only
    ClassifierHead head;                    // shared by both towers
    std::optional<PrototypeSet> prototypes; // prototype mode only
};

// Weights uniform in +-sqrt(6/fan_in), biases zero, drawn row-major from rng.
FcnTower make_tower(const std::vector<std::size_t>& dims, double dropout,
                    Rng64& rng);

// The head starts at exactly zero (weights and biases). A zero head is
// symmetric under class renumbering, so relabeling classes together with
// their prototypes provably cannot change any metric; the first optimizer
// steps break the symmetry using the labels alone.
ClassifierHead make_head(std::size_t latent_dim, std::size_t num_classes);

// Everything the backward pass needs from a forward pass. `masks` holds the
// inverted-dropout multipliers (0 or 1/(1-p)) actually applied, so backward
// reuses the exact masks of its forward.
struct TowerCache {
    Matrix2D input;
    std::vector<Matrix2D> pre;   // pre-activation per layer
    std::vector<Matrix2D> act;   // post relu+dropout per layer; back() = latent
    std::vector<Matrix2D> masks; // per hidden layer, train mode only
    bool train_mode = false;
};

// Runs the tower on a batch. In train mode, dropout masks are drawn from rng
// (inverted dropout: kept units scaled by 1/(1-p)); in eval mode the pass is
// deterministic and rng may be null. If cache is non-null it is filled for a
// later backward pass.
Matrix2D forward_latent(const FcnTower& tower, const Matrix2D& x, Rng64* rng,
                        bool train_mode, TowerCache* cache);

// Eval-mode forward without bookkeeping.
Matrix2D forward_latent_eval(const FcnTower& tower, const Matrix2D& x);

Matrix2D head_logits(const ClassifierHead& head, const Matrix2D& latent);

struct LossGrad {
    double loss = 0.0;
    Matrix2D grad; // w.r.t. the first argument of the loss
};

// Mean over the batch of -log softmax(logits)[label].
// grad = (softmax - onehot) / batch, w.r.t. the logits.
LossGrad cross_entropy_loss(const Matrix2D& logits,
                            const std::vector<std::size_t>& labels);

// Mean over all batch*K entries of |latent - prototype_of_label|.
// grad = sign(latent - prototype) / (batch*K), with sign(0) = 0.
LossGrad matching_loss(const Matrix2D& latent,
                       const std::vector<std::size_t>& labels,
                       const PrototypeSet& g);

// ce + alpha * ml. Requires alpha < 1.0 so the cross-entropy term keeps
// the upper hand.
double total_loss(double ce, double ml, double alpha);

struct TowerGrads {
    std::vector<DenseLayer> layers; // same shapes as the tower's parameters
};

struct HeadGrads {
    Matrix2D W;
    std::vector<double> b;
};

struct HeadBackward {
    HeadGrads grads;
    Matrix2D dlatent; // dlogits propagated through the head
};

HeadBackward head_backward(const ClassifierHead& head, const Matrix2D& latent,
                           const Matrix2D& dlogits);

// Backprop through a tower from a gradient at the latent (the final linear
// output). Dropout masks recorded in the cache are reused.
TowerGrads tower_backward(const FcnTower& tower, const TowerCache& cache,
                          const Matrix2D& dlatent);

// Model checkpoint: magic "GUCW", version, mode, class count, per-tower layer
// dims, then every parameter as raw little-endian 64-bit floats in
// declaration order. Prototypes and optimizer state are not part of a
// checkpoint; evaluation needs neither.
void save_gucw(const GucnetModel& model, const std::string& path);
GucnetModel load_gucw(const std::string& path);

} // namespace gucnet
