#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "gucnet/data.hpp"
#include "gucnet/model.hpp"

namespace gucnet {

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct SgdParams {
    double momentum = 0.0;
};

// How the prototype objective's two losses are applied: PerBatch alternates
// whole optimizer steps between grad(L_ce) (even batches) and grad(alpha*L_ml)
// (odd batches); Joint takes one step on grad(L_ce + alpha*L_ml) per batch.
enum class Alternation { PerBatch, Joint };

struct TrainConfig {
    Mode mode = Mode::Baseline;
    int epochs = 50;
    double learning_rate = 0.001;
    std::variant<AdamParams, SgdParams> optimizer = AdamParams{};
    std::size_t batch_size = 32; // per-stream half batch in texture mode
    double alpha = 0.01;
    Alternation alternation = Alternation::PerBatch;
    std::uint64_t seed = 1;
    std::size_t latent_dim = 128; // K
    std::vector<std::size_t> hidden_dims = {1024, 512};
    double dropout = 0.5;
    double split_ratio = 0.7;
};

// Throws ConfigError on out-of-range fields (alpha >= 1, epochs < 1, ...).
void validate(const TrainConfig& cfg);

// First/second-moment accumulators (Adam) or velocity (SGD) for one
// parameter tensor.
struct MomentPair {
    std::vector<double> m;
    std::vector<double> v; // unused for SGD
};

// Bias-corrected Adam update for one tensor of n values. `t` is the 1-based
// global step count shared by every tensor of the model.
void adam_step(double* params, const double* grads, std::size_t n,
               MomentPair& state, std::uint64_t t, double lr,
               const AdamParams& hp);

// Matrix-shaped convenience overload.
void adam_step(Matrix2D& params, const Matrix2D& grads, MomentPair& state,
               std::uint64_t t, double lr, const AdamParams& hp);

// Momentum SGD update for one tensor.
void sgd_step(double* params, const double* grads, std::size_t n,
              MomentPair& state, double lr, const SgdParams& hp);

// Gradients for every parameter tensor of a model, in declaration order.
// An absent tower_y mirrors the model; a matching-loss step passes exact
// zeros for the head (the matching loss does not touch it).
struct ModelGrads {
    TowerGrads tower_x;
    std::optional<TowerGrads> tower_y;
    HeadGrads head;
};

ModelGrads make_zero_grads(const GucnetModel& model);

// One optimizer state covering every tensor of the model, stepped as a whole:
// each call advances the shared step counter once and updates all tensors
// with whatever gradients the active objective produced.
class ModelOptimizer {
public:
    ModelOptimizer(GucnetModel* model, const TrainConfig& cfg);
    void step(const ModelGrads& grads);
    std::uint64_t steps() const { return step_; }

private:
    GucnetModel* model_;
    double lr_;
    std::variant<AdamParams, SgdParams> hp_;
    std::vector<MomentPair> slots_;
    std::uint64_t step_ = 0;
};

struct EpochMetrics {
    int epoch = 0; // 1-based
    double ce_loss = 0.0;
    std::optional<double> ml_loss; // prototype mode only
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::uint64_t wall_ms = 0;
};

struct TrainResult {
    GucnetModel model;
    std::vector<EpochMetrics> metrics;
    SplitView split; // the X split actually used
    std::size_t ce_steps = 0;
    std::size_t ml_steps = 0;
};

// Cross-entropy only on X. Fully deterministic per (config, data).
TrainResult train_baseline(const DatasetBundle& x, const TrainConfig& cfg);

// Cross-entropy plus alpha-weighted L1 matching against fixed prototypes,
// combined per cfg.alternation. One shared optimizer state across both
// objectives.
TrainResult train_prototype(const DatasetBundle& x, const PrototypeSet& g,
                            const TrainConfig& cfg);

// Shared-head cross-entropy over paired co-binned batches: each step forwards
// a half batch of X through tower_x and a half batch of Y through tower_y
// into the one head, averages the CE over all samples, and takes a single
// joint step. Test accuracy is computed on X only; the returned model needs
// no Y data to evaluate.
TrainResult train_texture(const DatasetBundle& x, const DatasetBundle& y,
                          const CoBinning& binning, const TrainConfig& cfg);

} // namespace gucnet
