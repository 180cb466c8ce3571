#include "gucnet/training.hpp"

#include <chrono>
#include <cmath>

#include "gucnet/errors.hpp"
#include "gucnet/eval.hpp"

namespace gucnet {

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) {
        throw ConfigError("epochs must be >= 1, got " +
                          std::to_string(cfg.epochs));
    }
    if (!(cfg.learning_rate > 0.0)) {
        throw ConfigError("learning_rate must be > 0");
    }
    if (!(cfg.alpha < 1.0)) {
        throw ConfigError("alpha must be < 1.0, got " +
                          std::to_string(cfg.alpha));
    }
    if (cfg.batch_size < 1) {
        throw ConfigError("batch_size must be >= 1");
    }
    if (cfg.latent_dim < 1) {
        throw ConfigError("latent_dim must be >= 1");
    }
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) {
        throw ConfigError("split_ratio must be in (0, 1)");
    }
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
        throw ConfigError("dropout must be in [0, 1)");
    }
    for (std::size_t d : cfg.hidden_dims) {
        if (d == 0) {
            throw ConfigError("hidden_dims entries must be positive");
        }
    }
    if (const auto* adam = std::get_if<AdamParams>(&cfg.optimizer)) {
        if (!(adam->beta1 >= 0.0 && adam->beta1 < 1.0) ||
            !(adam->beta2 >= 0.0 && adam->beta2 < 1.0)) {
            throw ConfigError("adam betas must be in [0, 1)");
        }
        if (!(adam->eps > 0.0)) {
            throw ConfigError("adam eps must be > 0");
        }
    } else if (const auto* sgd = std::get_if<SgdParams>(&cfg.optimizer)) {
        if (!(sgd->momentum >= 0.0 && sgd->momentum < 1.0)) {
            throw ConfigError("sgd momentum must be in [0, 1)");
        }
    }
}

void adam_step(double* params, const double* grads, std::size_t n,
               MomentPair& state, std::uint64_t t, double lr,
               const AdamParams& hp) {
    if (t == 0) {
        throw ContractError("adam_step: step count is 1-based");
    }
    if (state.m.empty()) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
    }
    if (state.m.size() != n || state.v.size() != n) {
        throw ContractError("adam_step: state holds " +
                            std::to_string(state.m.size()) +
                            " moments for " + std::to_string(n) + " params");
    }
    const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
}

void adam_step(Matrix2D& params, const Matrix2D& grads, MomentPair& state,
               std::uint64_t t, double lr, const AdamParams& hp) {
    if (!params.same_shape(grads)) {
        throw ContractError("adam_step: params " + shape_str(params) +
                            " vs grads " + shape_str(grads));
    }
    adam_step(params.data.data(), grads.data.data(), params.data.size(),
              state, t, lr, hp);
}

void sgd_step(double* params, const double* grads, std::size_t n,
              MomentPair& state, double lr, const SgdParams& hp) {
    if (state.m.empty()) {
        state.m.assign(n, 0.0);
    }
    if (state.m.size() != n) {
        throw ContractError("sgd_step: state holds " +
                            std::to_string(state.m.size()) +
                            " velocities for " + std::to_string(n) +
                            " params");
    }
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = hp.momentum * state.m[i] + grads[i];
        params[i] -= lr * state.m[i];
    }
}

ModelGrads make_zero_grads(const GucnetModel& model) {
    ModelGrads g;
    auto zero_tower = [](const FcnTower& t) {
        TowerGrads tg;
        for (const DenseLayer& layer : t.layers) {
            DenseLayer z;
            z.W = Matrix2D(layer.W.rows, layer.W.cols, 0.0);
            z.b.assign(layer.b.size(), 0.0);
            tg.layers.push_back(std::move(z));
        }
        return tg;
    };
    g.tower_x = zero_tower(model.tower_x);
    if (model.tower_y.has_value()) {
        g.tower_y = zero_tower(*model.tower_y);
    }
    g.head.W = Matrix2D(model.head.W.rows, model.head.W.cols, 0.0);
    g.head.b.assign(model.head.b.size(), 0.0);
    return g;
}

namespace {

struct TensorRef {
    double* data;
    std::size_t n;
};

struct GradRef {
    const double* data;
    std::size_t n;
};

std::vector<TensorRef> collect_params(GucnetModel& model) {
    std::vector<TensorRef> out;
    auto add_tower = [&out](FcnTower& t) {
        for (DenseLayer& layer : t.layers) {
            out.push_back({layer.W.data.data(), layer.W.data.size()});
            out.push_back({layer.b.data(), layer.b.size()});
        }
    };
    add_tower(model.tower_x);
    if (model.tower_y.has_value()) {
        add_tower(*model.tower_y);
    }
    out.push_back({model.head.W.data.data(), model.head.W.data.size()});
    out.push_back({model.head.b.data(), model.head.b.size()});
    return out;
}

std::vector<GradRef> collect_grads(const ModelGrads& grads,
                                   const GucnetModel& model) {
    if (grads.tower_y.has_value() != model.tower_y.has_value()) {
        throw ContractError(
            "optimizer step: gradient tower_y presence does not match model");
    }
    std::vector<GradRef> out;
    auto add_tower = [&out](const TowerGrads& t) {
        for (const DenseLayer& layer : t.layers) {
            out.push_back({layer.W.data.data(), layer.W.data.size()});
            out.push_back({layer.b.data(), layer.b.size()});
        }
    };
    add_tower(grads.tower_x);
    if (grads.tower_y.has_value()) {
        add_tower(*grads.tower_y);
    }
    out.push_back({grads.head.W.data.data(), grads.head.W.data.size()});
    out.push_back({grads.head.b.data(), grads.head.b.size()});
    return out;
}

} // namespace

ModelOptimizer::ModelOptimizer(GucnetModel* model, const TrainConfig& cfg)
    : model_(model), lr_(cfg.learning_rate), hp_(cfg.optimizer) {
    slots_.resize(collect_params(*model_).size());
}

void ModelOptimizer::step(const ModelGrads& grads) {
    std::vector<TensorRef> params = collect_params(*model_);
    std::vector<GradRef> gr = collect_grads(grads, *model_);
    if (params.size() != gr.size()) {
        throw ContractError("optimizer step: tensor count mismatch");
    }
    ++step_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].n != gr[i].n) {
            throw ContractError("optimizer step: tensor " + std::to_string(i) +
                                " has " + std::to_string(gr[i].n) +
                                " gradient values for " +
                                std::to_string(params[i].n) + " params");
        }
        if (const auto* adam = std::get_if<AdamParams>(&hp_)) {
            adam_step(params[i].data, gr[i].data, params[i].n, slots_[i],
                      step_, lr_, *adam);
        } else {
            sgd_step(params[i].data, gr[i].data, params[i].n, slots_[i], lr_,
                     std::get<SgdParams>(hp_));
        }
    }
}

namespace {

Matrix2D gather_rows(const Matrix2D& src, const std::vector<std::size_t>& idx) {
    Matrix2D out(idx.size(), src.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const double* in = src.data.data() + idx[r] * src.cols;
        std::copy(in, in + src.cols, out.data.data() + r * src.cols);
    }
    return out;
}

std::vector<std::size_t> gather_labels(const std::vector<std::size_t>& labels,
                                       const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[i] = labels[idx[i]];
    }
    return out;
}

Matrix2D vstack(const Matrix2D& a, const Matrix2D& b) {
    Matrix2D out(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
}

Matrix2D row_slice(const Matrix2D& m, std::size_t begin, std::size_t end) {
    Matrix2D out(end - begin, m.cols);
    std::copy(m.data.begin() + static_cast<std::ptrdiff_t>(begin * m.cols),
              m.data.begin() + static_cast<std::ptrdiff_t>(end * m.cols),
              out.data.begin());
    return out;
}

// The one training engine behind all three modes. Keeping a single loop makes
// the cross-mode guarantees structural: every mode draws the same sub-seeds in
// the same order, so runs that differ only in mode share the data split, the
// tower_x init stream, the batch order and the dropout masks; and the
// degenerate prototype objective (alpha = 0, Joint) walks bit-for-bit in
// baseline's footsteps.
TrainResult run_training(const DatasetBundle& x, const PrototypeSet* proto,
                         const DatasetBundle* y, const CoBinning* binning,
                         const TrainConfig& cfg) {
    validate(cfg);
    validate_bundle(x);

    // Frozen sub-seed layout (all modes draw all five).
    Rng64 master(cfg.seed);
    const std::uint64_t s_split = master.next_u64();
    const std::uint64_t s_init = master.next_u64();
    const std::uint64_t s_batch = master.next_u64();
    const std::uint64_t s_dropout = master.next_u64();
    const std::uint64_t s_guide = master.next_u64();

    TrainResult result;
    result.split = stratified_split(x, cfg.split_ratio, s_split);

    std::vector<std::size_t> dims;
    dims.push_back(x.features.cols);
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(cfg.latent_dim);

    Rng64 rng_init(s_init);
    GucnetModel& model = result.model;
    model.mode = cfg.mode;
    model.tower_x = make_tower(dims, cfg.dropout, rng_init);

    std::optional<PairedBatches> paired;
    if (cfg.mode == Mode::Texture) {
        validate_bundle(*y);
        if (y->num_classes != x.num_classes) {
            throw ContractError("train_texture: x has " +
                                std::to_string(x.num_classes) +
                                " classes but y has " +
                                std::to_string(y->num_classes));
        }
        std::vector<std::size_t> ydims;
        ydims.push_back(y->features.cols);
        ydims.insert(ydims.end(), cfg.hidden_dims.begin(),
                     cfg.hidden_dims.end());
        ydims.push_back(cfg.latent_dim);
        model.tower_y = make_tower(ydims, cfg.dropout, rng_init);
        SplitView y_split = stratified_split(*y, cfg.split_ratio, s_guide);
        paired.emplace(x, result.split, *y, y_split, *binning, cfg.batch_size,
                       s_batch);
    }
    model.head = make_head(cfg.latent_dim, x.num_classes);
    if (cfg.mode == Mode::Prototype) {
        model.prototypes = *proto;
    }

    ModelOptimizer opt(&model, cfg);
    Rng64 rng_batch(s_batch);
    Rng64 rng_dropout(s_dropout);

    const bool is_proto = cfg.mode == Mode::Prototype;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double ce_sum = 0.0;
        double ml_sum = 0.0;
        std::size_t batches = 0;

        if (cfg.mode == Mode::Texture) {
            paired->begin_epoch();
            PairedBatch pb;
            while (paired->next(pb)) {
                const Matrix2D xb = gather_rows(x.features, pb.x_indices);
                const Matrix2D yb = gather_rows(y->features, pb.y_indices);
                TowerCache cx, cy;
                const Matrix2D latx = forward_latent(model.tower_x, xb,
                                                     &rng_dropout, true, &cx);
                const Matrix2D laty = forward_latent(*model.tower_y, yb,
                                                     &rng_dropout, true, &cy);
                const Matrix2D lat = vstack(latx, laty);
                std::vector<std::size_t> labels = pb.x_labels;
                labels.insert(labels.end(), pb.y_labels.begin(),
                              pb.y_labels.end());
                const Matrix2D logits = head_logits(model.head, lat);
                const LossGrad ce = cross_entropy_loss(logits, labels);
                ce_sum += ce.loss;
                ++batches;

                HeadBackward hb = head_backward(model.head, lat, ce.grad);
                ModelGrads grads;
                grads.head = std::move(hb.grads);
                grads.tower_x = tower_backward(
                    model.tower_x, cx,
                    row_slice(hb.dlatent, 0, latx.rows));
                grads.tower_y = tower_backward(
                    *model.tower_y, cy,
                    row_slice(hb.dlatent, latx.rows, lat.rows));
                opt.step(grads);
                ++result.ce_steps;
            }
        } else {
            std::vector<std::size_t> order = result.split.train_indices;
            rng_batch.shuffle(order);
            std::size_t batch_index = 0;
            for (std::size_t start = 0; start < order.size();
                 start += cfg.batch_size, ++batch_index) {
                const std::size_t end =
                    std::min(start + cfg.batch_size, order.size());
                const std::vector<std::size_t> idx(
                    order.begin() + static_cast<std::ptrdiff_t>(start),
                    order.begin() + static_cast<std::ptrdiff_t>(end));
                const Matrix2D xb = gather_rows(x.features, idx);
                const std::vector<std::size_t> labels =
                    gather_labels(x.labels, idx);

                TowerCache cache;
                const Matrix2D latent = forward_latent(
                    model.tower_x, xb, &rng_dropout, true, &cache);
                const Matrix2D logits = head_logits(model.head, latent);
                const LossGrad ce = cross_entropy_loss(logits, labels);
                ce_sum += ce.loss;
                ++batches;

                LossGrad ml;
                if (is_proto) {
                    ml = matching_loss(latent, labels, *model.prototypes);
                    ml_sum += ml.loss;
                }

                ModelGrads grads;
                const bool ml_step = is_proto &&
                                     cfg.alternation == Alternation::PerBatch &&
                                     batch_index % 2 == 1;
                if (ml_step) {
                    // Step on grad(alpha * L_ml) alone. The matching loss does
                    // not involve the head, so its gradient there is exactly
                    // zero — the shared optimizer still advances every tensor.
                    Matrix2D dlat = ml.grad;
                    for (double& v : dlat.data) {
                        v *= cfg.alpha;
                    }
                    grads.tower_x =
                        tower_backward(model.tower_x, cache, dlat);
                    grads.head.W = Matrix2D(model.head.W.rows,
                                            model.head.W.cols, 0.0);
                    grads.head.b.assign(model.head.b.size(), 0.0);
                    ++result.ml_steps;
                } else {
                    HeadBackward hb =
                        head_backward(model.head, latent, ce.grad);
                    grads.head = std::move(hb.grads);
                    Matrix2D dlat = std::move(hb.dlatent);
                    if (is_proto && cfg.alternation == Alternation::Joint) {
                        for (std::size_t i = 0; i < dlat.data.size(); ++i) {
                            dlat.data[i] += cfg.alpha * ml.grad.data[i];
                        }
                        ++result.ml_steps;
                    }
                    grads.tower_x =
                        tower_backward(model.tower_x, cache, dlat);
                    ++result.ce_steps;
                }
                opt.step(grads);
            }
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.ce_loss = ce_sum / static_cast<double>(batches);
        if (is_proto) {
            em.ml_loss = ml_sum / static_cast<double>(batches);
        }
        em.train_acc = evaluate(model, x, result.split.train_indices).accuracy;
        em.test_acc = evaluate(model, x, result.split.test_indices).accuracy;
        em.wall_ms = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count());
        result.metrics.push_back(em);
    }
    return result;
}

} // namespace

TrainResult train_baseline(const DatasetBundle& x, const TrainConfig& cfg) {
    if (cfg.mode != Mode::Baseline) {
        throw ContractError("train_baseline: config mode is not Baseline");
    }
    return run_training(x, nullptr, nullptr, nullptr, cfg);
}

TrainResult train_prototype(const DatasetBundle& x, const PrototypeSet& g,
                            const TrainConfig& cfg) {
    if (cfg.mode != Mode::Prototype) {
        throw ContractError("train_prototype: config mode is not Prototype");
    }
    if (g.num_classes != x.num_classes) {
        throw ContractError("train_prototype: " +
                            std::to_string(g.num_classes) +
                            " prototypes for " +
                            std::to_string(x.num_classes) + " classes");
    }
    if (g.dim != cfg.latent_dim) {
        throw ContractError("train_prototype: prototype dim " +
                            std::to_string(g.dim) + " vs latent_dim " +
                            std::to_string(cfg.latent_dim));
    }
    return run_training(x, &g, nullptr, nullptr, cfg);
}

TrainResult train_texture(const DatasetBundle& x, const DatasetBundle& y,
                          const CoBinning& binning, const TrainConfig& cfg) {
    if (cfg.mode != Mode::Texture) {
        throw ContractError("train_texture: config mode is not Texture");
    }
    return run_training(x, nullptr, &y, &binning, cfg);
}

} // namespace gucnet
