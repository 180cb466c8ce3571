#include "gucnet/eval.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <functional>
#include <numeric>
#include <thread>

#include "gucnet/errors.hpp"
#include "gucnet/prototypes.hpp"

namespace gucnet {

EvalReport evaluate(const GucnetModel& model, const DatasetBundle& data,
                    const std::vector<std::size_t>& indices) {
    validate_bundle(data);
    if (indices.empty()) {
        throw ContractError("evaluate: empty index set");
    }
    if (data.features.cols != model.tower_x.dims.front()) {
        throw ContractError("evaluate: data has " +
                            std::to_string(data.features.cols) +
                            " features but the model expects " +
                            std::to_string(model.tower_x.dims.front()));
    }
    const std::size_t C = model.head.b.size();
    if (data.num_classes != C) {
        throw ContractError("evaluate: data has " +
                            std::to_string(data.num_classes) +
                            " classes but the model head has " +
                            std::to_string(C));
    }

    Matrix2D batch(indices.size(), data.features.cols);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t src = indices[r];
        if (src >= data.features.rows) {
            throw ContractError("evaluate: index " + std::to_string(src) +
                                " out of range for " +
                                std::to_string(data.features.rows) +
                                " samples");
        }
        std::copy(data.features.data.begin() +
                      static_cast<std::ptrdiff_t>(src * data.features.cols),
                  data.features.data.begin() +
                      static_cast<std::ptrdiff_t>((src + 1) *
                                                  data.features.cols),
                  batch.data.begin() +
                      static_cast<std::ptrdiff_t>(r * data.features.cols));
    }

    const Matrix2D latent = forward_latent_eval(model.tower_x, batch);
    const Matrix2D logits = head_logits(model.head, latent);

    EvalReport rep;
    rep.num_test = indices.size();
    rep.confusion.assign(C, std::vector<std::size_t>(C, 0));
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        // Softmax is monotone, so the logit argmax is the probability argmax;
        // strict > keeps the lowest index on ties.
        std::size_t pred = 0;
        double best = logits(r, 0);
        for (std::size_t c = 1; c < C; ++c) {
            if (logits(r, c) > best) {
                best = logits(r, c);
                pred = c;
            }
        }
        const std::size_t truth = data.labels[indices[r]];
        rep.confusion[truth][pred] += 1;
        if (pred == truth) {
            ++correct;
        }
    }
    rep.accuracy = static_cast<double>(correct) /
                   static_cast<double>(rep.num_test);
    rep.per_class_recall.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        const std::size_t row_total =
            std::accumulate(rep.confusion[c].begin(), rep.confusion[c].end(),
                            std::size_t{0});
        if (row_total > 0) {
            rep.per_class_recall[c] =
                static_cast<double>(rep.confusion[c][c]) /
                static_cast<double>(row_total);
        }
    }
    return rep;
}

EvalReport evaluate(const GucnetModel& model, const DatasetBundle& data) {
    std::vector<std::size_t> all(data.features.rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return evaluate(model, data, all);
}

namespace {

// FNV-1a over every input an ablation condition shares, so equal fingerprints
// certify that only the varied factor differed between conditions.
class Fnv1a {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 1099511628211ULL;
        }
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) {
            b[i] = static_cast<unsigned char>(v >> (8 * i));
        }
        bytes(b, 8);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(16, '0');
        for (int i = 0; i < 16; ++i) {
            out[15 - i] = digits[(h_ >> (4 * i)) & 0xF];
        }
        return out;
    }

private:
    std::uint64_t h_ = 14695981039346656037ULL;
};

void hash_bundle(Fnv1a& h, const DatasetBundle& b) {
    h.str(b.name);
    h.u64(b.features.rows);
    h.u64(b.features.cols);
    h.u64(b.num_classes);
    for (std::size_t label : b.labels) {
        h.u64(label);
    }
    for (double v : b.features.data) {
        h.f64(v);
    }
}

std::string fingerprint(const DatasetBundle& x, const DatasetBundle* y,
                        const TrainConfig& cfg) {
    Fnv1a h;
    hash_bundle(h, x);
    h.u64(y != nullptr ? 1 : 0);
    if (y != nullptr) {
        hash_bundle(h, *y);
    }
    h.u64(static_cast<std::uint64_t>(cfg.mode));
    h.u64(static_cast<std::uint64_t>(cfg.epochs));
    h.f64(cfg.learning_rate);
    if (const auto* adam = std::get_if<AdamParams>(&cfg.optimizer)) {
        h.str("adam");
        h.f64(adam->beta1);
        h.f64(adam->beta2);
        h.f64(adam->eps);
    } else {
        const auto& sgd = std::get<SgdParams>(cfg.optimizer);
        h.str("sgd");
        h.f64(sgd.momentum);
    }
    h.u64(cfg.batch_size);
    h.f64(cfg.alpha);
    h.u64(cfg.alternation == Alternation::PerBatch ? 0 : 1);
    h.u64(cfg.seed);
    h.u64(cfg.latent_dim);
    h.u64(cfg.hidden_dims.size());
    for (std::size_t d : cfg.hidden_dims) {
        h.u64(d);
    }
    h.f64(cfg.dropout);
    h.f64(cfg.split_ratio);
    return h.hex();
}

// Runs fn(0..n-1), at most `jobs` at a time. Conditions are independent
// trainings over const inputs writing to disjoint result slots, so the only
// shared state is the work queue counter.
void run_indexed(std::size_t n, std::size_t jobs,
                 const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t width = std::min(jobs, n);
    pool.reserve(width);
    for (std::size_t j = 0; j < width; ++j) {
        pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
        t.join();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace

std::string to_string(HammingCondition c) {
    switch (c) {
    case HammingCondition::RandomUnit:
        return "random_unit";
    case HammingCondition::H2:
        return "h2";
    case HammingCondition::HHalf:
        return "h_half";
    case HammingCondition::HMax:
        return "h_max";
    }
    throw ContractError("to_string: unknown hamming condition");
}

AblationReport ablate_hamming(const DatasetBundle& x, const TrainConfig& cfg,
                              const std::vector<HammingCondition>& conditions,
                              std::size_t jobs) {
    if (cfg.mode != Mode::Prototype) {
        throw ContractError(
            "ablate_hamming: config mode must be Prototype");
    }
    if (conditions.empty()) {
        throw ContractError("ablate_hamming: no conditions requested");
    }
    validate(cfg);
    validate_bundle(x);

    AblationReport rep;
    rep.study = "hamming";
    rep.config_fingerprint = fingerprint(x, nullptr, cfg);
    rep.conditions.resize(conditions.size());
    run_indexed(conditions.size(), jobs, [&](std::size_t i) {
        PrototypeSet p;
        switch (conditions[i]) {
        case HammingCondition::RandomUnit:
            p = make_random_unit(x.num_classes, cfg.latent_dim, cfg.seed);
            break;
        case HammingCondition::H2:
            p = make_hmax_variant(x.num_classes, cfg.latent_dim,
                                  HammingLevel::H2);
            break;
        case HammingCondition::HHalf:
            p = make_hmax_variant(x.num_classes, cfg.latent_dim,
                                  HammingLevel::HHalf);
            break;
        case HammingCondition::HMax:
            p = make_hmax_variant(x.num_classes, cfg.latent_dim,
                                  HammingLevel::HMax);
            break;
        }
        const TrainResult r = train_prototype(x, p, cfg);
        rep.conditions[i].label = to_string(conditions[i]);
        rep.conditions[i].report =
            evaluate(r.model, x, r.split.test_indices);
    });
    return rep;
}

AblationReport ablate_binning(const DatasetBundle& x, const DatasetBundle& y,
                              const TrainConfig& cfg,
                              const std::vector<std::uint64_t>& shuffle_seeds,
                              std::size_t jobs) {
    if (cfg.mode != Mode::Texture) {
        throw ContractError("ablate_binning: config mode must be Texture");
    }
    validate(cfg);
    validate_bundle(x);
    validate_bundle(y);

    AblationReport rep;
    rep.study = "binning";
    rep.config_fingerprint = fingerprint(x, &y, cfg);
    rep.conditions.resize(1 + shuffle_seeds.size());
    run_indexed(rep.conditions.size(), jobs, [&](std::size_t i) {
        CoBinning binning;
        std::string label;
        if (i == 0) {
            binning = make_cobinning(x.num_classes, BinningKind::Identity, 0);
            label = "identity";
        } else {
            const std::uint64_t seed = shuffle_seeds[i - 1];
            binning =
                make_cobinning(x.num_classes, BinningKind::Shuffled, seed);
            label = "shuffled(seed=" + std::to_string(seed) + ")";
        }
        const TrainResult r = train_texture(x, y, binning, cfg);
        rep.conditions[i].label = std::move(label);
        rep.conditions[i].permutation = binning.mapping;
        rep.conditions[i].report =
            evaluate(r.model, x, r.split.test_indices);
    });
    return rep;
}

} // namespace gucnet
