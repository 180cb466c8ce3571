#include "gucnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gucnet/errors.hpp"
#include "binary_io.hpp"

namespace gucnet {

FcnTower make_tower(const std::vector<std::size_t>& dims, double dropout,
                    Rng64& rng) {
    if (dims.size() < 2) {
        throw ContractError("make_tower: need at least input and output dims");
    }
    for (std::size_t d : dims) {
        if (d == 0) {
            throw ContractError("make_tower: zero-sized layer");
        }
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ContractError("make_tower: dropout must be in [0, 1)");
    }
    FcnTower t;
    t.dims = dims;
    t.dropout = dropout;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer layer;
        layer.W = Matrix2D(dims[i], dims[i + 1]);
        const double lim = std::sqrt(6.0 / static_cast<double>(dims[i]));
        for (double& w : layer.W.data) {
            w = rng.uniform(-lim, lim);
        }
        layer.b.assign(dims[i + 1], 0.0);
        t.layers.push_back(std::move(layer));
    }
    return t;
}

ClassifierHead make_head(std::size_t latent_dim, std::size_t num_classes) {
    if (latent_dim == 0 || num_classes == 0) {
        throw ContractError("make_head: zero-sized head");
    }
    ClassifierHead h;
    h.W = Matrix2D(latent_dim, num_classes, 0.0);
    h.b.assign(num_classes, 0.0);
    return h;
}

Matrix2D forward_latent(const FcnTower& tower, const Matrix2D& x, Rng64* rng,
                        bool train_mode, TowerCache* cache) {
    if (x.cols != tower.dims.front()) {
        throw ContractError("forward_latent: input " + shape_str(x) +
                            " does not match tower input dim " +
                            std::to_string(tower.dims.front()));
    }
    if (train_mode && rng == nullptr) {
        throw ContractError("forward_latent: train mode needs an rng");
    }
    if (cache) {
        *cache = TowerCache{};
        cache->input = x;
        cache->train_mode = train_mode;
    }
    const std::size_t L = tower.layers.size();
    Matrix2D h = x;
    for (std::size_t i = 0; i < L; ++i) {
        Matrix2D z = matmul(h, tower.layers[i].W);
        add_row_vector(z, tower.layers[i].b);
        if (i + 1 < L) {
            Matrix2D a = relu(z);
            if (train_mode) {
                // Inverted dropout: kept units are scaled by 1/(1-p) so the
                // eval-mode forward needs no correction. One uniform draw per
                // entry regardless of p keeps the rng stream layout fixed.
                const double keep_scale = 1.0 / (1.0 - tower.dropout);
                Matrix2D mask(a.rows, a.cols);
                for (double& mv : mask.data) {
                    mv = rng->uniform() < tower.dropout ? 0.0 : keep_scale;
                }
                for (std::size_t e = 0; e < a.data.size(); ++e) {
                    a.data[e] *= mask.data[e];
                }
                if (cache) {
                    cache->masks.push_back(std::move(mask));
                }
            }
            if (cache) {
                cache->pre.push_back(std::move(z));
                cache->act.push_back(a);
            }
            h = std::move(a);
        } else {
            if (cache) {
                cache->pre.push_back(z);
                cache->act.push_back(z);
            }
            h = std::move(z);
        }
    }
    return h;
}

Matrix2D forward_latent_eval(const FcnTower& tower, const Matrix2D& x) {
    return forward_latent(tower, x, nullptr, false, nullptr);
}

Matrix2D head_logits(const ClassifierHead& head, const Matrix2D& latent) {
    if (latent.cols != head.W.rows) {
        throw ContractError("head_logits: latent " + shape_str(latent) +
                            " vs head " + shape_str(head.W));
    }
    Matrix2D logits = matmul(latent, head.W);
    add_row_vector(logits, head.b);
    return logits;
}

LossGrad cross_entropy_loss(const Matrix2D& logits,
                            const std::vector<std::size_t>& labels) {
    if (labels.size() != logits.rows) {
        throw ContractError("cross_entropy_loss: " +
                            std::to_string(labels.size()) + " labels for " +
                            shape_str(logits) + " logits");
    }
    const std::size_t B = logits.rows, C = logits.cols;
    for (std::size_t label : labels) {
        if (label >= C) {
            throw ContractError("cross_entropy_loss: label " +
                                std::to_string(label) + " out of range [0, " +
                                std::to_string(C) + ")");
        }
    }
    LossGrad out;
    out.grad = softmax_rows(logits);
    double loss = 0.0;
    std::vector<double> exps(C);
    for (std::size_t r = 0; r < B; ++r) {
        // log-sum-exp form: loss_i = (max + log sum exp(z - max)) - z[label].
        // The exp terms are summed via sorted_sum so the loss is bit-identical
        // under class relabeling.
        const double* z = logits.data.data() + r * C;
        double mx = z[0];
        for (std::size_t j = 1; j < C; ++j) {
            mx = std::max(mx, z[j]);
        }
        for (std::size_t j = 0; j < C; ++j) {
            exps[j] = std::exp(z[j] - mx);
        }
        loss += mx + std::log(sorted_sum(exps.data(), C)) - z[labels[r]];
    }
    out.loss = loss / static_cast<double>(B);
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t r = 0; r < B; ++r) {
        double* g = out.grad.data.data() + r * C;
        g[labels[r]] -= 1.0;
        for (std::size_t j = 0; j < C; ++j) {
            g[j] *= inv_b;
        }
    }
    return out;
}

LossGrad matching_loss(const Matrix2D& latent,
                       const std::vector<std::size_t>& labels,
                       const PrototypeSet& g) {
    if (g.vectors.data.empty()) {
        throw ContractError("matching_loss: missing prototype set");
    }
    if (latent.cols != g.dim) {
        throw ContractError("matching_loss: latent " + shape_str(latent) +
                            " vs prototype dim " + std::to_string(g.dim));
    }
    if (labels.size() != latent.rows) {
        throw ContractError("matching_loss: " + std::to_string(labels.size()) +
                            " labels for " + shape_str(latent) + " latents");
    }
    const std::size_t B = latent.rows, K = latent.cols;
    for (std::size_t label : labels) {
        if (label >= g.num_classes) {
            throw ContractError("matching_loss: label " +
                                std::to_string(label) +
                                " out of range [0, " +
                                std::to_string(g.num_classes) + ")");
        }
    }
    LossGrad out;
    out.grad = Matrix2D(B, K);
    const double inv = 1.0 / static_cast<double>(B * K);
    double loss = 0.0;
    for (std::size_t r = 0; r < B; ++r) {
        const double* lat = latent.data.data() + r * K;
        const double* proto = g.vectors.data.data() + labels[r] * K;
        double* grad = out.grad.data.data() + r * K;
        for (std::size_t j = 0; j < K; ++j) {
            const double d = lat[j] - proto[j];
            loss += std::abs(d);
            grad[j] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
        }
    }
    out.loss = loss * inv;
    return out;
}

double total_loss(double ce, double ml, double alpha) {
    if (!(alpha < 1.0)) {
        throw ContractError("total_loss: alpha must be < 1.0, got " +
                            std::to_string(alpha));
    }
    return ce + alpha * ml;
}

HeadBackward head_backward(const ClassifierHead& head, const Matrix2D& latent,
                           const Matrix2D& dlogits) {
    if (dlogits.rows != latent.rows || dlogits.cols != head.W.cols) {
        throw ContractError("head_backward: dlogits " + shape_str(dlogits) +
                            " vs latent " + shape_str(latent) + " and head " +
                            shape_str(head.W));
    }
    HeadBackward out;
    out.grads.W = matmul_tn(latent, dlogits);
    out.grads.b.assign(head.W.cols, 0.0);
    for (std::size_t r = 0; r < dlogits.rows; ++r) {
        const double* row = dlogits.data.data() + r * dlogits.cols;
        for (std::size_t j = 0; j < dlogits.cols; ++j) {
            out.grads.b[j] += row[j];
        }
    }
    // dlatent = dlogits * W^T contracts over the class axis. Summing the
    // products in value order keeps the tower gradient bit-identical when
    // classes (and therefore head columns) are relabeled; an ordinary matmul
    // would round differently after the column permutation.
    const std::size_t B = dlogits.rows, C = dlogits.cols, K = head.W.rows;
    out.dlatent = Matrix2D(B, K);
    std::vector<double> terms(C);
    for (std::size_t r = 0; r < B; ++r) {
        const double* drow = dlogits.data.data() + r * C;
        double* orow = out.dlatent.data.data() + r * K;
        for (std::size_t k = 0; k < K; ++k) {
            const double* wrow = head.W.data.data() + k * C;
            for (std::size_t c = 0; c < C; ++c) {
                terms[c] = drow[c] * wrow[c];
            }
            orow[k] = sorted_sum(terms.data(), C);
        }
    }
    return out;
}

TowerGrads tower_backward(const FcnTower& tower, const TowerCache& cache,
                          const Matrix2D& dlatent) {
    const std::size_t L = tower.layers.size();
    if (cache.act.size() != L || cache.pre.size() != L) {
        throw ContractError(
            "tower_backward: cache does not match this tower (stale cache?)");
    }
    if (cache.train_mode && cache.masks.size() != (L > 0 ? L - 1 : 0)) {
        throw ContractError("tower_backward: dropout masks missing from cache");
    }
    if (!dlatent.same_shape(cache.act.back())) {
        throw ContractError("tower_backward: dlatent " + shape_str(dlatent) +
                            " vs latent " + shape_str(cache.act.back()));
    }
    TowerGrads grads;
    grads.layers.resize(L);
    Matrix2D d = dlatent;
    for (std::size_t ii = L; ii-- > 0;) {
        const Matrix2D& input = ii == 0 ? cache.input : cache.act[ii - 1];
        grads.layers[ii].W = matmul_tn(input, d);
        grads.layers[ii].b.assign(tower.layers[ii].b.size(), 0.0);
        for (std::size_t r = 0; r < d.rows; ++r) {
            const double* row = d.data.data() + r * d.cols;
            for (std::size_t j = 0; j < d.cols; ++j) {
                grads.layers[ii].b[j] += row[j];
            }
        }
        if (ii > 0) {
            d = matmul_nt(d, tower.layers[ii].W);
            if (cache.train_mode) {
                const Matrix2D& mask = cache.masks[ii - 1];
                for (std::size_t e = 0; e < d.data.size(); ++e) {
                    d.data[e] *= mask.data[e];
                }
            }
            d = relu_backward(cache.pre[ii - 1], d);
        }
    }
    return grads;
}

namespace {

void write_tower(std::ostream& os, const FcnTower& t) {
    detail::write_u32(os, static_cast<std::uint32_t>(t.dims.size()));
    for (std::size_t d : t.dims) {
        detail::write_u32(os, static_cast<std::uint32_t>(d));
    }
    detail::write_f64(os, t.dropout);
}

void write_params(std::ostream& os, const FcnTower& t) {
    for (const DenseLayer& layer : t.layers) {
        for (double w : layer.W.data) {
            detail::write_f64(os, w);
        }
        for (double b : layer.b) {
            detail::write_f64(os, b);
        }
    }
}

FcnTower read_tower_header(std::istream& is, const std::string& path) {
    std::uint32_t ndims = 0;
    if (!detail::read_u32(is, ndims)) {
        throw IoError(IoError::Kind::Truncated,
                      path + ": checkpoint ends inside tower header");
    }
    if (ndims < 2) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": tower needs at least 2 dims, got " +
                          std::to_string(ndims));
    }
    FcnTower t;
    for (std::uint32_t i = 0; i < ndims; ++i) {
        std::uint32_t d = 0;
        if (!detail::read_u32(is, d)) {
            throw IoError(IoError::Kind::Truncated,
                          path + ": checkpoint ends inside tower dims");
        }
        if (d == 0) {
            throw IoError(IoError::Kind::BadValue,
                          path + ": zero-sized tower layer");
        }
        t.dims.push_back(d);
    }
    if (!detail::read_f64(is, t.dropout)) {
        throw IoError(IoError::Kind::Truncated,
                      path + ": checkpoint ends before dropout field");
    }
    if (!(t.dropout >= 0.0 && t.dropout < 1.0)) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": dropout outside [0, 1)");
    }
    return t;
}

void read_params(std::istream& is, FcnTower& t, const std::string& path) {
    for (std::size_t i = 0; i + 1 < t.dims.size(); ++i) {
        DenseLayer layer;
        layer.W = Matrix2D(t.dims[i], t.dims[i + 1]);
        for (double& w : layer.W.data) {
            if (!detail::read_f64(is, w)) {
                throw IoError(IoError::Kind::Truncated,
                              path + ": checkpoint ends inside weights");
            }
        }
        layer.b.assign(t.dims[i + 1], 0.0);
        for (double& b : layer.b) {
            if (!detail::read_f64(is, b)) {
                throw IoError(IoError::Kind::Truncated,
                              path + ": checkpoint ends inside biases");
            }
        }
        t.layers.push_back(std::move(layer));
    }
}

} // namespace

void save_gucw(const GucnetModel& model, const std::string& path) {
    if (model.mode == Mode::Texture && !model.tower_y.has_value()) {
        throw ContractError("save_gucw: texture model without tower_y");
    }
    if (model.mode != Mode::Texture && model.tower_y.has_value()) {
        throw ContractError("save_gucw: tower_y present in non-texture model");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError(IoError::Kind::OpenFailed,
                      path + ": cannot open for writing");
    }
    os.write("GUCW", 4);
    detail::write_u32(os, 1); // version
    detail::write_u32(os, static_cast<std::uint32_t>(model.mode));
    detail::write_u32(os, static_cast<std::uint32_t>(model.head.W.cols));
    write_tower(os, model.tower_x);
    if (model.tower_y.has_value()) {
        detail::write_u32(os, 1);
        write_tower(os, *model.tower_y);
    } else {
        detail::write_u32(os, 0);
    }
    write_params(os, model.tower_x);
    if (model.tower_y.has_value()) {
        write_params(os, *model.tower_y);
    }
    for (double w : model.head.W.data) {
        detail::write_f64(os, w);
    }
    for (double b : model.head.b) {
        detail::write_f64(os, b);
    }
    if (!os) {
        throw IoError(IoError::Kind::OpenFailed, path + ": write failed");
    }
}

GucnetModel load_gucw(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError(IoError::Kind::OpenFailed,
                      path + ": cannot open for reading");
    }
    char magic[4] = {};
    if (!is.read(magic, 4)) {
        throw IoError(IoError::Kind::Truncated, path + ": shorter than magic");
    }
    if (std::string(magic, 4) != "GUCW") {
        throw IoError(IoError::Kind::BadMagic,
                      path + ": not a GUCW checkpoint");
    }
    std::uint32_t version = 0, mode = 0, C = 0, has_y = 0;
    if (!detail::read_u32(is, version) || !detail::read_u32(is, mode) ||
        !detail::read_u32(is, C)) {
        throw IoError(IoError::Kind::Truncated,
                      path + ": checkpoint ends inside header");
    }
    if (version != 1) {
        throw IoError(IoError::Kind::BadVersion,
                      path + ": unsupported GUCW version " +
                          std::to_string(version));
    }
    if (mode > 2) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": unknown mode tag " + std::to_string(mode));
    }
    if (C == 0) {
        throw IoError(IoError::Kind::BadValue, path + ": zero classes");
    }
    GucnetModel model;
    model.mode = static_cast<Mode>(mode);
    model.tower_x = read_tower_header(is, path);
    if (!detail::read_u32(is, has_y)) {
        throw IoError(IoError::Kind::Truncated,
                      path + ": checkpoint ends inside header");
    }
    if (has_y > 1) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": bad tower_y presence flag");
    }
    if ((model.mode == Mode::Texture) != (has_y == 1)) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": tower_y presence does not match mode");
    }
    if (has_y) {
        model.tower_y = read_tower_header(is, path);
        if (model.tower_y->dims.back() != model.tower_x.dims.back()) {
            throw IoError(IoError::Kind::BadValue,
                          path + ": tower latent dims differ");
        }
    }
    read_params(is, model.tower_x, path);
    if (has_y) {
        read_params(is, *model.tower_y, path);
    }
    model.head.W = Matrix2D(model.tower_x.dims.back(), C);
    for (double& w : model.head.W.data) {
        if (!detail::read_f64(is, w)) {
            throw IoError(IoError::Kind::Truncated,
                          path + ": checkpoint ends inside head weights");
        }
    }
    model.head.b.assign(C, 0.0);
    for (double& b : model.head.b) {
        if (!detail::read_f64(is, b)) {
            throw IoError(IoError::Kind::Truncated,
                          path + ": checkpoint ends inside head biases");
        }
    }
    if (!detail::at_eof(is)) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": trailing bytes after checkpoint payload");
    }
    return model;
}

} // namespace gucnet
