#include "gucnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gucnet/errors.hpp"
#include "binary_io.hpp"

namespace gucnet {

void validate_bundle(const DatasetBundle& b) {
    if (b.num_classes == 0) {
        throw ContractError("dataset '" + b.name + "': zero classes");
    }
    if (b.labels.size() != b.features.rows) {
        throw ContractError("dataset '" + b.name + "': " +
                            std::to_string(b.labels.size()) + " labels for " +
                            std::to_string(b.features.rows) + " rows");
    }
    std::vector<std::size_t> counts(b.num_classes, 0);
    for (std::size_t label : b.labels) {
        if (label >= b.num_classes) {
            throw ContractError("dataset '" + b.name + "': label " +
                                std::to_string(label) + " out of range [0, " +
                                std::to_string(b.num_classes) + ")");
        }
        ++counts[label];
    }
    for (std::size_t c = 0; c < b.num_classes; ++c) {
        if (counts[c] == 0) {
            throw ContractError("dataset '" + b.name + "': class " +
                                std::to_string(c) + " has no samples");
        }
    }
}

DatasetBundle gen_gaussian_mixture(std::size_t C, std::size_t D,
                                   std::size_t n_per_class,
                                   double center_radius, double sigma,
                                   std::uint64_t seed) {
    if (C < 2) {
        throw ContractError("gen_gaussian_mixture: need C >= 2");
    }
    if (D < C) {
        throw ContractError("gen_gaussian_mixture: need D >= C, got D=" +
                            std::to_string(D) + ", C=" + std::to_string(C));
    }
    if (n_per_class == 0) {
        throw ContractError("gen_gaussian_mixture: need n_per_class >= 1");
    }
    if (center_radius <= 0.0 || sigma < 0.0) {
        throw ContractError(
            "gen_gaussian_mixture: need center_radius > 0 and sigma >= 0");
    }
    Rng64 rng(seed);

    // Class means: isotropic Gaussian directions normalized onto the sphere.
    Matrix2D means(C, D);
    for (std::size_t c = 0; c < C; ++c) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (std::size_t d = 0; d < D; ++d) {
                const double v = rng.normal();
                means(c, d) = v;
                norm2 += v * v;
            }
        } while (norm2 < 1e-24); // re-draw the (measure-zero) degenerate case
        const double scale = center_radius / std::sqrt(norm2);
        for (std::size_t d = 0; d < D; ++d) {
            means(c, d) *= scale;
        }
    }

    const double noise_std = sigma * center_radius / 2.0;
    DatasetBundle b;
    b.num_classes = C;
    b.features = Matrix2D(C * n_per_class, D);
    b.labels.resize(C * n_per_class);
    std::size_t row = 0;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
            double* out = b.features.data.data() + row * D;
            for (std::size_t d = 0; d < D; ++d) {
                out[d] = means(c, d) + noise_std * rng.normal();
            }
            b.labels[row] = c;
        }
    }
    std::ostringstream name;
    name << "synthetic(C=" << C << ",D=" << D << ",n=" << n_per_class
         << ",r=" << center_radius << ",sigma=" << sigma << ",seed=" << seed
         << ")";
    b.name = name.str();
    return b;
}

void save_gfv1(const DatasetBundle& b, const std::string& path) {
    validate_bundle(b);
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError(IoError::Kind::OpenFailed,
                      path + ": cannot open for writing");
    }
    os.write("GFV1", 4);
    detail::write_u32(os, static_cast<std::uint32_t>(b.features.rows));
    detail::write_u32(os, static_cast<std::uint32_t>(b.features.cols));
    detail::write_u32(os, static_cast<std::uint32_t>(b.num_classes));
    for (std::size_t label : b.labels) {
        detail::write_u32(os, static_cast<std::uint32_t>(label));
    }
    for (double v : b.features.data) {
        detail::write_f64(os, v);
    }
    if (!os) {
        throw IoError(IoError::Kind::OpenFailed, path + ": write failed");
    }
}

DatasetBundle load_gfv1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError(IoError::Kind::OpenFailed,
                      path + ": cannot open for reading");
    }
    char magic[4] = {};
    if (!is.read(magic, 4)) {
        throw IoError(IoError::Kind::Truncated, path + ": shorter than magic");
    }
    if (std::string(magic, 4) != "GFV1") {
        throw IoError(IoError::Kind::BadMagic, path + ": not a GFV1 file");
    }
    std::uint32_t N = 0, D = 0, C = 0;
    if (!detail::read_u32(is, N) || !detail::read_u32(is, D) ||
        !detail::read_u32(is, C)) {
        throw IoError(IoError::Kind::Truncated, path + ": truncated header");
    }
    if (N == 0 || D == 0 || C == 0) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": zero N, D or C in header");
    }
    DatasetBundle b;
    b.num_classes = C;
    b.labels.resize(N);
    for (std::uint32_t i = 0; i < N; ++i) {
        std::uint32_t label = 0;
        if (!detail::read_u32(is, label)) {
            throw IoError(IoError::Kind::Truncated,
                          path + ": file ends inside the label block");
        }
        if (label >= C) {
            throw IoError(IoError::Kind::BadValue,
                          path + ": label " + std::to_string(label) +
                              " >= C=" + std::to_string(C));
        }
        b.labels[i] = label;
    }
    b.features = Matrix2D(N, D);
    for (double& v : b.features.data) {
        if (!detail::read_f64(is, v)) {
            throw IoError(IoError::Kind::Truncated,
                          path + ": file ends inside the feature block");
        }
    }
    if (!detail::at_eof(is)) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": trailing bytes after feature block");
    }
    // Derive a name from the file path.
    const std::size_t slash = path.find_last_of('/');
    b.name = slash == std::string::npos ? path : path.substr(slash + 1);
    validate_bundle(b);
    return b;
}

DatasetBundle load_csv(const std::string& path, std::size_t label_column) {
    std::ifstream is(path);
    if (!is) {
        throw IoError(IoError::Kind::OpenFailed,
                      path + ": cannot open for reading");
    }
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> labels;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw IoError(IoError::Kind::BadValue,
                              path + ":" + std::to_string(line_no) +
                                  ": non-numeric cell '" + cell + "'");
            }
            while (used < cell.size() &&
                   std::isspace(static_cast<unsigned char>(cell[used]))) {
                ++used;
            }
            if (used != cell.size()) {
                throw IoError(IoError::Kind::BadValue,
                              path + ":" + std::to_string(line_no) +
                                  ": non-numeric cell '" + cell + "'");
            }
            cells.push_back(value);
        }
        if (rows.empty() && labels.empty()) {
            width = cells.size();
            if (width < 2) {
                throw IoError(IoError::Kind::BadValue,
                              path + ": rows need a label and at least one "
                                     "feature column");
            }
            if (label_column >= width) {
                throw IoError(IoError::Kind::BadValue,
                              path + ": label column " +
                                  std::to_string(label_column) +
                                  " out of range for " +
                                  std::to_string(width) + " columns");
            }
        } else if (cells.size() != width) {
            throw IoError(IoError::Kind::BadValue,
                          path + ":" + std::to_string(line_no) +
                              ": ragged row (" + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(width) +
                              ")");
        }
        const double raw_label = cells[label_column];
        if (raw_label < 0.0) {
            throw IoError(IoError::Kind::BadValue,
                          path + ":" + std::to_string(line_no) +
                              ": negative label");
        }
        if (raw_label != std::floor(raw_label)) {
            throw IoError(IoError::Kind::BadValue,
                          path + ":" + std::to_string(line_no) +
                              ": non-integer label");
        }
        labels.push_back(static_cast<std::size_t>(raw_label));
        std::vector<double> feat;
        feat.reserve(width - 1);
        for (std::size_t i = 0; i < width; ++i) {
            if (i != label_column) {
                feat.push_back(cells[i]);
            }
        }
        rows.push_back(std::move(feat));
    }
    if (rows.empty()) {
        throw IoError(IoError::Kind::BadValue,
                      path + ": empty dataset (no data rows)");
    }
    DatasetBundle b;
    b.features = Matrix2D(rows.size(), width - 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(rows[r].begin(), rows[r].end(),
                  b.features.data.begin() +
                      static_cast<std::ptrdiff_t>(r * (width - 1)));
    }
    b.labels = std::move(labels);
    b.num_classes = 1 + *std::max_element(b.labels.begin(), b.labels.end());
    const std::size_t slash = path.find_last_of('/');
    b.name = slash == std::string::npos ? path : path.substr(slash + 1);
    validate_bundle(b); // rejects empty classes, e.g. labels {0,2}
    return b;
}

SplitView stratified_split(const DatasetBundle& b, double ratio,
                           std::uint64_t seed) {
    validate_bundle(b);
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ContractError("stratified_split: ratio must be in (0, 1), got " +
                            std::to_string(ratio));
    }
    std::vector<std::size_t> counts(b.num_classes, 0);
    for (std::size_t label : b.labels) {
        ++counts[label];
    }
    std::vector<std::size_t> quota(b.num_classes, 0);
    for (std::size_t c = 0; c < b.num_classes; ++c) {
        if (counts[c] < 2) {
            throw ContractError("stratified_split: class " +
                                std::to_string(c) +
                                " has fewer than 2 samples");
        }
        const double want = ratio * static_cast<double>(counts[c]);
        auto q = static_cast<std::size_t>(std::llround(want));
        // both sides of the split stay non-empty
        quota[c] = std::clamp<std::size_t>(q, 1, counts[c] - 1);
    }
    // One class-blind global shuffle; each class's first quota appearances go
    // to train. Because class ids only select quotas, renumbering classes
    // permutes nothing: the same samples land in the same side.
    std::vector<std::size_t> order(b.labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng64 rng(seed);
    rng.shuffle(order);
    SplitView view;
    view.ratio = ratio;
    std::vector<std::size_t> taken(b.num_classes, 0);
    for (std::size_t idx : order) {
        const std::size_t c = b.labels[idx];
        if (taken[c] < quota[c]) {
            ++taken[c];
            view.train_indices.push_back(idx);
        } else {
            view.test_indices.push_back(idx);
        }
    }
    return view;
}

CoBinning make_cobinning(std::size_t C, BinningKind kind, std::uint64_t seed) {
    if (C < 1) {
        throw ContractError("make_cobinning: need C >= 1");
    }
    CoBinning b;
    b.kind = kind;
    b.mapping.resize(C);
    for (std::size_t i = 0; i < C; ++i) {
        b.mapping[i] = i;
    }
    if (kind == BinningKind::Shuffled) {
        b.seed = seed;
        Rng64 rng(seed);
        rng.shuffle(b.mapping);
    }
    return b;
}

PairedBatches::PairedBatches(const DatasetBundle& x, const SplitView& x_split,
                             const DatasetBundle& y, const SplitView& y_split,
                             const CoBinning& binning, std::size_t half_batch,
                             std::uint64_t seed)
    : x_(&x), y_(&y), x_order_(x_split.train_indices),
      y_order_(y_split.train_indices), mapping_(binning.mapping),
      half_batch_(half_batch), rng_x_(0), rng_y_(0) {
    if (x.num_classes != y.num_classes ||
        binning.mapping.size() != x.num_classes) {
        throw ContractError(
            "paired_batches: class counts disagree: x has " +
            std::to_string(x.num_classes) + ", y has " +
            std::to_string(y.num_classes) + ", binning covers " +
            std::to_string(binning.mapping.size()));
    }
    if (half_batch == 0) {
        throw ContractError("paired_batches: half_batch must be >= 1");
    }
    if (x_order_.empty() || y_order_.empty()) {
        throw ContractError("paired_batches: empty training view");
    }
    // Two independent sub-streams so the X epoch order and the Y cycle do not
    // interleave draws.
    Rng64 master(seed);
    rng_x_ = Rng64(master.next_u64());
    rng_y_ = Rng64(master.next_u64());
    y_cursor_ = y_order_.size();
    x_cursor_ = x_order_.size(); // next() yields nothing until begin_epoch()
}

void PairedBatches::begin_epoch() {
    rng_x_.shuffle(x_order_);
    x_cursor_ = 0;
    rng_y_.shuffle(y_order_);
    y_cursor_ = 0;
}

bool PairedBatches::next(PairedBatch& out) {
    if (x_cursor_ >= x_order_.size()) {
        return false;
    }
    const std::size_t take =
        std::min(half_batch_, x_order_.size() - x_cursor_);
    out.x_indices.assign(x_order_.begin() + static_cast<std::ptrdiff_t>(x_cursor_),
                         x_order_.begin() +
                             static_cast<std::ptrdiff_t>(x_cursor_ + take));
    x_cursor_ += take;
    out.x_labels.resize(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.x_labels[i] = x_->labels[out.x_indices[i]];
    }
    // Matching-size draw from the cycling Y stream. When fewer than `take`
    // samples remain in the current pass, the stream reshuffles and restarts
    // (the short tail is skipped for that pass).
    if (take <= y_order_.size()) {
        if (y_cursor_ + take > y_order_.size()) {
            rng_y_.shuffle(y_order_);
            y_cursor_ = 0;
        }
        out.y_indices.assign(
            y_order_.begin() + static_cast<std::ptrdiff_t>(y_cursor_),
            y_order_.begin() + static_cast<std::ptrdiff_t>(y_cursor_ + take));
        y_cursor_ += take;
    } else {
        // Guide smaller than a half batch: cycle whole passes as needed.
        out.y_indices.clear();
        while (out.y_indices.size() < take) {
            if (y_cursor_ >= y_order_.size()) {
                rng_y_.shuffle(y_order_);
                y_cursor_ = 0;
            }
            out.y_indices.push_back(y_order_[y_cursor_++]);
        }
    }
    out.y_labels.resize(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.y_labels[i] = mapping_[y_->labels[out.y_indices[i]]];
    }
    return true;
}

std::size_t PairedBatches::steps_per_epoch() const {
    return (x_order_.size() + half_batch_ - 1) / half_batch_;
}

} // namespace gucnet
