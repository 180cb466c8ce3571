// Acceptance runner: one line per criterion, [PASS]/[FAIL] plus the measured
// values, exit 0 only if every criterion holds. Criteria that include a
// runtime budget fail when the budget is exceeded, even if the property
// itself holds.
//
// Usage: gucnet_acceptance --bin /path/to/gucnet

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "gucnet/data.hpp"
#include "gucnet/eval.hpp"
#include "gucnet/gradcheck.hpp"
#include "gucnet/matrix.hpp"
#include "gucnet/model.hpp"
#include "gucnet/prototypes.hpp"
#include "gucnet/rng.hpp"
#include "gucnet/training.hpp"

using namespace gucnet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_bin;   // path to the gucnet CLI binary
fs::path g_workdir;  // scratch directory for CLI-level checks

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = g_bin + " " + args + " >" + log.string() + " 2>" +
                            log.string() + ".err";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

Matrix2D random_matrix(std::size_t r, std::size_t c, Rng64& rng) {
    Matrix2D m(r, c);
    for (double& v : m.data) {
        v = rng.uniform(-1.0, 1.0);
    }
    return m;
}

DatasetBundle subset(const DatasetBundle& b,
                     const std::vector<std::size_t>& idx) {
    DatasetBundle out;
    out.features = Matrix2D(idx.size(), b.features.cols);
    out.labels.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t k = 0; k < b.features.cols; ++k) {
            out.features(r, k) = b.features(idx[r], k);
        }
        out.labels[r] = b.labels[idx[r]];
    }
    out.num_classes = b.num_classes;
    out.name = b.name + "/subset";
    return out;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Runner {
    int passed = 0;
    int total = 0;
    std::set<int> only; // empty = run everything

    void run(int id, const std::string& name, double budget_s,
             const std::function<Outcome()>& fn) {
        if (!only.empty() && only.count(id) == 0) {
            return;
        }
        ++total;
        const double t0 = now_seconds();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double dt = now_seconds() - t0;
        std::string note;
        if (budget_s > 0.0 && dt >= budget_s) {
            o.pass = false;
            note = fmt(" [over %.0f s budget]", budget_s);
        }
        if (o.pass) {
            ++passed;
        }
        std::printf("[%s] %2d %s: %s (%.1f s)%s\n", o.pass ? "PASS" : "FAIL",
                    id, name.c_str(), o.detail.c_str(), dt, note.c_str());
        std::fflush(stdout);
    }
};

// ---------------------------------------------------------------- criterion 1

std::size_t brute_hamming(const PrototypeSet& p, std::size_t a,
                          std::size_t b) {
    std::size_t d = 0;
    for (std::size_t k = 0; k < p.dim; ++k) {
        if (p.vectors(a, k) != p.vectors(b, k)) {
            ++d;
        }
    }
    return d;
}

Outcome criterion_geometry() {
    struct Case {
        std::size_t C, K, m, expect;
    };
    const Case cases[] = {{7, 128, 18, 36}, {10, 128, 12, 24}, {250, 256, 1, 2}};
    for (const Case& c : cases) {
        const PrototypeSet p = make_multi_hot(c.C, c.K, c.m);
        const auto dist = pairwise_hamming(p);
        for (std::size_t i = 0; i < c.C; ++i) {
            for (std::size_t j = 0; j < c.C; ++j) {
                const std::size_t want = i == j ? 0 : c.expect;
                if (dist[i][j] != want || dist[i][j] != brute_hamming(p, i, j)) {
                    return {false,
                            fmt("C=%zu K=%zu m=%zu: dist[%zu][%zu]=%zu, want "
                                "%zu (oracle %zu)",
                                c.C, c.K, c.m, i, j, dist[i][j], want,
                                brute_hamming(p, i, j))};
                }
            }
        }
    }
    return {true, "distances uniformly 36 / 24 / 2 and equal to the "
                  "brute-force oracle"};
}

// ---------------------------------------------------------------- criterion 2

Matrix2D bias_as_matrix(const std::vector<double>& b) {
    Matrix2D m(1, b.size());
    m.data = b;
    return m;
}

// Keeps the FD probe away from the non-differentiable points of the L1
// matching term and of ReLU: both margins must dominate the probe step.
bool kink_free(const Matrix2D& latent, const std::vector<std::size_t>& labels,
               const PrototypeSet& g, const TowerCache& cache) {
    double margin = 1e300;
    for (std::size_t r = 0; r < latent.rows; ++r) {
        for (std::size_t k = 0; k < latent.cols; ++k) {
            margin = std::min(
                margin, std::abs(latent(r, k) - g.vectors(labels[r], k)));
        }
    }
    for (std::size_t li = 0; li + 1 < cache.pre.size(); ++li) {
        for (double v : cache.pre[li].data) {
            margin = std::min(margin, std::abs(v));
        }
    }
    return margin > 1e-3;
}

bool relu_free(const TowerCache& cache) {
    for (std::size_t li = 0; li + 1 < cache.pre.size(); ++li) {
        for (double v : cache.pre[li].data) {
            if (std::abs(v) <= 1e-3) {
                return false;
            }
        }
    }
    return true;
}

Outcome criterion_gradients() {
    const double bar = 1e-4;
    const std::vector<std::size_t> labels{0, 1, 2, 3, 0, 1, 2, 3, 0, 1};
    const double alpha = 0.01;

    // Prototype pipeline fixture. Inputs cluster tightly per class and the
    // prototypes sit a fixed 0.01 off each class's latent: that keeps the
    // matching objective's value (and with it the FD quotient's cancellation
    // noise) small enough that even coordinates whose L1 gradient cancels to
    // exactly zero stay far below the error bar, while every |latent -
    // prototype| margin stays two decades clear of the h=1e-5 probe. The data
    // seed advances until the margins hold.
    const double offset = 0.01;
    FcnTower tower;
    ClassifierHead head;
    Matrix2D x;
    PrototypeSet g;
    TowerCache cache;
    Matrix2D latent;
    for (std::uint64_t seed = 29;; ++seed) {
        Rng64 rng(seed);
        tower = make_tower({6, 12, 16}, 0.5, rng);
        head = make_head(16, 4);
        head.W = random_matrix(16, 4, rng);
        for (double& b : head.b) {
            b = rng.uniform(-0.1, 0.1);
        }
        const Matrix2D centers = random_matrix(4, 6, rng);
        x = Matrix2D(10, 6);
        for (std::size_t r = 0; r < 10; ++r) {
            for (std::size_t k = 0; k < 6; ++k) {
                x(r, k) = centers(labels[r], k) + 1e-4 * rng.uniform(-1.0, 1.0);
            }
        }
        cache = TowerCache{};
        latent = forward_latent(tower, x, nullptr, false, &cache);

        g = PrototypeSet{};
        g.num_classes = 4;
        g.dim = 16;
        g.vectors = Matrix2D(4, 16);
        for (std::size_t c = 0; c < 4; ++c) {
            // The first sample of each class anchors its prototype.
            const std::size_t anchor = c;
            for (std::size_t k = 0; k < 16; ++k) {
                const double s = (k + c) % 2 == 0 ? offset : -offset;
                g.vectors(c, k) = latent(anchor, k) + s;
            }
        }
        if (kink_free(latent, labels, g, cache)) {
            break;
        }
    }

    const LossGrad ce = cross_entropy_loss(head_logits(head, latent), labels);
    const LossGrad ml = matching_loss(latent, labels, g);
    const HeadBackward hb = head_backward(head, latent, ce.grad);
    Matrix2D dcomb = hb.dlatent;
    for (std::size_t i = 0; i < dcomb.data.size(); ++i) {
        dcomb.data[i] += alpha * ml.grad.data[i];
    }
    const TowerGrads tg_ce = tower_backward(tower, cache, hb.dlatent);
    const TowerGrads tg_ml = tower_backward(tower, cache, ml.grad);
    const TowerGrads tg_comb = tower_backward(tower, cache, dcomb);

    auto tower_objective = [&](const FcnTower& t, const ClassifierHead& h,
                               int kind) {
        const Matrix2D lat = forward_latent_eval(t, x);
        const double c = cross_entropy_loss(head_logits(h, lat), labels).loss;
        const double m = matching_loss(lat, labels, g).loss;
        if (kind == 0) return c;
        if (kind == 1) return m;
        return total_loss(c, m, alpha);
    };

    auto probe_pipeline = [&](int kind, const TowerGrads& tg,
                              bool include_head) {
        std::vector<std::pair<Matrix2D, Matrix2D>> tensors;
        std::vector<std::function<double(const Matrix2D&)>> evals;
        for (std::size_t li = 0; li < tower.layers.size(); ++li) {
            tensors.emplace_back(tower.layers[li].W, tg.layers[li].W);
            evals.emplace_back([&, li, kind](const Matrix2D& p) {
                FcnTower t = tower;
                t.layers[li].W = p;
                return tower_objective(t, head, kind);
            });
            tensors.emplace_back(bias_as_matrix(tower.layers[li].b),
                                 bias_as_matrix(tg.layers[li].b));
            evals.emplace_back([&, li, kind](const Matrix2D& p) {
                FcnTower t = tower;
                t.layers[li].b = p.data;
                return tower_objective(t, head, kind);
            });
        }
        if (include_head) {
            tensors.emplace_back(head.W, hb.grads.W);
            evals.emplace_back([&, kind](const Matrix2D& p) {
                ClassifierHead h = head;
                h.W = p;
                return tower_objective(tower, h, kind);
            });
            tensors.emplace_back(bias_as_matrix(head.b),
                                 bias_as_matrix(hb.grads.b));
            evals.emplace_back([&, kind](const Matrix2D& p) {
                ClassifierHead h = head;
                h.b = p.data;
                return tower_objective(tower, h, kind);
            });
        }
        double worst = 0.0;
        for (std::size_t t = 0; t < tensors.size(); ++t) {
            worst = std::max(worst, grad_check(evals[t], tensors[t].first,
                                               tensors[t].second, 1e-5));
        }
        return worst;
    };

    const double err_ce = probe_pipeline(0, tg_ce, true);
    const double err_ml = probe_pipeline(1, tg_ml, false);
    // The combined probe also certifies that the matching term contributes
    // exactly nothing to the head gradient.
    const double err_comb = probe_pipeline(2, tg_comb, true);

    // Texture pipeline: two towers into the one head, CE over the vstack.
    FcnTower tx, ty;
    ClassifierHead thead;
    Matrix2D xx, yy;
    TowerCache cx, cy;
    const std::vector<std::size_t> tlabels{0, 1, 2, 3, 0, 1, 2, 3, 0, 1,
                                           2, 3, 0, 1, 2, 3, 0, 1, 2, 3};
    for (std::uint64_t seed = 47;; ++seed) {
        Rng64 rng(seed);
        tx = make_tower({6, 12, 16}, 0.5, rng);
        ty = make_tower({5, 12, 16}, 0.5, rng);
        thead = make_head(16, 4);
        thead.W = random_matrix(16, 4, rng);
        for (double& b : thead.b) {
            b = rng.uniform(-0.1, 0.1);
        }
        xx = random_matrix(10, 6, rng);
        yy = random_matrix(10, 5, rng);
        cx = TowerCache{};
        cy = TowerCache{};
        forward_latent(tx, xx, nullptr, false, &cx);
        forward_latent(ty, yy, nullptr, false, &cy);
        if (relu_free(cx) && relu_free(cy)) {
            break;
        }
    }
    auto vstack2 = [](const Matrix2D& a, const Matrix2D& b) {
        Matrix2D out(a.rows + b.rows, a.cols);
        std::copy(a.data.begin(), a.data.end(), out.data.begin());
        std::copy(b.data.begin(), b.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
        return out;
    };
    auto tex_objective = [&](const FcnTower& a, const FcnTower& b,
                             const ClassifierHead& h) {
        const Matrix2D lat =
            vstack2(forward_latent_eval(a, xx), forward_latent_eval(b, yy));
        return cross_entropy_loss(head_logits(h, lat), tlabels).loss;
    };
    const Matrix2D lx = cx.act.back();
    const Matrix2D ly = cy.act.back();
    const Matrix2D lat = vstack2(lx, ly);
    const LossGrad tce = cross_entropy_loss(head_logits(thead, lat), tlabels);
    const HeadBackward thb = head_backward(thead, lat, tce.grad);
    Matrix2D dxm(lx.rows, lx.cols), dym(ly.rows, ly.cols);
    std::copy(thb.dlatent.data.begin(),
              thb.dlatent.data.begin() +
                  static_cast<std::ptrdiff_t>(dxm.data.size()),
              dxm.data.begin());
    std::copy(thb.dlatent.data.begin() +
                  static_cast<std::ptrdiff_t>(dxm.data.size()),
              thb.dlatent.data.end(), dym.data.begin());
    const TowerGrads tgx = tower_backward(tx, cx, dxm);
    const TowerGrads tgy = tower_backward(ty, cy, dym);

    double err_tex = 0.0;
    for (std::size_t li = 0; li < tx.layers.size(); ++li) {
        auto fw = [&](const Matrix2D& p) {
            FcnTower t = tx;
            t.layers[li].W = p;
            return tex_objective(t, ty, thead);
        };
        err_tex = std::max(err_tex,
                           grad_check(fw, tx.layers[li].W, tgx.layers[li].W,
                                      1e-5));
        auto fb = [&](const Matrix2D& p) {
            FcnTower t = tx;
            t.layers[li].b = p.data;
            return tex_objective(t, ty, thead);
        };
        err_tex = std::max(
            err_tex, grad_check(fb, bias_as_matrix(tx.layers[li].b),
                                bias_as_matrix(tgx.layers[li].b), 1e-5));
    }
    for (std::size_t li = 0; li < ty.layers.size(); ++li) {
        auto fw = [&](const Matrix2D& p) {
            FcnTower t = ty;
            t.layers[li].W = p;
            return tex_objective(tx, t, thead);
        };
        err_tex = std::max(err_tex,
                           grad_check(fw, ty.layers[li].W, tgy.layers[li].W,
                                      1e-5));
        auto fb = [&](const Matrix2D& p) {
            FcnTower t = ty;
            t.layers[li].b = p.data;
            return tex_objective(tx, t, thead);
        };
        err_tex = std::max(
            err_tex, grad_check(fb, bias_as_matrix(ty.layers[li].b),
                                bias_as_matrix(tgy.layers[li].b), 1e-5));
    }
    auto fhw = [&](const Matrix2D& p) {
        ClassifierHead h = thead;
        h.W = p;
        return tex_objective(tx, ty, h);
    };
    err_tex = std::max(err_tex, grad_check(fhw, thead.W, thb.grads.W, 1e-5));
    auto fhb = [&](const Matrix2D& p) {
        ClassifierHead h = thead;
        h.b = p.data;
        return tex_objective(tx, ty, h);
    };
    err_tex = std::max(err_tex, grad_check(fhb, bias_as_matrix(thead.b),
                                           bias_as_matrix(thb.grads.b), 1e-5));

    const double worst =
        std::max(std::max(err_ce, err_ml), std::max(err_comb, err_tex));
    return {worst < bar,
            fmt("max rel err vs central FD (h=1e-5): ce=%.2e ml=%.2e "
                "combined=%.2e texture=%.2e, bar 1e-4",
                err_ce, err_ml, err_comb, err_tex)};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_determinism() {
    const fs::path dir = g_workdir / "determinism";
    fs::create_directories(dir);
    auto config = [&](const std::string& out) {
        return std::string("{\n") +
               "  \"mode\": \"prototype\",\n  \"seed\": 9,\n"
               "  \"epochs\": 6,\n  \"batch_size\": 16,\n"
               "  \"latent_dim\": 16,\n  \"hidden_dims\": [32],\n"
               "  \"alpha\": 0.01,\n"
               "  \"data\": {\"kind\": \"synthetic\", \"classes\": 4, "
               "\"dim\": 12, \"per_class\": 50, \"sigma\": 0.45},\n"
               "  \"guide\": {\"kind\": \"prototype\", \"prototypes\": "
               "\"h_max\"},\n"
               "  \"output_dir\": \"" + out + "\"\n}\n";
    };
    write_text(dir / "cfg1.json", config((dir / "run1").string()));
    write_text(dir / "cfg2.json", config((dir / "run2").string()));
    const int rc1 =
        run_cli("train --config " + (dir / "cfg1.json").string(),
                dir / "log1.txt");
    const int rc2 =
        run_cli("train --config " + (dir / "cfg2.json").string(),
                dir / "log2.txt");
    if (rc1 != 0 || rc2 != 0) {
        return {false, fmt("train exited %d / %d", rc1, rc2)};
    }
    const std::string m1 = slurp(dir / "run1" / "metrics.jsonl");
    const std::string m2 = slurp(dir / "run2" / "metrics.jsonl");
    const std::string c1 = slurp(dir / "run1" / "checkpoint.gucw");
    const std::string c2 = slurp(dir / "run2" / "checkpoint.gucw");
    if (m1.empty() || c1.empty()) {
        return {false, "first run produced empty outputs"};
    }
    const bool same_metrics = m1 == m2;
    const bool same_ckpt = c1 == c2;
    return {same_metrics && same_ckpt,
            fmt("two CLI train runs: metrics.jsonl %s (%zu bytes), "
                "checkpoint.gucw %s (%zu bytes)",
                same_metrics ? "byte-identical" : "DIFFER", m1.size(),
                same_ckpt ? "bit-identical" : "DIFFER", c1.size())};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion_separable_guide() {
    const DatasetBundle guide = gen_gaussian_mixture(10, 64, 200, 1.0, 0.05, 4);
    TrainConfig cfg;
    cfg.mode = Mode::Baseline;
    cfg.seed = 4;
    const TrainResult r = train_baseline(guide, cfg);
    double best = 0.0;
    int best_epoch = 0;
    for (const EpochMetrics& m : r.metrics) {
        if (m.test_acc > best) {
            best = m.test_acc;
            best_epoch = m.epoch;
        }
    }
    return {best >= 0.99,
            fmt("separable 10-class guide: best test accuracy %.4f at epoch "
                "%d (final %.4f), need >= 0.99",
                best, best_epoch, r.metrics.back().test_acc)};
}

// ------------------------------------------------------- criteria 5 through 7

struct BenchmarkRuns {
    DatasetBundle x;
    DatasetBundle guide;
    double base_acc = 0.0;
    double proto_acc = 0.0;
    double tex_acc = 0.0;
    std::optional<GucnetModel> tex_model;
    std::optional<SplitView> tex_split;
};

// The benchmark datasets are shared across criteria 5-7 and 10; any of them
// may run first under --only.
void ensure_bench_data(BenchmarkRuns& b) {
    if (b.x.features.data.empty()) {
        b.x = gen_gaussian_mixture(7, 64, 400, 1.0, 0.9, 1);
        b.guide = gen_gaussian_mixture(7, 64, 400, 1.0, 0.05, 7);
    }
}

Outcome criterion_guided_improvement(BenchmarkRuns& b) {
    ensure_bench_data(b);

    TrainConfig cfg;
    cfg.seed = 1;

    cfg.mode = Mode::Baseline;
    const TrainResult base = train_baseline(b.x, cfg);
    b.base_acc = base.metrics.back().test_acc;

    cfg.mode = Mode::Prototype;
    const PrototypeSet g = make_hmax_variant(7, cfg.latent_dim,
                                             HammingLevel::HMax);
    const TrainResult proto = train_prototype(b.x, g, cfg);
    b.proto_acc = proto.metrics.back().test_acc;

    cfg.mode = Mode::Texture;
    const CoBinning identity = make_cobinning(7, BinningKind::Identity, 0);
    const TrainResult tex = train_texture(b.x, b.guide, identity, cfg);
    b.tex_acc = tex.metrics.back().test_acc;
    b.tex_model = tex.model;
    b.tex_split = tex.split;

    const double dp = b.proto_acc - b.base_acc;
    const double dt = b.tex_acc - b.base_acc;
    // Calibration: the baseline must land in (0.5, 0.95), and its exact value
    // is frozen as a regression constant (604 of 840 test samples, measured on
    // the reference build; the count is summation-order sensitive, so a
    // different kernel build may drift and should re-freeze).
    const double golden = 604.0 / 840.0;
    const bool band = b.base_acc > 0.5 && b.base_acc < 0.95;
    const bool regression = std::abs(b.base_acc - golden) < 0.5 / 840.0;
    const bool pass = band && regression && dp >= 0.02 && dt >= 0.02;
    return {pass,
            fmt("cluttered benchmark: baseline %.4f (band (0.5,0.95) %s, "
                "golden 604/840 %s), prototype %.4f (%+.2f pts), texture %.4f "
                "(%+.2f pts), need +2.00 pts each",
                b.base_acc, band ? "ok" : "VIOLATED",
                regression ? "ok" : "DRIFTED", b.proto_acc, dp * 100.0,
                b.tex_acc, dt * 100.0)};
}

Outcome criterion_hamming_trend(BenchmarkRuns& b) {
    ensure_bench_data(b);
    TrainConfig cfg;
    cfg.mode = Mode::Prototype;
    cfg.seed = 1;
    const AblationReport rep = ablate_hamming(b.x, cfg);
    // Conditions arrive in the declared order: random_unit, h2, h_half, h_max.
    const double random_unit = rep.conditions[0].report.accuracy;
    const double h2 = rep.conditions[1].report.accuracy;
    const double h_half = rep.conditions[2].report.accuracy;
    const double h_max = rep.conditions[3].report.accuracy;
    const double best = std::max(std::max(random_unit, h2),
                                 std::max(h_half, h_max));
    const bool pass = h_max >= h2 - 0.005 && h_max >= random_unit &&
                      h_max >= best - 0.005;
    return {pass,
            fmt("h_max %.4f vs h2 %.4f, h_half %.4f, random_unit %.4f; need "
                "h_max >= h2 - 0.5pt, >= random_unit, within 0.5pt of best",
                h_max, h2, h_half, random_unit)};
}

Outcome criterion_binning_invariance(BenchmarkRuns& b) {
    ensure_bench_data(b);
    TrainConfig cfg;
    cfg.mode = Mode::Texture;
    cfg.seed = 1;
    const AblationReport rep =
        ablate_binning(b.x, b.guide, cfg, {101, 102, 103});
    const double identity = rep.conditions[0].report.accuracy;
    double worst_gap = 0.0;
    std::string gaps;
    for (std::size_t i = 1; i < rep.conditions.size(); ++i) {
        const double gap =
            std::abs(identity - rep.conditions[i].report.accuracy);
        worst_gap = std::max(worst_gap, gap);
        gaps += fmt("%s%s %.4f", i > 1 ? ", " : "",
                    rep.conditions[i].label.c_str(),
                    rep.conditions[i].report.accuracy);
    }
    return {worst_gap <= 0.02,
            fmt("identity %.4f vs %s; worst |gap| %.2f pts, allowed 2.00",
                identity, gaps.c_str(), worst_gap * 100.0)};
}

// ---------------------------------------------------------------- criterion 8

bool same_params(const FcnTower& a, const FcnTower& c) {
    if (a.layers.size() != c.layers.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (a.layers[i].W.data != c.layers[i].W.data ||
            a.layers[i].b != c.layers[i].b) {
            return false;
        }
    }
    return true;
}

Outcome criterion_alpha_zero() {
    const DatasetBundle x = gen_gaussian_mixture(4, 12, 60, 1.0, 0.45, 11);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 16;
    cfg.latent_dim = 16;
    cfg.hidden_dims = {32, 16};
    cfg.seed = 3;

    cfg.mode = Mode::Baseline;
    const TrainResult base = train_baseline(x, cfg);

    cfg.mode = Mode::Prototype;
    cfg.alpha = 0.0;
    cfg.alternation = Alternation::Joint;
    const PrototypeSet g = make_hmax_variant(4, 16, HammingLevel::HMax);
    const TrainResult proto = train_prototype(x, g, cfg);

    if (base.metrics.size() != proto.metrics.size()) {
        return {false, "epoch counts differ"};
    }
    for (std::size_t i = 0; i < base.metrics.size(); ++i) {
        if (base.metrics[i].ce_loss != proto.metrics[i].ce_loss ||
            base.metrics[i].train_acc != proto.metrics[i].train_acc ||
            base.metrics[i].test_acc != proto.metrics[i].test_acc) {
            return {false, fmt("epoch %zu metrics diverge: ce %.17g vs %.17g",
                               i + 1, base.metrics[i].ce_loss,
                               proto.metrics[i].ce_loss)};
        }
    }
    const bool params_equal =
        same_params(base.model.tower_x, proto.model.tower_x) &&
        base.model.head.W.data == proto.model.head.W.data &&
        base.model.head.b == proto.model.head.b;
    return {params_equal,
            fmt("alpha=0 joint prototype run reproduces the baseline: all %zu "
                "epoch metrics and every parameter bit-identical",
                base.metrics.size())};
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion_numeric_invariants() {
    Rng64 rng(77);

    // Softmax rows sum to 1, including rows that would overflow a naive exp.
    Matrix2D z = random_matrix(64, 7, rng);
    for (double& v : z.data) {
        v *= 30.0;
    }
    for (std::size_t j = 0; j < 7; ++j) {
        z(0, j) = 1000.0;
        z(1, j) = j == 3 ? 1000.0 : -1000.0;
    }
    const Matrix2D sm = softmax_rows(z);
    double worst_row = 0.0;
    for (std::size_t r = 0; r < sm.rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < sm.cols; ++j) {
            s += sm(r, j);
        }
        worst_row = std::max(worst_row, std::abs(s - 1.0));
    }
    if (worst_row > 1e-9) {
        return {false, fmt("softmax row sum off by %.2e (> 1e-9)", worst_row)};
    }

    // Softmax-CE gradient rows sum to 0.
    std::vector<std::size_t> labels(64);
    for (std::size_t i = 0; i < 64; ++i) {
        labels[i] = i % 7;
    }
    const LossGrad ce = cross_entropy_loss(z, labels);
    double worst_grad = 0.0;
    for (std::size_t r = 0; r < ce.grad.rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < ce.grad.cols; ++j) {
            s += ce.grad(r, j);
        }
        worst_grad = std::max(worst_grad, std::abs(s));
    }
    if (worst_grad > 1e-12) {
        return {false,
                fmt("CE gradient row sum off by %.2e (> 1e-12)", worst_grad)};
    }

    // Matching loss is exactly zero, with exactly zero gradient, when every
    // latent sits on its prototype.
    const PrototypeSet g = make_multi_hot(4, 16, 4);
    Matrix2D on(8, 16);
    std::vector<std::size_t> on_labels(8);
    for (std::size_t r = 0; r < 8; ++r) {
        on_labels[r] = r % 4;
        for (std::size_t k = 0; k < 16; ++k) {
            on(r, k) = g.vectors(on_labels[r], k);
        }
    }
    const LossGrad ml = matching_loss(on, on_labels, g);
    if (ml.loss != 0.0) {
        return {false, fmt("matching loss %.2e on matched latents", ml.loss)};
    }
    for (double v : ml.grad.data) {
        if (v != 0.0) {
            return {false, "matching gradient nonzero on matched latents"};
        }
    }

    // GFV1 round-trip, value- and byte-exact.
    const fs::path dir = g_workdir / "roundtrip";
    fs::create_directories(dir);
    const DatasetBundle ds = gen_gaussian_mixture(5, 9, 17, 1.0, 0.6, 13);
    save_gfv1(ds, (dir / "a.gfv1").string());
    const DatasetBundle back = load_gfv1((dir / "a.gfv1").string());
    if (back.features.data != ds.features.data || back.labels != ds.labels ||
        back.num_classes != ds.num_classes) {
        return {false, "GFV1 round-trip changed values"};
    }
    save_gfv1(back, (dir / "b.gfv1").string());
    if (slurp(dir / "a.gfv1") != slurp(dir / "b.gfv1")) {
        return {false, "GFV1 re-save is not byte-identical"};
    }

    // GUCW round-trip on a two-tower model.
    Rng64 mrng(21);
    GucnetModel model;
    model.mode = Mode::Texture;
    model.tower_x = make_tower({9, 24, 16}, 0.5, mrng);
    model.tower_y = make_tower({5, 24, 16}, 0.5, mrng);
    model.head = make_head(16, 5);
    model.head.W = random_matrix(16, 5, mrng);
    for (double& v : model.head.b) {
        v = mrng.uniform(-0.2, 0.2);
    }
    save_gucw(model, (dir / "a.gucw").string());
    const GucnetModel mback = load_gucw((dir / "a.gucw").string());
    if (!same_params(model.tower_x, mback.tower_x) ||
        !mback.tower_y.has_value() ||
        !same_params(*model.tower_y, *mback.tower_y) ||
        mback.head.W.data != model.head.W.data ||
        mback.head.b != model.head.b || mback.mode != Mode::Texture) {
        return {false, "GUCW round-trip changed the model"};
    }
    save_gucw(mback, (dir / "b.gucw").string());
    if (slurp(dir / "a.gucw") != slurp(dir / "b.gucw")) {
        return {false, "GUCW re-save is not byte-identical"};
    }

    return {true,
            fmt("softmax row sums within %.1e, CE grad row sums within %.1e, "
                "matching loss exactly 0 on matched latents, GFV1/GUCW "
                "round-trips byte-exact",
                worst_row, worst_grad)};
}

// --------------------------------------------------------------- criterion 10

Outcome criterion_guide_free(BenchmarkRuns& b) {
    ensure_bench_data(b);
    if (!b.tex_model || !b.tex_split) {
        // The shared texture run is missing (criterion 5 did not run); train
        // the same identity-binned texture model here.
        TrainConfig cfg;
        cfg.mode = Mode::Texture;
        cfg.seed = 1;
        const CoBinning identity = make_cobinning(7, BinningKind::Identity, 0);
        const TrainResult tex = train_texture(b.x, b.guide, identity, cfg);
        b.tex_model = tex.model;
        b.tex_split = tex.split;
    }
    const fs::path dir = g_workdir / "guide_free";
    fs::create_directories(dir);

    // The directory holds the checkpoint and X test rows — nothing else. No
    // guide features, prototypes or binning are written anywhere.
    save_gucw(*b.tex_model, (dir / "texture.gucw").string());
    const DatasetBundle xtest = subset(b.x, b.tex_split->test_indices);
    save_gfv1(xtest, (dir / "xtest.gfv1").string());

    const GucnetModel loaded = load_gucw((dir / "texture.gucw").string());
    const EvalReport lib_eval = evaluate(loaded, xtest);
    const EvalReport mem_eval = evaluate(*b.tex_model, b.x,
                                         b.tex_split->test_indices);
    if (lib_eval.accuracy != mem_eval.accuracy) {
        return {false,
                fmt("reloaded accuracy %.6f != in-memory %.6f",
                    lib_eval.accuracy, mem_eval.accuracy)};
    }

    const int rc = run_cli("eval --checkpoint " +
                               (dir / "texture.gucw").string() + " --data " +
                               (dir / "xtest.gfv1").string(),
                           dir / "eval.json");
    if (rc != 0) {
        return {false, fmt("CLI eval exited %d", rc)};
    }
    const json rep = json::parse(slurp(dir / "eval.json"));
    const double cli_acc = rep.at("accuracy").get<double>();
    if (cli_acc != lib_eval.accuracy) {
        return {false, fmt("CLI accuracy %.6f != library %.6f", cli_acc,
                           lib_eval.accuracy)};
    }

    std::size_t entries = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        (void)e;
        ++entries;
    }
    return {true, fmt("texture checkpoint evaluated X-only via library and "
                      "CLI, accuracy %.4f, %zu files present (checkpoint, "
                      "test data, eval output)",
                      cli_acc, entries)};
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--bin" && i + 1 < argc) {
            g_bin = argv[++i];
        } else if (arg == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                only.insert(std::stoi(tok));
            }
        } else {
            std::fprintf(stderr,
                         "usage: %s --bin /path/to/gucnet [--only 1,2,...]\n",
                         argv[0]);
            return 2;
        }
    }
    if (g_bin.empty()) {
        std::fprintf(stderr,
                     "usage: %s --bin /path/to/gucnet [--only 1,2,...]\n",
                     argv[0]);
        return 2;
    }

    g_workdir = fs::temp_directory_path() / "gucnet_acceptance";
    fs::remove_all(g_workdir);
    fs::create_directories(g_workdir);

    std::printf("gucnet acceptance: bin=%s workdir=%s\n", g_bin.c_str(),
                g_workdir.string().c_str());
    std::fflush(stdout);

    Runner run;
    run.only = only;
    BenchmarkRuns bench;

    run.run(1, "prototype geometry exactness", 1.0, criterion_geometry);
    run.run(2, "gradient correctness", 30.0, criterion_gradients);
    run.run(3, "training determinism", 0.0, criterion_determinism);
    run.run(4, "separable guide sanity", 120.0, criterion_separable_guide);
    run.run(5, "guided improvement", 300.0,
            [&] { return criterion_guided_improvement(bench); });
    run.run(6, "hamming separability trend", 600.0,
            [&] { return criterion_hamming_trend(bench); });
    run.run(7, "co-binning invariance", 0.0,
            [&] { return criterion_binning_invariance(bench); });
    run.run(8, "alpha-zero degeneracy", 0.0, criterion_alpha_zero);
    run.run(9, "numeric invariant suite", 0.0, criterion_numeric_invariants);
    run.run(10, "guide-free inference", 0.0,
            [&] { return criterion_guide_free(bench); });

    std::printf("acceptance: %d/%d criteria passed\n", run.passed, run.total);
    return run.passed == run.total ? 0 : 1;
}
