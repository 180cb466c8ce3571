#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gucnet/data.hpp"
#include "gucnet/errors.hpp"
#include "gucnet/eval.hpp"
#include "gucnet/experiment.hpp"
#include "gucnet/model.hpp"
#include "gucnet/training.hpp"

namespace fs = std::filesystem;
using namespace gucnet;

namespace {

DatasetBundle subset_bundle(const DatasetBundle& b,
                            const std::vector<std::size_t>& indices,
                            const std::string& name) {
    DatasetBundle out;
    out.num_classes = b.num_classes;
    out.name = name;
    out.features = Matrix2D(indices.size(), b.features.cols);
    out.labels.resize(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t src = indices[r];
        std::copy(b.features.data.begin() +
                      static_cast<std::ptrdiff_t>(src * b.features.cols),
                  b.features.data.begin() +
                      static_cast<std::ptrdiff_t>((src + 1) * b.features.cols),
                  out.features.data.begin() +
                      static_cast<std::ptrdiff_t>(r * b.features.cols));
        out.labels[r] = b.labels[src];
    }
    return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError(IoError::Kind::OpenFailed,
                      "cannot open for writing: " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError(IoError::Kind::OpenFailed,
                      "write failed: " + path.string());
    }
}

int run_gen_data(const std::string& kind, std::size_t classes, std::size_t dim,
                 std::size_t per_class, double sigma, double radius,
                 std::uint64_t seed, const std::string& output) {
    const DatasetBundle b =
        gen_gaussian_mixture(classes, dim, per_class, radius, sigma, seed);
    save_gfv1(b, output);
    std::printf("wrote %s (%s): N=%zu D=%zu C=%zu\n", output.c_str(),
                kind.c_str(), b.features.rows, b.features.cols,
                b.num_classes);
    return 0;
}

int run_train(const std::string& config_path) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const DatasetBundle x = realize_data(cfg.data);

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    switch (cfg.train.mode) {
    case Mode::Baseline:
        result = train_baseline(x, cfg.train);
        break;
    case Mode::Prototype: {
        const PrototypeSet p = realize_prototypes(*cfg.guide, x.num_classes,
                                                  cfg.train.latent_dim);
        result = train_prototype(x, p, cfg.train);
        break;
    }
    case Mode::Texture: {
        const DatasetBundle y = realize_data(cfg.guide->data);
        const CoBinning binning = make_cobinning(
            x.num_classes, cfg.binning->kind, cfg.binning->seed);
        result = train_texture(x, y, binning, cfg.train);
        break;
    }
    }
    const auto total_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count();

    // Measured epoch times go to stderr only; the metrics file pins wall_ms
    // to 0 so reruns are byte-identical.
    for (const EpochMetrics& m : result.metrics) {
        std::fprintf(stderr,
                     "epoch %d/%d ce=%.6f train=%.4f test=%.4f (%llu ms)\n",
                     m.epoch, cfg.train.epochs, m.ce_loss, m.train_acc,
                     m.test_acc, static_cast<unsigned long long>(m.wall_ms));
    }
    std::fprintf(stderr, "total %lld ms\n",
                 static_cast<long long>(total_ms));

    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);

    std::string metrics_text;
    for (const EpochMetrics& m : result.metrics) {
        metrics_text += metrics_jsonl_line(m);
        metrics_text += '\n';
    }
    write_text_file(dir / "metrics.jsonl", metrics_text);

    save_gucw(result.model, (dir / "checkpoint.gucw").string());

    const DatasetBundle test =
        subset_bundle(x, result.split.test_indices, "test");
    save_gfv1(test, (dir / "test.gfv1").string());

    const EvalReport final_eval =
        evaluate(result.model, x, result.split.test_indices);
    write_text_file(dir / "report.json",
                    train_report_json(cfg, result, final_eval) + "\n");

    std::printf("wrote %s\n", (dir / "checkpoint.gucw").c_str());
    std::printf("wrote %s\n", (dir / "metrics.jsonl").c_str());
    std::printf("wrote %s\n", (dir / "report.json").c_str());
    std::printf("wrote %s\n", (dir / "test.gfv1").c_str());
    std::printf("test_accuracy=%.6f\n", final_eval.accuracy);
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data_path) {
    const GucnetModel model = load_gucw(checkpoint);
    const DatasetBundle data = load_gfv1(data_path);
    const EvalReport rep = evaluate(model, data);
    std::cout << eval_report_json(rep) << "\n";
    return 0;
}

int run_ablate(const std::string& config_path, const std::string& study,
               const std::vector<std::uint64_t>& shuffle_seeds,
               std::size_t jobs) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    AblationReport rep;
    if (study == "hamming") {
        if (cfg.train.mode != Mode::Prototype) {
            throw ConfigError(
                "--study hamming requires a prototype-mode config");
        }
        const DatasetBundle x = realize_data(cfg.data);
        rep = ablate_hamming(x, cfg.train,
                             {HammingCondition::RandomUnit,
                              HammingCondition::H2, HammingCondition::HHalf,
                              HammingCondition::HMax},
                             jobs);
    } else {
        if (cfg.train.mode != Mode::Texture) {
            throw ConfigError(
                "--study binning requires a texture-mode config");
        }
        const DatasetBundle x = realize_data(cfg.data);
        const DatasetBundle y = realize_data(cfg.guide->data);
        rep = ablate_binning(x, y, cfg.train, shuffle_seeds, jobs);
    }

    fs::create_directories(cfg.output_dir);
    const fs::path out =
        fs::path(cfg.output_dir) / ("ablation_" + study + ".json");
    write_text_file(out, ablation_report_json(rep) + "\n");

    for (const AblationCondition& c : rep.conditions) {
        std::printf("%-24s accuracy=%.6f\n", c.label.c_str(),
                    c.report.accuracy);
    }
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"guided-clustering classifier: training, evaluation and "
                 "ablation experiments on feature-vector bundles"};
    app.require_subcommand(1);

    // gen-data
    std::string gen_kind = "cluttered";
    std::size_t gen_classes = 7;
    std::size_t gen_dim = 64;
    std::size_t gen_per_class = 400;
    double gen_sigma = 0.0;
    double gen_radius = 1.0;
    std::uint64_t gen_seed = 1;
    std::string gen_output;
    CLI::App* gen = app.add_subcommand(
        "gen-data", "Generate a synthetic GFV1 feature bundle");
    gen->add_option("--kind", gen_kind,
                    "Preset: cluttered (sigma 0.9) or separable (sigma 0.05)")
        ->check(CLI::IsMember({"cluttered", "separable"}));
    gen->add_option("--classes", gen_classes, "Number of classes")
        ->default_val(7);
    gen->add_option("--dim", gen_dim, "Feature dimension")->default_val(64);
    gen->add_option("--per-class", gen_per_class, "Samples per class")
        ->default_val(400);
    CLI::Option* gen_sigma_opt = gen->add_option(
        "--sigma", gen_sigma, "Noise scale (overrides the kind preset)");
    gen->add_option("--radius", gen_radius, "Class-center sphere radius")
        ->default_val(1.0);
    gen->add_option("--seed", gen_seed, "Generator seed")->default_val(1);
    gen->add_option("-o,--output", gen_output, "GFV1 output path")
        ->required();

    // train
    std::string train_config;
    CLI::App* train = app.add_subcommand(
        "train", "Train a model from a JSON experiment config");
    train->add_option("--config", train_config, "Experiment config path")
        ->required();

    // eval
    std::string eval_checkpoint;
    std::string eval_data;
    CLI::App* eval = app.add_subcommand(
        "eval", "Evaluate a checkpoint on a GFV1 bundle");
    eval->add_option("--checkpoint", eval_checkpoint, "GUCW checkpoint path")
        ->required();
    eval->add_option("--data", eval_data, "GFV1 data path")->required();

    // ablate
    std::string ablate_config;
    std::string ablate_study;
    std::vector<std::uint64_t> ablate_seeds = {101, 102, 103};
    std::size_t ablate_jobs = 1;
    CLI::App* ablate = app.add_subcommand(
        "ablate", "Run an ablation study from an experiment config");
    ablate->add_option("--config", ablate_config, "Experiment config path")
        ->required();
    ablate->add_option("--study", ablate_study, "hamming or binning")
        ->required()
        ->check(CLI::IsMember({"hamming", "binning"}));
    ablate->add_option("--shuffle-seeds", ablate_seeds,
                       "Binning study: seeds for the shuffled conditions");
    ablate->add_option("--jobs", ablate_jobs,
                       "Max conditions trained concurrently")
        ->default_val(1)
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            const double sigma = gen_sigma_opt->count() > 0
                                     ? gen_sigma
                                     : (gen_kind == "cluttered" ? 0.9 : 0.05);
            return run_gen_data(gen_kind, gen_classes, gen_dim, gen_per_class,
                                sigma, gen_radius, gen_seed, gen_output);
        }
        if (train->parsed()) {
            return run_train(train_config);
        }
        if (eval->parsed()) {
            return run_eval(eval_checkpoint, eval_data);
        }
        if (ablate->parsed()) {
            return run_ablate(ablate_config, ablate_study, ablate_seeds,
                              ablate_jobs);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
