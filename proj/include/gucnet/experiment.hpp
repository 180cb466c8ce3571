#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gucnet/data.hpp"
#include "gucnet/eval.hpp"
#include "gucnet/prototypes.hpp"
#include "gucnet/training.hpp"

namespace gucnet {

// Where a dataset comes from: a GFV1 file, a CSV file, or the synthetic
// generator.
struct DataSource {
    enum class Kind { Gfv1, Csv, Synthetic };
    Kind kind = Kind::Gfv1;
    std::string path;             // Gfv1 / Csv
    std::size_t label_column = 0; // Csv
    std::size_t classes = 0;      // Synthetic
    std::size_t dim = 0;
    std::size_t per_class = 0;
    double sigma = 0.9;
    double radius = 1.0;
    std::uint64_t seed = 0;
};

// Guide source for the two guided modes: a fixed prototype construction for
// prototype mode, or a second dataset for texture mode.
struct GuideSource {
    enum class Kind { Prototype, Data };
    Kind kind = Kind::Prototype;
    HammingCondition prototypes = HammingCondition::HMax; // Prototype only
    std::uint64_t prototype_seed = 0;                     // random_unit only
    DataSource data;                                      // Data only
};

struct BinningSource {
    BinningKind kind = BinningKind::Identity;
    std::uint64_t seed = 0;
};

// One experiment as configured by a JSON document: the full training
// configuration plus the data source, the mode-consistent guide source, the
// texture co-binning and the output directory.
struct ExperimentConfig {
    TrainConfig train;
    DataSource data;
    std::optional<GuideSource> guide;
    std::optional<BinningSource> binning;
    std::string output_dir;
};

// Parses and validates a config document. Unknown keys at any level are
// rejected; exactly one data source must be configured; guide and binning
// sections must be consistent with the mode (baseline: neither; prototype:
// prototype guide only; texture: dataset guide, optional binning). All
// training hyperparameters default to the standard protocol values.
ExperimentConfig parse_experiment_config(const std::string& json_text);

// Reads the file and parses it.
ExperimentConfig load_experiment_config(const std::string& path);

// Materializes the configured source (generates, or loads and validates).
DatasetBundle realize_data(const DataSource& src);

// Builds the configured prototype set for C classes in a K-dim latent space.
PrototypeSet realize_prototypes(const GuideSource& g, std::size_t C,
                                std::size_t K);

// One metrics line per epoch:
// {"epoch":..,"ce_loss":..,"ml_loss":..,"train_acc":..,"test_acc":..,
//  "wall_ms":0}
// ml_loss is null outside prototype mode. wall_ms is pinned to 0 so reruns of
// the same config produce byte-identical files; measured epoch times are
// reported on the run log instead.
std::string metrics_jsonl_line(const EpochMetrics& m);

std::string eval_report_json(const EvalReport& r);

// Final training report: run identity, final-epoch losses/accuracies
// (including "test_accuracy"), step counters and the test-split evaluation.
std::string train_report_json(const ExperimentConfig& cfg,
                              const TrainResult& r,
                              const EvalReport& final_eval);

std::string ablation_report_json(const AblationReport& r);

} // namespace gucnet
