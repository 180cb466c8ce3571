#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gucnet/data.hpp"
#include "gucnet/model.hpp"
#include "gucnet/training.hpp"

namespace gucnet {

struct EvalReport {
    double accuracy = 0.0;
    // confusion[true_class][predicted_class]; entries sum to num_test and
    // accuracy == trace / num_test.
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<double> per_class_recall;
    std::size_t num_test = 0;
};

// Argmax over head probabilities per sample; ties break toward the lowest
// class index so evaluation is deterministic. Runs the model in eval mode
// (dropout off); only tower_x and the head are consulted, so texture
// checkpoints evaluate without any guide data.
EvalReport evaluate(const GucnetModel& model, const DatasetBundle& data,
                    const std::vector<std::size_t>& indices);

// Evaluates on every row of the bundle.
EvalReport evaluate(const GucnetModel& model, const DatasetBundle& data);

struct AblationCondition {
    std::string label;
    EvalReport report;
    // Binning study only: the co-binning permutation this condition used.
    std::vector<std::size_t> permutation;
};

struct AblationReport {
    std::string study; // "hamming" or "binning"
    // Hash of everything the conditions share (data, split, seeds, config);
    // equal across conditions by construction, recorded so reports can prove
    // only the varied factor differed.
    std::string config_fingerprint;
    std::vector<AblationCondition> conditions;
};

enum class HammingCondition { RandomUnit, H2, HHalf, HMax };

std::string to_string(HammingCondition c);

// Trains one prototype-mode model per separability condition — identical
// config, data, split and seeds throughout; only the prototype set varies —
// and reports each condition's final test accuracy. The RandomUnit prototypes
// draw from cfg.seed. `jobs` caps how many conditions train concurrently.
AblationReport ablate_hamming(
    const DatasetBundle& x, const TrainConfig& cfg,
    const std::vector<HammingCondition>& conditions =
        {HammingCondition::RandomUnit, HammingCondition::H2,
         HammingCondition::HHalf, HammingCondition::HMax},
    std::size_t jobs = 1);

// Texture-mode co-binning comparison: one Identity run plus one Shuffled run
// per seed, all else identical. Each condition records the permutation used.
AblationReport ablate_binning(const DatasetBundle& x, const DatasetBundle& y,
                              const TrainConfig& cfg,
                              const std::vector<std::uint64_t>& shuffle_seeds,
                              std::size_t jobs = 1);

} // namespace gucnet
