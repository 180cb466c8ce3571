#include "gucnet/experiment.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gucnet/errors.hpp"

namespace gucnet {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            fail(where, "unknown key \"" + item.key() + "\"");
        }
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& where,
                    const char* key) {
    const json* v = find(obj, key);
    if (v == nullptr) {
        fail(where, std::string("missing required key \"") + key + "\"");
    }
    return *v;
}

std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) {
        fail(where, "expected a string");
    }
    return v.get<std::string>();
}

double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) {
        fail(where, "expected a number");
    }
    return v.get<double>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
    if (!v.is_number_unsigned()) {
        fail(where, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::size_t as_size(const json& v, const std::string& where) {
    return static_cast<std::size_t>(as_u64(v, where));
}

DataSource parse_data_source(const json& j, const std::string& where,
                             std::uint64_t default_seed) {
    if (!j.is_object()) {
        fail(where, "expected an object");
    }
    const std::string kind = as_string(require(j, where, "kind"),
                                       where + ".kind");
    DataSource src;
    if (kind == "gfv1") {
        reject_unknown(j, where, {"kind", "path"});
        src.kind = DataSource::Kind::Gfv1;
        src.path = as_string(require(j, where, "path"), where + ".path");
    } else if (kind == "csv") {
        reject_unknown(j, where, {"kind", "path", "label_column"});
        src.kind = DataSource::Kind::Csv;
        src.path = as_string(require(j, where, "path"), where + ".path");
        if (const json* v = find(j, "label_column")) {
            src.label_column = as_size(*v, where + ".label_column");
        }
    } else if (kind == "synthetic") {
        reject_unknown(j, where, {"kind", "classes", "dim", "per_class",
                                  "sigma", "radius", "seed"});
        src.kind = DataSource::Kind::Synthetic;
        src.classes = as_size(require(j, where, "classes"),
                              where + ".classes");
        src.dim = as_size(require(j, where, "dim"), where + ".dim");
        src.per_class = as_size(require(j, where, "per_class"),
                                where + ".per_class");
        src.sigma = 0.9;
        src.radius = 1.0;
        src.seed = default_seed;
        if (const json* v = find(j, "sigma")) {
            src.sigma = as_double(*v, where + ".sigma");
        }
        if (const json* v = find(j, "radius")) {
            src.radius = as_double(*v, where + ".radius");
        }
        if (const json* v = find(j, "seed")) {
            src.seed = as_u64(*v, where + ".seed");
        }
    } else {
        fail(where + ".kind", "must be \"gfv1\", \"csv\" or \"synthetic\"");
    }
    return src;
}

GuideSource parse_guide(const json& j, std::uint64_t default_seed) {
    const std::string where = "config.guide";
    if (!j.is_object()) {
        fail(where, "expected an object");
    }
    const std::string kind = as_string(require(j, where, "kind"),
                                       where + ".kind");
    GuideSource g;
    if (kind == "prototype") {
        reject_unknown(j, where, {"kind", "prototypes", "seed"});
        g.kind = GuideSource::Kind::Prototype;
        const std::string p = as_string(require(j, where, "prototypes"),
                                        where + ".prototypes");
        if (p == "h_max") {
            g.prototypes = HammingCondition::HMax;
        } else if (p == "h_half") {
            g.prototypes = HammingCondition::HHalf;
        } else if (p == "h2") {
            g.prototypes = HammingCondition::H2;
        } else if (p == "random_unit") {
            g.prototypes = HammingCondition::RandomUnit;
        } else {
            fail(where + ".prototypes",
                 "must be \"h_max\", \"h_half\", \"h2\" or \"random_unit\"");
        }
        g.prototype_seed = default_seed;
        if (const json* v = find(j, "seed")) {
            if (p != "random_unit") {
                fail(where + ".seed",
                     "applies to random_unit prototypes only");
            }
            g.prototype_seed = as_u64(*v, where + ".seed");
        }
    } else if (kind == "gfv1" || kind == "csv" || kind == "synthetic") {
        g.kind = GuideSource::Kind::Data;
        g.data = parse_data_source(j, where, default_seed);
    } else {
        fail(where + ".kind",
             "must be \"prototype\", \"gfv1\", \"csv\" or \"synthetic\"");
    }
    return g;
}

BinningSource parse_binning(const json& j, std::uint64_t default_seed) {
    const std::string where = "config.binning";
    if (!j.is_object()) {
        fail(where, "expected an object");
    }
    reject_unknown(j, where, {"kind", "seed"});
    const std::string kind = as_string(require(j, where, "kind"),
                                       where + ".kind");
    BinningSource b;
    if (kind == "identity") {
        if (find(j, "seed") != nullptr) {
            fail(where + ".seed", "applies to shuffled binning only");
        }
        b.kind = BinningKind::Identity;
    } else if (kind == "shuffled") {
        b.kind = BinningKind::Shuffled;
        b.seed = default_seed;
        if (const json* v = find(j, "seed")) {
            b.seed = as_u64(*v, where + ".seed");
        }
    } else {
        fail(where + ".kind", "must be \"identity\" or \"shuffled\"");
    }
    return b;
}

std::string mode_name(Mode m) {
    switch (m) {
    case Mode::Baseline:
        return "baseline";
    case Mode::Prototype:
        return "prototype";
    case Mode::Texture:
        return "texture";
    }
    throw ContractError("mode_name: unknown mode");
}

ordered_json eval_to_json(const EvalReport& r) {
    ordered_json j;
    j["accuracy"] = r.accuracy;
    j["num_test"] = r.num_test;
    j["per_class_recall"] = r.per_class_recall;
    j["confusion"] = r.confusion;
    return j;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    reject_unknown(doc, "config",
                   {"mode", "seed", "epochs", "learning_rate", "optimizer",
                    "batch_size", "alpha", "alternation", "latent_dim",
                    "hidden_dims", "dropout", "split_ratio", "data", "guide",
                    "binning", "output_dir"});

    ExperimentConfig cfg;
    const std::string mode =
        as_string(require(doc, "config", "mode"), "config.mode");
    if (mode == "baseline") {
        cfg.train.mode = Mode::Baseline;
    } else if (mode == "prototype") {
        cfg.train.mode = Mode::Prototype;
    } else if (mode == "texture") {
        cfg.train.mode = Mode::Texture;
    } else {
        fail("config.mode",
             "must be \"baseline\", \"prototype\" or \"texture\"");
    }

    if (const json* v = find(doc, "seed")) {
        cfg.train.seed = as_u64(*v, "config.seed");
    }
    if (const json* v = find(doc, "epochs")) {
        const std::uint64_t e = as_u64(*v, "config.epochs");
        if (e > static_cast<std::uint64_t>(
                    std::numeric_limits<int>::max())) {
            fail("config.epochs", "out of range");
        }
        cfg.train.epochs = static_cast<int>(e);
    }
    if (const json* v = find(doc, "learning_rate")) {
        cfg.train.learning_rate = as_double(*v, "config.learning_rate");
    }
    if (const json* v = find(doc, "optimizer")) {
        if (!v->is_object()) {
            fail("config.optimizer", "expected an object");
        }
        const std::string kind = as_string(
            require(*v, "config.optimizer", "kind"), "config.optimizer.kind");
        if (kind == "adam") {
            reject_unknown(*v, "config.optimizer",
                           {"kind", "beta1", "beta2", "eps"});
            AdamParams p;
            if (const json* f = find(*v, "beta1")) {
                p.beta1 = as_double(*f, "config.optimizer.beta1");
            }
            if (const json* f = find(*v, "beta2")) {
                p.beta2 = as_double(*f, "config.optimizer.beta2");
            }
            if (const json* f = find(*v, "eps")) {
                p.eps = as_double(*f, "config.optimizer.eps");
            }
            cfg.train.optimizer = p;
        } else if (kind == "sgd") {
            reject_unknown(*v, "config.optimizer", {"kind", "momentum"});
            SgdParams p;
            if (const json* f = find(*v, "momentum")) {
                p.momentum = as_double(*f, "config.optimizer.momentum");
            }
            cfg.train.optimizer = p;
        } else {
            fail("config.optimizer.kind", "must be \"adam\" or \"sgd\"");
        }
    }
    if (const json* v = find(doc, "batch_size")) {
        cfg.train.batch_size = as_size(*v, "config.batch_size");
    }
    if (const json* v = find(doc, "alpha")) {
        cfg.train.alpha = as_double(*v, "config.alpha");
    }
    if (const json* v = find(doc, "alternation")) {
        const std::string a = as_string(*v, "config.alternation");
        if (a == "per_batch") {
            cfg.train.alternation = Alternation::PerBatch;
        } else if (a == "joint") {
            cfg.train.alternation = Alternation::Joint;
        } else {
            fail("config.alternation", "must be \"per_batch\" or \"joint\"");
        }
    }
    if (const json* v = find(doc, "latent_dim")) {
        cfg.train.latent_dim = as_size(*v, "config.latent_dim");
    }
    if (const json* v = find(doc, "hidden_dims")) {
        if (!v->is_array()) {
            fail("config.hidden_dims", "expected an array of integers");
        }
        cfg.train.hidden_dims.clear();
        for (const json& d : *v) {
            cfg.train.hidden_dims.push_back(
                as_size(d, "config.hidden_dims[]"));
        }
    }
    if (const json* v = find(doc, "dropout")) {
        cfg.train.dropout = as_double(*v, "config.dropout");
    }
    if (const json* v = find(doc, "split_ratio")) {
        cfg.train.split_ratio = as_double(*v, "config.split_ratio");
    }

    cfg.data = parse_data_source(require(doc, "config", "data"), "config.data",
                                 cfg.train.seed);
    cfg.output_dir = as_string(require(doc, "config", "output_dir"),
                               "config.output_dir");
    if (cfg.output_dir.empty()) {
        fail("config.output_dir", "must not be empty");
    }

    const json* jguide = find(doc, "guide");
    const json* jbin = find(doc, "binning");
    switch (cfg.train.mode) {
    case Mode::Baseline:
        if (jguide != nullptr) {
            fail("config", "baseline mode takes no \"guide\" section");
        }
        if (jbin != nullptr) {
            fail("config", "baseline mode takes no \"binning\" section");
        }
        break;
    case Mode::Prototype:
        if (jguide == nullptr) {
            fail("config", "prototype mode requires a \"guide\" section");
        }
        cfg.guide = parse_guide(*jguide, cfg.train.seed);
        if (cfg.guide->kind != GuideSource::Kind::Prototype) {
            fail("config.guide", "prototype mode requires a prototype guide");
        }
        if (jbin != nullptr) {
            fail("config", "binning applies to texture mode only");
        }
        break;
    case Mode::Texture:
        if (jguide == nullptr) {
            fail("config", "texture mode requires a \"guide\" section");
        }
        cfg.guide = parse_guide(*jguide, cfg.train.seed);
        if (cfg.guide->kind != GuideSource::Kind::Data) {
            fail("config.guide",
                 "texture mode requires a dataset guide (gfv1, csv or "
                 "synthetic)");
        }
        if (jbin != nullptr) {
            cfg.binning = parse_binning(*jbin, cfg.train.seed);
        } else {
            cfg.binning = BinningSource{};
        }
        break;
    }

    validate(cfg.train);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(IoError::Kind::OpenFailed,
                      "cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

DatasetBundle realize_data(const DataSource& src) {
    switch (src.kind) {
    case DataSource::Kind::Gfv1:
        return load_gfv1(src.path);
    case DataSource::Kind::Csv:
        return load_csv(src.path, src.label_column);
    case DataSource::Kind::Synthetic:
        return gen_gaussian_mixture(src.classes, src.dim, src.per_class,
                                    src.radius, src.sigma, src.seed);
    }
    throw ContractError("realize_data: unknown source kind");
}

PrototypeSet realize_prototypes(const GuideSource& g, std::size_t C,
                                std::size_t K) {
    if (g.kind != GuideSource::Kind::Prototype) {
        throw ContractError(
            "realize_prototypes: guide is not a prototype source");
    }
    switch (g.prototypes) {
    case HammingCondition::RandomUnit:
        return make_random_unit(C, K, g.prototype_seed);
    case HammingCondition::H2:
        return make_hmax_variant(C, K, HammingLevel::H2);
    case HammingCondition::HHalf:
        return make_hmax_variant(C, K, HammingLevel::HHalf);
    case HammingCondition::HMax:
        return make_hmax_variant(C, K, HammingLevel::HMax);
    }
    throw ContractError("realize_prototypes: unknown prototype condition");
}

std::string metrics_jsonl_line(const EpochMetrics& m) {
    ordered_json line;
    line["epoch"] = m.epoch;
    line["ce_loss"] = m.ce_loss;
    if (m.ml_loss.has_value()) {
        line["ml_loss"] = *m.ml_loss;
    } else {
        line["ml_loss"] = nullptr;
    }
    line["train_acc"] = m.train_acc;
    line["test_acc"] = m.test_acc;
    line["wall_ms"] = 0;
    return line.dump();
}

std::string eval_report_json(const EvalReport& r) {
    return eval_to_json(r).dump(2);
}

std::string train_report_json(const ExperimentConfig& cfg,
                              const TrainResult& r,
                              const EvalReport& final_eval) {
    if (r.metrics.empty()) {
        throw ContractError("train_report_json: no epochs recorded");
    }
    const EpochMetrics& last = r.metrics.back();
    ordered_json j;
    j["mode"] = mode_name(cfg.train.mode);
    j["seed"] = cfg.train.seed;
    j["epochs"] = cfg.train.epochs;
    j["input_dim"] = r.model.tower_x.dims.front();
    j["num_train"] = r.split.train_indices.size();
    j["num_test"] = r.split.test_indices.size();
    j["final_ce_loss"] = last.ce_loss;
    if (last.ml_loss.has_value()) {
        j["final_ml_loss"] = *last.ml_loss;
    } else {
        j["final_ml_loss"] = nullptr;
    }
    j["train_accuracy"] = last.train_acc;
    j["test_accuracy"] = last.test_acc;
    j["ce_steps"] = r.ce_steps;
    j["ml_steps"] = r.ml_steps;
    j["eval"] = eval_to_json(final_eval);
    return j.dump(2);
}

std::string ablation_report_json(const AblationReport& r) {
    ordered_json j;
    j["study"] = r.study;
    j["config_fingerprint"] = r.config_fingerprint;
    ordered_json arr = ordered_json::array();
    for (const AblationCondition& cond : r.conditions) {
        ordered_json c;
        c["label"] = cond.label;
        if (!cond.permutation.empty()) {
            c["permutation"] = cond.permutation;
        }
        c["report"] = eval_to_json(cond.report);
        arr.push_back(c);
    }
    j["conditions"] = arr;
    return j.dump(2);
}

} // namespace gucnet
