#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulegrad/data.hpp"
#include "rulegrad/error.hpp"
#include "rulegrad/vse.hpp"

namespace rulegrad {

struct EvalReport {
    double mca_t = 0.0;   // conventional: unseen test samples, unseen-restricted argmax
    double mca_s_g = 0.0; // generalized, seen-labeled samples, unrestricted argmax
    double mca_t_g = 0.0; // generalized, unseen-labeled samples, unrestricted argmax
    double hm = 0.0;
    // class name -> generalized per-class accuracy (plus conventional accuracy
    // for unseen classes).
    std::map<std::string, std::map<std::string, double>> per_class;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"mca_t", mca_t},
                            {"mca_s_g", mca_s_g},
                            {"mca_t_g", mca_t_g},
                            {"hm", hm},
                            {"per_class", per_class}};
        return j;
    }
};

inline double harmonic_mean(double a, double b) {
    if (a <= 0.0 || b <= 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

// Mean per-class top-1 accuracy over the classes of class_set that actually
// occur in labels. Classes without test samples are excluded from the mean
// rather than counted as zero.
inline double mca(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                  std::span<const std::size_t> class_set) {
    if (predictions.size() != labels.size()) {
        throw ContractError("mca: predictions and labels differ in length");
    }
    if (class_set.empty()) throw ContractError("mca: empty class set");
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_class; // hits, total
    for (std::size_t c : class_set) per_class.emplace(c, std::make_pair(0, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = per_class.find(labels[i]);
        if (it == per_class.end()) {
            throw ContractError("mca: label " + std::to_string(labels[i]) +
                                " is not in the class set");
        }
        it->second.second += 1;
        if (predictions[i] == labels[i]) it->second.first += 1;
    }
    double acc_sum = 0.0;
    std::size_t populated = 0;
    for (const auto& [cls, counts] : per_class) {
        if (counts.second == 0) continue;
        acc_sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
        ++populated;
    }
    if (populated == 0) throw ContractError("mca: no class in the class set has samples");
    return acc_sum / static_cast<double>(populated);
}

inline EvalReport evaluate(const ZslDataset& ds, const VseParams& params, double gamma) {
    (void)gamma; // prediction is an argmax over cosine scores; gamma cancels
    VseScorer scorer(params, ds.embeddings);

    std::vector<std::size_t> all_classes(ds.num_classes());
    for (std::size_t i = 0; i < all_classes.size(); ++i) all_classes[i] = i;
    std::vector<char> is_unseen(ds.num_classes(), 0);
    for (std::size_t c : ds.unseen) is_unseen[c] = 1;

    std::vector<std::size_t> conv_pred, conv_label;
    std::vector<std::size_t> gen_pred_seen, gen_label_seen;
    std::vector<std::size_t> gen_pred_unseen, gen_label_unseen;

    std::map<std::size_t, std::pair<std::size_t, std::size_t>> gen_counts, conv_counts;

    for (std::size_t i = 0; i < ds.test_labels.size(); ++i) {
        const Tensor x = ds.test_row(i);
        const std::size_t label = ds.test_labels[i];
        const std::size_t gen = predict(scorer, x, all_classes);
        auto& gc = gen_counts[label];
        gc.second += 1;
        if (gen == label) gc.first += 1;
        if (is_unseen[label]) {
            gen_pred_unseen.push_back(gen);
            gen_label_unseen.push_back(label);
            const std::size_t conv = predict(scorer, x, ds.unseen);
            conv_pred.push_back(conv);
            conv_label.push_back(label);
            auto& cc = conv_counts[label];
            cc.second += 1;
            if (conv == label) cc.first += 1;
        } else {
            gen_pred_seen.push_back(gen);
            gen_label_seen.push_back(label);
        }
    }

    EvalReport r;
    if (!conv_label.empty()) r.mca_t = mca(conv_pred, conv_label, ds.unseen);
    if (!gen_label_seen.empty()) r.mca_s_g = mca(gen_pred_seen, gen_label_seen, ds.seen);
    if (!gen_label_unseen.empty()) r.mca_t_g = mca(gen_pred_unseen, gen_label_unseen, ds.unseen);
    r.hm = harmonic_mean(r.mca_s_g, r.mca_t_g);

    for (const auto& [cls, counts] : gen_counts) {
        if (counts.second == 0) continue;
        auto& entry = r.per_class[ds.class_names[cls]];
        entry["generalized"] =
            static_cast<double>(counts.first) / static_cast<double>(counts.second);
        auto it = conv_counts.find(cls);
        if (it != conv_counts.end() && it->second.second > 0) {
            entry["conventional"] =
                static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
        }
    }
    return r;
}

} // namespace rulegrad
