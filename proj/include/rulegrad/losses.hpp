#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulegrad/autodiff.hpp"
#include "rulegrad/error.hpp"
#include "rulegrad/logic.hpp"

namespace rulegrad {

struct LossWeights {
    double lambda_q = 0.0;
    double lambda_reg = 0.0;
    double lambda_hyp = 0.0;
    double lambda_attr = 0.0;
    double lambda_trans = 0.0;

    void validate() const {
        if (lambda_q < 0 || lambda_reg < 0 || lambda_hyp < 0 || lambda_attr < 0 ||
            lambda_trans < 0) {
            throw ContractError("loss weights must be non-negative");
        }
    }

    bool rules_active() const { return lambda_hyp > 0.0 || lambda_attr > 0.0; }
};

// Diagnostic decomposition. Components are stored unweighted; total is the
// weighted sum (1, lambda_q, lambda_reg, lambda_hyp, lambda_attr) with the
// transductive rule terms folded into hypernym/attribute via lambda_trans.
struct LossBreakdown {
    double classification = 0.0;
    double bias = 0.0;
    double regularizer = 0.0;
    double hypernym = 0.0;
    double attribute = 0.0;
    double total = 0.0;

    double weighted_sum(const LossWeights& w) const {
        return classification + w.lambda_q * bias + w.lambda_reg * regularizer +
               w.lambda_hyp * hypernym + w.lambda_attr * attribute;
    }
};

// Cross-entropy against the ground-truth label: -log p(label | x).
inline Value classification_loss(Value log_probs, std::size_t label) {
    if (log_probs.val().rank() != 1 || label >= log_probs.val().numel()) {
        throw ContractError("classification_loss: label " + std::to_string(label) +
                            " out of range for " + shape_str(log_probs.val().shape()));
    }
    return neg(pick(log_probs, label));
}

// Seen-class bias loss on unlabeled samples: -log sum_{y in unseen} p(y|x).
inline Value bias_loss(Value log_probs, std::span<const std::size_t> unseen) {
    if (unseen.empty()) throw ContractError("bias_loss: empty unseen set");
    return neg(logsumexp_over(log_probs, unseen));
}

// Binary cross-entropy from a logit: softplus(-z) toward 1, softplus(z)
// toward 0.
inline Value bce_with_logits(Value z, double target) {
    if (target != 0.0 && target != 1.0) {
        throw ContractError("bce_with_logits: target must be 0 or 1");
    }
    return target == 1.0 ? softplus(neg(z)) : softplus(z);
}

// One sample's grounded rule inputs. log_probs drives the inside predicate;
// isA scores come from the scorer (or pseudo-label constants for the
// attribute fallback). Empty score vectors mean the family is off for this
// sample.
struct SampleLogicInputs {
    Value log_probs;
    std::vector<TruthLogit> hypernym_isa;
    std::vector<TruthLogit> attribute_isa;
};

struct RuleLossTerms {
    std::optional<Value> hypernym;  // mean over samples of per-sample mean bce
    std::optional<Value> attribute;
    double hypernym_value() const { return hypernym ? hypernym->val()[0] : 0.0; }
    double attribute_value() const { return attribute ? attribute->val()[0] : 0.0; }
};

namespace detail {

// Mean bce(z, 1) over one sample's assertions.
inline Value assertion_mean(std::span<const TruthLogit> assertions) {
    std::vector<Value> terms;
    terms.reserve(assertions.size());
    for (TruthLogit z : assertions) terms.push_back(bce_with_logits(z, 1.0));
    return mean(stack(terms));
}

} // namespace detail

// Grounds and averages the rule assertions of a batch. Every assertion is
// pushed toward truth: bce(z_i, 1). Aggregation is mean over assertions
// within a sample, then mean over the batch, so the lambdas stay scale-free
// in |H| and |A|.
inline RuleLossTerms rule_loss_terms(std::span<const SampleLogicInputs> samples,
                                       const RuleSet& rules, double margin) {
    RuleLossTerms out;
    std::vector<Value> hyp_terms;
    std::vector<Value> attr_terms;
    for (const SampleLogicInputs& s : samples) {
        if (!s.hypernym_isa.empty()) {
            std::vector<TruthLogit> z = ground_hypernym_rule(s.log_probs, s.hypernym_isa, rules, margin);
            hyp_terms.push_back(detail::assertion_mean(z));
        }
        if (!s.attribute_isa.empty()) {
            std::vector<TruthLogit> z =
                ground_attribute_rule(s.log_probs, s.attribute_isa, rules, margin);
            attr_terms.push_back(detail::assertion_mean(z));
        }
    }
    if (!hyp_terms.empty()) out.hypernym = mean(stack(hyp_terms));
    if (!attr_terms.empty()) out.attribute = mean(stack(attr_terms));
    return out;
}

// lambda_hyp * L_hyp + lambda_attr * L_attr averaged over the batch. Exactly
// zero (no graph built) when both weights are zero.
inline Value rule_loss(Tape& tape, std::span<const SampleLogicInputs> samples,
                       const RuleSet& rules, double margin, const LossWeights& w) {
    w.validate();
    if (!w.rules_active() || samples.empty()) return tape.constant(0.0);
    RuleLossTerms terms = rule_loss_terms(samples, rules, margin);
    Value acc = tape.constant(0.0);
    if (w.lambda_hyp > 0.0 && terms.hypernym) acc = add(acc, scale(*terms.hypernym, w.lambda_hyp));
    if (w.lambda_attr > 0.0 && terms.attribute)
        acc = add(acc, scale(*terms.attribute, w.lambda_attr));
    return acc;
}

struct TotalLossInputs {
    std::vector<Value> labeled_log_probs;
    std::vector<std::size_t> labels;
    std::vector<SampleLogicInputs> labeled_logic;   // empty when rules are off
    std::vector<Value> unlabeled_log_probs;         // transductive stream
    std::vector<SampleLogicInputs> unlabeled_logic; // transductive rules
    Value w_x;
    Value w_y;
    std::span<const std::size_t> unseen;
};

struct TotalLoss {
    Value value;
    LossBreakdown breakdown;
};

// Full objective:
//   mean CE over the labeled batch
//   + lambda_q    * mean bias loss over the unlabeled batch
//   + lambda_reg  * (|W_x|^2 + |W_y|^2)
//   + rules(labeled) + lambda_trans * rules(unlabeled)
inline TotalLoss total_loss(Tape& tape, const TotalLossInputs& in, const RuleSet& rules,
                            double margin, const LossWeights& w) {
    w.validate();
    if (in.labeled_log_probs.empty()) throw ContractError("total_loss: empty labeled batch");
    if (in.labeled_log_probs.size() != in.labels.size()) {
        throw ContractError("total_loss: labels do not match labeled batch");
    }

    TotalLoss out;

    std::vector<Value> ce;
    ce.reserve(in.labeled_log_probs.size());
    for (std::size_t i = 0; i < in.labeled_log_probs.size(); ++i) {
        ce.push_back(classification_loss(in.labeled_log_probs[i], in.labels[i]));
    }
    Value total = mean(stack(ce));
    out.breakdown.classification = total.val()[0];

    if (w.lambda_q > 0.0 && !in.unlabeled_log_probs.empty()) {
        std::vector<Value> bias;
        bias.reserve(in.unlabeled_log_probs.size());
        for (Value lp : in.unlabeled_log_probs) bias.push_back(bias_loss(lp, in.unseen));
        Value b = mean(stack(bias));
        out.breakdown.bias = b.val()[0];
        total = add(total, scale(b, w.lambda_q));
    }

    if (w.lambda_reg > 0.0) {
        Value reg = add(l2_norm_sq(in.w_x), l2_norm_sq(in.w_y));
        out.breakdown.regularizer = reg.val()[0];
        total = add(total, scale(reg, w.lambda_reg));
    }

    if (w.rules_active()) {
        double hyp = 0.0, attr = 0.0;
        if (!in.labeled_logic.empty()) {
            RuleLossTerms t = rule_loss_terms(in.labeled_logic, rules, margin);
            if (w.lambda_hyp > 0.0 && t.hypernym) {
                hyp += t.hypernym_value();
                total = add(total, scale(*t.hypernym, w.lambda_hyp));
            }
            if (w.lambda_attr > 0.0 && t.attribute) {
                attr += t.attribute_value();
                total = add(total, scale(*t.attribute, w.lambda_attr));
            }
        }
        if (w.lambda_trans > 0.0 && !in.unlabeled_logic.empty()) {
            RuleLossTerms t = rule_loss_terms(in.unlabeled_logic, rules, margin);
            if (w.lambda_hyp > 0.0 && t.hypernym) {
                hyp += w.lambda_trans * t.hypernym_value();
                total = add(total, scale(*t.hypernym, w.lambda_hyp * w.lambda_trans));
            }
            if (w.lambda_attr > 0.0 && t.attribute) {
                attr += w.lambda_trans * t.attribute_value();
                total = add(total, scale(*t.attribute, w.lambda_attr * w.lambda_trans));
            }
        }
        out.breakdown.hypernym = hyp;
        out.breakdown.attribute = attr;
    }

    out.breakdown.total = total.val()[0];
    out.value = total;
    return out;
}

} // namespace rulegrad
