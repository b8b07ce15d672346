#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulegrad/autodiff.hpp"
#include "rulegrad/curriculum.hpp"
#include "rulegrad/data.hpp"
#include "rulegrad/error.hpp"
#include "rulegrad/eval.hpp"
#include "rulegrad/losses.hpp"
#include "rulegrad/rng.hpp"
#include "rulegrad/vse.hpp"

namespace rulegrad {

struct TrainConfig {
    double gamma = 32.0;
    std::size_t embed_dim = 1024;
    std::size_t batch_size = 128;
    std::size_t epochs = 20;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 1e-5;
    LossWeights weights;
    MarginSchedule margin;
    bool transductive = false;
    bool margin_per_step = false;
    bool eval_per_epoch = false;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (gamma <= 0.0) throw ContractError("config: gamma must be > 0");
        if (embed_dim == 0 || batch_size == 0) throw ContractError("config: zero dimension");
        if (learning_rate <= 0.0) throw ContractError("config: learning rate must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
            throw ContractError("config: Adam betas must lie in [0, 1)");
        }
        if (adam_eps <= 0.0) throw ContractError("config: Adam eps must be > 0");
        if (weight_decay < 0.0) throw ContractError("config: weight decay must be >= 0");
        if (noise_sigma < 0.0) throw ContractError("config: noise sigma must be >= 0");
        weights.validate();
        margin.validate();
    }

    // Conventional mode never touches the unlabeled stream: the transductive
    // weights are forced to zero rather than trusted.
    LossWeights effective_weights() const {
        LossWeights w = weights;
        if (!transductive) {
            w.lambda_q = 0.0;
            w.lambda_trans = 0.0;
        }
        return w;
    }
};

// ---------------------------------------------------------------------------
// Adam with classic (coupled) L2 weight decay: decay enters the gradient.
// ---------------------------------------------------------------------------

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::size_t step = 0;
};

inline void adam_step(std::span<Tensor*> params, std::span<const Tensor*> grads, AdamState& state,
                      double lr, double beta1, double beta2, double eps, double weight_decay) {
    if (params.size() != grads.size()) throw ContractError("adam_step: params/grads mismatch");
    if (state.m.empty()) {
        for (Tensor* p : params) {
            state.m.emplace_back(p->shape());
            state.v.emplace_back(p->shape());
        }
    }
    if (state.m.size() != params.size()) {
        throw ContractError("adam_step: state tracks a different parameter count");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& w = *params[p];
        const Tensor& g = *grads[p];
        if (!w.same_shape(g) || !w.same_shape(state.m[p])) {
            throw ContractError("adam_step: shape mismatch at parameter " + std::to_string(p));
        }
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::size_t i = 0; i < w.numel(); ++i) {
            const double gi = g[i] + weight_decay * w[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Transductive stream: features only. Test labels are structurally out of
// reach of the training loop.
// ---------------------------------------------------------------------------

class UnlabeledStream {
public:
    explicit UnlabeledStream(const Tensor& features) : features_(&features) {
        order_.resize(features.shape()[0]);
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    }

    std::size_t size() const { return order_.size(); }

    void reshuffle(Rng& rng) {
        rng.shuffle(order_);
        cursor_ = 0;
    }

    // Next feature row, cycling over the shuffled order.
    Tensor next() {
        const std::size_t i = order_[cursor_];
        cursor_ = (cursor_ + 1) % order_.size();
        return ZslDataset::matrix_row(*features_, i);
    }

private:
    const Tensor* features_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Epoch loop
// ---------------------------------------------------------------------------

struct EpochStats {
    LossBreakdown mean_loss;        // mean over batches
    double margin = 0.0;            // margin at epoch start
    std::vector<double> step_losses;
    std::optional<EvalReport> eval;
};

struct TrainResult {
    VseParams params;
    std::vector<EpochStats> log;
};

class Trainer {
public:
    Trainer(const ZslDataset& ds, TrainConfig cfg)
        : ds_(&ds),
          cfg_(std::move(cfg)),
          weights_(cfg_.effective_weights()),
          shuffle_rng_(cfg_.seed ^ 0x9e3779b97f4a7c15ULL),
          unlabeled_rng_(cfg_.seed ^ 0xc2b2ae3d27d4eb4fULL),
          unlabeled_(ds.test_features) {
        cfg_.validate();
        ds.validate();
        train_features_ = cfg_.noise_sigma > 0.0
                              ? add_feature_noise(ds.train_features, cfg_.noise_sigma,
                                                  cfg_.seed ^ 0x165667b19e3779f9ULL)
                              : ds.train_features;
        params_ = init_vse_params(ds.feature_dim(), ds.label_dim(), cfg_.embed_dim, cfg_.seed);
        use_unlabeled_ = cfg_.transductive &&
                         (weights_.lambda_q > 0.0 ||
                          (weights_.lambda_trans > 0.0 && weights_.rules_active())) &&
                         unlabeled_.size() > 0;
    }

    const VseParams& params() const { return params_; }
    VseParams& mutable_params() { return params_; }
    const TrainConfig& config() const { return cfg_; }

    EpochStats run_epoch(std::size_t epoch_index) {
        std::vector<std::size_t> order(ds_->train_labels.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle_rng_.shuffle(order);
        if (use_unlabeled_) unlabeled_.reshuffle(unlabeled_rng_);

        const std::size_t num_batches =
            (order.size() + cfg_.batch_size - 1) / cfg_.batch_size;
        EpochStats stats;
        stats.margin = margin_at(cfg_.margin, epoch_index);
        LossBreakdown acc;
        for (std::size_t b = 0; b < num_batches; ++b) {
            const std::size_t lo = b * cfg_.batch_size;
            const std::size_t hi = std::min(lo + cfg_.batch_size, order.size());
            const double margin =
                cfg_.margin_per_step
                    ? margin_at(cfg_.margin, static_cast<double>(epoch_index) +
                                                 static_cast<double>(b) /
                                                     static_cast<double>(num_batches))
                    : stats.margin;
            const LossBreakdown step =
                run_step(std::span<const std::size_t>(order).subspan(lo, hi - lo), margin);
            stats.step_losses.push_back(step.total);
            acc.classification += step.classification;
            acc.bias += step.bias;
            acc.regularizer += step.regularizer;
            acc.hypernym += step.hypernym;
            acc.attribute += step.attribute;
            acc.total += step.total;
        }
        const double inv = 1.0 / static_cast<double>(num_batches);
        acc.classification *= inv;
        acc.bias *= inv;
        acc.regularizer *= inv;
        acc.hypernym *= inv;
        acc.attribute *= inv;
        acc.total *= inv;
        stats.mean_loss = acc;
        if (cfg_.eval_per_epoch) stats.eval = evaluate(*ds_, params_, cfg_.gamma);
        return stats;
    }

    // One optimization step over a batch of train-set row indices.
    LossBreakdown run_step(std::span<const std::size_t> batch, double margin) {
        Tape tape;
        VseGraph g = bind_vse(tape, params_, ds_->embeddings, cfg_.gamma);

        TotalLossInputs in;
        in.w_x = g.w_x;
        in.w_y = g.w_y;
        in.unseen = ds_->unseen;

        const bool want_hyp = weights_.lambda_hyp > 0.0 && g.has_hypernyms &&
                              ds_->rules.num_hypernyms() > 0;
        const bool want_attr = weights_.lambda_attr > 0.0 && ds_->rules.num_attributes() > 0;

        for (std::size_t idx : batch) {
            Value px = vecmat(tape.input(ZslDataset::matrix_row(train_features_, idx)), g.w_x);
            Value lp = class_log_probs(g, px);
            in.labeled_log_probs.push_back(lp);
            in.labels.push_back(ds_->train_labels[idx]);
            if (want_hyp || want_attr) {
                SampleLogicInputs s;
                s.log_probs = lp;
                if (want_hyp) s.hypernym_isa = isa_logits(g, px, g.hypernym_proj);
                if (want_attr) {
                    if (g.has_attributes) {
                        s.attribute_isa = isa_logits(g, px, g.attribute_proj);
                    } else {
                        // No attribute embeddings: ground the isA side with the
                        // ground-truth class's attribute membership as a fixed
                        // pseudo-label truth.
                        s.attribute_isa = pseudo_label_attr_isa(tape, ds_->train_labels[idx]);
                    }
                }
                in.labeled_logic.push_back(std::move(s));
            }
        }

        if (use_unlabeled_) {
            const bool unl_rules = weights_.lambda_trans > 0.0 && (want_hyp || want_attr);
            for (std::size_t k = 0; k < batch.size(); ++k) {
                Value px = vecmat(tape.input(unlabeled_.next()), g.w_x);
                Value lp = class_log_probs(g, px);
                in.unlabeled_log_probs.push_back(lp);
                if (unl_rules) {
                    SampleLogicInputs s;
                    s.log_probs = lp;
                    if (want_hyp) s.hypernym_isa = isa_logits(g, px, g.hypernym_proj);
                    // Without attribute embeddings there is no isA realization
                    // for unlabeled samples; the attribute rule is skipped.
                    if (want_attr && g.has_attributes) {
                        s.attribute_isa = isa_logits(g, px, g.attribute_proj);
                    }
                    in.unlabeled_logic.push_back(std::move(s));
                }
            }
        }

        TotalLoss tl = total_loss(tape, in, ds_->rules, margin, weights_);
        if (!std::isfinite(tl.breakdown.total)) {
            throw NumericError("training aborted: non-finite loss at step " +
                               std::to_string(adam_.step + 1));
        }
        tape.backward(tl.value);

        Tensor gx = g.w_x.grad();
        Tensor gy = g.w_y.grad();
        Tensor* ps[2] = {&params_.w_x, &params_.w_y};
        const Tensor* gs[2] = {&gx, &gy};
        adam_step(std::span<Tensor*>(ps, 2), std::span<const Tensor*>(gs, 2), adam_,
                  cfg_.learning_rate, cfg_.beta1, cfg_.beta2, cfg_.adam_eps, cfg_.weight_decay);
        return tl.breakdown;
    }

private:
    std::vector<Value> pseudo_label_attr_isa(Tape& tape, std::size_t label) const {
        std::vector<Value> out;
        out.reserve(ds_->rules.num_attributes());
        for (const auto& set : ds_->rules.attribute_sets) {
            const bool member = std::find(set.begin(), set.end(), label) != set.end();
            out.push_back(tape.constant(member ? 20.0 : -20.0));
        }
        return out;
    }

    const ZslDataset* ds_;
    TrainConfig cfg_;
    LossWeights weights_;
    Tensor train_features_;
    VseParams params_;
    AdamState adam_;
    Rng shuffle_rng_;
    Rng unlabeled_rng_;
    UnlabeledStream unlabeled_;
    bool use_unlabeled_ = false;
};

inline TrainResult train(const ZslDataset& ds, const TrainConfig& cfg) {
    Trainer trainer(ds, cfg);
    TrainResult result;
    result.log.reserve(cfg.epochs);
    for (std::size_t e = 0; e < cfg.epochs; ++e) result.log.push_back(trainer.run_epoch(e));
    result.params = trainer.params();
    return result;
}

} // namespace rulegrad
