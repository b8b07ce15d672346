#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rulegrad/autodiff.hpp"
#include "rulegrad/error.hpp"
#include "rulegrad/rng.hpp"
#include "rulegrad/tensor.hpp"

namespace rulegrad {

// The two learnable projections into the common embedding space.
struct VseParams {
    Tensor w_x; // [D_x x D_e]
    Tensor w_y; // [D_y x D_e]
};

inline Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t({fan_in, fan_out});
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

inline VseParams init_vse_params(std::size_t feature_dim, std::size_t label_dim,
                                 std::size_t embed_dim, std::uint64_t seed) {
    Rng rng(seed);
    VseParams p;
    p.w_x = xavier_uniform(feature_dim, embed_dim, rng);
    p.w_y = xavier_uniform(label_dim, embed_dim, rng);
    return p;
}

// Label-side embedding tables. Hypernym and attribute rows share the class
// projection W_y. The attribute matrix may be empty; attribute isA scores
// then fall back to class-level pseudo-labels on labeled data.
struct ClassEmbeddings {
    Tensor classes;    // [|Y| x D_y]
    Tensor hypernyms;  // [|H| x D_y], may be empty
    Tensor attributes; // [|A| x D_y], may be empty

    bool has_attribute_embeddings() const { return attributes.numel() > 0; }
};

// Compatibility score s(x, e): cosine of the two projections.
inline Value score(Value x, Value e, Value w_x, Value w_y) {
    return cosine(vecmat(x, w_x), vecmat(e, w_y));
}

// Per-batch bound model: parameters on the tape plus label-side projections
// computed once and shared across every sample in the batch.
struct VseGraph {
    Value w_x;
    Value w_y;
    Value class_proj;     // [|Y| x D_e]
    Value hypernym_proj;  // [|H| x D_e] when present
    Value attribute_proj; // [|A| x D_e] when present
    bool has_hypernyms = false;
    bool has_attributes = false;
    double gamma = 32.0;
};

inline VseGraph bind_vse(Tape& tape, const VseParams& params, const ClassEmbeddings& emb,
                         double gamma) {
    if (gamma <= 0.0) throw ContractError("gamma must be positive");
    VseGraph g;
    g.gamma = gamma;
    g.w_x = tape.param(params.w_x);
    g.w_y = tape.param(params.w_y);
    g.class_proj = matmul(tape.input(emb.classes), g.w_y);
    if (emb.hypernyms.numel() > 0) {
        g.hypernym_proj = matmul(tape.input(emb.hypernyms), g.w_y);
        g.has_hypernyms = true;
    }
    if (emb.attributes.numel() > 0) {
        g.attribute_proj = matmul(tape.input(emb.attributes), g.w_y);
        g.has_attributes = true;
    }
    return g;
}

inline Value project_feature(Tape& tape, const VseGraph& g, const Tensor& x) {
    return vecmat(tape.input(x), g.w_x);
}

// log p(y|x) over the full class universe: log-softmax of gamma * s(x, y).
inline Value class_log_probs(const VseGraph& g, Value projected_x) {
    const std::size_t n = g.class_proj.val().shape()[0];
    std::vector<Value> scores;
    scores.reserve(n);
    for (std::size_t y = 0; y < n; ++y) {
        scores.push_back(cosine(projected_x, row(g.class_proj, y)));
    }
    return softmax_log_probs(scale(stack(scores), g.gamma));
}

// Standalone form of the same operation (one sample, params as raw tensors).
inline Value class_log_probs(Tape& tape, const Tensor& x, const Tensor& class_embeddings,
                             const VseParams& params, double gamma) {
    ClassEmbeddings emb;
    emb.classes = class_embeddings;
    VseGraph g = bind_vse(tape, params, emb, gamma);
    return class_log_probs(g, project_feature(tape, g, x));
}

// isA truth logits against a projected side table (hypernyms or attributes):
// gamma * s(x, e) per row, read as a TruthLogit.
inline std::vector<Value> isa_logits(const VseGraph& g, Value projected_x, Value side_proj) {
    const std::size_t n = side_proj.val().shape()[0];
    std::vector<Value> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(scale(cosine(projected_x, row(side_proj, i)), g.gamma));
    }
    return out;
}

namespace detail {

inline void project_vec(const Tensor& v, const Tensor& w, std::vector<double>& out) {
    const std::size_t k = w.shape()[0], n = w.shape()[1];
    out.assign(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double vi = v[i];
        for (std::size_t j = 0; j < n; ++j) out[j] += vi * w.at2(i, j);
    }
}

inline double cosine_raw(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine: zero-norm input");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace detail

// Plain-tensor scorer for inference paths (no tape, no gradients).
class VseScorer {
public:
    VseScorer(const VseParams& params, const ClassEmbeddings& emb)
        : params_(&params), emb_(&emb) {
        const std::size_t n = emb.classes.shape()[0];
        class_proj_.resize(n);
        for (std::size_t y = 0; y < n; ++y) {
            Tensor e({emb.classes.shape()[1]});
            for (std::size_t j = 0; j < e.numel(); ++j) e[j] = emb.classes.at2(y, j);
            detail::project_vec(e, params.w_y, class_proj_[y]);
        }
    }

    // Scores s(x, y) for all classes.
    std::vector<double> scores(const Tensor& x) const {
        std::vector<double> px;
        detail::project_vec(x, params_->w_x, px);
        std::vector<double> out(class_proj_.size());
        for (std::size_t y = 0; y < class_proj_.size(); ++y) {
            out[y] = detail::cosine_raw(px, class_proj_[y]);
        }
        return out;
    }

private:
    const VseParams* params_;
    const ClassEmbeddings* emb_;
    std::vector<std::vector<double>> class_proj_;
};

// Nearest-label prediction over a restricted class set; ties break toward the
// lowest class index. Conventional ZSL restricts to unseen classes, GZSL
// passes the full universe.
inline std::size_t predict(const VseScorer& scorer, const Tensor& x,
                           std::span<const std::size_t> restriction) {
    if (restriction.empty()) throw ContractError("predict: empty class restriction");
    const std::vector<double> s = scorer.scores(x);
    std::size_t best = restriction[0];
    double best_score = s.at(restriction[0]);
    for (std::size_t i = 1; i < restriction.size(); ++i) {
        const std::size_t y = restriction[i];
        const double sy = s.at(y);
        if (sy > best_score || (sy == best_score && y < best)) {
            best = y;
            best_score = sy;
        }
    }
    return best;
}

inline std::size_t predict(const VseParams& params, const ClassEmbeddings& emb, const Tensor& x,
                           std::span<const std::size_t> restriction) {
    VseScorer scorer(params, emb);
    return predict(scorer, x, restriction);
}

} // namespace rulegrad
