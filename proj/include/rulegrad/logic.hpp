#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rulegrad/autodiff.hpp"
#include "rulegrad/error.hpp"

namespace rulegrad {

// Truth values are pseudo-probabilities t in (0, 1) carried around in logit
// form: a scalar graph node z with t = sigmoid(z). Negation is an exact sign
// flip. Conjunction is the product t-norm, t(a AND b) = t(a) * t(b), which in
// logit space has the closed form
//
//     and(a, b) = -log(e^-a + e^-b + e^-a-b)
//     or(a, b)  =  log(e^a  + e^b  + e^a+b )
//
// evaluated with a max-shifted log-sum-exp. This keeps |z| <= 40 exact where
// naive sigmoid-space products already underflow, and makes the De Morgan
// pair identities hold bitwise.
using TruthLogit = Value;

// Pseudo-probability clamp applied before logit conversion.
inline constexpr double kTruthEps = 1e-7;

inline TruthLogit to_logit(Value t) {
    Value c = clamp(t, kTruthEps, 1.0 - kTruthEps);
    return sub(log(c), log(add_scalar(neg(c), 1.0)));
}

inline TruthLogit l_not(TruthLogit a) { return neg(a); }

inline TruthLogit l_or(TruthLogit a, TruthLogit b) {
    return logsumexp3(a, b, add(a, b));
}

inline TruthLogit l_and(TruthLogit a, TruthLogit b) {
    return neg(logsumexp3(neg(a), neg(b), neg(add(a, b))));
}

// Margin-modified disjunction: inputs are raised by the confidence margin c
// and the output lowered by it, so rules whose operands are all uncertain
// come out vacuously true and contribute no loss until the margin shrinks.
inline TruthLogit l_or_margin(TruthLogit a, TruthLogit b, double c) {
    if (c < 0.0) throw ContractError("confidence margin must be >= 0, got " + std::to_string(c));
    if (c == 0.0) return l_or(a, b);
    return add_scalar(l_or(add_scalar(a, c), add_scalar(b, c)), -c);
}

inline TruthLogit l_implies_margin(TruthLogit a, TruthLogit b, double c) {
    return l_or_margin(l_not(a), b, c);
}

inline TruthLogit l_iff_margin(TruthLogit a, TruthLogit b, double c) {
    return l_and(l_implies_margin(a, b, c), l_implies_margin(b, a, c));
}

// Set membership from class log-probabilities: t = N_s * sum_{y in S} p(y|x)
// with N_s = |Y| / (2|S|), so a uniform distribution lands at truth 1/2 and
// the full class universe at logit 0 for any distribution. The scaled mass
// can exceed 1; the clamp inside to_logit saturates it (zero gradient past
// the boundary).
inline TruthLogit inside_probs(Value probs, std::span<const std::size_t> class_set) {
    if (class_set.empty()) throw ContractError("inside: empty class set");
    const std::size_t n = probs.val().numel();
    const double ns = static_cast<double>(n) / (2.0 * static_cast<double>(class_set.size()));
    return to_logit(scale(sum_over(probs, class_set), ns));
}

inline TruthLogit inside(Value log_probs, std::span<const std::size_t> class_set) {
    return inside_probs(exp(log_probs), class_set);
}

// Naive existential membership, t(inside) = OR_{y in S} isA(x, y). Reference
// semantics only: it saturates as soon as any single member is confident and
// ignores that classes are mutually exclusive.
inline TruthLogit inside_exists(std::span<const TruthLogit> class_isa,
                                std::span<const std::size_t> class_set) {
    if (class_set.empty()) throw ContractError("inside_exists: empty class set");
    TruthLogit acc;
    bool first = true;
    for (std::size_t i : class_set) {
        if (i >= class_isa.size()) {
            throw ContractError("inside_exists: class index " + std::to_string(i) + " out of range");
        }
        acc = first ? class_isa[i] : l_or(acc, class_isa[i]);
        first = false;
    }
    return acc;
}

// Grounded rule assertions over class-index sets.
struct RuleSet {
    std::vector<std::string> hypernym_names;
    std::vector<std::vector<std::size_t>> hypernym_sets; // C_h per hypernym
    std::vector<std::string> attribute_names;
    std::vector<std::vector<std::size_t>> attribute_sets; // C_a per attribute
    bool hypernyms_mutually_exclusive = false;

    std::size_t num_hypernyms() const { return hypernym_sets.size(); }
    std::size_t num_attributes() const { return attribute_sets.size(); }

    void validate(std::size_t num_classes) const {
        auto check_family = [&](const char* kind, const std::vector<std::string>& names,
                                const std::vector<std::vector<std::size_t>>& sets) {
            if (!names.empty() && names.size() != sets.size()) {
                throw DataError(std::string(kind) + " names/sets size mismatch: " +
                                std::to_string(names.size()) + " vs " + std::to_string(sets.size()));
            }
            for (std::size_t s = 0; s < sets.size(); ++s) {
                if (sets[s].empty()) {
                    throw DataError(std::string(kind) + " set " + std::to_string(s) + " is empty");
                }
                for (std::size_t c : sets[s]) {
                    if (c >= num_classes) {
                        throw DataError(std::string(kind) + " set " + std::to_string(s) +
                                        " references class index " + std::to_string(c) +
                                        " outside the universe of " + std::to_string(num_classes));
                    }
                }
            }
        };
        check_family("hypernym", hypernym_names, hypernym_sets);
        check_family("attribute", attribute_names, attribute_sets);
        if (hypernyms_mutually_exclusive) {
            std::vector<int> owner(num_classes, -1);
            for (std::size_t h = 0; h < hypernym_sets.size(); ++h) {
                for (std::size_t c : hypernym_sets[h]) {
                    if (owner[c] >= 0) {
                        throw DataError("hypernym sets declared mutually exclusive but class " +
                                        std::to_string(c) + " appears in sets " +
                                        std::to_string(owner[c]) + " and " + std::to_string(h));
                    }
                    owner[c] = static_cast<int>(h);
                }
            }
        }
    }
};

// Propositional rule AST over one quantifier-bound (isA score, class set)
// pair. Atom and Inside nodes with no explicit payload refer to the bound
// pair; quantifier nodes expand into one grounded assertion per hypernym or
// attribute. Covers the two production rule families plus test compositions;
// this is deliberately not a general FOL compiler.
struct RuleAst {
    enum class Kind { Atom, Not, And, Or, Implies, Iff, Inside, ForAllHypernyms, ForAllAttributes };

    Kind kind = Kind::Atom;
    std::vector<RuleAst> children;
    int atom_index = -1;                 // Atom: explicit score index, -1 = bound
    std::vector<std::size_t> class_set;  // Inside: explicit set, empty = bound

    static RuleAst atom() { return RuleAst{Kind::Atom, {}, -1, {}}; }
    static RuleAst atom_at(int index) { return RuleAst{Kind::Atom, {}, index, {}}; }
    static RuleAst inside_bound() { return RuleAst{Kind::Inside, {}, -1, {}}; }
    static RuleAst inside_of(std::vector<std::size_t> set) {
        return RuleAst{Kind::Inside, {}, -1, std::move(set)};
    }
    static RuleAst negate(RuleAst a) { return RuleAst{Kind::Not, {std::move(a)}, -1, {}}; }
    static RuleAst conj(RuleAst a, RuleAst b) {
        return RuleAst{Kind::And, {std::move(a), std::move(b)}, -1, {}};
    }
    static RuleAst disj(RuleAst a, RuleAst b) {
        return RuleAst{Kind::Or, {std::move(a), std::move(b)}, -1, {}};
    }
    static RuleAst implies(RuleAst a, RuleAst b) {
        return RuleAst{Kind::Implies, {std::move(a), std::move(b)}, -1, {}};
    }
    static RuleAst iff(RuleAst a, RuleAst b) {
        return RuleAst{Kind::Iff, {std::move(a), std::move(b)}, -1, {}};
    }
    static RuleAst forall_hypernyms(RuleAst body) {
        return RuleAst{Kind::ForAllHypernyms, {std::move(body)}, -1, {}};
    }
    static RuleAst forall_attributes(RuleAst body) {
        return RuleAst{Kind::ForAllAttributes, {std::move(body)}, -1, {}};
    }

    void validate(bool quantifier_ok = true) const {
        const std::size_t arity = children.size();
        switch (kind) {
        case Kind::Atom:
            if (arity != 0) throw ContractError("rule ast: Atom must be a leaf");
            break;
        case Kind::Inside:
            if (arity != 0) throw ContractError("rule ast: Inside must be a leaf");
            break;
        case Kind::Not:
            if (arity != 1) throw ContractError("rule ast: Not is unary");
            break;
        case Kind::And:
        case Kind::Or:
        case Kind::Implies:
        case Kind::Iff:
            if (arity != 2) throw ContractError("rule ast: binary connective needs two children");
            break;
        case Kind::ForAllHypernyms:
        case Kind::ForAllAttributes:
            if (!quantifier_ok) throw ContractError("rule ast: nested quantifier");
            if (arity != 1) throw ContractError("rule ast: quantifier wraps one body");
            children[0].validate(false);
            return;
        }
        for (const RuleAst& c : children) c.validate(false);
    }
};

namespace detail {

struct RuleBinding {
    TruthLogit isa;                          // bound isA score
    const std::vector<std::size_t>* set;     // bound consistent class set
};

inline TruthLogit eval_rule_body(const RuleAst& ast, Value probs, const RuleBinding& bind,
                                 std::span<const TruthLogit> explicit_scores, double margin) {
    switch (ast.kind) {
    case RuleAst::Kind::Atom:
        if (ast.atom_index < 0) return bind.isa;
        if (static_cast<std::size_t>(ast.atom_index) >= explicit_scores.size()) {
            throw ContractError("rule ast: atom index out of range");
        }
        return explicit_scores[static_cast<std::size_t>(ast.atom_index)];
    case RuleAst::Kind::Inside: {
        const std::vector<std::size_t>* set = ast.class_set.empty() ? bind.set : &ast.class_set;
        if (set == nullptr || set->empty()) throw ContractError("rule ast: Inside with empty set");
        return inside_probs(probs, *set);
    }
    case RuleAst::Kind::Not:
        return l_not(eval_rule_body(ast.children[0], probs, bind, explicit_scores, margin));
    case RuleAst::Kind::And:
        return l_and(eval_rule_body(ast.children[0], probs, bind, explicit_scores, margin),
                     eval_rule_body(ast.children[1], probs, bind, explicit_scores, margin));
    case RuleAst::Kind::Or:
        return l_or_margin(eval_rule_body(ast.children[0], probs, bind, explicit_scores, margin),
                           eval_rule_body(ast.children[1], probs, bind, explicit_scores, margin),
                           margin);
    case RuleAst::Kind::Implies:
        return l_implies_margin(
            eval_rule_body(ast.children[0], probs, bind, explicit_scores, margin),
            eval_rule_body(ast.children[1], probs, bind, explicit_scores, margin), margin);
    case RuleAst::Kind::Iff:
        return l_iff_margin(eval_rule_body(ast.children[0], probs, bind, explicit_scores, margin),
                            eval_rule_body(ast.children[1], probs, bind, explicit_scores, margin),
                            margin);
    default:
        throw ContractError("rule ast: quantifier below the root");
    }
}

} // namespace detail

// The hypernym rule family: isA(x, h) => inside(x, C_h), one assertion per
// hypernym. The universal quantifier over hypernyms grounds to a separate
// assertion (and hence a separate bce term) per set rather than a single
// conjunction, which keeps gradients alive for each rule independently.
inline RuleAst hypernym_rule_ast() {
    return RuleAst::forall_hypernyms(RuleAst::implies(RuleAst::atom(), RuleAst::inside_bound()));
}

// The attribute rule family: isA(x, a) <=> inside(x, C_a).
inline RuleAst attribute_rule_ast() {
    return RuleAst::forall_attributes(RuleAst::iff(RuleAst::atom(), RuleAst::inside_bound()));
}

// Grounds a quantified rule into one assertion logit per hypernym/attribute.
inline std::vector<TruthLogit> ground_rule(const RuleAst& ast, Value probs,
                                           std::span<const TruthLogit> isa_scores,
                                           const RuleSet& rules, double margin) {
    ast.validate();
    const bool over_hypernyms = ast.kind == RuleAst::Kind::ForAllHypernyms;
    const bool over_attributes = ast.kind == RuleAst::Kind::ForAllAttributes;
    if (!over_hypernyms && !over_attributes) {
        throw ContractError("ground_rule: root must be a quantifier over hypernyms or attributes");
    }
    const auto& sets = over_hypernyms ? rules.hypernym_sets : rules.attribute_sets;
    if (isa_scores.size() != sets.size()) {
        throw ContractError("ground_rule: got " + std::to_string(isa_scores.size()) +
                            " isA scores for " + std::to_string(sets.size()) +
                            (over_hypernyms ? " hypernyms" : " attributes"));
    }
    std::vector<TruthLogit> out;
    out.reserve(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        detail::RuleBinding bind{isa_scores[i], &sets[i]};
        out.push_back(detail::eval_rule_body(ast.children[0], probs, bind, isa_scores, margin));
    }
    return out;
}

// One assertion z_h = isA(x,h) => inside(x, C_h) per hypernym.
inline std::vector<TruthLogit> ground_hypernym_rule(Value log_probs,
                                                    std::span<const TruthLogit> hypernym_scores,
                                                    const RuleSet& rules, double margin) {
    return ground_rule(hypernym_rule_ast(), exp(log_probs), hypernym_scores, rules, margin);
}

// One assertion z_a = isA(x,a) <=> inside(x, C_a) per attribute.
inline std::vector<TruthLogit> ground_attribute_rule(Value log_probs,
                                                     std::span<const TruthLogit> attribute_scores,
                                                     const RuleSet& rules, double margin) {
    return ground_rule(attribute_rule_ast(), exp(log_probs), attribute_scores, rules, margin);
}

} // namespace rulegrad
