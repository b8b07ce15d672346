#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulegrad/error.hpp"
#include "rulegrad/logic.hpp"
#include "rulegrad/rng.hpp"
#include "rulegrad/tensor.hpp"
#include "rulegrad/vse.hpp"

namespace rulegrad {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Raw matrix / label file formats. Matrices are row-major 64-bit floats,
// little-endian on disk regardless of host byte order.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::uint64_t out = 0;
        for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
        return out;
    }
}

} // namespace detail

inline void write_f64(const fs::path& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < t.numel(); ++i) {
        std::uint64_t bits;
        double v = t[i];
        std::memcpy(&bits, &v, 8);
        bits = detail::to_little_endian(bits);
        out.write(reinterpret_cast<const char*>(&bits), 8);
    }
    if (!out) throw DataError("short write to " + path.string());
}

inline Tensor read_f64(const fs::path& path, Shape shape) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing file " + path.string());
    const std::size_t n = shape_numel(shape);
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        if (!in.read(reinterpret_cast<char*>(&bits), 8)) {
            throw DataError(path.string() + ": expected " + std::to_string(n) +
                            " doubles, file ended at " + std::to_string(i));
        }
        bits = detail::to_little_endian(bits);
        double v;
        std::memcpy(&v, &bits, 8);
        data[i] = v;
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw DataError(path.string() + ": file longer than the " + std::to_string(n) +
                        " doubles implied by shape " + shape_str(shape));
    }
    return Tensor(std::move(shape), std::move(data));
}

inline void write_labels(const fs::path& path, std::span<const std::size_t> labels) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    for (std::size_t v : labels) out << v << "\n";
}

inline std::vector<std::size_t> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing file " + path.string());
    std::vector<std::size_t> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            long long v = std::stoll(line);
            if (v < 0) throw DataError(path.string() + ": negative label " + line);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::invalid_argument&) {
            throw DataError(path.string() + ": bad label line '" + line + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct ZslDataset {
    std::string name;
    Tensor train_features; // [N_s x D_x]
    std::vector<std::size_t> train_labels;
    Tensor test_features; // [N_t x D_x]
    std::vector<std::size_t> test_labels; // read by evaluation only
    ClassEmbeddings embeddings;
    std::vector<std::string> class_names;
    std::vector<std::size_t> seen;
    std::vector<std::size_t> unseen;
    RuleSet rules;

    std::size_t num_classes() const { return class_names.size(); }
    std::size_t feature_dim() const {
        return train_features.rank() == 2 ? train_features.shape()[1] : 0;
    }
    std::size_t label_dim() const {
        return embeddings.classes.rank() == 2 ? embeddings.classes.shape()[1] : 0;
    }

    Tensor train_row(std::size_t i) const { return matrix_row(train_features, i); }
    Tensor test_row(std::size_t i) const { return matrix_row(test_features, i); }

    static Tensor matrix_row(const Tensor& m, std::size_t i) {
        Tensor out({m.shape()[1]});
        for (std::size_t j = 0; j < out.numel(); ++j) out[j] = m.at2(i, j);
        return out;
    }

    void validate() const {
        const std::size_t y = num_classes();
        if (y == 0) throw DataError("dataset has no classes");
        std::vector<char> role(y, 0);
        for (std::size_t c : seen) {
            if (c >= y) throw DataError("seen class index " + std::to_string(c) + " out of range");
            role[c] |= 1;
        }
        for (std::size_t c : unseen) {
            if (c >= y) throw DataError("unseen class index " + std::to_string(c) + " out of range");
            if (role[c] & 1) {
                throw DataError("seen/unseen partitions overlap at class index " + std::to_string(c));
            }
            role[c] |= 2;
        }
        for (std::size_t c = 0; c < y; ++c) {
            if (!role[c]) {
                throw DataError("class index " + std::to_string(c) +
                                " belongs to neither the seen nor the unseen partition");
            }
        }
        if (train_features.rank() != 2 || test_features.rank() != 2) {
            throw DataError("feature matrices must be 2-D");
        }
        if (train_features.shape()[0] != train_labels.size()) {
            throw DataError("train feature rows (" + std::to_string(train_features.shape()[0]) +
                            ") != train labels (" + std::to_string(train_labels.size()) + ")");
        }
        if (test_features.shape()[0] != test_labels.size()) {
            throw DataError("test feature rows (" + std::to_string(test_features.shape()[0]) +
                            ") != test labels (" + std::to_string(test_labels.size()) + ")");
        }
        if (train_features.shape()[1] != test_features.shape()[1]) {
            throw DataError("feature dimensionality differs across splits: " +
                            std::to_string(train_features.shape()[1]) + " vs " +
                            std::to_string(test_features.shape()[1]));
        }
        std::vector<char> is_seen(y, 0);
        for (std::size_t c : seen) is_seen[c] = 1;
        for (std::size_t i = 0; i < train_labels.size(); ++i) {
            if (train_labels[i] >= y || !is_seen[train_labels[i]]) {
                throw DataError("train label at row " + std::to_string(i) + " (" +
                                std::to_string(train_labels[i]) + ") is not a seen class");
            }
        }
        for (std::size_t i = 0; i < test_labels.size(); ++i) {
            if (test_labels[i] >= y) {
                throw DataError("test label at row " + std::to_string(i) + " out of range");
            }
        }
        if (embeddings.classes.rank() != 2 || embeddings.classes.shape()[0] != y) {
            throw DataError("class embedding rows != number of classes");
        }
        if (embeddings.hypernyms.numel() > 0 &&
            embeddings.hypernyms.shape()[0] != rules.num_hypernyms()) {
            throw DataError("hypernym embedding rows (" +
                            std::to_string(embeddings.hypernyms.shape()[0]) +
                            ") != hypernym sets (" + std::to_string(rules.num_hypernyms()) + ")");
        }
        if (embeddings.attributes.numel() > 0 &&
            embeddings.attributes.shape()[0] != rules.num_attributes()) {
            throw DataError("attribute embedding rows (" +
                            std::to_string(embeddings.attributes.shape()[0]) +
                            ") != attribute sets (" + std::to_string(rules.num_attributes()) + ")");
        }
        if (!train_features.all_finite() || !test_features.all_finite() ||
            !embeddings.classes.all_finite()) {
            throw DataError("non-finite values in features or embeddings");
        }
        rules.validate(y);
    }
};

// ---------------------------------------------------------------------------
// Attribute binarization
// ---------------------------------------------------------------------------

struct BinarizedAttributes {
    std::vector<std::vector<std::size_t>> sets; // kept attribute sets
    std::vector<std::size_t> kept;              // source column per kept set
    std::vector<std::size_t> dropped;           // empty or universal columns
};

// Class y holds attribute a iff mean_attributes[y, a] >= threshold. Columns
// whose consistent set comes out empty or universal are dropped (the
// biconditional rule is vacuous or degenerate for them).
inline BinarizedAttributes binarize_attributes(const Tensor& mean_attributes, double threshold,
                                               std::ostream* warn = &std::cerr) {
    if (mean_attributes.rank() != 2) throw ContractError("binarize_attributes: expected [Y x A]");
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ContractError("binarize_attributes: threshold must lie in (0, 1)");
    }
    const std::size_t y = mean_attributes.shape()[0], a = mean_attributes.shape()[1];
    for (std::size_t i = 0; i < mean_attributes.numel(); ++i) {
        const double v = mean_attributes[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ContractError("binarize_attributes: value " + std::to_string(v) +
                                " outside [0, 1]");
        }
    }
    BinarizedAttributes out;
    for (std::size_t col = 0; col < a; ++col) {
        std::vector<std::size_t> set;
        for (std::size_t cls = 0; cls < y; ++cls) {
            if (mean_attributes.at2(cls, col) >= threshold) set.push_back(cls);
        }
        if (set.empty() || set.size() == y) {
            out.dropped.push_back(col);
            if (warn) {
                *warn << "warning: attribute column " << col << " binarizes to "
                      << (set.empty() ? "an empty" : "the universal") << " class set; dropped\n";
            }
            continue;
        }
        out.sets.push_back(std::move(set));
        out.kept.push_back(col);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature noise
// ---------------------------------------------------------------------------

inline Tensor add_feature_noise(const Tensor& features, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ContractError("add_feature_noise: sigma must be >= 0");
    if (sigma == 0.0) return features;
    Rng rng(seed);
    Tensor out = features;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += rng.normal(0.0, sigma);
    return out;
}

// ---------------------------------------------------------------------------
// Manifest I/O
// ---------------------------------------------------------------------------

inline void save_dataset(const ZslDataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    write_f64(dir / "train_features.f64", ds.train_features);
    write_f64(dir / "test_features.f64", ds.test_features);
    write_f64(dir / "class_embeddings.f64", ds.embeddings.classes);
    write_labels(dir / "train.labels", ds.train_labels);
    write_labels(dir / "test.labels", ds.test_labels);

    json files = {{"train_features", "train_features.f64"},
                  {"train_labels", "train.labels"},
                  {"test_features", "test_features.f64"},
                  {"test_labels", "test.labels"},
                  {"class_embeddings", "class_embeddings.f64"}};
    if (ds.embeddings.hypernyms.numel() > 0) {
        write_f64(dir / "hypernym_embeddings.f64", ds.embeddings.hypernyms);
        files["hypernym_embeddings"] = "hypernym_embeddings.f64";
    }
    if (ds.embeddings.attributes.numel() > 0) {
        write_f64(dir / "attribute_embeddings.f64", ds.embeddings.attributes);
        files["attribute_embeddings"] = "attribute_embeddings.f64";
    }

    json hyp_map = json::object();
    for (std::size_t h = 0; h < ds.rules.num_hypernyms(); ++h) {
        hyp_map[ds.rules.hypernym_names[h]] = ds.rules.hypernym_sets[h];
    }
    json attr_map = json::object();
    for (std::size_t a = 0; a < ds.rules.num_attributes(); ++a) {
        attr_map[ds.rules.attribute_names[a]] = ds.rules.attribute_sets[a];
    }

    json m = {{"name", ds.name},
              {"feature_dim", ds.feature_dim()},
              {"embedding_dim", ds.label_dim()},
              {"classes", ds.class_names},
              {"seen", ds.seen},
              {"unseen", ds.unseen},
              {"hypernyms", ds.rules.hypernym_names},
              {"hypernym_map", hyp_map},
              {"attributes", ds.rules.attribute_names},
              {"attribute_map", attr_map},
              {"hypernyms_mutually_exclusive", ds.rules.hypernyms_mutually_exclusive},
              {"counts", {{"train", ds.train_labels.size()}, {"test", ds.test_labels.size()}}},
              {"files", files}};

    std::ofstream out(dir / "manifest.json");
    if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
    out << m.dump(2) << "\n";
}

inline ZslDataset load_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw DataError("missing file " + manifest_path.string());
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        throw DataError(manifest_path.string() + ": " + e.what());
    }

    auto require = [&](const char* key) -> const json& {
        if (!m.contains(key)) {
            throw DataError(manifest_path.string() + ": missing key '" + key + "'");
        }
        return m.at(key);
    };

    ZslDataset ds;
    try {
        ds.name = require("name").get<std::string>();
        ds.class_names = require("classes").get<std::vector<std::string>>();
        ds.seen = require("seen").get<std::vector<std::size_t>>();
        ds.unseen = require("unseen").get<std::vector<std::size_t>>();

        const std::size_t dx = require("feature_dim").get<std::size_t>();
        const std::size_t dy = require("embedding_dim").get<std::size_t>();
        const json& counts = require("counts");
        const std::size_t n_train = counts.at("train").get<std::size_t>();
        const std::size_t n_test = counts.at("test").get<std::size_t>();
        const json& files = require("files");

        auto file = [&](const char* key) {
            return dir / files.at(key).get<std::string>();
        };
        ds.train_features = read_f64(file("train_features"), {n_train, dx});
        ds.test_features = read_f64(file("test_features"), {n_test, dx});
        ds.embeddings.classes = read_f64(file("class_embeddings"), {ds.class_names.size(), dy});
        ds.train_labels = read_labels(file("train_labels"));
        ds.test_labels = read_labels(file("test_labels"));

        ds.rules.hypernym_names = require("hypernyms").get<std::vector<std::string>>();
        const json& hyp_map = require("hypernym_map");
        for (const std::string& h : ds.rules.hypernym_names) {
            if (!hyp_map.contains(h)) {
                throw DataError("hypernym_map is missing entry for '" + h + "'");
            }
            ds.rules.hypernym_sets.push_back(hyp_map.at(h).get<std::vector<std::size_t>>());
        }
        ds.rules.attribute_names = require("attributes").get<std::vector<std::string>>();
        const json& attr_map = require("attribute_map");
        for (const std::string& a : ds.rules.attribute_names) {
            if (!attr_map.contains(a)) {
                throw DataError("attribute_map is missing entry for '" + a + "'");
            }
            ds.rules.attribute_sets.push_back(attr_map.at(a).get<std::vector<std::size_t>>());
        }
        ds.rules.hypernyms_mutually_exclusive =
            m.value("hypernyms_mutually_exclusive", false);

        if (!ds.rules.hypernym_names.empty() && files.contains("hypernym_embeddings")) {
            ds.embeddings.hypernyms =
                read_f64(file("hypernym_embeddings"), {ds.rules.num_hypernyms(), dy});
        }
        if (!ds.rules.attribute_names.empty() && files.contains("attribute_embeddings")) {
            ds.embeddings.attributes =
                read_f64(file("attribute_embeddings"), {ds.rules.num_attributes(), dy});
        }
    } catch (const json::exception& e) {
        throw DataError(manifest_path.string() + ": " + e.what());
    }

    // Degenerate attribute sets are dropped here rather than rejected: the
    // biconditional is vacuous for them.
    const std::size_t y = ds.class_names.size();
    std::vector<std::vector<std::size_t>> kept_sets;
    std::vector<std::string> kept_names;
    std::size_t kept_rows = 0;
    std::vector<std::size_t> kept_row_index;
    for (std::size_t a = 0; a < ds.rules.num_attributes(); ++a) {
        const auto& set = ds.rules.attribute_sets[a];
        if (set.empty() || set.size() == y) {
            std::cerr << "warning: attribute '" << ds.rules.attribute_names[a]
                      << "' has an " << (set.empty() ? "empty" : "universal")
                      << " class set; dropped\n";
            continue;
        }
        kept_sets.push_back(set);
        kept_names.push_back(ds.rules.attribute_names[a]);
        kept_row_index.push_back(a);
        ++kept_rows;
    }
    if (kept_rows != ds.rules.num_attributes()) {
        if (ds.embeddings.attributes.numel() > 0) {
            Tensor pruned({kept_rows, ds.embeddings.attributes.shape()[1]});
            for (std::size_t r = 0; r < kept_rows; ++r)
                for (std::size_t c = 0; c < pruned.shape()[1]; ++c)
                    pruned.at2(r, c) = ds.embeddings.attributes.at2(kept_row_index[r], c);
            ds.embeddings.attributes = std::move(pruned);
        }
        ds.rules.attribute_sets = std::move(kept_sets);
        ds.rules.attribute_names = std::move(kept_names);
    }

    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Parameter checkpoint I/O
// ---------------------------------------------------------------------------

inline void save_params(const VseParams& p, const fs::path& dir) {
    fs::create_directories(dir);
    write_f64(dir / "w_x.f64", p.w_x);
    write_f64(dir / "w_y.f64", p.w_y);
    json m = {{"w_x", {{"file", "w_x.f64"}, {"shape", p.w_x.shape()}}},
              {"w_y", {{"file", "w_y.f64"}, {"shape", p.w_y.shape()}}}};
    std::ofstream out(dir / "params.json");
    if (!out) throw DataError("cannot write " + (dir / "params.json").string());
    out << m.dump(2) << "\n";
}

inline VseParams load_params(const fs::path& dir) {
    std::ifstream in(dir / "params.json");
    if (!in) throw DataError("missing file " + (dir / "params.json").string());
    json m;
    try {
        in >> m;
        VseParams p;
        p.w_x = read_f64(dir / m.at("w_x").at("file").get<std::string>(),
                         m.at("w_x").at("shape").get<Shape>());
        p.w_y = read_f64(dir / m.at("w_y").at("file").get<std::string>(),
                         m.at("w_y").at("shape").get<Shape>());
        return p;
    } catch (const json::exception& e) {
        throw DataError((dir / "params.json").string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Synthetic hierarchical dataset
// ---------------------------------------------------------------------------

// Desk-scale stand-in for the real ZSL benchmarks: hypernym clusters on a
// sphere in feature space, class prototypes inside each cluster, class
// embeddings as a noisy linear image of the prototypes (so the linear VSE can
// align the two spaces, and hypernym/attribute structure carries information
// the corrupted class embeddings lack).
struct SyntheticSpec {
    std::size_t hypernyms = 5;
    std::size_t classes_per_hypernym = 4;
    std::size_t samples_per_class = 50;      // train samples per seen class
    std::size_t test_samples_per_class = 20; // test samples per class (all classes)
    std::size_t feature_dim = 32;
    std::size_t embedding_dim = 16;
    std::size_t unseen_per_hypernym = 1;
    std::size_t attributes = 10;
    double noise_sigma = 1.0;       // within-class sample noise
    double center_separation = 4.0; // hypernym center radius
    double class_offset = 1.0;      // within-hypernym prototype spread
    double embedding_noise = 0.35;  // corruption of class embeddings
    std::uint64_t seed = 7;
    std::string name = "synthetic";

    void validate() const {
        if (hypernyms == 0 || classes_per_hypernym == 0 || samples_per_class == 0 ||
            test_samples_per_class == 0 || feature_dim == 0 || embedding_dim == 0) {
            throw ContractError("synthetic spec: sizes must be positive");
        }
        if (unseen_per_hypernym >= classes_per_hypernym) {
            throw ContractError("synthetic spec: unseen_per_hypernym must be < classes_per_hypernym");
        }
        if (noise_sigma < 0.0 || center_separation <= 0.0 || class_offset <= 0.0 ||
            embedding_noise < 0.0) {
            throw ContractError("synthetic spec: bad noise/separation values");
        }
    }
};

inline ZslDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t ny = spec.hypernyms * spec.classes_per_hypernym;
    const std::size_t dx = spec.feature_dim;
    const std::size_t dy = spec.embedding_dim;

    auto unit_vector = [&](std::size_t dim) {
        std::vector<double> v(dim);
        double norm = 0.0;
        for (double& x : v) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    };

    // Orthonormal direction bank (Gram-Schmidt on random vectors). Hypernym
    // centers and within-hypernym class offsets live in mutually orthogonal
    // subspaces, so discriminating sibling classes never erodes the cluster
    // geometry the rules reason about. Falls back to plain random directions
    // once the dimensionality is exhausted.
    std::vector<std::vector<double>> bank;
    auto next_direction = [&]() {
        for (int attempt = 0; attempt < 64; ++attempt) {
            std::vector<double> v = unit_vector(dx);
            if (bank.size() >= dx) return v;
            for (const auto& b : bank) {
                double dot = 0.0;
                for (std::size_t i = 0; i < dx; ++i) dot += v[i] * b[i];
                for (std::size_t i = 0; i < dx; ++i) v[i] -= dot * b[i];
            }
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-6) continue;
            for (double& x : v) x /= norm;
            bank.push_back(v);
            return v;
        }
        return unit_vector(dx);
    };

    // Centers form a simplex (pairwise cosine -1/(H-1)) so that a sample is
    // actively anti-aligned with every foreign hypernym, not merely
    // orthogonal. The margin then gates foreign rules off cleanly.
    std::vector<std::vector<double>> centers;
    {
        std::vector<std::vector<double>> axes;
        for (std::size_t h = 0; h < spec.hypernyms; ++h) axes.push_back(next_direction());
        std::vector<double> mean(dx, 0.0);
        for (const auto& a : axes)
            for (std::size_t i = 0; i < dx; ++i) mean[i] += a[i] / static_cast<double>(spec.hypernyms);
        for (auto& a : axes) {
            std::vector<double> centered(dx);
            double norm = 0.0;
            for (std::size_t i = 0; i < dx; ++i) {
                centered[i] = a[i] - mean[i];
                norm += centered[i] * centered[i];
            }
            norm = std::sqrt(norm);
            if (norm < 1e-9) continue; // single hypernym: keep the raw axis
            for (std::size_t i = 0; i < dx; ++i) a[i] = centered[i] / norm;
        }
        centers = std::move(axes);
    }

    // Class prototypes: scaled center plus a unit offset along a direction
    // reserved for that class.
    std::vector<std::vector<double>> prototypes(ny, std::vector<double>(dx));
    for (std::size_t h = 0; h < spec.hypernyms; ++h) {
        for (std::size_t k = 0; k < spec.classes_per_hypernym; ++k) {
            const std::size_t cls = h * spec.classes_per_hypernym + k;
            const std::vector<double> offset = next_direction();
            for (std::size_t i = 0; i < dx; ++i) {
                prototypes[cls][i] =
                    spec.center_separation * centers[h][i] + spec.class_offset * offset[i];
            }
        }
    }
    for (auto& c : centers)
        for (double& x : c) x *= spec.center_separation;

    // Shared linear map from feature space into label-embedding space.
    Tensor map({dy, dx});
    const double map_scale = 1.0 / std::sqrt(static_cast<double>(dx));
    for (std::size_t i = 0; i < map.numel(); ++i) map[i] = rng.normal(0.0, map_scale);
    auto embed = [&](const std::vector<double>& v) {
        std::vector<double> out(dy, 0.0);
        for (std::size_t r = 0; r < dy; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < dx; ++c) s += map.at2(r, c) * v[c];
            out[r] = s;
        }
        return out;
    };

    ZslDataset ds;
    ds.name = spec.name;

    // Class embeddings: noisy image of the prototype. Hypernym embeddings:
    // clean image of the cluster center, an independent vector the class
    // embeddings correlate with but do not contain.
    ds.embeddings.classes = Tensor({ny, dy});
    for (std::size_t cls = 0; cls < ny; ++cls) {
        std::vector<double> e = embed(prototypes[cls]);
        for (std::size_t j = 0; j < dy; ++j) {
            ds.embeddings.classes.at2(cls, j) = e[j] + rng.normal(0.0, spec.embedding_noise);
        }
    }
    ds.embeddings.hypernyms = Tensor({spec.hypernyms, dy});
    for (std::size_t h = 0; h < spec.hypernyms; ++h) {
        std::vector<double> e = embed(centers[h]);
        for (std::size_t j = 0; j < dy; ++j) ds.embeddings.hypernyms.at2(h, j) = e[j];
    }

    for (std::size_t cls = 0; cls < ny; ++cls) {
        std::ostringstream name;
        name << "class" << (cls < 10 ? "0" : "") << cls;
        ds.class_names.push_back(name.str());
    }

    // Hypernym map by construction; mutually exclusive by construction.
    for (std::size_t h = 0; h < spec.hypernyms; ++h) {
        std::vector<std::size_t> set(spec.classes_per_hypernym);
        for (std::size_t k = 0; k < spec.classes_per_hypernym; ++k) {
            set[k] = h * spec.classes_per_hypernym + k;
        }
        ds.rules.hypernym_names.push_back("hyper" + std::to_string(h));
        ds.rules.hypernym_sets.push_back(std::move(set));
    }
    ds.rules.hypernyms_mutually_exclusive = true;

    // Attributes: unions of hypernym clusters with a few per-class flips, so
    // they correlate with the hierarchy without duplicating it.
    for (std::size_t a = 0; a < spec.attributes; ++a) {
        std::vector<std::size_t> set;
        while (true) {
            std::vector<char> in_set(ny, 0);
            for (std::size_t h = 0; h < spec.hypernyms; ++h) {
                if (rng.uniform() < 0.5) {
                    for (std::size_t k = 0; k < spec.classes_per_hypernym; ++k) {
                        in_set[h * spec.classes_per_hypernym + k] = 1;
                    }
                }
            }
            for (std::size_t cls = 0; cls < ny; ++cls) {
                if (rng.uniform() < 0.15) in_set[cls] = static_cast<char>(1 - in_set[cls]);
            }
            set.clear();
            for (std::size_t cls = 0; cls < ny; ++cls) {
                if (in_set[cls]) set.push_back(cls);
            }
            if (!set.empty() && set.size() < ny) break;
        }
        ds.rules.attribute_names.push_back("attr" + std::to_string(a));
        ds.rules.attribute_sets.push_back(std::move(set));
    }

    // Attribute embeddings: image of the member-prototype centroid, likewise
    // independent of the class embedding noise.
    ds.embeddings.attributes = Tensor({spec.attributes, dy});
    for (std::size_t a = 0; a < spec.attributes; ++a) {
        std::vector<double> centroid(dx, 0.0);
        for (std::size_t cls : ds.rules.attribute_sets[a]) {
            for (std::size_t i = 0; i < dx; ++i) centroid[i] += prototypes[cls][i];
        }
        for (double& v : centroid) v /= static_cast<double>(ds.rules.attribute_sets[a].size());
        std::vector<double> e = embed(centroid);
        for (std::size_t j = 0; j < dy; ++j) ds.embeddings.attributes.at2(a, j) = e[j];
    }

    // Unseen classes, chosen per hypernym.
    std::vector<char> is_unseen(ny, 0);
    for (std::size_t h = 0; h < spec.hypernyms; ++h) {
        std::vector<std::size_t> members(spec.classes_per_hypernym);
        for (std::size_t k = 0; k < spec.classes_per_hypernym; ++k) {
            members[k] = h * spec.classes_per_hypernym + k;
        }
        rng.shuffle(members);
        for (std::size_t u = 0; u < spec.unseen_per_hypernym; ++u) is_unseen[members[u]] = 1;
    }
    for (std::size_t cls = 0; cls < ny; ++cls) {
        (is_unseen[cls] ? ds.unseen : ds.seen).push_back(cls);
    }

    // Samples: train on seen classes, test on every class.
    const std::size_t n_train = ds.seen.size() * spec.samples_per_class;
    const std::size_t n_test = ny * spec.test_samples_per_class;
    ds.train_features = Tensor({n_train, dx});
    ds.test_features = Tensor({n_test, dx});
    std::size_t tr = 0;
    for (std::size_t cls : ds.seen) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++tr) {
            for (std::size_t i = 0; i < dx; ++i) {
                ds.train_features.at2(tr, i) = prototypes[cls][i] + rng.normal(0.0, spec.noise_sigma);
            }
            ds.train_labels.push_back(cls);
        }
    }
    std::size_t te = 0;
    for (std::size_t cls = 0; cls < ny; ++cls) {
        for (std::size_t s = 0; s < spec.test_samples_per_class; ++s, ++te) {
            for (std::size_t i = 0; i < dx; ++i) {
                ds.test_features.at2(te, i) = prototypes[cls][i] + rng.normal(0.0, spec.noise_sigma);
            }
            ds.test_labels.push_back(cls);
        }
    }

    ds.validate();
    return ds;
}

} // namespace rulegrad
