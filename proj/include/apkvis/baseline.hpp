#pragma once

// L2-regularized logistic regression over average-pooled grayscale
// intensities, trained by mini-batch gradient descent with early stopping.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "apkvis/byte_image.hpp"
#include "apkvis/dataset.hpp"
#include "apkvis/error.hpp"
#include "apkvis/label.hpp"

namespace apkvis {

using FeatureVector = std::vector<double>;

/// Average-pools the (channel-mean) intensities into pool_side^2 cells,
/// scaled to [0, 1]. Cell i spans rows [i*R/P, (i+1)*R/P).
inline FeatureVector featurize(const ByteImage& image, std::uint32_t pool_side = 16)
{
    const std::uint32_t side = image.width();
    if (pool_side == 0 || pool_side > side) {
        throw Error(ErrorCode::InvalidArgument, "pool side must be in [1, image side]");
    }
    const std::uint32_t ch = image.spec.channel_count();
    if (image.pixels.size() != std::size_t{side} * side * ch) {
        throw Error(ErrorCode::InvalidArgument, "pixel buffer does not match the image spec");
    }
    FeatureVector out(std::size_t{pool_side} * pool_side, 0.0);
    for (std::uint32_t cy = 0; cy < pool_side; ++cy) {
        const std::uint64_t r0 = std::uint64_t{cy} * side / pool_side;
        const std::uint64_t r1 = std::uint64_t{cy + 1} * side / pool_side;
        for (std::uint32_t cx = 0; cx < pool_side; ++cx) {
            const std::uint64_t c0 = std::uint64_t{cx} * side / pool_side;
            const std::uint64_t c1 = std::uint64_t{cx + 1} * side / pool_side;
            double sum = 0;
            for (std::uint64_t r = r0; r < r1; ++r) {
                for (std::uint64_t c = c0; c < c1; ++c) {
                    double px = 0;
                    for (std::uint32_t k = 0; k < ch; ++k) {
                        px += image.pixels[(r * side + c) * ch + k];
                    }
                    sum += px / ch;
                }
            }
            out[std::size_t{cy} * pool_side + cx] = sum / (static_cast<double>((r1 - r0) * (c1 - c0)) * 255.0);
        }
    }
    return out;
}

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    double learning_rate = 0.5;
    std::uint32_t epochs = 20;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
    std::uint32_t batch_size = 32;
    std::uint32_t patience = 5;
    /// Adam is accepted by the config for the external training harness;
    /// the baseline trains with plain SGD only.
    Optimizer optimizer = Optimizer::Sgd;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LinearModel {
    std::vector<double> weights;
    double bias = 0;
    std::uint32_t pool_side = 16;
    TrainConfig train_config;

    std::size_t dimension() const noexcept { return weights.size(); }
    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct Example {
    FeatureVector features;
    Label label = Label::Benign;
};

inline double sigmoid(double z) noexcept
{
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) noexcept
{
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double decision_value(const LinearModel& model, std::span<const double> x)
{
    if (x.size() != model.weights.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "feature length " + std::to_string(x.size()) + " vs model " + std::to_string(model.weights.size()));
    }
    return std::inner_product(x.begin(), x.end(), model.weights.begin(), model.bias);
}

/// Mean logistic loss over `batch` plus (l2 / 2) * |w|^2; bias unpenalized.
inline double loss(const LinearModel& model, std::span<const Example* const> batch, double l2)
{
    double total = 0;
    for (const Example* ex : batch) {
        const double z = decision_value(model, ex->features);
        // -log sigmoid(z) for y=1, -log(1 - sigmoid(z)) for y=0
        total += ex->label == Label::Malware ? softplus(-z) : softplus(z);
    }
    double reg = 0;
    for (double w : model.weights) {
        reg += w * w;
    }
    return total / static_cast<double>(batch.size()) + 0.5 * l2 * reg;
}

struct Gradient {
    std::vector<double> weights;
    double bias = 0;
};

inline Gradient gradient(const LinearModel& model, std::span<const Example* const> batch, double l2)
{
    Gradient g;
    g.weights.assign(model.weights.size(), 0.0);
    for (const Example* ex : batch) {
        const double y = ex->label == Label::Malware ? 1.0 : 0.0;
        const double residual = sigmoid(decision_value(model, ex->features)) - y;
        for (std::size_t i = 0; i < g.weights.size(); ++i) {
            g.weights[i] += residual * ex->features[i];
        }
        g.bias += residual;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < g.weights.size(); ++i) {
        g.weights[i] = g.weights[i] * inv + l2 * model.weights[i];
    }
    g.bias *= inv;
    return g;
}

struct TrainHistory {
    std::vector<double> train_loss; // full training set, after each epoch
    std::vector<double> val_loss;
    std::uint32_t best_epoch = 0; // 0 means the initial parameters
    bool stopped_early = false;
};

/// Weights and bias start at zero. Each epoch shuffles example order with
/// SplitMix64(seed) and applies one SGD step per mini-batch. With a
/// validation set, training stops after `patience` epochs without a lower
/// validation loss and the best-validation parameters are returned.
inline LinearModel train(std::span<const Example> train_set, std::span<const Example> val_set,
                         const TrainConfig& config, std::uint32_t pool_side = 16, TrainHistory* history = nullptr)
{
    if (config.optimizer != Optimizer::Sgd) {
        throw Error(ErrorCode::InvalidArgument, "the baseline only trains with SGD");
    }
    if (config.batch_size == 0 || !(config.learning_rate > 0) || !(config.l2 >= 0)) {
        throw Error(ErrorCode::InvalidArgument, "batch_size, learning_rate and l2 must be positive");
    }
    bool has_benign = false;
    bool has_malware = false;
    for (const auto& ex : train_set) {
        (ex.label == Label::Malware ? has_malware : has_benign) = true;
    }
    if (!has_benign || !has_malware) {
        throw Error(ErrorCode::SingleClassTrainingSet, "training needs at least one sample of each class");
    }
    const std::size_t dim = train_set.front().features.size();
    auto check_dim = [&](std::span<const Example> set) {
        for (const auto& ex : set) {
            if (ex.features.size() != dim) {
                throw Error(ErrorCode::DimensionMismatch, "inconsistent feature lengths");
            }
        }
    };
    check_dim(train_set);
    check_dim(val_set);

    LinearModel model;
    model.weights.assign(dim, 0.0);
    model.pool_side = pool_side;
    model.train_config = config;

    std::vector<const Example*> order;
    for (const auto& ex : train_set) order.push_back(&ex);
    std::vector<const Example*> all_train = order;
    std::vector<const Example*> val;
    for (const auto& ex : val_set) val.push_back(&ex);

    auto checked_loss = [&](const std::vector<const Example*>& set) {
        const double l = loss(model, set, config.l2);
        if (!std::isfinite(l)) {
            throw Error(ErrorCode::NonFiniteLoss, "loss became non-finite");
        }
        return l;
    };

    LinearModel best = model;
    double best_val = val.empty() ? 0.0 : checked_loss(val);
    std::uint32_t since_best = 0;
    SplitMix64 rng(config.seed);

    for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
        fisher_yates(order, rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + std::size_t{config.batch_size});
            const std::span<const Example* const> batch(order.data() + start, end - start);
            const Gradient g = gradient(model, batch, config.l2);
            for (std::size_t i = 0; i < dim; ++i) {
                model.weights[i] -= config.learning_rate * g.weights[i];
            }
            model.bias -= config.learning_rate * g.bias;
        }
        const double train_l = checked_loss(all_train);
        if (history) history->train_loss.push_back(train_l);
        if (val.empty()) {
            best = model;
            if (history) history->best_epoch = epoch;
            continue;
        }
        const double val_l = checked_loss(val);
        if (history) history->val_loss.push_back(val_l);
        if (val_l < best_val) {
            best_val = val_l;
            best = model;
            since_best = 0;
            if (history) history->best_epoch = epoch;
        } else if (++since_best >= config.patience) {
            if (history) history->stopped_early = epoch < config.epochs;
            break;
        }
    }
    return best;
}

struct Prediction {
    Label label = Label::Benign;
    double score = 0.5;
};

/// score = sigmoid(w.x + b); Malware iff score >= 0.5.
inline Prediction predict(const LinearModel& model, std::span<const double> features)
{
    const double score = sigmoid(decision_value(model, features));
    return {score >= 0.5 ? Label::Malware : Label::Benign, score};
}

// Model file (text, one item per line):
//   apkvis-linear-model 1
//   dimension <d>
//   pool_side <p>
//   bias <b>
//   learning_rate / epochs / l2 / seed / batch_size / patience / optimizer
//   weights
//   <w_0> ... <w_{d-1}>, one per line
// Reals use %.17g so they round-trip exactly.

inline std::string serialize_model(const LinearModel& m)
{
    auto real = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string out = "apkvis-linear-model 1\n";
    out += "dimension " + std::to_string(m.weights.size()) + "\n";
    out += "pool_side " + std::to_string(m.pool_side) + "\n";
    out += "bias " + real(m.bias) + "\n";
    out += "learning_rate " + real(m.train_config.learning_rate) + "\n";
    out += "epochs " + std::to_string(m.train_config.epochs) + "\n";
    out += "l2 " + real(m.train_config.l2) + "\n";
    out += "seed " + std::to_string(m.train_config.seed) + "\n";
    out += "batch_size " + std::to_string(m.train_config.batch_size) + "\n";
    out += "patience " + std::to_string(m.train_config.patience) + "\n";
    out += std::string("optimizer ") + (m.train_config.optimizer == Optimizer::Adam ? "adam" : "sgd") + "\n";
    out += "weights\n";
    for (double w : m.weights) {
        out += real(w) + "\n";
    }
    return out;
}

inline LinearModel parse_model(std::string_view text)
{
    std::istringstream in{std::string(text)};
    auto fail = [](const std::string& what) -> LinearModel {
        throw Error(ErrorCode::MalformedModel, what);
    };
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "apkvis-linear-model" || version != 1) {
        return fail("bad header");
    }
    LinearModel m;
    std::size_t dim = 0;
    std::string key;
    auto expect = [&](const char* name) {
        if (!(in >> key) || key != name) {
            fail(std::string("expected '") + name + "'");
        }
    };
    auto read_real = [&](const char* name) {
        expect(name);
        std::string token;
        if (!(in >> token)) fail(std::string("missing value for ") + name);
        try {
            return std::stod(token);
        } catch (const std::exception&) {
            fail(std::string("bad number for ") + name);
        }
        return 0.0;
    };
    auto read_uint = [&](const char* name) {
        expect(name);
        std::uint64_t v = 0;
        if (!(in >> v)) fail(std::string("bad integer for ") + name);
        return v;
    };
    dim = static_cast<std::size_t>(read_uint("dimension"));
    m.pool_side = static_cast<std::uint32_t>(read_uint("pool_side"));
    m.bias = read_real("bias");
    m.train_config.learning_rate = read_real("learning_rate");
    m.train_config.epochs = static_cast<std::uint32_t>(read_uint("epochs"));
    m.train_config.l2 = read_real("l2");
    m.train_config.seed = read_uint("seed");
    m.train_config.batch_size = static_cast<std::uint32_t>(read_uint("batch_size"));
    m.train_config.patience = static_cast<std::uint32_t>(read_uint("patience"));
    expect("optimizer");
    std::string opt;
    in >> opt;
    if (opt == "sgd") m.train_config.optimizer = Optimizer::Sgd;
    else if (opt == "adam") m.train_config.optimizer = Optimizer::Adam;
    else fail("unknown optimizer " + opt);
    expect("weights");
    if (dim != std::size_t{m.pool_side} * m.pool_side || dim > (1u << 24)) {
        fail("dimension must equal pool_side^2");
    }
    m.weights.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        std::string token;
        if (!(in >> token)) fail("missing weight " + std::to_string(i));
        try {
            m.weights[i] = std::stod(token);
        } catch (const std::exception&) {
            fail("bad weight " + std::to_string(i));
        }
    }
    for (double w : m.weights) {
        if (!std::isfinite(w)) fail("non-finite weight");
    }
    if (!std::isfinite(m.bias)) fail("non-finite bias");
    return m;
}

} // namespace apkvis
