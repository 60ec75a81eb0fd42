#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/core/ops.hpp"
#include "charmend/core/param_store.hpp"
#include "charmend/core/rng.hpp"
#include "charmend/edit/features.hpp"

namespace charmend {

struct ClassifierConfig {
    size_t hidden = 64;
    size_t epochs = 200;
    double lr = 1e-3;
    uint64_t seed = 1;
};

/// 410 -> 64 (ReLU) -> 1 (sigmoid) edit classifier. Features are
/// standardized with training-set statistics stored in the model, so
/// callers always pass raw feature vectors.
class EditClassifier {
public:
    EditClassifier() = default;

    /// Probability that the edit is correct, in (0,1).
    double predict(const std::vector<double>& features) const {
        if (features.size() != mean_.size())
            throw ArgumentError("classifier: feature vector has " + std::to_string(features.size()) +
                                " dims, expected " + std::to_string(mean_.size()));
        const size_t D = mean_.size(), Hn = b1_.size();
        std::vector<double> x(D);
        for (size_t i = 0; i < D; ++i) x[i] = (features[i] - mean_[i]) / std_[i];
        std::vector<double> h(Hn);
        affine_into(W1_.data(), b1_.data(), x.data(), Hn, D, h.data());
        for (double& v : h) v = v > 0.0 ? v : 0.0;
        double o = b2_;
        for (size_t i = 0; i < Hn; ++i) o += W2_[i] * h[i];
        return sigmoid_scalar(o);
    }

    /// Full-batch Adam on the logistic loss. Both classes must be present.
    /// Deterministic for a fixed seed.
    static EditClassifier train(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, const ClassifierConfig& cfg) {
        if (features.size() != labels.size() || features.empty())
            throw ArgumentError("classifier: features and labels must be nonempty and aligned");
        bool pos = false, neg = false;
        for (int l : labels) (l ? pos : neg) = true;
        if (!pos || !neg) throw ArgumentError("classifier: training data holds a single class");

        const size_t D = features.front().size();
        for (const auto& f : features)
            if (f.size() != D) throw ArgumentError("classifier: inconsistent feature dimensions");
        const size_t n = features.size(), Hn = cfg.hidden;

        EditClassifier clf;
        clf.mean_.assign(D, 0.0);
        clf.std_.assign(D, 0.0);
        for (const auto& f : features)
            for (size_t i = 0; i < D; ++i) clf.mean_[i] += f[i];
        for (double& m : clf.mean_) m /= static_cast<double>(n);
        for (const auto& f : features)
            for (size_t i = 0; i < D; ++i) clf.std_[i] += (f[i] - clf.mean_[i]) * (f[i] - clf.mean_[i]);
        for (double& s : clf.std_) {
            s = std::sqrt(s / static_cast<double>(n));
            if (s < 1e-12) s = 1.0;
        }

        std::vector<std::vector<double>> x(n, std::vector<double>(D));
        for (size_t r = 0; r < n; ++r)
            for (size_t i = 0; i < D; ++i) x[r][i] = (features[r][i] - clf.mean_[i]) / clf.std_[i];

        Rng rng(derive_seed(cfg.seed, "edit-classifier"));
        ParamStore store;
        store.add("W1", Tensor::uniform_init({Hn, D}, -0.1, 0.1, rng));
        store.add("b1", Tensor({Hn}));
        store.add("W2", Tensor::uniform_init({Hn}, -0.1, 0.1, rng));
        store.add("b2", Tensor({size_t{1}}));

        std::vector<double> h(Hn), dh(Hn);
        for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            GradMap grads = store.zero_grads();
            const Tensor& W1 = store.get("W1");
            const Tensor& b1 = store.get("b1");
            const Tensor& W2 = store.get("W2");
            const Tensor& b2 = store.get("b2");
            for (size_t r = 0; r < n; ++r) {
                affine_into(W1.data(), b1.data(), x[r].data(), Hn, D, h.data());
                for (double& v : h) v = v > 0.0 ? v : 0.0;
                double o = b2[0];
                for (size_t i = 0; i < Hn; ++i) o += W2[i] * h[i];
                const double p = sigmoid_scalar(o);
                const double dout = (p - static_cast<double>(labels[r])) / static_cast<double>(n);

                grads.at("b2")[0] += dout;
                for (size_t i = 0; i < Hn; ++i) {
                    grads.at("W2")[i] += dout * h[i];
                    dh[i] = h[i] > 0.0 ? dout * W2[i] : 0.0;
                }
                outer_add(dh.data(), x[r].data(), Hn, D, grads.at("W1").data());
                for (size_t i = 0; i < Hn; ++i) grads.at("b1")[i] += dh[i];
            }
            store.adam_step(grads, cfg.lr);
        }

        clf.W1_ = store.get("W1");
        clf.b1_ = store.get("b1").values();
        clf.W2_ = store.get("W2").values();
        clf.b2_ = store.get("b2")[0];
        return clf;
    }

    // ---- persistence: text header + float32 payload, like checkpoints ----

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ArgumentError("cannot open classifier file for writing: " + path);
        out << "charmend-editclf v1\n";
        out << "input " << mean_.size() << "\n";
        out << "hidden " << b1_.size() << "\n";
        out << "end\n";
        auto put = [&](const std::vector<double>& v) {
            for (double d : v) {
                float f = static_cast<float>(d);
                char buf[4];
                std::memcpy(buf, &f, 4);
                out.write(buf, 4);
            }
        };
        put(mean_);
        put(std_);
        put(W1_.values());
        put(b1_);
        put(W2_);
        put({b2_});
    }

    static EditClassifier load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ArgumentError("cannot open classifier file: " + path);
        std::string line;
        auto next = [&]() {
            if (!std::getline(in, line)) throw FormatError("classifier file truncated: " + path);
            return line;
        };
        if (next() != "charmend-editclf v1") throw FormatError("unsupported classifier version");
        size_t D = 0, Hn = 0;
        if (next().rfind("input ", 0) != 0) throw FormatError("classifier header: missing input size");
        D = std::stoul(line.substr(6));
        if (next().rfind("hidden ", 0) != 0) throw FormatError("classifier header: missing hidden size");
        Hn = std::stoul(line.substr(7));
        if (next() != "end") throw FormatError("classifier header: missing end sentinel");

        EditClassifier clf;
        auto take = [&](std::vector<double>& v, size_t count) {
            v.resize(count);
            for (size_t i = 0; i < count; ++i) {
                char buf[4];
                in.read(buf, 4);
                if (in.gcount() != 4) throw FormatError("classifier payload truncated");
                float f;
                std::memcpy(&f, buf, 4);
                v[i] = static_cast<double>(f);
            }
        };
        take(clf.mean_, D);
        take(clf.std_, D);
        std::vector<double> w1;
        take(w1, Hn * D);
        clf.W1_ = Tensor({Hn, D}, std::move(w1));
        take(clf.b1_, Hn);
        take(clf.W2_, Hn);
        std::vector<double> b2;
        take(b2, 1);
        clf.b2_ = b2[0];
        return clf;
    }

    const Tensor& hidden_weights() const { return W1_; }

private:
    std::vector<double> mean_, std_;
    Tensor W1_;
    std::vector<double> b1_, W2_;
    double b2_ = 0.0;
};

/// Keeps edits with predicted probability above p_min and applies them
/// right to left. Edits must be sorted by span and non-overlapping.
inline Tokens filter_and_apply(const Tokens& src, const std::vector<Edit>& edits,
                               const std::vector<double>& probabilities, double p_min) {
    if (edits.size() != probabilities.size())
        throw ArgumentError("filter_and_apply: edits and probabilities must align");
    for (size_t i = 0; i + 1 < edits.size(); ++i) {
        if (edits[i].start > edits[i + 1].start)
            throw ArgumentError("filter_and_apply: edits must be sorted by start");
        if (edits[i].end > edits[i + 1].start)
            throw ArgumentError("filter_and_apply: overlapping edits");
    }
    Tokens out = src;
    for (size_t idx = edits.size(); idx-- > 0;) {
        if (probabilities[idx] <= p_min) continue;
        const Edit& e = edits[idx];
        out.erase(out.begin() + static_cast<long>(e.start), out.begin() + static_cast<long>(e.end));
        out.insert(out.begin() + static_cast<long>(e.start), e.replacement.begin(), e.replacement.end());
    }
    return out;
}

inline Tokens filter_and_apply(const Tokens& src, const std::vector<Edit>& edits,
                               const EditClassifier& clf, const WordVectors& vectors, double p_min) {
    std::vector<double> probs;
    probs.reserve(edits.size());
    for (const Edit& e : edits) probs.push_back(clf.predict(featurize(e, src, vectors)));
    return filter_and_apply(src, edits, probs, p_min);
}

}  // namespace charmend
