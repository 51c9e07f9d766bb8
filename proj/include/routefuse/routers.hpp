#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"
#include "routefuse/reward.hpp"

namespace routefuse {

enum class RouterKind { Knn, Linear, Mlp, Random, RouterBert, GraphRouter };

inline std::string to_string(RouterKind k) {
    switch (k) {
        case RouterKind::Knn: return "knn";
        case RouterKind::Linear: return "linear";
        case RouterKind::Mlp: return "mlp";
        case RouterKind::Random: return "random";
        case RouterKind::RouterBert: return "router_bert";
        case RouterKind::GraphRouter: return "graph_router";
    }
    detail::fail("invalid RouterKind value");
}

inline RouterKind router_kind_from_string(const std::string& s) {
    if (s == "knn") return RouterKind::Knn;
    if (s == "linear") return RouterKind::Linear;
    if (s == "mlp") return RouterKind::Mlp;
    if (s == "random") return RouterKind::Random;
    if (s == "router_bert") return RouterKind::RouterBert;
    if (s == "graph_router") return RouterKind::GraphRouter;
    detail::fail("unknown router kind: " + s);
}

struct RouterLabel {
    std::string llm_name;
    Pattern pattern = Pattern::Direct;

    bool operator==(const RouterLabel&) const = default;
    bool operator<(const RouterLabel& o) const {
        if (llm_name != o.llm_name) return llm_name < o.llm_name;
        return static_cast<int>(pattern) < static_cast<int>(o.pattern);
    }
};

struct TrainingExample {
    std::string query_id;
    std::vector<double> features;
    int label = 0;  // index into label_space
};

struct TrainingSet {
    std::vector<RouterLabel> label_space;
    std::vector<TrainingExample> examples;
    int feature_dim = 0;
};

/// Query-level routing policy. One struct carries every kind; only the
/// fields for the active kind are populated.
struct RouterModel {
    RouterKind kind = RouterKind::Knn;
    std::vector<RouterLabel> label_space;
    ScenarioWeights scenario;
    uint64_t training_seed = 0;
    int feature_dim = 0;            // base features, excluding any one-hot
    bool concat_llm_features = false;

    // knn payload
    int k = 0;
    std::vector<std::vector<double>> knn_features;
    std::vector<int> knn_labels;

    // linear payload: one augmented row (weights + trailing bias) per label,
    // or a single row in concat mode
    std::vector<std::vector<double>> linear_weights;

    // mlp payload: sizes include input and output layers; weights are
    // row-major (out x in)
    std::vector<int> mlp_layers;
    std::vector<std::vector<double>> mlp_weights;
    std::vector<std::vector<double>> mlp_biases;
};

struct RoutingDecision {
    std::string query_id;
    RouterLabel chosen;
    std::vector<double> scores;  // over label_space
    double performance = 0.0;    // looked-up outcome (0 on coverage gap)
    double cost = 0.0;
    std::optional<double> judge;
    double reward = 0.0;
    bool coverage_gap = false;
};

struct RouterReport {
    std::string method;
    std::string scenario;
    double performance = 0.0;
    double cost = 0.0;
    double reward = 0.0;
    double llm_score = 0.0;
    int64_t coverage_gaps = 0;
    int64_t queries = 0;
    std::vector<RoutingDecision> decisions;
};

/// Routing features for one query: query embedding, then task embedding
/// when the corpus carries one. Never includes outcome fields.
inline std::vector<double> group_features(const QueryGroup& g) {
    const auto& q = g.query_embedding();
    if (q.empty()) detail::fail("query " + g.query_id + ": missing query embedding");
    std::vector<double> f = q;
    const auto& t = g.task_embedding();
    f.insert(f.end(), t.begin(), t.end());
    return f;
}

/// Drops think-pattern records; groups left empty disappear.
inline std::vector<QueryGroup> restrict_to_direct(const std::vector<QueryGroup>& groups) {
    std::vector<QueryGroup> out;
    for (const auto& g : groups) {
        QueryGroup fg;
        fg.query_id = g.query_id;
        for (const auto* r : g.records)
            if (r->pattern == Pattern::Direct) fg.records.push_back(r);
        if (!fg.records.empty()) out.push_back(std::move(fg));
    }
    return out;
}

/// Supervision for classifier routers: the oracle's pick per query.
inline TrainingSet build_training_labels(const std::vector<QueryGroup>& train,
                                         const ScenarioWeights& w) {
    if (train.empty()) detail::fail("build_training_labels: no training groups");
    std::set<RouterLabel> labels;
    for (const auto& g : train)
        for (const auto* r : g.records) labels.insert({r->llm_name, r->pattern});
    TrainingSet ts;
    ts.label_space.assign(labels.begin(), labels.end());

    std::map<RouterLabel, int> index;
    for (size_t i = 0; i < ts.label_space.size(); ++i)
        index[ts.label_space[i]] = static_cast<int>(i);

    for (const auto& g : train) {
        TrainingExample ex;
        ex.query_id = g.query_id;
        ex.features = group_features(g);
        if (ts.feature_dim == 0) ts.feature_dim = static_cast<int>(ex.features.size());
        if (static_cast<int>(ex.features.size()) != ts.feature_dim)
            detail::fail("query " + g.query_id + ": feature dimension differs across groups");
        const RoutingRecord& pick = oracle_route(g, w);
        ex.label = index.at({pick.llm_name, pick.pattern});
        ts.examples.push_back(std::move(ex));
    }
    return ts;
}

namespace detail {

inline void check_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) fail(what);
}

inline int argmax_label(std::span<const double> scores) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(scores.size()); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;  // ties resolve to the lowest label index
}

// One-hot block appended to base features in concat mode.
inline std::vector<double> concat_features(std::span<const double> x, int label, int n_labels) {
    std::vector<double> f(x.begin(), x.end());
    f.resize(x.size() + static_cast<size_t>(n_labels), 0.0);
    f[x.size() + static_cast<size_t>(label)] = 1.0;
    return f;
}

inline double linear_score(std::span<const double> w, std::span<const double> x) {
    double s = w[x.size()];  // trailing bias
    for (size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
    return s;
}

struct MlpActivations {
    // values[0] is the input; values.back() holds the output logits
    std::vector<std::vector<double>> values;
};

inline MlpActivations mlp_forward(const RouterModel& m, std::span<const double> x) {
    MlpActivations act;
    act.values.emplace_back(x.begin(), x.end());
    for (size_t layer = 0; layer + 1 < m.mlp_layers.size(); ++layer) {
        const auto& W = m.mlp_weights[layer];
        const auto& b = m.mlp_biases[layer];
        int in = m.mlp_layers[layer], out = m.mlp_layers[layer + 1];
        std::vector<double> z(static_cast<size_t>(out));
        const auto& prev = act.values.back();
        for (int o = 0; o < out; ++o) {
            double s = b[static_cast<size_t>(o)];
            for (int i = 0; i < in; ++i)
                s += W[static_cast<size_t>(o) * in + i] * prev[static_cast<size_t>(i)];
            z[static_cast<size_t>(o)] = s;
        }
        bool last = layer + 2 == m.mlp_layers.size();
        if (!last)
            for (auto& v : z) v = std::tanh(v);
        act.values.push_back(std::move(z));
    }
    return act;
}

// Backward pass seeded with dL/dlogits; accumulates into dw/db.
inline void mlp_backward(const RouterModel& m, const MlpActivations& act,
                         std::vector<double> dlogits, std::vector<std::vector<double>>& dw,
                         std::vector<std::vector<double>>& db) {
    std::vector<double> delta = std::move(dlogits);
    for (int layer = static_cast<int>(m.mlp_layers.size()) - 2; layer >= 0; --layer) {
        int in = m.mlp_layers[static_cast<size_t>(layer)];
        int out = m.mlp_layers[static_cast<size_t>(layer) + 1];
        const auto& below = act.values[static_cast<size_t>(layer)];
        auto& dW = dw[static_cast<size_t>(layer)];
        auto& dB = db[static_cast<size_t>(layer)];
        for (int o = 0; o < out; ++o) {
            dB[static_cast<size_t>(o)] += delta[static_cast<size_t>(o)];
            for (int i = 0; i < in; ++i)
                dW[static_cast<size_t>(o) * in + i] +=
                    delta[static_cast<size_t>(o)] * below[static_cast<size_t>(i)];
        }
        if (layer == 0) break;
        const auto& W = m.mlp_weights[static_cast<size_t>(layer)];
        std::vector<double> next(static_cast<size_t>(in), 0.0);
        for (int i = 0; i < in; ++i) {
            double s = 0.0;
            for (int o = 0; o < out; ++o)
                s += W[static_cast<size_t>(o) * in + i] * delta[static_cast<size_t>(o)];
            double a = below[static_cast<size_t>(i)];  // tanh output of layer below
            next[static_cast<size_t>(i)] = s * (1.0 - a * a);
        }
        delta = std::move(next);
    }
}

inline std::vector<double> softmax(std::vector<double> z) {
    double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
}

// Per-candidate logits for one example under either input mode.
inline std::vector<double> mlp_logits(const RouterModel& m, std::span<const double> x) {
    int n_labels = static_cast<int>(m.label_space.size());
    if (!m.concat_llm_features) return mlp_forward(m, x).values.back();
    std::vector<double> logits(static_cast<size_t>(n_labels));
    for (int l = 0; l < n_labels; ++l) {
        auto f = concat_features(x, l, n_labels);
        logits[static_cast<size_t>(l)] = mlp_forward(m, f).values.back()[0];
    }
    return logits;
}

}  // namespace detail

namespace mlp {

struct Gradients {
    std::vector<std::vector<double>> dweights;
    std::vector<std::vector<double>> dbiases;
    double loss = 0.0;
};

/// Mean softmax-cross-entropy over the batch plus analytic gradients.
/// Exposed so finite-difference checks can probe the exact training math.
inline Gradients loss_and_gradients(const RouterModel& m,
                                    std::span<const TrainingExample> batch) {
    if (batch.empty()) detail::fail("mlp: empty batch");
    Gradients g;
    g.dweights.resize(m.mlp_weights.size());
    g.dbiases.resize(m.mlp_biases.size());
    for (size_t i = 0; i < m.mlp_weights.size(); ++i) {
        g.dweights[i].assign(m.mlp_weights[i].size(), 0.0);
        g.dbiases[i].assign(m.mlp_biases[i].size(), 0.0);
    }
    int n_labels = static_cast<int>(m.label_space.size());
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    for (const auto& ex : batch) {
        if (!m.concat_llm_features) {
            auto act = detail::mlp_forward(m, ex.features);
            auto p = detail::softmax(act.values.back());
            g.loss += -std::log(std::max(p[static_cast<size_t>(ex.label)], 1e-300)) * inv_n;
            std::vector<double> dlogits = p;
            dlogits[static_cast<size_t>(ex.label)] -= 1.0;
            for (auto& v : dlogits) v *= inv_n;
            detail::mlp_backward(m, act, std::move(dlogits), g.dweights, g.dbiases);
        } else {
            std::vector<detail::MlpActivations> acts;
            std::vector<double> logits(static_cast<size_t>(n_labels));
            for (int l = 0; l < n_labels; ++l) {
                acts.push_back(detail::mlp_forward(m, detail::concat_features(ex.features, l, n_labels)));
                logits[static_cast<size_t>(l)] = acts.back().values.back()[0];
            }
            auto p = detail::softmax(logits);
            g.loss += -std::log(std::max(p[static_cast<size_t>(ex.label)], 1e-300)) * inv_n;
            for (int l = 0; l < n_labels; ++l) {
                double d = (p[static_cast<size_t>(l)] - (l == ex.label ? 1.0 : 0.0)) * inv_n;
                detail::mlp_backward(m, acts[static_cast<size_t>(l)], {d}, g.dweights, g.dbiases);
            }
        }
    }
    detail::check_finite(g.loss, "mlp: non-finite loss");
    return g;
}

inline double loss_only(const RouterModel& m, std::span<const TrainingExample> batch) {
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const auto& ex : batch) {
        auto p = detail::softmax(detail::mlp_logits(m, ex.features));
        loss += -std::log(std::max(p[static_cast<size_t>(ex.label)], 1e-300)) * inv_n;
    }
    return loss;
}

}  // namespace mlp

/// Scores over label_space for one feature vector. Random routers are
/// scored via route_group (they need the query id, not features).
inline std::vector<double> predict_scores(const RouterModel& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.feature_dim)
        detail::fail("predict: feature dim " + std::to_string(x.size()) + " != model dim " +
                     std::to_string(m.feature_dim));
    const int n_labels = static_cast<int>(m.label_space.size());
    switch (m.kind) {
        case RouterKind::Knn: {
            std::vector<size_t> order(m.knn_features.size());
            std::iota(order.begin(), order.end(), size_t{0});
            std::vector<double> sim(m.knn_features.size());
            for (size_t i = 0; i < m.knn_features.size(); ++i)
                sim[i] = detail::cosine_similarity(m.knn_features[i], x);
            std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                if (sim[a] != sim[b]) return sim[a] > sim[b];
                return a < b;
            });
            std::vector<double> votes(static_cast<size_t>(n_labels), 0.0);
            std::vector<double> dist(static_cast<size_t>(n_labels), 0.0);
            for (int i = 0; i < m.k; ++i) {
                size_t idx = order[static_cast<size_t>(i)];
                votes[static_cast<size_t>(m.knn_labels[idx])] += 1.0;
                dist[static_cast<size_t>(m.knn_labels[idx])] += 1.0 - sim[idx];
            }
            // Majority wins; equal votes prefer the label whose voters sit
            // nearer in total. The distance penalty stays below 1/2 so it
            // can never overturn a vote difference.
            std::vector<double> scores(static_cast<size_t>(n_labels));
            for (int l = 0; l < n_labels; ++l)
                scores[static_cast<size_t>(l)] =
                    votes[static_cast<size_t>(l)] -
                    dist[static_cast<size_t>(l)] / (4.0 * static_cast<double>(m.k));
            return scores;
        }
        case RouterKind::Linear: {
            std::vector<double> scores(static_cast<size_t>(n_labels));
            if (!m.concat_llm_features) {
                for (int l = 0; l < n_labels; ++l)
                    scores[static_cast<size_t>(l)] =
                        detail::linear_score(m.linear_weights[static_cast<size_t>(l)], x);
            } else {
                for (int l = 0; l < n_labels; ++l) {
                    auto f = detail::concat_features(x, l, n_labels);
                    scores[static_cast<size_t>(l)] = detail::linear_score(m.linear_weights[0], f);
                }
            }
            return scores;
        }
        case RouterKind::Mlp: return detail::mlp_logits(m, x);
        case RouterKind::Random:
            detail::fail("random router requires route_group (scores depend on query id)");
        case RouterKind::RouterBert:
        case RouterKind::GraphRouter:
            detail::fail(to_string(m.kind) + " router is a reserved slot, not implemented");
    }
    detail::fail("invalid router kind");
}

inline RouterModel train_knn(const TrainingSet& ts, int k, const ScenarioWeights& w) {
    if (ts.examples.empty()) detail::fail("train_knn: empty training set");
    if (k <= 0) detail::fail("train_knn: k must be positive");
    if (k > static_cast<int>(ts.examples.size()))
        detail::fail("train_knn: k exceeds training size");
    RouterModel m;
    m.kind = RouterKind::Knn;
    m.label_space = ts.label_space;
    m.scenario = w;
    m.feature_dim = ts.feature_dim;
    m.k = k;
    for (const auto& ex : ts.examples) {
        m.knn_features.push_back(ex.features);
        m.knn_labels.push_back(ex.label);
    }
    return m;
}

/// One-vs-rest hinge-loss linear scorers, SGD with a deterministic
/// per-epoch shuffle. L2 applies to weights, never to the bias.
inline RouterModel train_linear(const TrainingSet& ts, int epochs, double learning_rate,
                                double l2, uint64_t seed, const ScenarioWeights& w,
                                bool concat_llm_features = false) {
    if (ts.examples.empty()) detail::fail("train_linear: empty training set");
    if (ts.label_space.size() < 2) detail::fail("train_linear: need at least 2 labels");
    RouterModel m;
    m.kind = RouterKind::Linear;
    m.label_space = ts.label_space;
    m.scenario = w;
    m.training_seed = seed;
    m.feature_dim = ts.feature_dim;
    m.concat_llm_features = concat_llm_features;
    const int n_labels = static_cast<int>(ts.label_space.size());
    const size_t aug = concat_llm_features
                           ? static_cast<size_t>(ts.feature_dim + n_labels) + 1
                           : static_cast<size_t>(ts.feature_dim) + 1;
    m.linear_weights.assign(concat_llm_features ? 1 : static_cast<size_t>(n_labels),
                            std::vector<double>(aug, 0.0));

    std::mt19937_64 rng(seed);
    std::vector<size_t> order(ts.examples.size());
    std::iota(order.begin(), order.end(), size_t{0});

    auto sgd_step = [&](std::vector<double>& wv, std::span<const double> x, double y) {
        double margin = y * detail::linear_score(wv, x);
        bool violated = margin < 1.0;
        for (size_t i = 0; i < x.size(); ++i) {
            double grad = l2 * wv[i] - (violated ? y * x[i] : 0.0);
            wv[i] -= learning_rate * grad;
        }
        if (violated) wv[x.size()] += learning_rate * y;  // bias, unregularized
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
        detail::deterministic_shuffle(order, rng);
        for (size_t idx : order) {
            const auto& ex = ts.examples[idx];
            if (!concat_llm_features) {
                for (int l = 0; l < n_labels; ++l)
                    sgd_step(m.linear_weights[static_cast<size_t>(l)], ex.features,
                             l == ex.label ? 1.0 : -1.0);
            } else {
                for (int l = 0; l < n_labels; ++l) {
                    auto f = detail::concat_features(ex.features, l, n_labels);
                    sgd_step(m.linear_weights[0], f, l == ex.label ? 1.0 : -1.0);
                }
            }
        }
        double loss = 0.0;
        for (const auto& ex : ts.examples) {
            auto scores = predict_scores(m, ex.features);
            for (int l = 0; l < n_labels; ++l) {
                double y = l == ex.label ? 1.0 : -1.0;
                loss += std::max(0.0, 1.0 - y * scores[static_cast<size_t>(l)]);
            }
        }
        if (!std::isfinite(loss))
            detail::fail("train_linear: non-finite loss at epoch " + std::to_string(epoch));
    }
    return m;
}

/// Tanh MLP with a softmax-cross-entropy head, mini-batch gradient
/// descent, Xavier-uniform init from the seed.
inline RouterModel train_mlp(const TrainingSet& ts, const std::vector<int>& hidden_sizes,
                             int epochs, double learning_rate, uint64_t seed,
                             const ScenarioWeights& w, bool concat_llm_features = false,
                             int batch_size = 32) {
    if (ts.examples.empty()) detail::fail("train_mlp: empty training set");
    if (hidden_sizes.empty()) detail::fail("train_mlp: need at least one hidden layer");
    for (int h : hidden_sizes)
        if (h <= 0) detail::fail("train_mlp: hidden sizes must be positive");
    if (batch_size <= 0) detail::fail("train_mlp: batch size must be positive");

    RouterModel m;
    m.kind = RouterKind::Mlp;
    m.label_space = ts.label_space;
    m.scenario = w;
    m.training_seed = seed;
    m.feature_dim = ts.feature_dim;
    m.concat_llm_features = concat_llm_features;
    const int n_labels = static_cast<int>(ts.label_space.size());
    const int input_dim = concat_llm_features ? ts.feature_dim + n_labels : ts.feature_dim;
    const int output_dim = concat_llm_features ? 1 : n_labels;

    m.mlp_layers.push_back(input_dim);
    for (int h : hidden_sizes) m.mlp_layers.push_back(h);
    m.mlp_layers.push_back(output_dim);

    std::mt19937_64 rng(seed);
    for (size_t layer = 0; layer + 1 < m.mlp_layers.size(); ++layer) {
        int in = m.mlp_layers[layer], out = m.mlp_layers[layer + 1];
        double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::vector<double> W(static_cast<size_t>(in) * static_cast<size_t>(out));
        for (auto& v : W) v = (detail::uniform01(rng) * 2.0 - 1.0) * limit;
        m.mlp_weights.push_back(std::move(W));
        m.mlp_biases.emplace_back(static_cast<size_t>(out), 0.0);
    }

    std::vector<size_t> order(ts.examples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<TrainingExample> batch;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        detail::deterministic_shuffle(order, rng);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
            batch.clear();
            size_t stop = std::min(order.size(), start + static_cast<size_t>(batch_size));
            for (size_t i = start; i < stop; ++i) batch.push_back(ts.examples[order[i]]);
            auto g = mlp::loss_and_gradients(m, batch);
            if (!std::isfinite(g.loss))
                detail::fail("train_mlp: non-finite loss at epoch " + std::to_string(epoch));
            for (size_t layer = 0; layer < m.mlp_weights.size(); ++layer) {
                for (size_t i = 0; i < m.mlp_weights[layer].size(); ++i)
                    m.mlp_weights[layer][i] -= learning_rate * g.dweights[layer][i];
                for (size_t i = 0; i < m.mlp_biases[layer].size(); ++i)
                    m.mlp_biases[layer][i] -= learning_rate * g.dbiases[layer][i];
            }
        }
    }
    return m;
}

/// Seeded uniform policy; the pick is a pure function of (seed, query_id)
/// so evaluation order cannot change decisions.
inline RouterModel make_random_router(const std::vector<RouterLabel>& label_space,
                                      const ScenarioWeights& w, uint64_t seed) {
    if (label_space.empty()) detail::fail("make_random_router: empty label space");
    RouterModel m;
    m.kind = RouterKind::Random;
    m.label_space = label_space;
    m.scenario = w;
    m.training_seed = seed;
    return m;
}

/// Routes one query group, returning the decision (outcome fields unset;
/// evaluate_router fills them in).
inline RoutingDecision route_group(const RouterModel& m, const QueryGroup& g) {
    RoutingDecision d;
    d.query_id = g.query_id;
    if (m.kind == RouterKind::Random) {
        uint64_t h = detail::fnv1a(g.query_id) ^ (m.training_seed * 0x9e3779b97f4a7c15ull);
        size_t pick = static_cast<size_t>(h % m.label_space.size());
        d.scores.assign(m.label_space.size(), 0.0);
        d.scores[pick] = 1.0;
        d.chosen = m.label_space[pick];
        return d;
    }
    d.scores = predict_scores(m, group_features(g));
    d.chosen = m.label_space[static_cast<size_t>(detail::argmax_label(d.scores))];
    return d;
}

namespace detail {

inline void score_decision(RoutingDecision& d, const QueryGroup& g, const ScenarioWeights& w) {
    const RoutingRecord* hit = nullptr;
    for (const auto* r : g.records)
        if (r->llm_name == d.chosen.llm_name && r->pattern == d.chosen.pattern) {
            hit = r;
            break;
        }
    if (!hit) {
        d.coverage_gap = true;  // scored as performance 0 / cost 0
        d.performance = 0.0;
        d.cost = 0.0;
        d.reward = 0.0;
        return;
    }
    auto b = compute_reward(*hit, w);
    d.performance = hit->performance;
    d.cost = hit->cost;
    d.judge = hit->judge_score;
    d.reward = b.reward;
}

inline RouterReport aggregate_decisions(std::string method, const ScenarioWeights& w,
                                        std::vector<RoutingDecision> decisions) {
    RouterReport rep;
    rep.method = std::move(method);
    rep.scenario = w.name;
    rep.queries = static_cast<int64_t>(decisions.size());
    int64_t judged = 0;
    for (const auto& d : decisions) {
        rep.performance += d.performance;
        rep.cost += d.cost;
        rep.reward += d.reward;
        if (d.judge) {
            rep.llm_score += *d.judge;
            ++judged;
        }
        if (d.coverage_gap) ++rep.coverage_gaps;
    }
    if (rep.queries > 0) {
        rep.performance /= static_cast<double>(rep.queries);
        rep.cost /= static_cast<double>(rep.queries);
        rep.reward /= static_cast<double>(rep.queries);
    }
    rep.llm_score = judged > 0 ? rep.llm_score / static_cast<double>(judged) : 0.0;
    rep.decisions = std::move(decisions);
    return rep;
}

}  // namespace detail

/// Routes every test query and reports mean Performance, Cost, Reward,
/// and LLMScore. A chosen label with no record in the group is a coverage
/// gap: counted, scored as performance 0 / cost 0.
inline RouterReport evaluate_router(const RouterModel& m, const std::vector<QueryGroup>& test,
                                    const ScenarioWeights& w) {
    if (test.empty()) detail::fail("evaluate_router: empty test split");
    std::vector<RoutingDecision> decisions;
    decisions.reserve(test.size());
    for (const auto& g : test) {
        RoutingDecision d = route_group(m, g);
        detail::score_decision(d, g, w);
        decisions.push_back(std::move(d));
    }
    return detail::aggregate_decisions(to_string(m.kind), w, std::move(decisions));
}

/// Per-query optimum as a report row; the upper bound for router rewards.
inline RouterReport evaluate_oracle(const std::vector<QueryGroup>& test,
                                    const ScenarioWeights& w) {
    if (test.empty()) detail::fail("evaluate_oracle: empty test split");
    std::vector<RoutingDecision> decisions;
    decisions.reserve(test.size());
    for (const auto& g : test) {
        const RoutingRecord& pick = oracle_route(g, w);
        RoutingDecision d;
        d.query_id = g.query_id;
        d.chosen = {pick.llm_name, pick.pattern};
        detail::score_decision(d, g, w);
        decisions.push_back(std::move(d));
    }
    return detail::aggregate_decisions("oracle", w, std::move(decisions));
}

inline double training_accuracy(const RouterModel& m, const TrainingSet& ts) {
    if (ts.examples.empty()) detail::fail("training_accuracy: empty set");
    int64_t hits = 0;
    for (const auto& ex : ts.examples) {
        auto scores = predict_scores(m, ex.features);
        if (detail::argmax_label(scores) == ex.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ts.examples.size());
}

inline std::string router_report_header() {
    return "method,scenario,performance,cost,reward,llmscore,coverage_gaps";
}

inline std::string router_report_row(const RouterReport& r) {
    return r.method + "," + r.scenario + "," + detail::format_fixed(r.performance) + "," +
           detail::format_fixed(r.cost) + "," + detail::format_fixed(r.reward) + "," +
           detail::format_fixed(r.llm_score) + "," + std::to_string(r.coverage_gaps);
}

inline ordered_json router_to_json(const RouterModel& m) {
    ordered_json j;
    j["format_version"] = 1;
    j["kind"] = to_string(m.kind);
    ordered_json labels = ordered_json::array();
    for (const auto& l : m.label_space)
        labels.push_back({{"llm_name", l.llm_name}, {"pattern", to_string(l.pattern)}});
    j["label_space"] = std::move(labels);
    j["scenario"] = {{"name", m.scenario.name},
                     {"alpha", m.scenario.alpha},
                     {"beta", m.scenario.beta},
                     {"gamma", m.scenario.gamma}};
    j["training_seed"] = m.training_seed;
    j["feature_dim"] = m.feature_dim;
    j["concat_llm_features"] = m.concat_llm_features;
    ordered_json params;
    switch (m.kind) {
        case RouterKind::Knn:
            params["k"] = m.k;
            params["features"] = m.knn_features;
            params["labels"] = m.knn_labels;
            break;
        case RouterKind::Linear: params["weights"] = m.linear_weights; break;
        case RouterKind::Mlp:
            params["layers"] = m.mlp_layers;
            params["weights"] = m.mlp_weights;
            params["biases"] = m.mlp_biases;
            break;
        case RouterKind::Random: break;
        case RouterKind::RouterBert:
        case RouterKind::GraphRouter: break;
    }
    j["parameters"] = std::move(params);
    return j;
}

inline RouterModel router_from_json(const json& j) {
    if (j.value("format_version", 0) != 1) detail::fail("router file: unsupported format version");
    RouterModel m;
    m.kind = router_kind_from_string(j.at("kind").get<std::string>());
    for (const auto& lj : j.at("label_space"))
        m.label_space.push_back({lj.at("llm_name").get<std::string>(),
                                 pattern_from_string(lj.at("pattern").get<std::string>())});
    if (m.label_space.empty()) detail::fail("router file: empty label space");
    const auto& sj = j.at("scenario");
    m.scenario = {sj.at("name").get<std::string>(), sj.at("alpha").get<double>(),
                  sj.at("beta").get<double>(), sj.at("gamma").get<double>()};
    m.training_seed = j.at("training_seed").get<uint64_t>();
    m.feature_dim = j.at("feature_dim").get<int>();
    m.concat_llm_features = j.value("concat_llm_features", false);
    const auto& params = j.at("parameters");
    switch (m.kind) {
        case RouterKind::Knn:
            m.k = params.at("k").get<int>();
            m.knn_features = params.at("features").get<std::vector<std::vector<double>>>();
            m.knn_labels = params.at("labels").get<std::vector<int>>();
            break;
        case RouterKind::Linear:
            m.linear_weights = params.at("weights").get<std::vector<std::vector<double>>>();
            break;
        case RouterKind::Mlp:
            m.mlp_layers = params.at("layers").get<std::vector<int>>();
            m.mlp_weights = params.at("weights").get<std::vector<std::vector<double>>>();
            m.mlp_biases = params.at("biases").get<std::vector<std::vector<double>>>();
            break;
        case RouterKind::Random: break;
        case RouterKind::RouterBert:
        case RouterKind::GraphRouter: break;
    }
    return m;
}

inline void save_router(const std::string& path, const RouterModel& m) {
    detail::write_file(path, router_to_json(m).dump(2) + "\n");
}

inline RouterModel load_router(const std::string& path) {
    return router_from_json(json::parse(detail::read_file(path)));
}

}  // namespace routefuse
