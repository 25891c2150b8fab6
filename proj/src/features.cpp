#include "kgr/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgr/error.hpp"

namespace kgr {

FeatureKind parse_feature_kind(const std::string& name) {
    if (name == "in-degree" || name == "in_degree") return FeatureKind::in_degree;
    if (name == "coloring") return FeatureKind::coloring;
    if (name == "deepwalk") return FeatureKind::deepwalk;
    if (name == "kge") return FeatureKind::kge;
    if (name == "random") return FeatureKind::random;
    throw ConfigError("unknown feature kind '" + name + "'");
}

std::string feature_kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::in_degree: return "in-degree";
        case FeatureKind::coloring: return "coloring";
        case FeatureKind::deepwalk: return "deepwalk";
        case FeatureKind::kge: return "kge";
        case FeatureKind::random: return "random";
    }
    throw ConfigError("bad feature kind");
}

FeatureMatrix in_degree_features(const KnowledgeGraph& kg, int max_bins) {
    if (max_bins < 1) throw ConfigError("max_bins must be >= 1");
    const auto deg = kg.in_degrees();
    FeatureMatrix f;
    f.kind = FeatureKind::in_degree;
    f.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kg.num_entities()), max_bins);
    for (std::size_t i = 0; i < deg.size(); ++i) {
        const auto bin = std::min<std::size_t>(deg[i], static_cast<std::size_t>(max_bins - 1));
        f.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(bin)) = 1.0;
    }
    return f;
}

std::vector<int> greedy_coloring(const KnowledgeGraph& kg) {
    const auto adj = kg.skeleton();
    const std::size_t n = adj.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (adj[a].size() != adj[b].size()) return adj[a].size() > adj[b].size();
        return a < b;
    });
    std::vector<int> color(n, -1);
    std::vector<char> used;
    for (std::size_t v : order) {
        used.assign(adj[v].size() + 1, 0);
        for (EntityId u : adj[v]) {
            const int c = color[u];
            if (c >= 0 && c < static_cast<int>(used.size())) used[c] = 1;
        }
        int c = 0;
        while (used[c]) ++c;
        color[v] = c;
    }
    return color;
}

FeatureMatrix coloring_features(const KnowledgeGraph& kg, int max_bins) {
    if (max_bins < 1) throw ConfigError("max_bins must be >= 1");
    const auto color = greedy_coloring(kg);
    FeatureMatrix f;
    f.kind = FeatureKind::coloring;
    f.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(color.size()), max_bins);
    for (std::size_t i = 0; i < color.size(); ++i) {
        const int bin = std::min(color[i], max_bins - 1);
        f.data(static_cast<Eigen::Index>(i), bin) = 1.0;
    }
    return f;
}

FeatureMatrix random_features(std::size_t n, int dim, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("feature dimension must be >= 1");
    Rng rng(seed);
    FeatureMatrix f;
    f.kind = FeatureKind::random;
    f.data.resize(static_cast<Eigen::Index>(n), dim);
    for (Eigen::Index i = 0; i < f.data.rows(); ++i) {
        for (Eigen::Index j = 0; j < f.data.cols(); ++j) f.data(i, j) = rng.normal();
    }
    return f;
}

std::vector<std::vector<EntityId>> random_walks(const KnowledgeGraph& kg, int walks_per_node,
                                                int walk_length, std::uint64_t seed) {
    if (walk_length < 1) throw ConfigError("walk_length must be >= 1");
    if (walks_per_node < 0) throw ConfigError("walks_per_node must be >= 0");
    const auto adj = kg.skeleton();
    const Rng base(seed);
    std::vector<std::vector<EntityId>> walks;
    walks.reserve(kg.num_entities() * static_cast<std::size_t>(walks_per_node));
    for (int w = 0; w < walks_per_node; ++w) {
        for (EntityId v = 0; v < kg.num_entities(); ++v) {
            Rng rng = base.derive(static_cast<std::uint64_t>(w) * kg.num_entities() + v);
            std::vector<EntityId> walk{v};
            EntityId cur = v;
            for (int s = 1; s < walk_length; ++s) {
                const auto& nbrs = adj[cur];
                if (nbrs.empty()) break;
                cur = nbrs[rng.next_below(nbrs.size())];
                walk.push_back(cur);
            }
            walks.push_back(std::move(walk));
        }
    }
    return walks;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// numerically stable -log sigmoid
double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double sgns_pair_loss(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                      bool positive) {
    const double z = center.dot(context);
    return positive ? log1pexp(-z) : log1pexp(z);
}

void sgns_pair_grad(const Eigen::VectorXd& center, const Eigen::VectorXd& context, bool positive,
                    Eigen::VectorXd& d_center, Eigen::VectorXd& d_context) {
    const double z = center.dot(context);
    const double g = sigmoid(z) - (positive ? 1.0 : 0.0);
    d_center = g * context;
    d_context = g * center;
}

DeepWalkResult deepwalk_embed(const std::vector<std::vector<EntityId>>& walks, std::size_t n_nodes,
                              const DeepWalkConfig& cfg) {
    if (walks.empty()) throw DataError("deepwalk_embed requires a nonempty walk corpus");
    if (cfg.dim < 1 || cfg.window < 1 || cfg.negatives < 0 || cfg.epochs < 0 ||
        cfg.learning_rate <= 0) {
        throw ConfigError("invalid deepwalk configuration");
    }

    // noise distribution: unigram counts ^ 0.75
    std::vector<double> counts(n_nodes, 0.0);
    for (const auto& walk : walks) {
        for (EntityId v : walk) {
            if (v >= n_nodes) throw DataError("walk node out of range");
            counts[v] += 1.0;
        }
    }
    std::vector<double> cumulative(n_nodes, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        total += std::pow(counts[i], 0.75);
        cumulative[i] = total;
    }
    if (total <= 0.0) throw DataError("empty walk corpus");

    Rng rng(cfg.seed);
    Eigen::MatrixXd W(static_cast<Eigen::Index>(n_nodes), cfg.dim);
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        for (int j = 0; j < cfg.dim; ++j) {
            W(i, j) = (rng.next_double() - 0.5) / static_cast<double>(cfg.dim);
        }
    }
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_nodes), cfg.dim);

    auto sample_noise = [&]() -> EntityId {
        const double x = rng.next_double() * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), x);
        return static_cast<EntityId>(std::distance(cumulative.begin(), it));
    };

    DeepWalkResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (const auto& walk : walks) {
            const int len = static_cast<int>(walk.size());
            for (int i = 0; i < len; ++i) {
                const EntityId center = walk[i];
                const int lo = std::max(0, i - cfg.window);
                const int hi = std::min(len - 1, i + cfg.window);
                for (int j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    Eigen::VectorXd w = W.row(center).transpose();
                    Eigen::VectorXd grad_w = Eigen::VectorXd::Zero(cfg.dim);
                    auto update_pair = [&](EntityId ctx, bool positive) {
                        const Eigen::VectorXd c = C.row(ctx).transpose();
                        loss_sum += sgns_pair_loss(w, c, positive);
                        ++loss_count;
                        const double g = sigmoid(w.dot(c)) - (positive ? 1.0 : 0.0);
                        grad_w += g * c;
                        C.row(ctx) -= (cfg.learning_rate * g) * w.transpose();
                    };
                    update_pair(walk[j], true);
                    for (int k = 0; k < cfg.negatives; ++k) update_pair(sample_noise(), false);
                    W.row(center) -= cfg.learning_rate * grad_w.transpose();
                }
            }
        }
        const double mean = loss_count == 0 ? 0.0 : loss_sum / static_cast<double>(loss_count);
        if (!std::isfinite(mean)) throw NumericError("non-finite SGNS loss");
        result.loss_trace.push_back(mean);
    }
    result.features.kind = FeatureKind::deepwalk;
    result.features.data = std::move(W);
    return result;
}

FeatureMatrix features_from_model(const EmbeddingModel& model) {
    FeatureMatrix f;
    f.kind = FeatureKind::kge;
    f.data = model.entities;
    return f;
}

}  // namespace kgr
