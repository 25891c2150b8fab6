#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kgr/graph.hpp"
#include "kgr/kge.hpp"

namespace kgr {

enum class FeatureKind { in_degree, coloring, deepwalk, kge, random };

FeatureKind parse_feature_kind(const std::string& name);
std::string feature_kind_name(FeatureKind kind);

// Row order is entity interning order.
struct FeatureMatrix {
    Eigen::MatrixXd data;
    FeatureKind kind = FeatureKind::random;

    std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
    int dim() const { return static_cast<int>(data.cols()); }
};

// One-hot of min(in-degree, max_bins - 1).
FeatureMatrix in_degree_features(const KnowledgeGraph& kg, int max_bins = 32);

// Greedy proper coloring of the undirected skeleton in descending-degree order
// (ties by entity index), one-hot of min(color, max_bins - 1).
FeatureMatrix coloring_features(const KnowledgeGraph& kg, int max_bins = 32);

// Greedy color per node (before binning); exposed for the properness checks.
std::vector<int> greedy_coloring(const KnowledgeGraph& kg);

FeatureMatrix random_features(std::size_t n, int dim, std::uint64_t seed);

// Uniform walks on the undirected skeleton; a walk halts early at a node with
// no neighbors. Sequence length is walk_length nodes including the start.
std::vector<std::vector<EntityId>> random_walks(const KnowledgeGraph& kg, int walks_per_node,
                                                int walk_length, std::uint64_t seed);

struct DeepWalkConfig {
    int dim = 64;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.025;
    std::uint64_t seed = 0;
};

struct DeepWalkResult {
    FeatureMatrix features;
    std::vector<double> loss_trace;  // mean SGNS objective per epoch
};

// Skip-gram with negative sampling; noise distribution is unigram^0.75.
DeepWalkResult deepwalk_embed(const std::vector<std::vector<EntityId>>& walks, std::size_t n_nodes,
                              const DeepWalkConfig& cfg);

// SGNS pair objective and its gradient, exposed for gradient verification.
double sgns_pair_loss(const Eigen::VectorXd& center, const Eigen::VectorXd& context, bool positive);
void sgns_pair_grad(const Eigen::VectorXd& center, const Eigen::VectorXd& context, bool positive,
                    Eigen::VectorXd& d_center, Eigen::VectorXd& d_context);

// Entity embeddings as a feature matrix (kind = kge). RotatE yields 2d columns.
FeatureMatrix features_from_model(const EmbeddingModel& model);

}  // namespace kgr
