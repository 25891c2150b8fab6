#pragma once

#include <span>
#include <utility>
#include <vector>

#include "kgr/eval.hpp"
#include "kgr/features.hpp"
#include "kgr/graph.hpp"
#include "kgr/kge.hpp"
#include "kgr/linear.hpp"
#include "kgr/report.hpp"

namespace kgr {

struct ClassificationMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

// Macro-F1 averages over classes present in truth or predictions; a class
// with P + R = 0 contributes 0.
ClassificationMetrics classification_metrics(std::span<const int> predicted,
                                             std::span<const int> truth);

// Rows of `features` are samples. Requires >= 2 classes among labels.
LinearFitResult train_classifier(const Eigen::MatrixXd& features, std::span<const int> labels,
                                 const LinearConfig& cfg);

// Mean validation macro-F1 across k folds per candidate; ties keep list order.
std::size_t kfold_crossval(const Eigen::MatrixXd& features, std::span<const int> labels, int k,
                           std::span<const LinearConfig> candidates, std::uint64_t seed);

MetricsReport run_node_classification(const KnowledgeGraph& kg, const FeatureMatrix& features,
                                      const NodeSplit& split, const LinearConfig& cfg);

FeatureMatrix hadamard_edge_features(const FeatureMatrix& features,
                                     std::span<const std::pair<EntityId, EntityId>> edges);

// 80/20 positive split, equal sampled negatives, Hadamard features, logistic
// classifier. Keys: lp.binary.ap / lp.binary.accuracy.
MetricsReport run_link_prediction_binary(const KnowledgeGraph& kg, const FeatureMatrix& features,
                                         const LinearConfig& cfg, std::uint64_t seed);

// Global threshold tuned on split.valid scores; negatives corrupted at
// neg_ratio per positive, valid/test draws disjoint.
MetricsReport run_triple_classification(const KnowledgeGraph& kg, const EmbeddingModel& model,
                                        const TripleSplit& split, int neg_ratio,
                                        std::uint64_t seed);

}  // namespace kgr
