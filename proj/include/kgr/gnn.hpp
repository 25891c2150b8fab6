#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <string>
#include <vector>

#include "kgr/features.hpp"
#include "kgr/graph.hpp"
#include "kgr/report.hpp"

namespace kgr {

// D^{-1/2} (A + I) D^{-1/2} over the undirected skeleton; self-loops from the
// data are merged with the added identity.
struct NormalizedAdjacency {
    Eigen::SparseMatrix<double> mat;

    std::size_t size() const { return static_cast<std::size_t>(mat.rows()); }
};

NormalizedAdjacency normalize_adjacency(const KnowledgeGraph& kg);

// Per-relation neighbor averaging operators: M_r[i, j] = 1 / |N_r(i)| for
// j in N_r(i), neighborhoods undirected, empty neighborhoods skipped.
std::vector<Eigen::SparseMatrix<double>> relation_adjacencies(const KnowledgeGraph& kg);
std::vector<Eigen::SparseMatrix<double>> relation_adjacencies(const KnowledgeGraph& kg,
                                                              std::span<const Triple> triples);

enum class GnnModel { gcn, rgcn, sgc };

GnnModel parse_gnn_model(const std::string& name);
std::string gnn_model_name(GnnModel model);

enum class EdgeScorer { dot, hadamard };

struct GnnConfig {
    int hidden = 16;
    int out_dim = 16;  // link-prediction embedding width
    int epochs = 200;
    double learning_rate = 0.01;
    Optimizer optimizer = Optimizer::adam;
    double l2 = 0.0;
    int sgc_k = 2;
    int rgcn_bases = 0;  // 0 -> min(|R|, 4)
    EdgeScorer edge_scorer = EdgeScorer::dot;
    std::uint64_t seed = 0;
};

struct GnnParams {
    GnnModel model = GnnModel::gcn;
    // gcn / sgc / link heads
    Eigen::MatrixXd W0, W1;
    Eigen::VectorXd b0;  // sgc bias
    int sgc_k = 2;
    // rgcn, per layer: shared bases, per-relation coefficients, self-loop weight
    std::vector<std::vector<Eigen::MatrixXd>> bases;   // [layer][basis]
    std::vector<Eigen::MatrixXd> coeffs;               // [layer] (R x B)
    std::vector<Eigen::MatrixXd> self_weights;         // [layer]
    Eigen::MatrixXd embedding;  // rgcn learned input table when no features supplied
    // hadamard edge head
    Eigen::VectorXd edge_w;
    double edge_b = 0.0;
};

// H1 = relu(A X W0); logits = A H1 W1.
Eigen::MatrixXd gcn_forward(const GnnParams& params, const NormalizedAdjacency& adj,
                            const Eigen::MatrixXd& X);

// Two basis-decomposed layers, relu between, none after.
Eigen::MatrixXd rgcn_forward(const GnnParams& params,
                             std::span<const Eigen::SparseMatrix<double>> rel_adjs,
                             const Eigen::MatrixXd& X);

// A^K X by repeated sparse multiplication; K = 0 returns X.
Eigen::MatrixXd sgc_features(const NormalizedAdjacency& adj, const Eigen::MatrixXd& X, int K);

// Masked mean cross-entropy + l2 * sum of squared weights. Gradients optional;
// exposed for finite-difference verification.
double gcn_node_loss(const GnnParams& params, const NormalizedAdjacency& adj,
                     const Eigen::MatrixXd& X, std::span<const int> labels,
                     std::span<const EntityId> mask, double l2, Eigen::MatrixXd* dW0,
                     Eigen::MatrixXd* dW1);

struct RgcnGrads {
    std::vector<std::vector<Eigen::MatrixXd>> bases;
    std::vector<Eigen::MatrixXd> coeffs;
    std::vector<Eigen::MatrixXd> self_weights;
    Eigen::MatrixXd embedding;
};

double rgcn_node_loss(const GnnParams& params,
                      std::span<const Eigen::SparseMatrix<double>> rel_adjs,
                      const Eigen::MatrixXd* X, std::span<const int> labels,
                      std::span<const EntityId> mask, double l2, RgcnGrads* grads);

struct NodeTrainResult {
    GnnParams params;        // final
    GnnParams best;          // snapshot at best validation macro-F1
    double best_val_f1 = 0.0;
    std::vector<double> loss_trace;
    MetricsReport report;    // nodecls.accuracy / nodecls.macro_f1 on test
};

// Full-graph forward, loss masked to split.train; validation snapshot per
// epoch. features == nullptr is allowed for rgcn (learned embedding table).
NodeTrainResult train_gnn_node(const KnowledgeGraph& kg, const FeatureMatrix* features,
                               const NodeSplit& split, GnnModel model, const GnnConfig& cfg);

std::vector<int> predict_nodes(const KnowledgeGraph& kg, const GnnParams& params,
                               const FeatureMatrix* features);

struct LinkTrainResult {
    GnnParams params;
    MetricsReport report;  // lp.gnn.ap on withheld test edges
};

// Undirected positives split 80/20; message passing uses train edges only;
// equal-count sampled negatives exclude both directions of true edges.
LinkTrainResult train_gnn_link(const KnowledgeGraph& kg, const FeatureMatrix& features,
                               GnnModel model, const GnnConfig& cfg, std::uint64_t seed);

}  // namespace kgr
