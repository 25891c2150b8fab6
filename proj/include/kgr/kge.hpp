#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kgr/graph.hpp"

namespace kgr {

enum class ModelKind { transe_l1, transe_l2, transr, distmult, rescal, rotate };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind kind);

// Parameter layout per kind:
//   transe-l1/l2, distmult: entities n x d, relations R x d
//   rotate:  entities n x 2d ([re | im] halves), relations R x d phase vectors
//   rescal:  entities n x d, relation_matrices R of d x d
//   transr:  entities n x d, relations R x k translations, relation_matrices R of d x k
struct EmbeddingModel {
    ModelKind kind = ModelKind::transe_l2;
    int dim = 0;
    int rel_dim = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd entities;
    Eigen::MatrixXd relations;
    std::vector<Eigen::MatrixXd> relation_matrices;

    std::size_t num_entities() const { return static_cast<std::size_t>(entities.rows()); }
    std::size_t num_relations() const;
};

// Plausibility score, higher = better for every kind (distance models return
// negated distances).
double score(const EmbeddingModel& model, const Triple& t);

// Gradient of score() w.r.t. the parameters touched by t. Only the fields
// meaningful for the model kind are sized.
struct ScoreGradient {
    Eigen::VectorXd head;             // d (rotate: 2d)
    Eigen::VectorXd tail;             // d (rotate: 2d)
    Eigen::VectorXd relation;         // transe/distmult: d; rotate: d phases; transr: k
    Eigen::MatrixXd relation_matrix;  // rescal: d x d; transr: d x k
};

ScoreGradient score_gradient(const EmbeddingModel& model, const Triple& t);

double margin_loss(std::span<const double> pos_scores, std::span<const double> neg_scores,
                   double margin);

enum class Optimizer { sgd, adam };

struct TrainConfig {
    int dim = 64;
    int rel_dim = 0;  // 0 -> dim
    int epochs = 500;
    int batch_size = 8;
    double learning_rate = 0.05;
    double margin = 1.0;
    Optimizer optimizer = Optimizer::sgd;
    int negatives_per_positive = 1;
    double weight_decay = 1e-5;  // bilinear kinds only; translation kinds renormalize
    std::uint64_t seed = 0;
};

EmbeddingModel init_model(std::size_t n_entities, std::size_t n_relations, const TrainConfig& cfg,
                          ModelKind kind);

struct KgeTrainResult {
    EmbeddingModel model;
    std::vector<double> loss_trace;  // per-epoch mean margin loss
};

// Margin-ranking training with either-slot corruption filtered against the
// whole graph. Deterministic per cfg.seed.
KgeTrainResult train_kge(const KnowledgeGraph& kg, const TripleSplit& split,
                         const TrainConfig& cfg, ModelKind kind);

}  // namespace kgr
