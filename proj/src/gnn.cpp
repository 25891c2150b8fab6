#include "kgr/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "kgr/downstream.hpp"
#include "kgr/error.hpp"
#include "kgr/linear.hpp"

namespace kgr {

GnnModel parse_gnn_model(const std::string& name) {
    if (name == "gcn") return GnnModel::gcn;
    if (name == "rgcn") return GnnModel::rgcn;
    if (name == "sgc") return GnnModel::sgc;
    throw ConfigError("unknown gnn model '" + name + "'");
}

std::string gnn_model_name(GnnModel model) {
    switch (model) {
        case GnnModel::gcn: return "gcn";
        case GnnModel::rgcn: return "rgcn";
        case GnnModel::sgc: return "sgc";
    }
    throw ConfigError("bad gnn model");
}

namespace {

NormalizedAdjacency normalize_pairs(std::size_t n,
                                    const std::set<std::pair<EntityId, EntityId>>& und_edges) {
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> degree(n, 1.0);  // self loop
    for (const auto& [u, v] : und_edges) {
        degree[u] += 1.0;
        degree[v] += 1.0;
    }
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
    for (std::size_t i = 0; i < n; ++i) {
        trip.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
    }
    for (const auto& [u, v] : und_edges) {
        trip.emplace_back(u, v, inv_sqrt[u] * inv_sqrt[v]);
        trip.emplace_back(v, u, inv_sqrt[u] * inv_sqrt[v]);
    }
    NormalizedAdjacency adj;
    adj.mat.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    adj.mat.setFromTriplets(trip.begin(), trip.end());
    return adj;
}

std::set<std::pair<EntityId, EntityId>> undirected_pairs(std::span<const Triple> triples) {
    std::set<std::pair<EntityId, EntityId>> und;
    for (const Triple& t : triples) {
        if (t.head == t.tail) continue;
        und.emplace(std::min(t.head, t.tail), std::max(t.head, t.tail));
    }
    return und;
}

}  // namespace

NormalizedAdjacency normalize_adjacency(const KnowledgeGraph& kg) {
    return normalize_pairs(kg.num_entities(), undirected_pairs(kg.triples()));
}

std::vector<Eigen::SparseMatrix<double>> relation_adjacencies(const KnowledgeGraph& kg,
                                                              std::span<const Triple> triples) {
    const auto n = static_cast<Eigen::Index>(kg.num_entities());
    std::vector<std::set<std::pair<EntityId, EntityId>>> nbrs(kg.num_relations());
    for (const Triple& t : triples) {
        nbrs[t.relation].emplace(t.head, t.tail);
        nbrs[t.relation].emplace(t.tail, t.head);
    }
    std::vector<Eigen::SparseMatrix<double>> adjs;
    adjs.reserve(kg.num_relations());
    for (std::size_t r = 0; r < kg.num_relations(); ++r) {
        std::vector<double> count(kg.num_entities(), 0.0);
        for (const auto& [i, j] : nbrs[r]) count[i] += 1.0;
        std::vector<Eigen::Triplet<double>> trip;
        for (const auto& [i, j] : nbrs[r]) trip.emplace_back(i, j, 1.0 / count[i]);
        Eigen::SparseMatrix<double> m(n, n);
        m.setFromTriplets(trip.begin(), trip.end());
        adjs.push_back(std::move(m));
    }
    return adjs;
}

std::vector<Eigen::SparseMatrix<double>> relation_adjacencies(const KnowledgeGraph& kg) {
    return relation_adjacencies(kg, kg.triples());
}

Eigen::MatrixXd gcn_forward(const GnnParams& params, const NormalizedAdjacency& adj,
                            const Eigen::MatrixXd& X) {
    if (X.rows() != adj.mat.rows()) throw DataError("feature rows do not match graph size");
    if (X.cols() != params.W0.rows() || params.W0.cols() != params.W1.rows()) {
        throw DataError("gcn weight shapes do not chain");
    }
    const Eigen::MatrixXd H1 = (adj.mat * X * params.W0).cwiseMax(0.0);
    return adj.mat * H1 * params.W1;
}

namespace {

Eigen::MatrixXd compose_relation_weight(const GnnParams& p, std::size_t layer, Eigen::Index r) {
    const auto& bas = p.bases[layer];
    const auto& a = p.coeffs[layer];
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(bas[0].rows(), bas[0].cols());
    for (std::size_t b = 0; b < bas.size(); ++b) W += a(r, static_cast<Eigen::Index>(b)) * bas[b];
    return W;
}

Eigen::MatrixXd rgcn_layer(const GnnParams& p, std::size_t layer,
                           std::span<const Eigen::SparseMatrix<double>> rel_adjs,
                           const Eigen::MatrixXd& H, bool relu) {
    Eigen::MatrixXd pre = H * p.self_weights[layer];
    for (std::size_t r = 0; r < rel_adjs.size(); ++r) {
        if (rel_adjs[r].nonZeros() == 0) continue;
        pre += rel_adjs[r] * H * compose_relation_weight(p, layer, static_cast<Eigen::Index>(r));
    }
    return relu ? pre.cwiseMax(0.0).eval() : pre;
}

}  // namespace

Eigen::MatrixXd rgcn_forward(const GnnParams& params,
                             std::span<const Eigen::SparseMatrix<double>> rel_adjs,
                             const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd H1 = rgcn_layer(params, 0, rel_adjs, X, true);
    return rgcn_layer(params, 1, rel_adjs, H1, false);
}

Eigen::MatrixXd sgc_features(const NormalizedAdjacency& adj, const Eigen::MatrixXd& X, int K) {
    if (K < 0) throw ConfigError("sgc exponent must be >= 0");
    Eigen::MatrixXd out = X;
    for (int i = 0; i < K; ++i) out = adj.mat * out;
    return out;
}

namespace {

// (softmax(logits) - onehot) / |mask| on masked rows, zero elsewhere; adds CE.
Eigen::MatrixXd masked_softmax_grad(const Eigen::MatrixXd& logits, std::span<const int> labels,
                                    std::span<const EntityId> mask, double& loss) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
    const double inv = 1.0 / static_cast<double>(mask.size());
    for (EntityId v : mask) {
        const int y = labels[v];
        const double mx = logits.row(v).maxCoeff();
        const Eigen::ArrayXd ex = (logits.row(v).transpose().array() - mx).exp();
        const double Z = ex.sum();
        loss += inv * (std::log(Z) - (logits(v, y) - mx));
        G.row(v) = (inv * ex / Z).matrix().transpose();
        G(v, y) -= inv;
    }
    return G;
}

}  // namespace

double gcn_node_loss(const GnnParams& params, const NormalizedAdjacency& adj,
                     const Eigen::MatrixXd& X, std::span<const int> labels,
                     std::span<const EntityId> mask, double l2, Eigen::MatrixXd* dW0,
                     Eigen::MatrixXd* dW1) {
    if (mask.empty()) throw DataError("empty training mask");
    const Eigen::MatrixXd AX = adj.mat * X;
    const Eigen::MatrixXd Z0 = AX * params.W0;
    const Eigen::MatrixXd H1 = Z0.cwiseMax(0.0);
    const Eigen::MatrixXd AH = adj.mat * H1;
    const Eigen::MatrixXd logits = AH * params.W1;

    double loss = 0.0;
    const Eigen::MatrixXd G = masked_softmax_grad(logits, labels, mask, loss);
    loss += l2 * (params.W0.squaredNorm() + params.W1.squaredNorm());
    if (dW0 || dW1) {
        if (dW1) *dW1 = AH.transpose() * G + 2.0 * l2 * params.W1;
        if (dW0) {
            const Eigen::MatrixXd dH1 =
                (adj.mat * (G * params.W1.transpose())).cwiseProduct((Z0.array() > 0.0).cast<double>().matrix());
            *dW0 = AX.transpose() * dH1 + 2.0 * l2 * params.W0;
        }
    }
    return loss;
}

double rgcn_node_loss(const GnnParams& params,
                      std::span<const Eigen::SparseMatrix<double>> rel_adjs,
                      const Eigen::MatrixXd* X, std::span<const int> labels,
                      std::span<const EntityId> mask, double l2, RgcnGrads* grads) {
    if (mask.empty()) throw DataError("empty training mask");
    const Eigen::MatrixXd& H0 = X ? *X : params.embedding;
    const std::size_t R = rel_adjs.size();
    const std::size_t B = params.bases[0].size();

    // forward with caches
    std::vector<Eigen::MatrixXd> W0r(R), W1r(R);
    for (std::size_t r = 0; r < R; ++r) {
        W0r[r] = compose_relation_weight(params, 0, static_cast<Eigen::Index>(r));
        W1r[r] = compose_relation_weight(params, 1, static_cast<Eigen::Index>(r));
    }
    std::vector<Eigen::MatrixXd> M0(R);  // rel_adjs[r] * H0
    Eigen::MatrixXd pre0 = H0 * params.self_weights[0];
    for (std::size_t r = 0; r < R; ++r) {
        if (rel_adjs[r].nonZeros() == 0) continue;
        M0[r] = rel_adjs[r] * H0;
        pre0 += M0[r] * W0r[r];
    }
    const Eigen::MatrixXd H1 = pre0.cwiseMax(0.0);
    std::vector<Eigen::MatrixXd> M1(R);
    Eigen::MatrixXd logits = H1 * params.self_weights[1];
    for (std::size_t r = 0; r < R; ++r) {
        if (rel_adjs[r].nonZeros() == 0) continue;
        M1[r] = rel_adjs[r] * H1;
        logits += M1[r] * W1r[r];
    }

    double loss = 0.0;
    const Eigen::MatrixXd G = masked_softmax_grad(logits, labels, mask, loss);
    double sq = params.self_weights[0].squaredNorm() + params.self_weights[1].squaredNorm();
    for (std::size_t b = 0; b < B; ++b) {
        sq += params.bases[0][b].squaredNorm() + params.bases[1][b].squaredNorm();
    }
    sq += params.coeffs[0].squaredNorm() + params.coeffs[1].squaredNorm();
    loss += l2 * sq;
    if (!grads) return loss;

    grads->bases.assign(2, std::vector<Eigen::MatrixXd>());
    grads->coeffs.assign(2, Eigen::MatrixXd());
    grads->self_weights.assign(2, Eigen::MatrixXd());
    for (int layer = 0; layer < 2; ++layer) {
        grads->bases[layer].assign(B, Eigen::MatrixXd());
        for (std::size_t b = 0; b < B; ++b) {
            grads->bases[layer][b] = 2.0 * l2 * params.bases[layer][b];
        }
        grads->coeffs[layer] = 2.0 * l2 * params.coeffs[layer];
        grads->self_weights[layer] = 2.0 * l2 * params.self_weights[layer];
    }

    // layer 1 backward
    grads->self_weights[1] += H1.transpose() * G;
    Eigen::MatrixXd dH1 = G * params.self_weights[1].transpose();
    for (std::size_t r = 0; r < R; ++r) {
        if (rel_adjs[r].nonZeros() == 0) continue;
        const Eigen::MatrixXd dWr = M1[r].transpose() * G;
        for (std::size_t b = 0; b < B; ++b) {
            grads->bases[1][b] += params.coeffs[1](static_cast<Eigen::Index>(r),
                                                   static_cast<Eigen::Index>(b)) * dWr;
            grads->coeffs[1](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) +=
                dWr.cwiseProduct(params.bases[1][b]).sum();
        }
        dH1 += rel_adjs[r].transpose() * (G * W1r[r].transpose());
    }

    // layer 0 backward
    const Eigen::MatrixXd dpre0 =
        dH1.cwiseProduct((pre0.array() > 0.0).cast<double>().matrix());
    grads->self_weights[0] += H0.transpose() * dpre0;
    Eigen::MatrixXd dH0 = dpre0 * params.self_weights[0].transpose();
    for (std::size_t r = 0; r < R; ++r) {
        if (rel_adjs[r].nonZeros() == 0) continue;
        const Eigen::MatrixXd dWr = M0[r].transpose() * dpre0;
        for (std::size_t b = 0; b < B; ++b) {
            grads->bases[0][b] += params.coeffs[0](static_cast<Eigen::Index>(r),
                                                   static_cast<Eigen::Index>(b)) * dWr;
            grads->coeffs[0](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) +=
                dWr.cwiseProduct(params.bases[0][b]).sum();
        }
        dH0 += rel_adjs[r].transpose() * (dpre0 * W0r[r].transpose());
    }
    grads->embedding = X ? Eigen::MatrixXd() : dH0;
    return loss;
}

namespace {

Eigen::MatrixXd glorot(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
    }
    return m;
}

struct Adam {
    Eigen::MatrixXd m, v;
    void init(Eigen::Index r, Eigen::Index c) {
        m = Eigen::MatrixXd::Zero(r, c);
        v = Eigen::MatrixXd::Zero(r, c);
    }
    void step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, double lr, int t,
              Optimizer opt) {
        if (opt == Optimizer::sgd) {
            param -= lr * grad;
            return;
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        m = b1 * m + (1 - b1) * grad;
        v = b2 * v + (1 - b2) * grad.array().square().matrix();
        const double c1 = 1.0 - std::pow(b1, t);
        const double c2 = 1.0 - std::pow(b2, t);
        param -= (lr * (m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
    }
};

std::vector<int> label_vector(const KnowledgeGraph& kg) {
    std::vector<int> labels(kg.num_entities(), -1);
    for (const auto& [e, c] : kg.labels()) labels[e] = static_cast<int>(c);
    return labels;
}

ClassificationMetrics eval_nodes(const std::vector<int>& pred, const std::vector<int>& labels,
                                 std::span<const EntityId> nodes) {
    std::vector<int> p, t;
    p.reserve(nodes.size());
    t.reserve(nodes.size());
    for (EntityId v : nodes) {
        p.push_back(pred[v]);
        t.push_back(labels[v]);
    }
    return classification_metrics(p, t);
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& logits) {
    std::vector<int> pred(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best;
        logits.row(i).maxCoeff(&best);
        pred[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return pred;
}

GnnParams init_rgcn(const KnowledgeGraph& kg, const FeatureMatrix* features, int out_dim,
                    const GnnConfig& cfg, Rng& rng) {
    GnnParams p;
    p.model = GnnModel::rgcn;
    const int h = cfg.hidden;
    const int d_in = features ? features->dim() : h;
    const auto R = static_cast<Eigen::Index>(kg.num_relations());
    const int B = cfg.rgcn_bases > 0
                      ? cfg.rgcn_bases
                      : static_cast<int>(std::min<std::size_t>(kg.num_relations(), 4));
    p.bases.resize(2);
    p.coeffs.resize(2);
    p.self_weights.resize(2);
    const Eigen::Index dims[3] = {d_in, h, out_dim};
    for (int layer = 0; layer < 2; ++layer) {
        for (int b = 0; b < B; ++b) {
            p.bases[layer].push_back(glorot(rng, dims[layer], dims[layer + 1]));
        }
        p.coeffs[layer] = glorot(rng, R, B);
        p.self_weights[layer] = glorot(rng, dims[layer], dims[layer + 1]);
    }
    if (!features) {
        p.embedding = glorot(rng, static_cast<Eigen::Index>(kg.num_entities()), h);
    }
    return p;
}

}  // namespace

NodeTrainResult train_gnn_node(const KnowledgeGraph& kg, const FeatureMatrix* features,
                               const NodeSplit& split, GnnModel model, const GnnConfig& cfg) {
    if (split.train.empty()) throw DataError("node split has no training nodes");
    if (model != GnnModel::rgcn && !features) throw DataError("gcn/sgc require features");
    if (kg.num_classes() < 2) throw DataError("node classification needs >= 2 classes");
    const int C = static_cast<int>(kg.num_classes());
    const auto labels = label_vector(kg);
    for (EntityId v : split.train) {
        if (labels[v] < 0) throw DataError("unlabeled node in training split");
    }

    NodeTrainResult result;
    result.report.task = "node-cls";
    result.report.seed = cfg.seed;
    Rng rng(cfg.seed);

    if (model == GnnModel::sgc) {
        // multinomial logistic regression on A^K X
        const NormalizedAdjacency adj = normalize_adjacency(kg);
        const Eigen::MatrixXd P = sgc_features(adj, features->data, cfg.sgc_k);
        Eigen::MatrixXd Xtr(split.train.size(), P.cols());
        std::vector<int> ytr(split.train.size());
        for (std::size_t i = 0; i < split.train.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = P.row(split.train[i]);
            ytr[i] = labels[split.train[i]];
        }
        LinearConfig lin;
        lin.loss = LinearLoss::logistic;
        lin.epochs = cfg.epochs;
        lin.learning_rate = cfg.learning_rate;
        lin.l2 = cfg.l2;
        lin.optimizer = cfg.optimizer;
        lin.seed = cfg.seed;

        GnnParams best;
        double best_f1 = -1.0;
        auto snapshot = [&](const LinearModel& m) {
            GnnParams p;
            p.model = GnnModel::sgc;
            p.sgc_k = cfg.sgc_k;
            p.W0 = m.W.transpose();
            p.b0 = m.b;
            return p;
        };
        const LinearFitResult fit = fit_linear(
            Xtr, ytr, C, lin, [&](int, const LinearModel& m) {
                if (split.valid.empty()) return;
                Eigen::MatrixXd S = P * m.W.transpose();
                S.rowwise() += m.b.transpose();
                const auto pred = argmax_rows(S);
                const double f1 = eval_nodes(pred, labels, split.valid).macro_f1;
                if (f1 > best_f1) {
                    best_f1 = f1;
                    best = snapshot(m);
                }
            });
        result.params = snapshot(fit.model);
        result.loss_trace = fit.loss_trace;
        result.best = best_f1 >= 0.0 ? best : result.params;
        result.best_val_f1 = std::max(best_f1, 0.0);
    } else if (model == GnnModel::gcn) {
        const NormalizedAdjacency adj = normalize_adjacency(kg);
        GnnParams p;
        p.model = GnnModel::gcn;
        p.W0 = glorot(rng, features->data.cols(), cfg.hidden);
        p.W1 = glorot(rng, cfg.hidden, C);
        Adam a0, a1;
        a0.init(p.W0.rows(), p.W0.cols());
        a1.init(p.W1.rows(), p.W1.cols());
        GnnParams best = p;
        double best_f1 = -1.0;
        Eigen::MatrixXd dW0, dW1;
        for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
            const double loss =
                gcn_node_loss(p, adj, features->data, labels, split.train, cfg.l2, &dW0, &dW1);
            if (!std::isfinite(loss)) {
                throw NumericError("non-finite gcn loss at epoch " + std::to_string(epoch));
            }
            result.loss_trace.push_back(loss);
            a0.step(p.W0, dW0, cfg.learning_rate, epoch, cfg.optimizer);
            a1.step(p.W1, dW1, cfg.learning_rate, epoch, cfg.optimizer);
            if (!split.valid.empty()) {
                const auto pred = argmax_rows(gcn_forward(p, adj, features->data));
                const double f1 = eval_nodes(pred, labels, split.valid).macro_f1;
                if (f1 > best_f1) {
                    best_f1 = f1;
                    best = p;
                }
            }
        }
        result.params = p;
        result.best = best_f1 >= 0.0 ? best : p;
        result.best_val_f1 = std::max(best_f1, 0.0);
    } else {
        const auto rel_adjs = relation_adjacencies(kg);
        GnnParams p = init_rgcn(kg, features, C, cfg, rng);
        const Eigen::MatrixXd* X = features ? &features->data : nullptr;
        const std::size_t B = p.bases[0].size();
        std::vector<std::vector<Adam>> ab(2, std::vector<Adam>(B));
        std::vector<Adam> ac(2), as(2), ae(1);
        for (int l = 0; l < 2; ++l) {
            for (std::size_t b = 0; b < B; ++b) {
                ab[l][b].init(p.bases[l][b].rows(), p.bases[l][b].cols());
            }
            ac[l].init(p.coeffs[l].rows(), p.coeffs[l].cols());
            as[l].init(p.self_weights[l].rows(), p.self_weights[l].cols());
        }
        if (!X) ae[0].init(p.embedding.rows(), p.embedding.cols());
        GnnParams best = p;
        double best_f1 = -1.0;
        RgcnGrads g;
        for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
            const double loss = rgcn_node_loss(p, rel_adjs, X, labels, split.train, cfg.l2, &g);
            if (!std::isfinite(loss)) {
                throw NumericError("non-finite rgcn loss at epoch " + std::to_string(epoch));
            }
            result.loss_trace.push_back(loss);
            for (int l = 0; l < 2; ++l) {
                for (std::size_t b = 0; b < B; ++b) {
                    ab[l][b].step(p.bases[l][b], g.bases[l][b], cfg.learning_rate, epoch,
                                  cfg.optimizer);
                }
                ac[l].step(p.coeffs[l], g.coeffs[l], cfg.learning_rate, epoch, cfg.optimizer);
                as[l].step(p.self_weights[l], g.self_weights[l], cfg.learning_rate, epoch,
                           cfg.optimizer);
            }
            if (!X) ae[0].step(p.embedding, g.embedding, cfg.learning_rate, epoch, cfg.optimizer);
            if (!split.valid.empty()) {
                const auto pred =
                    argmax_rows(rgcn_forward(p, rel_adjs, X ? *X : p.embedding));
                const double f1 = eval_nodes(pred, labels, split.valid).macro_f1;
                if (f1 > best_f1) {
                    best_f1 = f1;
                    best = p;
                }
            }
        }
        result.params = p;
        result.best = best_f1 >= 0.0 ? best : p;
        result.best_val_f1 = std::max(best_f1, 0.0);
    }

    const auto pred = predict_nodes(kg, result.best, features);
    const auto m = eval_nodes(pred, labels, split.test.empty() ? split.train : split.test);
    result.report.metrics["nodecls.accuracy"] = m.accuracy;
    result.report.metrics["nodecls.macro_f1"] = m.macro_f1;
    result.report.metrics["nodecls.best_val_f1"] = result.best_val_f1;
    return result;
}

std::vector<int> predict_nodes(const KnowledgeGraph& kg, const GnnParams& params,
                               const FeatureMatrix* features) {
    switch (params.model) {
        case GnnModel::gcn: {
            if (!features) throw DataError("gcn prediction requires features");
            return argmax_rows(gcn_forward(params, normalize_adjacency(kg), features->data));
        }
        case GnnModel::sgc: {
            if (!features) throw DataError("sgc prediction requires features");
            const Eigen::MatrixXd P =
                sgc_features(normalize_adjacency(kg), features->data, params.sgc_k);
            Eigen::MatrixXd S = P * params.W0;
            S.rowwise() += params.b0.transpose();
            return argmax_rows(S);
        }
        case GnnModel::rgcn: {
            const auto rel_adjs = relation_adjacencies(kg);
            const Eigen::MatrixXd& X = features ? features->data : params.embedding;
            return argmax_rows(rgcn_forward(params, rel_adjs, X));
        }
    }
    throw DataError("bad gnn model");
}

namespace {

struct EdgeBatch {
    std::vector<std::pair<EntityId, EntityId>> edges;
    std::vector<double> labels;
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// BCE over edge scores; fills dZ (n x dim) with gradients w.r.t. embeddings
// and head gradients for the hadamard scorer.
double link_loss(const GnnParams& p, EdgeScorer scorer, const Eigen::MatrixXd& Z,
                 const EdgeBatch& batch, Eigen::MatrixXd* dZ, Eigen::VectorXd* dw, double* db) {
    const double inv = 1.0 / static_cast<double>(batch.edges.size());
    if (dZ) dZ->setZero(Z.rows(), Z.cols());
    if (dw) dw->setZero(p.edge_w.size());
    if (db) *db = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.edges.size(); ++i) {
        const auto [u, v] = batch.edges[i];
        const double y = batch.labels[i];
        double z;
        if (scorer == EdgeScorer::dot) {
            z = Z.row(u).dot(Z.row(v));
        } else {
            z = Z.row(u).cwiseProduct(Z.row(v)).dot(p.edge_w.transpose()) + p.edge_b;
        }
        const double pr = sigmoid(z);
        loss -= inv * (y * std::log(std::max(pr, 1e-15)) +
                       (1.0 - y) * std::log(std::max(1.0 - pr, 1e-15)));
        if (dZ) {
            const double g = inv * (pr - y);
            if (scorer == EdgeScorer::dot) {
                dZ->row(u) += g * Z.row(v);
                dZ->row(v) += g * Z.row(u);
            } else {
                dZ->row(u) += g * p.edge_w.transpose().cwiseProduct(Z.row(v));
                dZ->row(v) += g * p.edge_w.transpose().cwiseProduct(Z.row(u));
                if (dw) *dw += g * Z.row(u).cwiseProduct(Z.row(v)).transpose();
                if (db) *db += g;
            }
        }
    }
    return loss;
}

}  // namespace

LinkTrainResult train_gnn_link(const KnowledgeGraph& kg, const FeatureMatrix& features,
                               GnnModel model, const GnnConfig& cfg, std::uint64_t seed) {
    const auto und = undirected_pairs(kg.triples());
    std::vector<std::pair<EntityId, EntityId>> pairs(und.begin(), und.end());
    if (pairs.size() < 2) throw DataError("link prediction needs at least 2 edges");

    Rng rng(seed);
    rng.shuffle(pairs);
    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * pairs.size()));
    std::vector<std::pair<EntityId, EntityId>> train_pos(pairs.begin(), pairs.begin() + n_train);
    std::vector<std::pair<EntityId, EntityId>> test_pos(pairs.begin() + n_train, pairs.end());
    if (test_pos.empty()) {
        test_pos.push_back(train_pos.back());
        train_pos.pop_back();
    }

    auto sample_negs = [&](std::size_t count) {
        std::vector<std::pair<EntityId, EntityId>> out;
        while (out.size() < count) {
            auto batch = sample_negative_edges(kg, count - out.size(), rng);
            for (const auto& [u, v] : batch) {
                if (!kg.has_edge(v, u)) out.emplace_back(u, v);
            }
        }
        return out;
    };
    const auto train_neg = sample_negs(train_pos.size());
    const auto test_neg = sample_negs(test_pos.size());

    // message passing over train positives only
    std::set<std::pair<EntityId, EntityId>> train_set(train_pos.begin(), train_pos.end());
    const NormalizedAdjacency adj = normalize_pairs(kg.num_entities(), train_set);
    std::vector<Triple> train_triples;
    for (const Triple& t : kg.triples()) {
        const auto key = std::make_pair(std::min(t.head, t.tail), std::max(t.head, t.tail));
        if (train_set.contains(key)) train_triples.push_back(t);
    }
    const auto rel_adjs = relation_adjacencies(kg, train_triples);

    EdgeBatch train_batch;
    for (const auto& e : train_pos) {
        train_batch.edges.push_back(e);
        train_batch.labels.push_back(1.0);
    }
    for (const auto& e : train_neg) {
        train_batch.edges.push_back(e);
        train_batch.labels.push_back(0.0);
    }

    Rng init_rng = Rng(seed).derive(7);
    const Eigen::MatrixXd& X = features.data;
    GnnParams p;
    p.model = model;
    const int out_dim = cfg.out_dim;
    if (model == GnnModel::gcn) {
        p.W0 = glorot(init_rng, X.cols(), cfg.hidden);
        p.W1 = glorot(init_rng, cfg.hidden, out_dim);
    } else if (model == GnnModel::sgc) {
        p.sgc_k = cfg.sgc_k;
        p.W0 = glorot(init_rng, X.cols(), out_dim);
    } else {
        p = init_rgcn(kg, &features, out_dim, cfg, init_rng);
    }
    if (cfg.edge_scorer == EdgeScorer::hadamard) {
        p.edge_w = Eigen::VectorXd::Zero(out_dim);
        p.edge_b = 0.0;
    }

    auto forward = [&]() -> Eigen::MatrixXd {
        switch (model) {
            case GnnModel::gcn: return gcn_forward(p, adj, X);
            case GnnModel::sgc: return sgc_features(adj, X, p.sgc_k) * p.W0;
            case GnnModel::rgcn: return rgcn_forward(p, rel_adjs, X);
        }
        throw DataError("bad gnn model");
    };

    // optimizer state sized lazily per parameter group
    Adam a0, a1, aw;
    if (p.W0.size() > 0) a0.init(p.W0.rows(), p.W0.cols());
    if (p.W1.size() > 0) a1.init(p.W1.rows(), p.W1.cols());
    if (p.edge_w.size() > 0) aw.init(p.edge_w.size(), 1);
    std::vector<std::vector<Adam>> ab;
    std::vector<Adam> ac, as;
    if (model == GnnModel::rgcn) {
        const std::size_t B = p.bases[0].size();
        ab.assign(2, std::vector<Adam>(B));
        ac.resize(2);
        as.resize(2);
        for (int l = 0; l < 2; ++l) {
            for (std::size_t b = 0; b < B; ++b) {
                ab[l][b].init(p.bases[l][b].rows(), p.bases[l][b].cols());
            }
            ac[l].init(p.coeffs[l].rows(), p.coeffs[l].cols());
            as[l].init(p.self_weights[l].rows(), p.self_weights[l].cols());
        }
    }

    Eigen::MatrixXd dZ;
    Eigen::VectorXd dw;
    double db = 0.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const Eigen::MatrixXd Z = forward();
        const double loss = link_loss(p, cfg.edge_scorer, Z, train_batch, &dZ,
                                      p.edge_w.size() > 0 ? &dw : nullptr,
                                      p.edge_w.size() > 0 ? &db : nullptr);
        if (!std::isfinite(loss)) {
            throw NumericError("non-finite link loss at epoch " + std::to_string(epoch));
        }
        if (model == GnnModel::gcn) {
            const Eigen::MatrixXd AX = adj.mat * X;
            const Eigen::MatrixXd Z0 = AX * p.W0;
            const Eigen::MatrixXd H1 = Z0.cwiseMax(0.0);
            const Eigen::MatrixXd dW1 = (adj.mat * H1).transpose() * dZ;
            const Eigen::MatrixXd dH1 = (adj.mat * (dZ * p.W1.transpose()))
                                            .cwiseProduct((Z0.array() > 0.0).cast<double>().matrix());
            const Eigen::MatrixXd dW0 = AX.transpose() * dH1;
            a0.step(p.W0, dW0, cfg.learning_rate, epoch, cfg.optimizer);
            a1.step(p.W1, dW1, cfg.learning_rate, epoch, cfg.optimizer);
        } else if (model == GnnModel::sgc) {
            const Eigen::MatrixXd P = sgc_features(adj, X, p.sgc_k);
            const Eigen::MatrixXd dW0 = P.transpose() * dZ;
            a0.step(p.W0, dW0, cfg.learning_rate, epoch, cfg.optimizer);
        } else {
            // reuse the node-loss backward by treating dZ as the logits gradient
            const std::size_t R = rel_adjs.size();
            const std::size_t B = p.bases[0].size();
            std::vector<Eigen::MatrixXd> W0r(R), W1r(R), M0(R), M1(R);
            Eigen::MatrixXd pre0 = X * p.self_weights[0];
            for (std::size_t r = 0; r < R; ++r) {
                W0r[r] = compose_relation_weight(p, 0, static_cast<Eigen::Index>(r));
                W1r[r] = compose_relation_weight(p, 1, static_cast<Eigen::Index>(r));
                if (rel_adjs[r].nonZeros() == 0) continue;
                M0[r] = rel_adjs[r] * X;
                pre0 += M0[r] * W0r[r];
            }
            const Eigen::MatrixXd H1 = pre0.cwiseMax(0.0);
            RgcnGrads g;
            g.bases.assign(2, std::vector<Eigen::MatrixXd>(B));
            g.coeffs.assign(2, Eigen::MatrixXd());
            g.self_weights.assign(2, Eigen::MatrixXd());
            for (int l = 0; l < 2; ++l) {
                for (std::size_t b = 0; b < B; ++b) {
                    g.bases[l][b] = Eigen::MatrixXd::Zero(p.bases[l][b].rows(), p.bases[l][b].cols());
                }
                g.coeffs[l] = Eigen::MatrixXd::Zero(p.coeffs[l].rows(), p.coeffs[l].cols());
                g.self_weights[l] =
                    Eigen::MatrixXd::Zero(p.self_weights[l].rows(), p.self_weights[l].cols());
            }
            g.self_weights[1] += H1.transpose() * dZ;
            Eigen::MatrixXd dH1 = dZ * p.self_weights[1].transpose();
            for (std::size_t r = 0; r < R; ++r) {
                if (rel_adjs[r].nonZeros() == 0) continue;
                M1[r] = rel_adjs[r] * H1;
                const Eigen::MatrixXd dWr = M1[r].transpose() * dZ;
                for (std::size_t b = 0; b < B; ++b) {
                    g.bases[1][b] += p.coeffs[1](static_cast<Eigen::Index>(r),
                                                 static_cast<Eigen::Index>(b)) * dWr;
                    g.coeffs[1](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) +=
                        dWr.cwiseProduct(p.bases[1][b]).sum();
                }
                dH1 += rel_adjs[r].transpose() * (dZ * W1r[r].transpose());
            }
            const Eigen::MatrixXd dpre0 =
                dH1.cwiseProduct((pre0.array() > 0.0).cast<double>().matrix());
            g.self_weights[0] += X.transpose() * dpre0;
            for (std::size_t r = 0; r < R; ++r) {
                if (rel_adjs[r].nonZeros() == 0) continue;
                const Eigen::MatrixXd dWr = M0[r].transpose() * dpre0;
                for (std::size_t b = 0; b < B; ++b) {
                    g.bases[0][b] += p.coeffs[0](static_cast<Eigen::Index>(r),
                                                 static_cast<Eigen::Index>(b)) * dWr;
                    g.coeffs[0](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) +=
                        dWr.cwiseProduct(p.bases[0][b]).sum();
                }
            }
            for (int l = 0; l < 2; ++l) {
                for (std::size_t b = 0; b < B; ++b) {
                    ab[l][b].step(p.bases[l][b], g.bases[l][b], cfg.learning_rate, epoch,
                                  cfg.optimizer);
                }
                ac[l].step(p.coeffs[l], g.coeffs[l], cfg.learning_rate, epoch, cfg.optimizer);
                as[l].step(p.self_weights[l], g.self_weights[l], cfg.learning_rate, epoch,
                           cfg.optimizer);
            }
        }
        if (p.edge_w.size() > 0) {
            Eigen::MatrixXd wmat = p.edge_w;
            aw.step(wmat, dw, cfg.learning_rate, epoch, cfg.optimizer);
            p.edge_w = wmat;
            p.edge_b -= cfg.learning_rate * db;  // plain step for the scalar
        }
    }

    // test AP over a shuffled pool
    const Eigen::MatrixXd Z = forward();
    std::vector<std::pair<std::pair<EntityId, EntityId>, int>> pool;
    for (const auto& e : test_pos) pool.emplace_back(e, 1);
    for (const auto& e : test_neg) pool.emplace_back(e, 0);
    rng.shuffle(pool);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& [e, l] : pool) {
        double z;
        if (cfg.edge_scorer == EdgeScorer::dot) {
            z = Z.row(e.first).dot(Z.row(e.second));
        } else {
            z = Z.row(e.first).cwiseProduct(Z.row(e.second)).dot(p.edge_w.transpose()) + p.edge_b;
        }
        scores.push_back(sigmoid(z));
        labels.push_back(l);
    }

    LinkTrainResult result;
    result.params = std::move(p);
    result.report.task = "lp-gnn";
    result.report.seed = seed;
    result.report.metrics["lp.gnn.ap"] = average_precision(scores, labels);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        correct += (scores[i] > 0.5) == (labels[i] != 0);
    }
    result.report.metrics["lp.gnn.accuracy"] =
        static_cast<double>(correct) / static_cast<double>(scores.size());
    return result;
}

}  // namespace kgr
