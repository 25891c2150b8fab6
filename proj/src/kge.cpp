#include "kgr/kge.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kgr/error.hpp"

namespace kgr {

namespace {

constexpr double kNormEps = 1e-12;

bool is_translation(ModelKind k) {
    return k == ModelKind::transe_l1 || k == ModelKind::transe_l2 || k == ModelKind::transr;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
    if (name == "transe-l1") return ModelKind::transe_l1;
    if (name == "transe-l2") return ModelKind::transe_l2;
    if (name == "transr") return ModelKind::transr;
    if (name == "distmult") return ModelKind::distmult;
    if (name == "rescal") return ModelKind::rescal;
    if (name == "rotate") return ModelKind::rotate;
    throw ConfigError("unknown model kind '" + name + "'");
}

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::transe_l1: return "transe-l1";
        case ModelKind::transe_l2: return "transe-l2";
        case ModelKind::transr: return "transr";
        case ModelKind::distmult: return "distmult";
        case ModelKind::rescal: return "rescal";
        case ModelKind::rotate: return "rotate";
    }
    throw ConfigError("bad model kind");
}

std::size_t EmbeddingModel::num_relations() const {
    if (kind == ModelKind::rescal) return relation_matrices.size();
    return static_cast<std::size_t>(relations.rows());
}

double score(const EmbeddingModel& m, const Triple& t) {
    if (t.head >= m.num_entities() || t.tail >= m.num_entities() || t.relation >= m.num_relations()) {
        throw DataError("triple indices out of range for model");
    }
    const int d = m.dim;
    switch (m.kind) {
        case ModelKind::transe_l1: {
            const Eigen::RowVectorXd u =
                m.entities.row(t.head) + m.relations.row(t.relation) - m.entities.row(t.tail);
            return -u.lpNorm<1>();
        }
        case ModelKind::transe_l2: {
            const Eigen::RowVectorXd u =
                m.entities.row(t.head) + m.relations.row(t.relation) - m.entities.row(t.tail);
            return -u.norm();
        }
        case ModelKind::transr: {
            const Eigen::MatrixXd& M = m.relation_matrices[t.relation];
            const Eigen::RowVectorXd u = m.entities.row(t.head) * M +
                                         m.relations.row(t.relation) - m.entities.row(t.tail) * M;
            return -u.norm();
        }
        case ModelKind::distmult:
            return m.entities.row(t.head)
                .cwiseProduct(m.relations.row(t.relation))
                .cwiseProduct(m.entities.row(t.tail))
                .sum();
        case ModelKind::rescal:
            return m.entities.row(t.head) * m.relation_matrices[t.relation] *
                   m.entities.row(t.tail).transpose();
        case ModelKind::rotate: {
            const auto hr = m.entities.row(t.head).head(d);
            const auto hi = m.entities.row(t.head).tail(d);
            const auto tr = m.entities.row(t.tail).head(d);
            const auto ti = m.entities.row(t.tail).tail(d);
            const Eigen::ArrayXd c = m.relations.row(t.relation).array().cos();
            const Eigen::ArrayXd s = m.relations.row(t.relation).array().sin();
            const Eigen::ArrayXd wr = hr.transpose().array() * c - hi.transpose().array() * s -
                                      tr.transpose().array();
            const Eigen::ArrayXd wi = hr.transpose().array() * s + hi.transpose().array() * c -
                                      ti.transpose().array();
            return -std::sqrt((wr * wr + wi * wi).sum());
        }
    }
    throw DataError("bad model kind");
}

ScoreGradient score_gradient(const EmbeddingModel& m, const Triple& t) {
    const int d = m.dim;
    ScoreGradient g;
    switch (m.kind) {
        case ModelKind::transe_l1: {
            const Eigen::VectorXd u = (m.entities.row(t.head) + m.relations.row(t.relation) -
                                       m.entities.row(t.tail))
                                          .transpose();
            const Eigen::VectorXd sgn = u.array().sign();
            g.head = -sgn;
            g.relation = -sgn;
            g.tail = sgn;
            break;
        }
        case ModelKind::transe_l2: {
            const Eigen::VectorXd u = (m.entities.row(t.head) + m.relations.row(t.relation) -
                                       m.entities.row(t.tail))
                                          .transpose();
            const double n = u.norm();
            const Eigen::VectorXd dir = n < kNormEps ? Eigen::VectorXd::Zero(d).eval()
                                                     : Eigen::VectorXd(u / n);
            g.head = -dir;
            g.relation = -dir;
            g.tail = dir;
            break;
        }
        case ModelKind::transr: {
            const Eigen::MatrixXd& M = m.relation_matrices[t.relation];
            const Eigen::RowVectorXd hd = m.entities.row(t.head) - m.entities.row(t.tail);
            const Eigen::RowVectorXd u = hd * M + m.relations.row(t.relation);
            const double n = u.norm();
            const Eigen::RowVectorXd dir =
                n < kNormEps ? Eigen::RowVectorXd::Zero(m.rel_dim).eval()
                             : Eigen::RowVectorXd(u / n);
            g.relation = -dir.transpose();
            g.head = -(dir * M.transpose()).transpose();
            g.tail = (dir * M.transpose()).transpose();
            g.relation_matrix = -hd.transpose() * dir;
            break;
        }
        case ModelKind::distmult: {
            const Eigen::ArrayXd h = m.entities.row(t.head).transpose().array();
            const Eigen::ArrayXd r = m.relations.row(t.relation).transpose().array();
            const Eigen::ArrayXd ta = m.entities.row(t.tail).transpose().array();
            g.head = (r * ta).matrix();
            g.relation = (h * ta).matrix();
            g.tail = (h * r).matrix();
            break;
        }
        case ModelKind::rescal: {
            const Eigen::MatrixXd& M = m.relation_matrices[t.relation];
            const Eigen::VectorXd h = m.entities.row(t.head).transpose();
            const Eigen::VectorXd ta = m.entities.row(t.tail).transpose();
            g.head = M * ta;
            g.tail = M.transpose() * h;
            g.relation_matrix = h * ta.transpose();
            break;
        }
        case ModelKind::rotate: {
            const Eigen::ArrayXd hr = m.entities.row(t.head).head(d).transpose().array();
            const Eigen::ArrayXd hi = m.entities.row(t.head).tail(d).transpose().array();
            const Eigen::ArrayXd tr = m.entities.row(t.tail).head(d).transpose().array();
            const Eigen::ArrayXd ti = m.entities.row(t.tail).tail(d).transpose().array();
            const Eigen::ArrayXd c = m.relations.row(t.relation).array().cos().transpose();
            const Eigen::ArrayXd s = m.relations.row(t.relation).array().sin().transpose();
            const Eigen::ArrayXd wr = hr * c - hi * s - tr;
            const Eigen::ArrayXd wi = hr * s + hi * c - ti;
            const double n = std::sqrt((wr * wr + wi * wi).sum());
            Eigen::ArrayXd gr = Eigen::ArrayXd::Zero(d), gi = Eigen::ArrayXd::Zero(d);
            if (n >= kNormEps) {
                gr = -wr / n;
                gi = -wi / n;
            }
            g.head.resize(2 * d);
            g.head.head(d) = (gr * c + gi * s).matrix();
            g.head.tail(d) = (-gr * s + gi * c).matrix();
            g.tail.resize(2 * d);
            g.tail.head(d) = (-gr).matrix();
            g.tail.tail(d) = (-gi).matrix();
            g.relation = (gr * (-hr * s - hi * c) + gi * (hr * c - hi * s)).matrix();
            break;
        }
    }
    return g;
}

double margin_loss(std::span<const double> pos_scores, std::span<const double> neg_scores,
                   double margin) {
    if (pos_scores.size() != neg_scores.size()) {
        throw DataError("margin_loss requires paired positive/negative scores");
    }
    if (pos_scores.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < pos_scores.size(); ++i) {
        sum += std::max(0.0, margin - pos_scores[i] + neg_scores[i]);
    }
    return sum / static_cast<double>(pos_scores.size());
}

EmbeddingModel init_model(std::size_t n_entities, std::size_t n_relations, const TrainConfig& cfg,
                          ModelKind kind) {
    if (cfg.dim <= 0 || cfg.epochs < 0 || cfg.batch_size <= 0 || cfg.learning_rate <= 0 ||
        cfg.margin <= 0 || cfg.negatives_per_positive <= 0) {
        throw ConfigError("invalid training configuration");
    }
    EmbeddingModel m;
    m.kind = kind;
    m.dim = cfg.dim;
    m.rel_dim = cfg.rel_dim > 0 ? cfg.rel_dim : cfg.dim;
    m.seed = cfg.seed;
    const int d = m.dim;
    const int k = m.rel_dim;
    const double bound = 6.0 / std::sqrt(static_cast<double>(d));
    Rng rng(cfg.seed);
    auto fill = [&](Eigen::MatrixXd& mat, double b) {
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            for (Eigen::Index j = 0; j < mat.cols(); ++j) mat(i, j) = rng.uniform(-b, b);
        }
    };
    const auto n = static_cast<Eigen::Index>(n_entities);
    const auto R = static_cast<Eigen::Index>(n_relations);
    switch (kind) {
        case ModelKind::transe_l1:
        case ModelKind::transe_l2:
        case ModelKind::distmult:
            m.entities.resize(n, d);
            m.relations.resize(R, d);
            fill(m.entities, bound);
            fill(m.relations, bound);
            break;
        case ModelKind::rotate: {
            m.entities.resize(n, 2 * d);
            m.relations.resize(R, d);
            fill(m.entities, bound);
            for (Eigen::Index i = 0; i < R; ++i) {
                for (int j = 0; j < d; ++j) m.relations(i, j) = rng.uniform(0.0, 2.0 * M_PI);
            }
            break;
        }
        case ModelKind::rescal: {
            m.entities.resize(n, d);
            fill(m.entities, bound);
            m.relation_matrices.assign(n_relations, Eigen::MatrixXd(d, d));
            for (auto& M : m.relation_matrices) fill(M, bound);
            break;
        }
        case ModelKind::transr: {
            m.entities.resize(n, d);
            m.relations.resize(R, k);
            fill(m.entities, bound);
            const double kb = 6.0 / std::sqrt(static_cast<double>(k));
            fill(m.relations, kb);
            m.relation_matrices.assign(n_relations, Eigen::MatrixXd(d, k));
            for (auto& M : m.relation_matrices) fill(M, bound);
            break;
        }
    }
    return m;
}

namespace {

// Lazy Adam over row-sparse gradients; bias correction uses the global step.
struct AdamState {
    Eigen::MatrixXd m, v;
    void init(const Eigen::MatrixXd& shape) {
        m = Eigen::MatrixXd::Zero(shape.rows(), shape.cols());
        v = Eigen::MatrixXd::Zero(shape.rows(), shape.cols());
    }
};

void adam_row(Eigen::MatrixXd& param, AdamState& st, Eigen::Index row,
              const Eigen::RowVectorXd& grad, double lr, long step) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    st.m.row(row) = b1 * st.m.row(row) + (1 - b1) * grad;
    st.v.row(row) = b2 * st.v.row(row).array().matrix() +
                    (1 - b2) * grad.array().square().matrix();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    param.row(row) -=
        (lr * (st.m.row(row) / c1).array() / ((st.v.row(row) / c2).array().sqrt() + eps)).matrix();
}

void adam_full(Eigen::MatrixXd& param, AdamState& st, const Eigen::MatrixXd& grad, double lr,
               long step) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    st.m = b1 * st.m + (1 - b1) * grad;
    st.v = b2 * st.v + (1 - b2) * grad.array().square().matrix();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    param -= (lr * (st.m / c1).array() / ((st.v / c2).array().sqrt() + eps)).matrix();
}

}  // namespace

KgeTrainResult train_kge(const KnowledgeGraph& kg, const TripleSplit& split,
                         const TrainConfig& cfg, ModelKind kind) {
    if (split.train.empty()) throw DataError("train split is empty");

    KgeTrainResult result;
    result.model = init_model(kg.num_entities(), kg.num_relations(), cfg, kind);
    EmbeddingModel& model = result.model;
    Rng rng = Rng(cfg.seed).derive(1);

    const bool renorm = is_translation(kind);
    const bool decay_entities = !renorm && cfg.weight_decay > 0.0;
    const bool decay_relations =
        (kind == ModelKind::distmult || kind == ModelKind::rescal) && cfg.weight_decay > 0.0;

    AdamState ent_state, rel_state;
    std::vector<AdamState> mat_state;
    if (cfg.optimizer == Optimizer::adam) {
        ent_state.init(model.entities);
        if (model.relations.size() > 0) rel_state.init(model.relations);
        mat_state.resize(model.relation_matrices.size());
        for (std::size_t i = 0; i < mat_state.size(); ++i) {
            mat_state[i].init(model.relation_matrices[i]);
        }
    }

    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_pairs = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::map<EntityId, Eigen::RowVectorXd> ent_grad;
            std::map<RelationId, Eigen::RowVectorXd> rel_grad;
            std::map<RelationId, Eigen::MatrixXd> mat_grad;
            auto add_ent = [&](EntityId e, const Eigen::VectorXd& g, double sign) {
                auto [it, fresh] = ent_grad.try_emplace(e, Eigen::RowVectorXd::Zero(g.size()));
                it->second += sign * g.transpose();
            };
            auto add_rel = [&](RelationId r, const ScoreGradient& g, double sign) {
                if (g.relation.size() > 0) {
                    auto [it, fresh] =
                        rel_grad.try_emplace(r, Eigen::RowVectorXd::Zero(g.relation.size()));
                    it->second += sign * g.relation.transpose();
                }
                if (g.relation_matrix.size() > 0) {
                    auto [it, fresh] = mat_grad.try_emplace(
                        r, Eigen::MatrixXd::Zero(g.relation_matrix.rows(), g.relation_matrix.cols()));
                    it->second += sign * g.relation_matrix;
                }
            };

            double batch_loss = 0.0;
            std::size_t pairs = 0;
            for (std::size_t idx = start; idx < stop; ++idx) {
                const Triple& pos = split.train[order[idx]];
                const double pos_score = score(model, pos);
                for (int nn = 0; nn < cfg.negatives_per_positive; ++nn) {
                    const Triple neg = corrupt_triple(kg, pos, CorruptMode::either, rng);
                    const double neg_score = score(model, neg);
                    const double pair_loss = std::max(0.0, cfg.margin - pos_score + neg_score);
                    batch_loss += pair_loss;
                    ++pairs;
                    if (pair_loss <= 0.0) continue;
                    const ScoreGradient gp = score_gradient(model, pos);
                    const ScoreGradient gn = score_gradient(model, neg);
                    add_ent(pos.head, gp.head, -1.0);
                    add_ent(pos.tail, gp.tail, -1.0);
                    add_rel(pos.relation, gp, -1.0);
                    add_ent(neg.head, gn.head, 1.0);
                    add_ent(neg.tail, gn.tail, 1.0);
                    add_rel(neg.relation, gn, 1.0);
                }
            }
            if (pairs == 0) continue;
            if (!std::isfinite(batch_loss)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / cfg.batch_size) +
                                   ", lr=" + std::to_string(cfg.learning_rate));
            }
            epoch_loss += batch_loss;
            epoch_pairs += pairs;
            ++step;
            const double inv = 1.0 / static_cast<double>(pairs);

            if (decay_entities) {
                model.entities *= 1.0 - cfg.learning_rate * cfg.weight_decay;
            }
            if (decay_relations) {
                if (model.relations.size() > 0) {
                    model.relations *= 1.0 - cfg.learning_rate * cfg.weight_decay;
                }
                for (auto& M : model.relation_matrices) {
                    M *= 1.0 - cfg.learning_rate * cfg.weight_decay;
                }
            }

            for (auto& [e, g] : ent_grad) {
                const Eigen::RowVectorXd scaled = g * inv;
                if (cfg.optimizer == Optimizer::sgd) {
                    model.entities.row(e) -= cfg.learning_rate * scaled;
                } else {
                    adam_row(model.entities, ent_state, e, scaled, cfg.learning_rate, step);
                }
            }
            for (auto& [r, g] : rel_grad) {
                const Eigen::RowVectorXd scaled = g * inv;
                if (cfg.optimizer == Optimizer::sgd) {
                    model.relations.row(r) -= cfg.learning_rate * scaled;
                } else {
                    adam_row(model.relations, rel_state, r, scaled, cfg.learning_rate, step);
                }
            }
            for (auto& [r, g] : mat_grad) {
                const Eigen::MatrixXd scaled = g * inv;
                if (cfg.optimizer == Optimizer::sgd) {
                    model.relation_matrices[r] -= cfg.learning_rate * scaled;
                } else {
                    adam_full(model.relation_matrices[r], mat_state[r], scaled, cfg.learning_rate,
                              step);
                }
            }
        }
        if (renorm) {
            for (Eigen::Index i = 0; i < model.entities.rows(); ++i) {
                const double n = model.entities.row(i).norm();
                if (n > kNormEps) model.entities.row(i) /= n;
            }
        }
        const double mean_loss =
            epoch_pairs == 0 ? 0.0 : epoch_loss / static_cast<double>(epoch_pairs);
        if (!std::isfinite(mean_loss)) {
            throw NumericError("non-finite epoch loss at epoch " + std::to_string(epoch));
        }
        result.loss_trace.push_back(mean_loss);
    }
    return result;
}

}  // namespace kgr
