#include "kgr/linear.hpp"

#include <cmath>

#include "kgr/error.hpp"

namespace kgr {

LinearLoss parse_linear_loss(const std::string& name) {
    if (name == "logistic") return LinearLoss::logistic;
    if (name == "hinge") return LinearLoss::hinge;
    throw ConfigError("unknown linear loss '" + name + "'");
}

std::string linear_loss_name(LinearLoss loss) {
    return loss == LinearLoss::logistic ? "logistic" : "hinge";
}

double linear_loss_and_grad(const LinearModel& model, const Eigen::MatrixXd& X,
                            std::span<const int> labels, Eigen::MatrixXd* dW,
                            Eigen::VectorXd* db) {
    const auto n = X.rows();
    if (n != static_cast<Eigen::Index>(labels.size())) throw DataError("rows/labels mismatch");
    const int C = model.classes();
    if (dW) dW->setZero(model.W.rows(), model.W.cols());
    if (db) db->setZero(model.b.size());

    // scores: n x C
    Eigen::MatrixXd S = X * model.W.transpose();
    S.rowwise() += model.b.transpose();
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(n);

    if (model.loss == LinearLoss::logistic) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const int y = labels[i];
            if (y < 0 || y >= C) throw DataError("label out of range");
            const double mx = S.row(i).maxCoeff();
            const Eigen::ArrayXd ex = (S.row(i).transpose().array() - mx).exp();
            const double Z = ex.sum();
            loss += inv * (std::log(Z) - (S(i, y) - mx));
            if (dW || db) {
                Eigen::VectorXd p = (ex / Z).matrix();
                p(y) -= 1.0;
                if (dW) dW->noalias() += inv * p * X.row(i);
                if (db) *db += inv * p;
            }
        }
    } else {
        // one-vs-rest hinge: mean over samples and classes of max(0, 1 - y_c s_c)
        const double inv_nc = inv / static_cast<double>(C);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int y = labels[i];
            if (y < 0 || y >= C) throw DataError("label out of range");
            for (int c = 0; c < C; ++c) {
                const double t = c == y ? 1.0 : -1.0;
                const double margin = 1.0 - t * S(i, c);
                if (margin > 0.0) {
                    loss += inv_nc * margin;
                    if (dW) dW->row(c) -= (inv_nc * t) * X.row(i);
                    if (db) (*db)(c) -= inv_nc * t;
                }
            }
        }
    }

    loss += model.l2 * model.W.squaredNorm();
    if (dW) *dW += 2.0 * model.l2 * model.W;
    return loss;
}

LinearFitResult fit_linear(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                           const LinearConfig& cfg, const EpochHook& on_epoch) {
    if (n_classes < 2) throw DataError("need at least 2 classes");
    if (cfg.epochs < 0 || cfg.learning_rate <= 0 || cfg.l2 < 0) {
        throw ConfigError("invalid linear configuration");
    }
    LinearFitResult result;
    LinearModel& m = result.model;
    m.loss = cfg.loss;
    m.l2 = cfg.l2;
    m.W = Eigen::MatrixXd::Zero(n_classes, X.cols());
    m.b = Eigen::VectorXd::Zero(n_classes);

    Eigen::MatrixXd dW(n_classes, X.cols()), mW = dW, vW = dW;
    Eigen::VectorXd db(n_classes), mb = db, vb = db;
    mW.setZero();
    vW.setZero();
    mb.setZero();
    vb.setZero();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double loss = linear_loss_and_grad(m, X, labels, &dW, &db);
        if (!std::isfinite(loss)) {
            throw NumericError("non-finite classifier loss at epoch " + std::to_string(epoch));
        }
        result.loss_trace.push_back(loss);
        if (cfg.optimizer == Optimizer::sgd) {
            m.W -= cfg.learning_rate * dW;
            m.b -= cfg.learning_rate * db;
        } else {
            constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
            const double c1 = 1.0 - std::pow(b1, epoch);
            const double c2 = 1.0 - std::pow(b2, epoch);
            mW = b1 * mW + (1 - b1) * dW;
            vW = b2 * vW + (1 - b2) * dW.array().square().matrix();
            m.W -= (cfg.learning_rate * (mW / c1).array() / ((vW / c2).array().sqrt() + eps)).matrix();
            mb = b1 * mb + (1 - b1) * db;
            vb = b2 * vb + (1 - b2) * db.array().square().matrix();
            m.b -= (cfg.learning_rate * (mb / c1).array() / ((vb / c2).array().sqrt() + eps)).matrix();
        }
        if (on_epoch) on_epoch(epoch, m);
    }
    return result;
}

std::vector<int> linear_predict(const LinearModel& model, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd S = X * model.W.transpose();
    S.rowwise() += model.b.transpose();
    std::vector<int> pred(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        Eigen::Index best;
        S.row(i).maxCoeff(&best);
        pred[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return pred;
}

std::vector<double> linear_binary_scores(const LinearModel& model, const Eigen::MatrixXd& X) {
    if (model.classes() != 2) throw DataError("binary scores need a 2-class model");
    Eigen::MatrixXd S = X * model.W.transpose();
    S.rowwise() += model.b.transpose();
    std::vector<double> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = S(i, 1) - S(i, 0);
    return out;
}

}  // namespace kgr
