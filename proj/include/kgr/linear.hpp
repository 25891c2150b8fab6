#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kgr/kge.hpp"  // Optimizer

namespace kgr {

enum class LinearLoss { logistic, hinge };

LinearLoss parse_linear_loss(const std::string& name);
std::string linear_loss_name(LinearLoss loss);

// C x d weights + C biases; hinge trains one-vs-rest, logistic is multinomial.
struct LinearModel {
    LinearLoss loss = LinearLoss::logistic;
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
    double l2 = 0.0;

    int classes() const { return static_cast<int>(W.rows()); }
};

struct LinearConfig {
    LinearLoss loss = LinearLoss::logistic;
    int epochs = 200;
    double learning_rate = 0.5;
    double l2 = 1e-4;
    Optimizer optimizer = Optimizer::adam;
    std::uint64_t seed = 0;
};

// Mean loss over rows of X plus l2 * ||W||^2 (biases unpenalized); gradients
// optional. Exposed for finite-difference verification.
double linear_loss_and_grad(const LinearModel& model, const Eigen::MatrixXd& X,
                            std::span<const int> labels, Eigen::MatrixXd* dW, Eigen::VectorXd* db);

// Full-batch gradient descent from zero initialization (convex objective).
struct LinearFitResult {
    LinearModel model;
    std::vector<double> loss_trace;
};

using EpochHook = std::function<void(int epoch, const LinearModel& model)>;

LinearFitResult fit_linear(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                           const LinearConfig& cfg, const EpochHook& on_epoch = {});

std::vector<int> linear_predict(const LinearModel& model, const Eigen::MatrixXd& X);

// Class-1 minus class-0 decision value, for binary ranking metrics.
std::vector<double> linear_binary_scores(const LinearModel& model, const Eigen::MatrixXd& X);

}  // namespace kgr
