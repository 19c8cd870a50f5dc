#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "laserml/pipeline.hpp"

namespace laserml {

inline constexpr int kFlatFeatureDim = kWindowSize + 4; // currents + I0, T, P, lambda

/// Flattens a scaled window into the 104-value vector the classical models
/// consume: the 100 scaled current samples followed by scaled I0, T, P,
/// lambda.
Eigen::VectorXd flatten_features(const WindowedSample& sample);

struct KnnModel {
    Eigen::MatrixXd train_vectors; // (n x kFlatFeatureDim)
    std::vector<DegradationMode> train_labels;
    int k = 6;
};

KnnModel knn_fit(const std::vector<WindowedSample>& train, int k = 6);

/// Majority vote among the k nearest by Euclidean distance; ties break by
/// smallest mean distance among the tied classes, then lowest class code.
/// Also reports per-class neighbor-vote fractions as scores.
Prediction knn_predict(const KnnModel& model, const Eigen::VectorXd& vector);

struct LogRegModel {
    Eigen::MatrixXd weights; // (num_classes x kFlatFeatureDim)
    Eigen::VectorXd intercepts;
    double inverse_regularization_c = 100.0;
    bool converged = true;
    int iterations = 0;
};

struct LogRegFitOptions {
    double inverse_regularization_c = 100.0;
    double gradient_tolerance = 1e-6;
    int max_iterations = 5000;
    std::uint64_t init_seed = 7;
};

/// Minimizes mean cross-entropy + (1/C) * 0.5 * ||W||^2 (intercepts
/// unpenalized) by full-batch gradient descent with step halving whenever a
/// step would increase the objective, so the objective is non-increasing
/// across iterations. Non-convergence within max_iterations sets the
/// converged flag false rather than failing.
LogRegModel logreg_fit(const std::vector<WindowedSample>& train, const LogRegFitOptions& options = {});

Prediction logreg_predict(const LogRegModel& model, const Eigen::VectorXd& vector);

double logreg_objective(const LogRegModel& model, const Eigen::MatrixXd& x, const std::vector<DegradationMode>& y);

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    DegradationMode label = DegradationMode::Normal;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    DegradationMode predict(const Eigen::VectorXd& vector) const;
};

struct RandomForestModel {
    std::vector<DecisionTree> trees;
    std::uint64_t seed = 0;
};

struct RandomForestOptions {
    int num_trees = 100;
    bool bootstrap = true;
    int features_per_split = 0; // 0 = floor(sqrt(dim))
    std::uint64_t seed = 11;
};

/// Greedy CART trees on Gini impurity decrease, unlimited depth, one sample
/// per leaf, deterministic for a fixed seed (per-tree substreams).
RandomForestModel rf_fit(const std::vector<WindowedSample>& train, const RandomForestOptions& options = {});

/// Majority vote over trees, ties toward the lowest class code; scores are
/// tree-vote fractions.
Prediction rf_predict(const RandomForestModel& model, const Eigen::VectorXd& vector);

/// Gini impurity of a node from its per-class counts.
double gini_impurity(const std::array<int, kNumModes>& counts);

/// Conventional multi-threshold detector over raw (unscaled) current
/// windows. Decision cascade:
///   1. no sample above I0*(1+eol_fraction)            -> Normal
///   2. any single-step rise above jump_fraction*I0    -> Sudden
///   3. first EOL crossing before rapid_crossing_bound -> Rapid
///   4. otherwise                                      -> Gradual
struct ThresholdDetector {
    double eol_current_increase_fraction = 0.20;
    double sudden_jump_step_fraction = 0.10;
    int rapid_crossing_index_bound = 30;
};

void validate(const ThresholdDetector& d);

DegradationMode threshold_classify(const ThresholdDetector& detector, const std::vector<double>& raw_currents_ma,
                                   double threshold_current_ma);

} // namespace laserml
