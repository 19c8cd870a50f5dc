#pragma once

#include <Eigen/Core>

#include "laserml/degradation.hpp"

namespace laserml {

/// A classifier's answer for one window: the chosen mode plus per-class
/// scores (probabilities or vote fractions, depending on the model).
struct Prediction {
    DegradationMode mode = DegradationMode::Normal;
    Eigen::VectorXd probabilities;
};

} // namespace laserml
