#pragma once

#include <vector>

#include "crlkit/matrix.hpp"

namespace crlkit {

/// Multinomial logistic regression, the in-library linear classifier used
/// by the transfer-learning protocol.
struct LinearClassifier {
    DenseMatrix weights;  // classes x dim
    DenseVector bias;     // classes
    double l2 = 0.0;
};

/// Full-batch gradient descent from a zero start (the objective is convex,
/// so no seed enters) until the gradient max-norm drops to 1e-4 or 500
/// iterations pass. Step size comes from a power-iteration bound on the
/// softmax Hessian. Throws on single-class input or labels outside
/// 0..classes-1.
LinearClassifier fit_classifier(const DenseMatrix& H, const std::vector<int>& labels,
                                double l2, std::size_t max_iters = 500,
                                double grad_tol = 1e-4);

std::vector<int> classify(const LinearClassifier& clf, const DenseMatrix& H);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Mean multinomial cross-entropy plus the l2 penalty (diagnostic).
double classifier_loss(const LinearClassifier& clf, const DenseMatrix& H,
                       const std::vector<int>& labels);

}  // namespace crlkit
