#pragma once

#include <string>

#include "crlkit/matrix.hpp"

namespace crlkit {

enum class Activation { Sigmoid, Tanh, Identity };

Activation activation_from_name(const std::string& name);  // throws ConfigError on unknown
std::string activation_name(Activation a);

double activate_scalar(Activation a, double x);

/// Derivative expressed through the activation output y = act(x):
/// sigmoid' = y(1-y), tanh' = 1-y^2, identity' = 1.
double activation_deriv_from_output(Activation a, double y);

DenseMatrix activate(Activation a, const DenseMatrix& x);
void activate_inplace(Activation a, DenseMatrix& x);

/// Elementwise activation keyed by name; unknown names throw.
DenseMatrix activation(const std::string& name, const DenseMatrix& x);

}  // namespace crlkit
