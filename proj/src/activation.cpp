#include "crlkit/activation.hpp"

#include <Eigen/Core>
#include <cmath>

#include "crlkit/common.hpp"

namespace crlkit {

Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation '" + name + "' (expected sigmoid|tanh|identity)");
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "?";
}

double activate_scalar(Activation a, double x) {
    switch (a) {
        case Activation::Sigmoid:
            // Branch keeps exp() away from overflow on either side.
            return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                            : std::exp(x) / (1.0 + std::exp(x));
        case Activation::Tanh: return std::tanh(x);
        case Activation::Identity: return x;
    }
    return x;
}

double activation_deriv_from_output(Activation a, double y) {
    switch (a) {
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

DenseMatrix activate(Activation a, const DenseMatrix& x) {
    DenseMatrix out = x;
    activate_inplace(a, out);
    return out;
}

void activate_inplace(Activation a, DenseMatrix& x) {
    if (a == Activation::Identity) return;
    // Vectorized elementwise path. The work happens in an Eigen-owned
    // (always aligned) temporary so results do not depend on the caller's
    // buffer alignment; exp(-x) saturates cleanly to 0/inf in IEEE
    // arithmetic so the plain sigmoid formula needs no branches.
    Eigen::Map<Eigen::ArrayXd> m(x.data.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::ArrayXd tmp = m;
    if (a == Activation::Sigmoid)
        tmp = 1.0 / (1.0 + (-tmp).exp());
    else
        tmp = tmp.tanh();
    m = tmp;
}

DenseMatrix activation(const std::string& name, const DenseMatrix& x) {
    return activate(activation_from_name(name), x);
}

}  // namespace crlkit
