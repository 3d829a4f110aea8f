#include <cmath>
#include <numeric>

#include "cablesift/common.hpp"
#include "model_fits.hpp"

namespace cablesift {

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(m)) without overflow.
double log1pexp(double m) {
    if (m > 0) return m + std::log1p(std::exp(-m));
    return std::log1p(std::exp(m));
}

double dot(std::span<const double> w, const SparseVector& x) {
    double z = 0;
    for (const auto& [col, v] : x.entries) z += w[col] * v;
    return z;
}

}  // namespace

double logistic_loss(std::span<const double> weights, double bias,
                     std::span<const SparseVector> X, std::span<const int> y, double l2) {
    double loss = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        double margin = (y[i] == 1 ? 1.0 : -1.0) * (dot(weights, X[i]) + bias);
        loss += log1pexp(-margin);
    }
    loss /= static_cast<double>(X.size());
    double reg = 0;
    for (double w : weights) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

void logistic_loss_grad(std::span<const double> weights, double bias,
                        std::span<const SparseVector> X, std::span<const int> y, double l2,
                        std::vector<double>& grad_w, double& grad_b) {
    grad_w.assign(weights.size(), 0.0);
    grad_b = 0;
    const double inv_n = 1.0 / static_cast<double>(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        double sy = y[i] == 1 ? 1.0 : -1.0;
        double z = dot(weights, X[i]) + bias;
        double g = -sy * sigmoid(-sy * z) * inv_n;
        for (const auto& [col, v] : X[i].entries) grad_w[col] += g * v;
        grad_b += g;
    }
    for (std::size_t j = 0; j < weights.size(); ++j) grad_w[j] += l2 * weights[j];
}

namespace detail {

LinearState fit_logistic_sgd(const ClassifierSpec& spec, std::span<const SparseVector> X,
                             std::span<const int> y, std::uint32_t width) {
    const Hyper& h = spec.hyper;
    LinearState state;
    state.weights.assign(width, 0.0);

    if (h.full_batch) {
        std::vector<double> grad_w;
        double grad_b = 0;
        for (int epoch = 1; epoch <= h.epochs; ++epoch) {
            double lr = h.learning_rate / std::sqrt(static_cast<double>(epoch));
            logistic_loss_grad(state.weights, state.bias, X, y, h.l2, grad_w, grad_b);
            for (std::size_t j = 0; j < state.weights.size(); ++j)
                state.weights[j] -= lr * grad_w[j];
            state.bias -= lr * grad_b;
        }
        return state;
    }

    // Seeded-shuffle SGD with lazy L2 decay: the regularizer only touches a
    // scalar, so each step costs O(nnz) instead of O(width).
    Rng rng(mix_seed(spec.seed, 0));
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double scale = 1.0;
    auto fold_scale = [&] {
        for (double& w : state.weights) w *= scale;
        scale = 1.0;
    };
    for (int epoch = 1; epoch <= h.epochs; ++epoch) {
        double lr = h.learning_rate / std::sqrt(static_cast<double>(epoch));
        double decay = 1.0 - lr * h.l2;
        if (decay <= 0)
            throw UsageError("learning_rate * l2 too large for stable sgd updates");
        rng.shuffle(order);
        for (std::size_t i : order) {
            const SparseVector& x = X[i];
            double sy = y[i] == 1 ? 1.0 : -1.0;
            double z = scale * dot(state.weights, x) + state.bias;
            double g = sigmoid(-sy * z);
            scale *= decay;
            if (scale < 1e-9) fold_scale();
            double step = lr * sy * g / scale;
            for (const auto& [col, v] : x.entries) state.weights[col] += step * v;
            state.bias += lr * sy * g;
        }
    }
    fold_scale();
    return state;
}

// Least squares on +/-1 targets with an L2 penalty on the weights (not the
// intercept), solved by conjugate gradient on the normal equations.
LinearState fit_ridge(const ClassifierSpec& spec, std::span<const SparseVector> X,
                      std::span<const int> y, std::uint32_t width) {
    const Hyper& h = spec.hyper;
    const std::size_t dim = static_cast<std::size_t>(width) + 1;  // bias last

    auto matvec = [&](const std::vector<double>& z, std::vector<double>& out) {
        out.assign(dim, 0.0);
        for (const SparseVector& x : X) {
            double u = z[width];
            for (const auto& [col, v] : x.entries) u += z[col] * v;
            for (const auto& [col, v] : x.entries) out[col] += u * v;
            out[width] += u;
        }
        for (std::uint32_t j = 0; j < width; ++j) out[j] += h.ridge_lambda * z[j];
    };

    std::vector<double> rhs(dim, 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        double t = y[i] == 1 ? 1.0 : -1.0;
        for (const auto& [col, v] : X[i].entries) rhs[col] += t * v;
        rhs[width] += t;
    }

    std::vector<double> z(dim, 0.0), r = rhs, p = rhs, ap;
    double rs = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    const double stop = h.cg_tol * h.cg_tol * rs;
    int max_iter = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(h.cg_max_iter), dim));
    for (int it = 0; it < max_iter && rs > stop && rs > 0; ++it) {
        matvec(p, ap);
        double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
        if (pap <= 0) break;
        double alpha = rs / pap;
        for (std::size_t j = 0; j < dim; ++j) {
            z[j] += alpha * p[j];
            r[j] -= alpha * ap[j];
        }
        double rs_next = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
        double beta = rs_next / rs;
        rs = rs_next;
        for (std::size_t j = 0; j < dim; ++j) p[j] = r[j] + beta * p[j];
    }

    LinearState state;
    state.weights.assign(z.begin(), z.begin() + width);
    state.bias = z[width];
    return state;
}

}  // namespace detail
}  // namespace cablesift
