#include <cmath>

#include "cablesift/common.hpp"
#include "model_fits.hpp"

namespace cablesift::detail {

// Class log-priors from label counts plus Laplace-smoothed per-feature
// log-likelihoods from summed count vectors.
NaiveBayesState fit_multinomial_nb(const ClassifierSpec& spec, std::span<const SparseVector> X,
                                   std::span<const int> y, std::uint32_t width) {
    const double alpha = spec.hyper.nb_alpha;
    NaiveBayesState state;
    state.alpha = alpha;

    std::array<double, 2> class_count{};
    std::array<std::vector<double>, 2> feature_sum;
    feature_sum[0].assign(width, 0.0);
    feature_sum[1].assign(width, 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        int c = y[i] == 1 ? 1 : 0;
        class_count[c] += 1.0;
        for (const auto& [col, v] : X[i].entries) feature_sum[c][col] += v;
    }

    const double n = static_cast<double>(X.size());
    for (int c = 0; c < 2; ++c) {
        state.log_prior[c] = std::log(class_count[c]) - std::log(n);
        double total = alpha * static_cast<double>(width);
        for (double v : feature_sum[c]) total += v;
        state.log_like[c].resize(width);
        for (std::uint32_t j = 0; j < width; ++j) {
            state.log_like[c][j] = std::log(feature_sum[c][j] + alpha) - std::log(total);
        }
    }
    return state;
}

}  // namespace cablesift::detail
