#pragma once

// Internal fit entry points shared between the models translation units.

#include <span>

#include "cablesift/models.hpp"

namespace cablesift::detail {

LinearState fit_logistic_sgd(const ClassifierSpec& spec, std::span<const SparseVector> X,
                             std::span<const int> y, std::uint32_t width);
LinearState fit_ridge(const ClassifierSpec& spec, std::span<const SparseVector> X,
                      std::span<const int> y, std::uint32_t width);
NaiveBayesState fit_multinomial_nb(const ClassifierSpec& spec, std::span<const SparseVector> X,
                                   std::span<const int> y, std::uint32_t width);
ForestState fit_bagging(const ClassifierSpec& spec, std::span<const SparseVector> X,
                        std::span<const int> y, std::uint32_t width, unsigned threads);
ForestState fit_extra_trees(const ClassifierSpec& spec, std::span<const SparseVector> X,
                            std::span<const int> y, std::uint32_t width, unsigned threads);
BoostState fit_adaboost(const ClassifierSpec& spec, std::span<const SparseVector> X,
                        std::span<const int> y, std::uint32_t width, unsigned threads);

}  // namespace cablesift::detail
