#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "cablesift/corpus.hpp"

namespace cablesift {

// Deterministic corpus generator for desk-scale experiments. Each (field,
// level) pair owns a token pool; a document of a level plants tokens from
// its pools with level- and field-dependent probabilities, on top of
// per-field noise vocabularies. Field informativeness is ordered by
// construction: body > subject > concepts > tags > office, with the
// sender/recipient field built to give high recall but poor precision (a
// "secure channel" token shared by most classified and many unclassified
// senders).
struct SynthSpec {
    std::size_t n_docs = 10000;
    std::array<double, kLevelCount> priors{0.25, 0.25, 0.25, 0.25};
    // Probability that a document of the level carries planted tokens, per
    // field trial, before the per-field attenuation.
    std::array<double, kLevelCount> level_signal{0.78, 0.80, 0.84, 0.88};
    std::size_t body_noise_vocab = 800;
    std::size_t subject_noise_vocab = 300;
    std::size_t concepts_noise_vocab = 150;
    std::size_t tags_noise_vocab = 100;
    std::size_t office_noise_vocab = 60;
    std::size_t sender_noise_vocab = 80;
    double sr_secure_rate_classified = 0.95;
    double sr_secure_rate_unclassified = 0.75;
    std::uint64_t seed = 1973;

    void validate() const;
    nlohmann::json to_json() const;
    static SynthSpec from_json(const nlohmann::json& j);
};

std::vector<Cable> generate(const SynthSpec& spec);

}  // namespace cablesift
