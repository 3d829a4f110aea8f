#include "cablesift/synthgen.hpp"

#include <cmath>
#include <cstdio>

#include "cablesift/common.hpp"

namespace cablesift {

namespace {

// Attenuation of the planted-token probability per field; the ordering here
// is what makes body the most informative field and office the least.
constexpr double kBodyFactor = 1.0;
constexpr double kSubjectFactor = 0.80;
constexpr double kConceptsFactor = 0.62;
constexpr double kTagsFactor = 0.50;
constexpr double kOfficeFactor = 0.36;
constexpr int kPoolSize = 6;

std::string pool_token(const char* prefix, std::size_t level, std::uint64_t idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%zuX%llu", prefix, level,
                  static_cast<unsigned long long>(idx));
    return buf;
}

std::string noise_token(const char* prefix, std::uint64_t idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%llu", prefix, static_cast<unsigned long long>(idx));
    return buf;
}

std::size_t draw_level(Rng& rng, const std::array<double, kLevelCount>& priors) {
    double u = rng.real();
    double acc = 0;
    for (std::size_t i = 0; i < kLevelCount; ++i) {
        acc += priors[i];
        if (u < acc) return i;
    }
    return kLevelCount - 1;
}

void append_tokens(std::string& text, const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) {
        if (!text.empty()) text += ' ';
        text += t;
    }
}

}  // namespace

void SynthSpec::validate() const {
    double total = 0;
    for (double p : priors) {
        if (p < 0) throw UsageError("priors must be nonnegative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw UsageError("priors must sum to 1");
    for (double s : level_signal) {
        if (s < 0 || s > 1) throw UsageError("level signal strengths must lie in [0, 1]");
    }
    if (sr_secure_rate_classified < 0 || sr_secure_rate_classified > 1 ||
        sr_secure_rate_unclassified < 0 || sr_secure_rate_unclassified > 1)
        throw UsageError("sender/recipient rates must lie in [0, 1]");
    if (body_noise_vocab == 0 || subject_noise_vocab == 0 || concepts_noise_vocab == 0 ||
        tags_noise_vocab == 0 || office_noise_vocab == 0 || sender_noise_vocab == 0)
        throw UsageError("noise vocabulary sizes must be positive");
}

std::vector<Cable> generate(const SynthSpec& spec) {
    spec.validate();
    std::vector<Cable> out;
    out.reserve(spec.n_docs);

    const std::chrono::sys_days first{std::chrono::year{1973} / 1 / 1};
    const std::chrono::sys_days last{std::chrono::year{1978} / 12 / 31};
    const auto day_span = static_cast<std::uint64_t>((last - first).count() + 1);

    for (std::size_t i = 0; i < spec.n_docs; ++i) {
        // Per-document stream: generation order never depends on the batch.
        Rng rng(mix_seed(spec.seed, i));
        std::size_t level = draw_level(rng, spec.priors);
        double signal = spec.level_signal[level];

        Cable c;
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "SYN%07zu", i);
        c.doc_id = idbuf;
        c.orig_class = static_cast<Level>(level);
        c.kind = CableKind::Full;
        c.date = std::chrono::year_month_day{first + std::chrono::days{
                                                         static_cast<int>(rng.below(day_span))}};

        std::vector<std::string> body_tokens;
        std::size_t body_len = 18 + rng.below(16);
        for (std::size_t t = 0; t < body_len; ++t) {
            body_tokens.push_back(noise_token("BN", rng.below(spec.body_noise_vocab)));
        }
        if (rng.real() < signal * kBodyFactor) {
            std::size_t k = 2 + rng.below(3);
            for (std::size_t t = 0; t < k; ++t) {
                body_tokens.push_back(pool_token("BSIG", level, rng.below(kPoolSize)));
            }
        }
        append_tokens(c.body, body_tokens);

        std::vector<std::string> subject_tokens;
        std::size_t subject_len = 4 + rng.below(4);
        for (std::size_t t = 0; t < subject_len; ++t) {
            subject_tokens.push_back(noise_token("SN", rng.below(spec.subject_noise_vocab)));
        }
        if (rng.real() < signal * kSubjectFactor) {
            std::size_t k = 1 + rng.below(2);
            for (std::size_t t = 0; t < k; ++t) {
                subject_tokens.push_back(pool_token("SSIG", level, rng.below(kPoolSize)));
            }
        }
        append_tokens(c.subject, subject_tokens);

        std::size_t concept_count = 2 + rng.below(2);
        for (std::size_t t = 0; t < concept_count; ++t) {
            c.concepts.push_back(noise_token("CN", rng.below(spec.concepts_noise_vocab)));
        }
        if (rng.real() < signal * kConceptsFactor) {
            c.concepts.push_back(pool_token("CSIG", level, rng.below(kPoolSize)));
        }

        std::size_t tag_count = 2 + rng.below(3);
        for (std::size_t t = 0; t < tag_count; ++t) {
            c.tags.push_back(noise_token("TG", rng.below(spec.tags_noise_vocab)));
        }
        if (rng.real() < signal * kTagsFactor) {
            c.tags.push_back(pool_token("GSIG", level, rng.below(kPoolSize)));
        }

        c.office = noise_token("OF", rng.below(spec.office_noise_vocab));
        if (rng.real() < signal * kOfficeFactor) {
            c.office += ' ';
            c.office += pool_token("OSIG", level, rng.below(kPoolSize));
        }

        // Classified traffic flows through a small set of "secure" posts,
        // but plenty of routine traffic does too.
        bool classified = level >= static_cast<std::size_t>(Level::LimitedOfficialUse);
        double secure_rate = classified ? spec.sr_secure_rate_classified
                                        : spec.sr_secure_rate_unclassified;
        if (rng.real() < secure_rate) {
            c.from_field = noise_token("SECPOST", rng.below(std::uint64_t{kPoolSize}));
        } else {
            c.from_field = noise_token("POST", rng.below(spec.sender_noise_vocab));
        }
        c.to_field = noise_token("DESK", rng.below(spec.sender_noise_vocab));

        c.body_status = classify_body_status(c.body);
        out.push_back(std::move(c));
    }
    return out;
}

nlohmann::json SynthSpec::to_json() const {
    return nlohmann::json{
        {"n_docs", n_docs},
        {"priors", priors},
        {"level_signal", level_signal},
        {"body_noise_vocab", body_noise_vocab},
        {"subject_noise_vocab", subject_noise_vocab},
        {"concepts_noise_vocab", concepts_noise_vocab},
        {"tags_noise_vocab", tags_noise_vocab},
        {"office_noise_vocab", office_noise_vocab},
        {"sender_noise_vocab", sender_noise_vocab},
        {"sr_secure_rate_classified", sr_secure_rate_classified},
        {"sr_secure_rate_unclassified", sr_secure_rate_unclassified},
        {"seed", seed},
    };
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
    SynthSpec s;
    s.n_docs = j.value("n_docs", s.n_docs);
    if (j.contains("priors")) s.priors = j.at("priors").get<std::array<double, kLevelCount>>();
    if (j.contains("level_signal"))
        s.level_signal = j.at("level_signal").get<std::array<double, kLevelCount>>();
    s.body_noise_vocab = j.value("body_noise_vocab", s.body_noise_vocab);
    s.subject_noise_vocab = j.value("subject_noise_vocab", s.subject_noise_vocab);
    s.concepts_noise_vocab = j.value("concepts_noise_vocab", s.concepts_noise_vocab);
    s.tags_noise_vocab = j.value("tags_noise_vocab", s.tags_noise_vocab);
    s.office_noise_vocab = j.value("office_noise_vocab", s.office_noise_vocab);
    s.sender_noise_vocab = j.value("sender_noise_vocab", s.sender_noise_vocab);
    s.sr_secure_rate_classified = j.value("sr_secure_rate_classified", s.sr_secure_rate_classified);
    s.sr_secure_rate_unclassified =
        j.value("sr_secure_rate_unclassified", s.sr_secure_rate_unclassified);
    s.seed = j.value("seed", s.seed);
    return s;
}

}  // namespace cablesift
