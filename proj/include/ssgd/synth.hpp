#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssgd/backends.hpp"
#include "ssgd/core.hpp"
#include "ssgd/metrics.hpp"

namespace ssgd {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Synthetic meeting scenario: band-disjoint modulated-tone speakers with a
/// ground-truth annotation that matches the stems exactly.
struct Scenario {
    int num_speakers = 0;
    double duration = 0.0;
    int sample_rate = 16000;
    std::vector<std::vector<float>> stems;  // one waveform per speaker
    Annotation ground_truth;
    double overlap_ratio = 0.0;  // measured: time(>=2 active) / time(>=1 active)

    std::vector<float> mixture() const {
        std::vector<float> mix(stems.empty() ? 0 : stems[0].size(), 0.0f);
        for (const auto& stem : stems)
            for (std::size_t i = 0; i < stem.size(); ++i) mix[i] += stem[i];
        return mix;
    }

    static std::string speaker_label(int i) { return "spk" + std::to_string(i); }

    /// Disjoint frequency band of speaker i, in Hz.
    static std::pair<double, double> speaker_band(int i) {
        static const std::pair<double, double> bands[] = {
            {300.0, 900.0}, {1100.0, 1700.0}, {2100.0, 2900.0},
            {3500.0, 4500.0}, {5200.0, 6800.0}};
        if (i < 0 || i >= 5) throw ConfigError("speaker index out of range [0,5)");
        return bands[i];
    }

    static std::vector<std::pair<double, double>> speaker_bands(int n) {
        std::vector<std::pair<double, double>> out;
        for (int i = 0; i < n; ++i) out.push_back(speaker_band(i));
        return out;
    }
};

namespace detail {

/// Amplitude-modulated tone inside the speaker's band, with short
/// raised-cosine edge ramps so segment boundaries stay click free.
inline void render_utterance(std::vector<float>& stem, int speaker, double start, double end,
                             int sample_rate) {
    auto [lo, hi] = Scenario::speaker_band(speaker);
    const double carrier = 0.5 * (lo + hi);
    const double mod_hz = 2.0 + 0.7 * speaker;
    const double ramp = 0.005;  // seconds
    const auto i0 = static_cast<std::size_t>(std::llround(start * sample_rate));
    const auto i1 = std::min<std::size_t>(stem.size(),
                                          static_cast<std::size_t>(std::llround(end * sample_rate)));
    for (std::size_t i = i0; i < i1; ++i) {
        double t = static_cast<double>(i) / sample_rate;
        double env = 0.25 * (1.0 + 0.5 * std::sin(2.0 * M_PI * mod_hz * t));
        double edge = 1.0;
        if (t - start < ramp) edge = 0.5 - 0.5 * std::cos(M_PI * (t - start) / ramp);
        if (end - t < ramp) edge = std::min(edge, 0.5 - 0.5 * std::cos(M_PI * (end - t) / ramp));
        stem[i] += static_cast<float>(env * edge * std::sin(2.0 * M_PI * carrier * t));
    }
}

inline double measured_overlap_ratio(const Annotation& annotation) {
    auto speech = std::vector<Segment>{};
    for (const auto& spk : annotation.speakers())
        for (const auto& s : annotation.speaker_timeline(spk)) speech.push_back(s);
    speech = Annotation::merge_segments(speech);
    double any = 0.0;
    for (const auto& s : speech) any += s.duration();
    if (any <= 0.0) return 0.0;
    double over = 0.0;
    for (const auto& s : overlap_regions(annotation)) over += s.duration();
    return over / any;
}

}  // namespace detail

/// Deterministic scenario generation. Utterances alternate talk/silence per
/// speaker; start offsets are tuned until the measured overlap ratio lands
/// within +-0.05 of the target.
inline Scenario generate(int num_speakers, double duration, double overlap_ratio,
                         unsigned seed) {
    if (num_speakers < 1 || num_speakers > 5)
        throw ConfigError("num_speakers must be in [1,5]");
    if (overlap_ratio < 0.0 || overlap_ratio >= 1.0)
        throw ConfigError("overlap_ratio must be in [0,1)");
    if (num_speakers == 1 && overlap_ratio > 0.0)
        throw ConfigError("overlap is infeasible with a single speaker");
    if (duration <= 0.0) throw ConfigError("duration must be positive");

    const int sample_rate = 16000;
    double p_overlap = overlap_ratio > 0.0 ? std::min(1.0, 1.6 * overlap_ratio) : 0.0;

    for (int attempt = 0; attempt < 40; ++attempt) {
        std::mt19937 rng(seed + 1000003u * static_cast<unsigned>(attempt));
        std::uniform_real_distribution<double> utt_len(2.0, 5.0);
        std::uniform_real_distribution<double> gap_len(0.5, 2.0);
        std::uniform_real_distribution<double> overlap_frac(0.3, 0.8);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        std::uniform_int_distribution<int> pick_speaker(0, num_speakers - 1);

        Annotation annotation;
        double cursor = 0.0;       // end of the latest utterance so far
        double prev_start = 0.0, prev_end = 0.0;
        int prev_speaker = -1;
        int turn = 0;
        while (cursor < duration - 2.0) {
            int speaker = turn < num_speakers ? turn : pick_speaker(rng);
            if (speaker == prev_speaker) speaker = (speaker + 1) % num_speakers;
            double len = utt_len(rng);
            double start;
            if (prev_speaker >= 0 && num_speakers > 1 && coin(rng) < p_overlap) {
                double ov = overlap_frac(rng) * std::min(len, prev_end - prev_start);
                start = std::max(prev_start + 0.2, prev_end - ov);
            } else {
                start = cursor + gap_len(rng);
            }
            double end = std::min(start + len, duration);
            if (end - start >= 1.0) annotation.add(Segment(start, end), Scenario::speaker_label(speaker));
            prev_start = start;
            prev_end = end;
            prev_speaker = speaker;
            cursor = std::max(cursor, end);
            ++turn;
        }

        double measured = detail::measured_overlap_ratio(annotation);
        if (std::abs(measured - overlap_ratio) <= 0.04 || (overlap_ratio == 0.0 && measured == 0.0)) {
            Scenario sc;
            sc.num_speakers = num_speakers;
            sc.duration = duration;
            sc.sample_rate = sample_rate;
            sc.overlap_ratio = measured;
            sc.stems.assign(num_speakers,
                            std::vector<float>(static_cast<std::size_t>(duration * sample_rate),
                                               0.0f));
            Annotation merged;
            for (int i = 0; i < num_speakers; ++i)
                for (const auto& seg :
                     annotation.speaker_timeline(Scenario::speaker_label(i))) {
                    detail::render_utterance(sc.stems[i], i, seg.start, seg.end, sample_rate);
                    merged.add(seg, Scenario::speaker_label(i));
                }
            merged.sort();
            sc.ground_truth = merged;
            return sc;
        }
        // steer the overlap knob toward the target
        if (measured > 1e-9)
            p_overlap = std::clamp(p_overlap * overlap_ratio / measured, 0.0, 1.0);
        else
            p_overlap = std::min(1.0, p_overlap + 0.1);
    }
    throw ConfigError("could not reach the requested overlap ratio");
}

/// Fully overlapped mixture: every speaker talks for the whole duration.
inline Scenario generate_full_overlap(int num_speakers, double duration, unsigned seed) {
    if (num_speakers < 1 || num_speakers > 5)
        throw ConfigError("num_speakers must be in [1,5]");
    const int sample_rate = 16000;
    (void)seed;  // layout is fixed; kept for interface symmetry
    Scenario sc;
    sc.num_speakers = num_speakers;
    sc.duration = duration;
    sc.sample_rate = sample_rate;
    sc.overlap_ratio = num_speakers > 1 ? 1.0 : 0.0;
    sc.stems.assign(num_speakers,
                    std::vector<float>(static_cast<std::size_t>(duration * sample_rate), 0.0f));
    for (int i = 0; i < num_speakers; ++i) {
        detail::render_utterance(sc.stems[i], i, 0.0, duration, sample_rate);
        sc.ground_truth.add(Segment(0.0, duration), Scenario::speaker_label(i));
    }
    return sc;
}

struct MismatchRow {
    int n_spks = 0;
    double all_outputs_db = 0.0;
    double pis_eval_db = 0.0;
};

/// Runs a separator with M = max_speakers outputs on fully overlapped
/// mixtures of N = max_speakers .. 2 sources and scores both mismatch
/// metrics.
template <typename SeparatorFactory>
std::vector<MismatchRow> mismatch_suite(SeparatorFactory&& separator_factory,
                                        int max_speakers, unsigned seed,
                                        double duration = 5.0) {
    std::vector<MismatchRow> rows;
    for (int n = max_speakers; n >= 2; --n) {
        Scenario sc = generate_full_overlap(n, duration, seed);
        AudioWindow window;
        window.start = 0.0;
        window.sample_rate = sc.sample_rate;
        window.samples = sc.mixture();

        const auto& separator = separator_factory(sc);
        if (separator->num_outputs() != max_speakers)
            throw ConfigError("mismatch suite needs a separator with M = max_speakers");
        auto estimates_raw = separator->separate(window);
        std::vector<std::vector<float>> estimates;
        for (auto& e : estimates_raw) estimates.push_back(std::move(e.samples));

        MismatchRow row;
        row.n_spks = n;
        row.all_outputs_db = all_outputs_eval(estimates, sc.stems).mean_si_sdr;
        row.pis_eval_db = pis_eval(estimates, sc.stems).mean_si_sdr;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ssgd
