#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <utility>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssgd/core.hpp"
#include "ssgd/detail/fft.hpp"
#include "ssgd/ingest.hpp"

namespace ssgd {

/// One estimated source waveform, same length as the input window.
struct SourceEstimate {
    std::vector<float> samples;
    double window_start = 0.0;
    int sample_rate = 16000;
};

/// Unit-norm speaker vector plus the speech duration that supports it.
struct Embedding {
    std::vector<double> vector;
    double speech_duration = 0.0;  // seconds of binarized activity

    double norm() const {
        double s = 0.0;
        for (double x : vector) s += x * x;
        return std::sqrt(s);
    }
};

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_distance: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Separation backend: fixed number of output sources per window.
class Separator {
public:
    virtual ~Separator() = default;
    virtual int num_outputs() const = 0;
    virtual std::vector<SourceEstimate> separate(const AudioWindow& window) const = 0;
};

/// VAD backend: one activity row in [0,1] per source, at the given frame rate.
class Vad {
public:
    virtual ~Vad() = default;
    virtual std::vector<double> detect(const SourceEstimate& source,
                                       double frame_rate) const = 0;
};

/// Embedding backend: activity-weighted speaker vector from a source.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual int dimension() const = 0;
    virtual Embedding embed(const SourceEstimate& source,
                            const std::vector<double>& frame_weights,
                            const PipelineConfig& cfg) const = 0;
};

struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoSpeech : std::runtime_error {
    NoSpeech() : std::runtime_error("no speech under the given weights") {}
};

/// L2-normalized weighted mean of per-frame feature vectors.
/// speech_duration counts frames with weight >= tau_active.
inline Embedding weighted_embed(const std::vector<std::vector<double>>& features,
                                const std::vector<double>& weights,
                                double tau_active, double frame_rate = kFrameRate) {
    if (features.size() != weights.size())
        throw std::invalid_argument("weighted_embed: frame count mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || w > 1.0)
            throw std::invalid_argument("weighted_embed: weight outside [0,1]");
        wsum += w;
    }
    if (wsum == 0.0) throw NoSpeech();

    std::size_t dim = features.empty() ? 0 : features[0].size();
    std::vector<double> acc(dim, 0.0);
    for (std::size_t t = 0; t < features.size(); ++t) {
        if (features[t].size() != dim)
            throw std::invalid_argument("weighted_embed: ragged features");
        for (std::size_t d = 0; d < dim; ++d) acc[d] += weights[t] * features[t][d];
    }
    for (double& x : acc) x /= wsum;
    double norm = 0.0;
    for (double x : acc) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw NoSpeech();
    for (double& x : acc) x /= norm;

    Embedding e;
    e.vector = std::move(acc);
    std::size_t active = 0;
    for (double w : weights)
        if (w >= tau_active) ++active;
    e.speech_duration = static_cast<double>(active) / frame_rate;
    return e;
}

/// Frame RMS in dBFS; -inf for digital silence.
inline double frame_rms_db(const float* samples, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += double(samples[i]) * samples[i];
    double rms = std::sqrt(s / static_cast<double>(n ? n : 1));
    if (rms <= 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(rms);
}

/// Energy VAD over 10-ms frames: 1 where frame RMS >= threshold_db,
/// median-smoothed with a (2*hangover+1)-frame window.
inline std::vector<double> energy_vad(const SourceEstimate& source, double threshold_db,
                                      int hangover, double frame_rate = kFrameRate) {
    if (threshold_db >= 0.0)
        throw std::invalid_argument("energy_vad: threshold_db must be < 0 dBFS");
    if (hangover < 0) throw std::invalid_argument("energy_vad: hangover must be >= 0");

    const auto frame_len =
        static_cast<std::size_t>(std::llround(source.sample_rate / frame_rate));
    const std::size_t num_frames = source.samples.size() / frame_len;
    std::vector<double> raw(num_frames, 0.0);
    for (std::size_t t = 0; t < num_frames; ++t)
        raw[t] = frame_rms_db(source.samples.data() + t * frame_len, frame_len) >= threshold_db
                     ? 1.0
                     : 0.0;
    if (hangover == 0) return raw;

    std::vector<double> out(num_frames, 0.0);
    for (std::size_t t = 0; t < num_frames; ++t) {
        std::size_t lo = t >= static_cast<std::size_t>(hangover) ? t - hangover : 0;
        std::size_t hi = std::min(num_frames, t + hangover + 1);
        int ones = 0;
        for (std::size_t k = lo; k < hi; ++k) ones += raw[k] > 0.5 ? 1 : 0;
        out[t] = 2 * ones > static_cast<int>(hi - lo) ? 1.0 : 0.0;
    }
    return out;
}

/// Energy-threshold VAD backend.
class EnergyVad : public Vad {
public:
    explicit EnergyVad(double threshold_db = -40.0, int hangover = 2)
        : threshold_db_(threshold_db), hangover_(hangover) {}

    std::vector<double> detect(const SourceEstimate& source,
                               double frame_rate) const override {
        return energy_vad(source, threshold_db_, hangover_, frame_rate);
    }

private:
    double threshold_db_;
    int hangover_;
};

/// Oracle separator: crops ground-truth stems to the window. Output slots are
/// ordered by a hash of the stem identity, never by energy rank, so consumers
/// must solve the permutation problem themselves.
class OracleSeparator : public Separator {
public:
    OracleSeparator(std::vector<std::vector<float>> stems, int num_outputs,
                    int sample_rate = 16000, double energy_floor_db = -60.0)
        : stems_(std::move(stems)),
          num_outputs_(num_outputs),
          sample_rate_(sample_rate),
          energy_floor_db_(energy_floor_db) {
        if (num_outputs_ < 1)
            throw std::invalid_argument("OracleSeparator: need num_outputs >= 1");
    }

    int num_outputs() const override { return num_outputs_; }

    std::vector<SourceEstimate> separate(const AudioWindow& window) const override {
        const auto begin =
            static_cast<std::size_t>(std::llround(window.start * sample_rate_));
        const std::size_t len = window.samples.size();

        struct Active {
            std::size_t stem;
            double energy;
            std::size_t order;  // stem-identity hash
        };
        std::vector<Active> active;
        for (std::size_t i = 0; i < stems_.size(); ++i) {
            std::vector<float> crop = crop_stem(i, begin, len);
            double db = frame_rms_db(crop.data(), crop.size());
            if (db >= energy_floor_db_)
                active.push_back({i, db, std::hash<std::size_t>{}(i * 2654435761u + 17)});
        }
        if (active.size() > static_cast<std::size_t>(num_outputs_))
            throw CapacityError("oracle separator: " + std::to_string(active.size()) +
                                " energetic stems exceed " + std::to_string(num_outputs_) +
                                " outputs in window starting at " +
                                std::to_string(window.start) + " s");
        if (active.size() > 1) {
            // keep only the M highest-energy stems, then order slots by hash
            std::sort(active.begin(), active.end(),
                      [](const Active& a, const Active& b) { return a.energy > b.energy; });
            std::sort(active.begin(), active.end(),
                      [](const Active& a, const Active& b) { return a.order < b.order; });
        }

        std::vector<SourceEstimate> out(static_cast<std::size_t>(num_outputs_));
        for (auto& est : out) {
            est.samples.assign(len, 0.0f);
            est.window_start = window.start;
            est.sample_rate = sample_rate_;
        }
        for (std::size_t k = 0; k < active.size(); ++k)
            out[k].samples = crop_stem(active[k].stem, begin, len);
        return out;
    }

private:
    std::vector<float> crop_stem(std::size_t stem, std::size_t begin, std::size_t len) const {
        std::vector<float> out(len, 0.0f);
        const auto& s = stems_[stem];
        if (begin < s.size()) {
            std::size_t n = std::min(len, s.size() - begin);
            std::copy(s.begin() + begin, s.begin() + begin + n, out.begin());
        }
        return out;
    }

    std::vector<std::vector<float>> stems_;
    int num_outputs_;
    int sample_rate_;
    double energy_floor_db_;
};

/// Band-split separator: output i is the input restricted to frequency band i
/// by FFT masking over the whole window. Deterministic and linear.
class BandSplitSeparator : public Separator {
public:
    /// bands: disjoint [low, high) intervals in Hz within [0, sample_rate/2].
    explicit BandSplitSeparator(std::vector<std::pair<double, double>> bands,
                                int sample_rate = 16000)
        : bands_(std::move(bands)), sample_rate_(sample_rate) {
        if (bands_.empty()) throw std::invalid_argument("band split: need >= 1 band");
        auto sorted = bands_;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i].first < 0.0 || sorted[i].second > sample_rate_ / 2.0 ||
                sorted[i].first >= sorted[i].second)
                throw std::invalid_argument("band split: band outside [0, nyquist]");
            if (i > 0 && sorted[i].first < sorted[i - 1].second)
                throw std::invalid_argument("band split: overlapping bands");
        }
    }

    int num_outputs() const override { return static_cast<int>(bands_.size()); }

    std::vector<SourceEstimate> separate(const AudioWindow& window) const override {
        const std::size_t n = window.samples.size();
        const std::size_t nfft = detail::next_pow2(std::max<std::size_t>(n, 2));
        std::vector<std::complex<double>> spec(nfft, {0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) spec[i] = window.samples[i];
        detail::fft(spec);

        const double bin_hz = static_cast<double>(sample_rate_) / nfft;
        std::vector<SourceEstimate> out;
        for (const auto& [lo, hi] : bands_) {
            std::vector<std::complex<double>> masked(nfft, {0.0, 0.0});
            for (std::size_t k = 0; k <= nfft / 2; ++k) {
                double f = k * bin_hz;
                if (f >= lo && f < hi) {
                    masked[k] = spec[k];
                    if (k != 0 && k != nfft / 2) masked[nfft - k] = spec[nfft - k];
                }
            }
            detail::fft(masked, /*inverse=*/true);
            SourceEstimate est;
            est.window_start = window.start;
            est.sample_rate = sample_rate_;
            est.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                est.samples[i] = static_cast<float>(masked[i].real());
            out.push_back(std::move(est));
        }
        return out;
    }

private:
    std::vector<std::pair<double, double>> bands_;
    int sample_rate_;
};

/// Reference embedder: per-frame log energies of a mel-spaced filter bank
/// (D = 20), pooled by weighted_embed. Any trained embedder can be plugged
/// in behind the same interface.
class FilterBankEmbedder : public Embedder {
public:
    explicit FilterBankEmbedder(int dimension = 20, int sample_rate = 16000)
        : dim_(dimension), sample_rate_(sample_rate) {
        build_filters();
    }

    int dimension() const override { return dim_; }

    Embedding embed(const SourceEstimate& source, const std::vector<double>& frame_weights,
                    const PipelineConfig& cfg) const override {
        auto feats = features(source, cfg.frame_rate);
        if (feats.size() > frame_weights.size()) feats.resize(frame_weights.size());
        std::vector<double> w(frame_weights.begin(), frame_weights.begin() + feats.size());
        return weighted_embed(feats, w, cfg.tau_active, cfg.frame_rate);
    }

    /// One D-dim log-energy vector per 10-ms frame (25-ms analysis window).
    std::vector<std::vector<double>> features(const SourceEstimate& source,
                                              double frame_rate) const {
        const auto hop =
            static_cast<std::size_t>(std::llround(source.sample_rate / frame_rate));
        const std::size_t win = kAnalysisLen;
        const std::size_t num_frames = source.samples.size() / hop;
        std::vector<std::vector<double>> out(num_frames, std::vector<double>(dim_, 0.0));
        std::vector<std::complex<double>> buf(kFftSize);
        for (std::size_t t = 0; t < num_frames; ++t) {
            std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
            std::size_t begin = t * hop;
            for (std::size_t i = 0; i < win && begin + i < source.samples.size(); ++i) {
                double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (win - 1));
                buf[i] = source.samples[begin + i] * hann;
            }
            detail::fft(buf);
            for (int d = 0; d < dim_; ++d) {
                double e = 0.0;
                for (std::size_t k = 0; k < kFftSize / 2 + 1; ++k)
                    e += filters_[d][k] * std::norm(buf[k]);
                out[t][d] = std::log(e + 1e-12);
            }
            // remove the per-frame mean so the silent-band floor, common to
            // all speakers, does not dominate the cosine geometry
            double mean = 0.0;
            for (double x : out[t]) mean += x;
            mean /= dim_;
            for (double& x : out[t]) x -= mean;
        }
        return out;
    }

private:
    static constexpr std::size_t kFftSize = 512;
    static constexpr std::size_t kAnalysisLen = 400;  // 25 ms at 16 kHz

    static double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
    static double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

    void build_filters() {
        const double f_lo = 50.0, f_hi = sample_rate_ / 2.0;
        const double m_lo = hz_to_mel(f_lo), m_hi = hz_to_mel(f_hi);
        std::vector<double> centers(dim_ + 2);
        for (int i = 0; i < dim_ + 2; ++i)
            centers[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (dim_ + 1));
        const double bin_hz = static_cast<double>(sample_rate_) / kFftSize;
        filters_.assign(dim_, std::vector<double>(kFftSize / 2 + 1, 0.0));
        for (int d = 0; d < dim_; ++d) {
            double lo = centers[d], mid = centers[d + 1], hi = centers[d + 2];
            for (std::size_t k = 0; k < kFftSize / 2 + 1; ++k) {
                double f = k * bin_hz;
                if (f > lo && f < mid)
                    filters_[d][k] = (f - lo) / (mid - lo);
                else if (f >= mid && f < hi)
                    filters_[d][k] = (hi - f) / (hi - mid);
            }
        }
    }

    int dim_;
    int sample_rate_;
    std::vector<std::vector<double>> filters_;
};

}  // namespace ssgd
