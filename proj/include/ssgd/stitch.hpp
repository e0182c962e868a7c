#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssgd/backends.hpp"
#include "ssgd/core.hpp"
#include "ssgd/detail/assignment.hpp"
#include "ssgd/ingest.hpp"

namespace ssgd {

/// Running mean embedding of one discovered global speaker.
struct Centroid {
    std::string id;
    std::vector<double> sum_vector;
    int count = 0;
    // founded from a short segment; cleared by the first qualifying update
    bool provisional = false;

    std::vector<double> normalized_mean() const {
        std::vector<double> m(sum_vector.size());
        double norm = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] = sum_vector[i] / count;
            norm += m[i] * m[i];
        }
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& x : m) x /= norm;
        return m;
    }
};

/// Centroid set; ids are unique, assigned in first-seen order.
struct ClusterState {
    std::vector<Centroid> centroids;

    std::string next_id() const {
        return "speaker_" + std::to_string(centroids.size());
    }
};

/// Local prediction for one window: M activity rows plus embeddings for the
/// channels active inside the emission region.
struct LocalPrediction {
    ActivityMatrix activities;  // M rows over the window span
    std::vector<std::pair<int, Embedding>> embeddings;  // (channel, embedding)
};

/// Separate, VAD each source, and extract embeddings for channels whose
/// binarized activity intersects [emission_start, window end). Embeddings use
/// the full window with the channel's activity row as frame weights.
inline LocalPrediction local_predict(const AudioWindow& window, const Separator& separator,
                                     const Vad& vad, const Embedder& embedder,
                                     const PipelineConfig& cfg, double emission_start) {
    auto sources = separator.separate(window);
    LocalPrediction out;
    out.activities.frame_rate = cfg.frame_rate;
    out.activities.start = window.start;

    const auto emit_from = static_cast<std::size_t>(std::max(
        0.0, std::round((emission_start - window.start) * cfg.frame_rate)));
    for (std::size_t ch = 0; ch < sources.size(); ++ch) {
        std::vector<double> row = vad.detect(sources[ch], cfg.frame_rate);
        bool eligible = false;
        for (std::size_t t = emit_from; t < row.size(); ++t)
            if (row[t] >= cfg.tau_active) {
                eligible = true;
                break;
            }
        if (eligible)
            out.embeddings.emplace_back(static_cast<int>(ch),
                                        embedder.embed(sources[ch], row, cfg));
        out.activities.values.push_back(std::move(row));
    }
    return out;
}

inline LocalPrediction local_predict(const AudioWindow& window, const Separator& separator,
                                     const Vad& vad, const Embedder& embedder,
                                     const PipelineConfig& cfg) {
    return local_predict(window, separator, vad, embedder, cfg,
                         window.end() - cfg.step);
}

/// Match local embeddings to centroids by minimum-cost one-to-one assignment
/// on cosine distance. Costs above delta_new (or unmatched channels) found
/// new centroids. Matched centroids are updated only when the embedding's
/// speech duration reaches rho_update.
inline std::map<int, std::string> assign(
    const std::vector<std::pair<int, Embedding>>& local, ClusterState& state,
    double delta_new, double rho_update) {
    std::map<int, std::string> mapping;
    if (local.empty()) return mapping;

    std::vector<int> match(local.size(), -1);
    std::vector<std::vector<double>> cost(local.size());
    if (!state.centroids.empty()) {
        std::vector<std::vector<double>> means;
        for (const auto& c : state.centroids) means.push_back(c.normalized_mean());
        for (std::size_t i = 0; i < local.size(); ++i) {
            cost[i].resize(means.size());
            for (std::size_t j = 0; j < means.size(); ++j)
                cost[i][j] = cosine_distance(local[i].second.vector, means[j]);
        }
        match = detail::min_cost_assignment(cost);
    }

    for (std::size_t i = 0; i < local.size(); ++i) {
        const auto& [channel, emb] = local[i];
        bool qualifies = emb.speech_duration >= rho_update;
        if (match[i] >= 0 && cost[i][match[i]] <= delta_new) {
            Centroid& c = state.centroids[match[i]];
            if (qualifies) {
                for (std::size_t d = 0; d < c.sum_vector.size(); ++d)
                    c.sum_vector[d] += emb.vector[d];
                c.count += 1;
                c.provisional = false;
            }
            mapping[channel] = c.id;
        } else {
            Centroid c;
            c.id = state.next_id();
            c.sum_vector = emb.vector;
            c.count = 1;
            c.provisional = !qualifies;
            mapping[channel] = c.id;
            state.centroids.push_back(std::move(c));
        }
    }
    return mapping;
}

struct OrderingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Latency-delayed frame aggregation. Windows contribute their mapped
/// activity rows over their full span; a frame is finalized once the stream
/// position reaches frame_end + (latency - step).
class LatencyBuffer {
public:
    explicit LatencyBuffer(const PipelineConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        step_frames_ = std::lround(cfg.step * cfg.frame_rate);
        window_frames_ = std::lround(cfg.window * cfg.frame_rate);
        delay_frames_ = std::lround((cfg.latency - cfg.step) * cfg.frame_rate);
    }

    /// Apply one window's mapped activities, then finalize due frames.
    void push(const ActivityMatrix& activities,
              const std::map<int, std::string>& channel_to_global) {
        const long start_frame = std::lround(activities.start * cfg_.frame_rate);
        if (start_frame < last_window_start_)
            throw OrderingError("windows must arrive in start-time order");
        last_window_start_ = start_frame;

        const long end_frame = start_frame + static_cast<long>(activities.num_frames());
        for (long f = std::max(start_frame, next_finalize_); f < end_frame; ++f) {
            FrameAcc& acc = frame_at(f);
            acc.window_count += 1;
            for (const auto& [channel, global] : channel_to_global) {
                auto& entry = acc.speakers[global];
                entry.sum += activities.values[channel][f - start_frame];
                entry.count += 1;
            }
        }
        finalize_until(end_frame - delay_frames_);
    }

    /// Finalize everything still buffered (end of stream).
    void flush() { finalize_until(base_ + static_cast<long>(frames_.size())); }

    const Annotation& output() const { return annotation_; }

    Annotation take_output() {
        close_open_runs(next_finalize_ + 1);
        return std::move(annotation_);
    }

    /// Per-finalized-frame contributing-window counts, in frame order.
    const std::vector<int>& window_counts() const { return window_counts_; }

private:
    struct SpeakerAcc {
        double sum = 0.0;
        int count = 0;
    };
    struct FrameAcc {
        std::map<std::string, SpeakerAcc> speakers;
        int window_count = 0;
    };

    FrameAcc& frame_at(long f) {
        if (frames_.empty()) base_ = f;
        if (f < base_) throw OrderingError("frame before buffer base");
        while (base_ + static_cast<long>(frames_.size()) <= f) frames_.emplace_back();
        return frames_[f - base_];
    }

    void finalize_until(long frame_end_limit) {
        while (!frames_.empty() && next_finalize_ < frame_end_limit &&
               next_finalize_ >= base_) {
            const FrameAcc& acc = frames_.front();
            window_counts_.push_back(acc.window_count);
            for (const auto& [speaker, sa] : acc.speakers) {
                double activity = sa.count > 0 ? sa.sum / sa.count : 0.0;
                if (activity >= cfg_.tau_active) extend_run(speaker, next_finalize_);
            }
            close_open_runs(next_finalize_ + 1);
            frames_.pop_front();
            base_ += 1;
            next_finalize_ += 1;
        }
        if (frames_.empty()) next_finalize_ = std::max(next_finalize_, frame_end_limit);
    }

    void extend_run(const std::string& speaker, long frame) {
        auto it = open_runs_.find(speaker);
        if (it == open_runs_.end())
            open_runs_[speaker] = {frame, frame + 1};
        else
            it->second.second = frame + 1;
    }

    /// Close runs that did not reach the frame before `upto`.
    void close_open_runs(long upto) {
        for (auto it = open_runs_.begin(); it != open_runs_.end();) {
            if (it->second.second < upto) {
                annotation_.add(Segment(it->second.first / cfg_.frame_rate,
                                        it->second.second / cfg_.frame_rate),
                                it->first);
                it = open_runs_.erase(it);
            } else {
                ++it;
            }
        }
    }

    PipelineConfig cfg_;
    long step_frames_ = 0, window_frames_ = 0, delay_frames_ = 0;
    long base_ = 0;
    long next_finalize_ = 0;
    long last_window_start_ = -1;
    std::deque<FrameAcc> frames_;
    std::map<std::string, std::pair<long, long>> open_runs_;  // [start, end) frames
    std::vector<int> window_counts_;
    Annotation annotation_;
};

/// Full streaming pipeline state machine. Single writer; windows must be
/// pushed in start-time order.
class StitchPipeline {
public:
    StitchPipeline(const Separator& separator, const Vad& vad, const Embedder& embedder,
                   PipelineConfig cfg)
        : separator_(separator), vad_(vad), embedder_(embedder), cfg_(cfg), buffer_(cfg) {
        cfg_.validate();
    }

    void push_window(const AudioWindow& window) {
        // the first window emits its full span; later windows only their
        // final step seconds
        double emission_start =
            first_window_ ? window.start : window.end() - cfg_.step;
        first_window_ = false;
        auto local = local_predict(window, separator_, vad_, embedder_, cfg_, emission_start);
        auto mapping = assign(local.embeddings, state_, cfg_.delta_new, cfg_.rho_update);
        buffer_.push(local.activities, mapping);
    }

    Annotation finish() {
        buffer_.flush();
        Annotation out = buffer_.take_output();
        out.sort();
        return out;
    }

    const ClusterState& cluster_state() const { return state_; }
    const std::vector<int>& window_counts() const { return buffer_.window_counts(); }

private:
    const Separator& separator_;
    const Vad& vad_;
    const Embedder& embedder_;
    PipelineConfig cfg_;
    ClusterState state_;
    LatencyBuffer buffer_;
    bool first_window_ = true;
};

/// Run the whole pipeline over a stream and return the global diarization.
inline Annotation run_pipeline(const AudioStream& stream, const Separator& separator,
                               const Vad& vad, const Embedder& embedder,
                               const PipelineConfig& cfg) {
    StitchPipeline pipeline(separator, vad, embedder, cfg);
    for (const auto& window : slide(stream, cfg.window, cfg.step))
        pipeline.push_window(window);
    return pipeline.finish();
}

}  // namespace ssgd
