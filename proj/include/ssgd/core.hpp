#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssgd {

// Frames are 10 ms everywhere: a 5-s window is exactly 500 frames and a
// 500-ms emission region exactly 50 frames.
inline constexpr double kFrameRate = 100.0;

/// Half-open time interval [start, end) in seconds.
struct Segment {
    double start = 0.0;
    double end = 0.0;

    Segment() = default;
    Segment(double s, double e) : start(s), end(e) {
        if (!(end > start))
            throw std::invalid_argument("Segment: end must be > start");
    }

    double duration() const { return end - start; }

    bool intersects(const Segment& o) const {
        return start < o.end && o.start < end;
    }

    bool operator==(const Segment& o) const {
        return start == o.start && end == o.end;
    }
};

/// Speaker-labeled time segments. Distinct speakers may overlap in time.
class Annotation {
public:
    struct Entry {
        Segment segment;
        std::string speaker;
        bool operator==(const Entry& o) const {
            return segment == o.segment && speaker == o.speaker;
        }
    };

    Annotation() = default;

    void add(Segment seg, std::string speaker) {
        entries_.push_back({seg, std::move(speaker)});
    }

    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    std::vector<std::string> speakers() const {
        std::vector<std::string> out;
        for (const auto& e : entries_)
            if (std::find(out.begin(), out.end(), e.speaker) == out.end())
                out.push_back(e.speaker);
        std::sort(out.begin(), out.end());
        return out;
    }

    double speaker_duration(const std::string& speaker) const {
        double d = 0.0;
        for (const auto& s : speaker_timeline(speaker)) d += s.duration();
        return d;
    }

    /// Merged, sorted, disjoint segments of one speaker.
    std::vector<Segment> speaker_timeline(const std::string& speaker) const {
        std::vector<Segment> segs;
        for (const auto& e : entries_)
            if (e.speaker == speaker) segs.push_back(e.segment);
        return merge_segments(segs);
    }

    /// Total speech time, counting each simultaneous speaker separately.
    double total_speech() const {
        double d = 0.0;
        for (const auto& spk : speakers()) d += speaker_duration(spk);
        return d;
    }

    /// Sort entries by (start, speaker) for stable output.
    void sort() {
        std::sort(entries_.begin(), entries_.end(),
                  [](const Entry& a, const Entry& b) {
                      if (a.segment.start != b.segment.start)
                          return a.segment.start < b.segment.start;
                      if (a.speaker != b.speaker) return a.speaker < b.speaker;
                      return a.segment.end < b.segment.end;
                  });
    }

    static std::vector<Segment> merge_segments(std::vector<Segment> segs) {
        if (segs.empty()) return segs;
        std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
            return a.start < b.start || (a.start == b.start && a.end < b.end);
        });
        std::vector<Segment> out;
        out.push_back(segs[0]);
        for (std::size_t i = 1; i < segs.size(); ++i) {
            if (segs[i].start <= out.back().end)
                out.back().end = std::max(out.back().end, segs[i].end);
            else
                out.push_back(segs[i]);
        }
        return out;
    }

private:
    std::vector<Entry> entries_;
};

/// Per-speaker, per-frame speech activities in [0,1].
struct ActivityMatrix {
    double frame_rate = kFrameRate;
    double start = 0.0;  // absolute time of frame 0
    std::vector<std::vector<double>> values;  // [num_speakers][F]
    std::vector<std::string> labels;          // optional row labels

    std::string label(std::size_t row) const {
        return row < labels.size() ? labels[row] : "speaker_" + std::to_string(row);
    }

    std::size_t num_speakers() const { return values.size(); }
    std::size_t num_frames() const { return values.empty() ? 0 : values[0].size(); }

    void validate() const {
        for (const auto& row : values) {
            if (row.size() != num_frames())
                throw std::invalid_argument("ActivityMatrix: ragged rows");
            for (double v : row)
                if (v < 0.0 || v > 1.0)
                    throw std::invalid_argument("ActivityMatrix: value outside [0,1]");
        }
    }
};

/// Fixed-length mono sample buffer with absolute start time.
struct AudioWindow {
    double start = 0.0;
    std::vector<float> samples;
    int sample_rate = 16000;
    double padded_tail = 0.0;  // seconds of zero padding at the end

    double duration() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
    double end() const { return start + duration(); }
    Segment extent() const { return Segment(start, end()); }
};

struct PipelineConfig {
    double window = 5.0;       // seconds
    double step = 0.5;         // seconds
    double latency = 0.5;      // seconds, in [step, window]
    double tau_active = 0.5;   // binarization threshold
    double delta_new = 0.3;    // cosine distance for founding a new speaker
    double rho_update = 0.1;   // min speech seconds for a centroid update
    double frame_rate = kFrameRate;

    void validate() const {
        if (step <= 0.0 || step > window)
            throw std::invalid_argument("config: need 0 < step <= window");
        if (latency < step || latency > window)
            throw std::invalid_argument("config: latency must be in [step, window]");
        if (tau_active <= 0.0 || tau_active >= 1.0)
            throw std::invalid_argument("config: tau_active must be in (0,1)");
        if (delta_new < 0.0 || delta_new > 2.0)
            throw std::invalid_argument("config: delta_new must be in [0,2]");
        if (rho_update < 0.0)
            throw std::invalid_argument("config: rho_update must be >= 0");
    }
};

/// Per-speaker runs of frames with activity >= tau become segments.
/// Binarization is closed (>= tau) so tau=1.0 still admits saturated activity.
inline Annotation binarize(const ActivityMatrix& activities, double tau_active) {
    if (tau_active <= 0.0 || tau_active > 1.0)
        throw std::invalid_argument("binarize: tau_active must be in (0,1]");
    Annotation out;
    const double dt = 1.0 / activities.frame_rate;
    for (std::size_t spk = 0; spk < activities.num_speakers(); ++spk) {
        const auto& row = activities.values[spk];
        std::size_t i = 0;
        while (i < row.size()) {
            if (row[i] >= tau_active) {
                std::size_t j = i;
                while (j < row.size() && row[j] >= tau_active) ++j;
                out.add(Segment(activities.start + i * dt, activities.start + j * dt),
                        activities.label(spk));
                i = j;
            } else {
                ++i;
            }
        }
    }
    return out;
}

/// Intersect every segment with the extent; drop empty intersections.
inline Annotation crop(const Annotation& annotation, const Segment& extent) {
    Annotation out;
    for (const auto& e : annotation.entries()) {
        double s = std::max(e.segment.start, extent.start);
        double t = std::min(e.segment.end, extent.end);
        if (t > s) out.add(Segment(s, t), e.speaker);
    }
    return out;
}

/// Restrict an annotation to a list of scoring regions.
inline Annotation crop(const Annotation& annotation, const std::vector<Segment>& regions) {
    Annotation out;
    for (const auto& r : regions) {
        const Annotation piece = crop(annotation, r);
        for (const auto& e : piece.entries()) out.add(e.segment, e.speaker);
    }
    return out;
}

/// Maximal regions where at least two distinct speakers are simultaneously
/// active. Sweep line over per-speaker merged timelines.
inline std::vector<Segment> overlap_regions(const Annotation& annotation) {
    // (time, +1/-1) events over merged per-speaker timelines so a speaker
    // counts once no matter how many raw entries cover an instant
    std::vector<std::pair<double, int>> events;
    for (const auto& spk : annotation.speakers())
        for (const auto& seg : annotation.speaker_timeline(spk)) {
            events.push_back({seg.start, +1});
            events.push_back({seg.end, -1});
        }
    std::sort(events.begin(), events.end());

    std::vector<Segment> out;
    int depth = 0;
    double region_start = 0.0;
    bool in_region = false;
    for (std::size_t i = 0; i < events.size();) {
        double t = events[i].first;
        while (i < events.size() && events[i].first == t) {
            depth += events[i].second;
            ++i;
        }
        if (!in_region && depth >= 2) {
            in_region = true;
            region_start = t;
        } else if (in_region && depth < 2) {
            in_region = false;
            if (t > region_start) out.push_back(Segment(region_start, t));
        }
    }
    // merge adjacent regions that touch
    return Annotation::merge_segments(std::move(out));
}

}  // namespace ssgd
