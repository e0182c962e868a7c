#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssgd/core.hpp"
#include "ssgd/detail/assignment.hpp"

namespace ssgd {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UndefinedDer : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DerReport {
    double der = 0.0;
    double false_alarm = 0.0;
    double missed = 0.0;
    double confusion = 0.0;
    double total_speech = 0.0;  // seconds of reference speech in scored regions
    std::map<std::string, std::string> speaker_map;  // hypothesis -> reference
};

namespace detail {

/// Intersection of two merged, sorted region lists.
inline std::vector<Segment> intersect_regions(const std::vector<Segment>& a,
                                              const std::vector<Segment>& b) {
    std::vector<Segment> out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double lo = std::max(a[i].start, b[j].start);
        double hi = std::min(a[i].end, b[j].end);
        if (hi > lo) out.push_back(Segment(lo, hi));
        if (a[i].end < b[j].end)
            ++i;
        else
            ++j;
    }
    return out;
}

/// Subtract merged region list b from merged region list a.
inline std::vector<Segment> subtract_regions(const std::vector<Segment>& a,
                                             const std::vector<Segment>& b) {
    std::vector<Segment> out;
    for (const auto& seg : a) {
        double cursor = seg.start;
        for (const auto& cut : b) {
            if (cut.end <= cursor) continue;
            if (cut.start >= seg.end) break;
            if (cut.start > cursor) out.push_back(Segment(cursor, cut.start));
            cursor = std::max(cursor, cut.end);
            if (cursor >= seg.end) break;
        }
        if (cursor < seg.end) out.push_back(Segment(cursor, seg.end));
    }
    return out;
}

inline double overlap_duration(const std::vector<Segment>& a, const std::vector<Segment>& b) {
    double d = 0.0;
    for (const auto& s : intersect_regions(a, b)) d += s.duration();
    return d;
}

}  // namespace detail

/// Diarization error rate with FA/MS/SC decomposition. Overlapped speech is
/// scored per simultaneous speaker (rich-transcription semantics); the
/// hypothesis-to-reference speaker map is the optimal one-to-one assignment
/// on overlap duration, ties broken toward the lexicographically smaller
/// reference label.
inline DerReport der(const Annotation& reference, const Annotation& hypothesis,
                     const std::optional<std::vector<Segment>>& uem = std::nullopt,
                     double collar = 0.0, bool overlap_only = false) {
    if (collar < 0.0) throw std::invalid_argument("der: collar must be >= 0");

    // scored regions: UEM if given, otherwise the joint extent
    std::vector<Segment> regions;
    if (uem) {
        regions = Annotation::merge_segments(*uem);
    } else {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto* ann : {&reference, &hypothesis})
            for (const auto& e : ann->entries()) {
                lo = std::min(lo, e.segment.start);
                hi = std::max(hi, e.segment.end);
            }
        if (lo < hi) regions.push_back(Segment(lo, hi));
    }

    if (overlap_only)
        regions = detail::intersect_regions(regions,
                                            overlap_regions(crop(reference, regions)));

    if (collar > 0.0) {
        std::vector<Segment> cuts;
        for (const auto& e : reference.entries()) {
            cuts.push_back(Segment(e.segment.start - collar / 2, e.segment.start + collar / 2));
            cuts.push_back(Segment(e.segment.end - collar / 2, e.segment.end + collar / 2));
        }
        regions = detail::subtract_regions(regions, Annotation::merge_segments(cuts));
    }

    const Annotation ref = crop(reference, regions);
    const Annotation hyp = crop(hypothesis, regions);

    DerReport report;
    report.total_speech = ref.total_speech();
    if (report.total_speech <= 0.0)
        throw UndefinedDer("no reference speech in the scored regions; DER is undefined");

    const auto ref_speakers = ref.speakers();
    const auto hyp_speakers = hyp.speakers();
    std::vector<std::vector<Segment>> ref_tl, hyp_tl;
    for (const auto& s : ref_speakers) ref_tl.push_back(ref.speaker_timeline(s));
    for (const auto& s : hyp_speakers) hyp_tl.push_back(hyp.speaker_timeline(s));

    // optimal speaker mapping on overlap duration; the tiny bias resolves
    // exact ties toward the smaller reference index
    std::vector<int> hyp_to_ref(hyp_speakers.size(), -1);
    if (!ref_speakers.empty() && !hyp_speakers.empty()) {
        std::vector<std::vector<double>> cost(hyp_speakers.size(),
                                              std::vector<double>(ref_speakers.size()));
        for (std::size_t h = 0; h < hyp_speakers.size(); ++h)
            for (std::size_t r = 0; r < ref_speakers.size(); ++r) {
                double ov = detail::overlap_duration(hyp_tl[h], ref_tl[r]);
                cost[h][r] = -(ov + 1e-12 * static_cast<double>(ref_speakers.size() - r));
            }
        auto match = detail::min_cost_assignment(cost);
        for (std::size_t h = 0; h < hyp_speakers.size(); ++h) {
            int r = match[h];
            // a mapping with zero overlap is no mapping
            if (r >= 0 && detail::overlap_duration(hyp_tl[h], ref_tl[r]) > 0.0)
                hyp_to_ref[h] = r;
        }
    }
    for (std::size_t h = 0; h < hyp_speakers.size(); ++h)
        if (hyp_to_ref[h] >= 0)
            report.speaker_map[hyp_speakers[h]] = ref_speakers[hyp_to_ref[h]];

    // sweep elementary intervals
    std::vector<double> points;
    for (const auto& tls : {&ref_tl, &hyp_tl})
        for (const auto& tl : *tls)
            for (const auto& s : tl) {
                points.push_back(s.start);
                points.push_back(s.end);
            }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    double ms = 0.0, fa = 0.0, sc = 0.0;
    for (std::size_t p = 0; p + 1 < points.size(); ++p) {
        const double lo = points[p], hi = points[p + 1], dur = hi - lo;
        if (dur <= 0.0) continue;
        auto active = [&](const std::vector<Segment>& tl) {
            for (const auto& s : tl)
                if (s.start <= lo && s.end >= hi) return true;
            return false;
        };
        int n_ref = 0, n_hyp = 0, n_correct = 0;
        std::vector<bool> ref_active(ref_tl.size());
        for (std::size_t r = 0; r < ref_tl.size(); ++r) {
            ref_active[r] = active(ref_tl[r]);
            n_ref += ref_active[r] ? 1 : 0;
        }
        for (std::size_t h = 0; h < hyp_tl.size(); ++h) {
            if (!active(hyp_tl[h])) continue;
            ++n_hyp;
            if (hyp_to_ref[h] >= 0 && ref_active[hyp_to_ref[h]]) ++n_correct;
        }
        ms += std::max(0, n_ref - n_hyp) * dur;
        fa += std::max(0, n_hyp - n_ref) * dur;
        sc += (std::min(n_ref, n_hyp) - n_correct) * dur;
    }

    report.missed = ms / report.total_speech;
    report.false_alarm = fa / report.total_speech;
    report.confusion = sc / report.total_speech;
    report.der = report.missed + report.false_alarm + report.confusion;
    return report;
}

inline constexpr double kSiSdrCapDb = 120.0;

/// Scale-invariant signal-to-distortion ratio in dB, capped to +-120.
inline double si_sdr(const std::vector<float>& estimate, const std::vector<float>& reference,
                     double epsilon = 1e-24) {
    if (estimate.size() != reference.size())
        throw ShapeError("si_sdr: length mismatch (" + std::to_string(estimate.size()) +
                         " vs " + std::to_string(reference.size()) + ")");
    if (epsilon <= 0.0) throw std::invalid_argument("si_sdr: epsilon must be > 0");
    double dot = 0.0, ref_energy = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        dot += double(estimate[i]) * reference[i];
        ref_energy += double(reference[i]) * reference[i];
    }
    const double alpha = dot / (ref_energy + epsilon);
    double target_energy = 0.0, residual_energy = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        double t = alpha * reference[i];
        double r = estimate[i] - t;
        target_energy += t * t;
        residual_energy += r * r;
    }
    double db = 10.0 * std::log10((target_energy + epsilon) / (residual_energy + epsilon));
    return std::clamp(db, -kSiSdrCapDb, kSiSdrCapDb);
}

struct SepScore {
    double mean_si_sdr = 0.0;
    std::vector<int> assignment;       // assignment[j] = estimate index for reference j
    std::vector<double> per_source;    // SI-SDR per reference, in reference order
};

namespace detail {

/// Best ordered selection of `num_refs` distinct estimates, maximizing the
/// mean of scores[estimate][reference]. Exhaustive.
inline SepScore best_selection(const std::vector<std::vector<double>>& scores,
                               std::size_t num_refs) {
    const std::size_t m = scores.size();
    SepScore best;
    best.mean_si_sdr = -std::numeric_limits<double>::infinity();
    std::vector<int> pick(num_refs, -1);
    std::vector<bool> used(m, false);
    auto recurse = [&](auto&& self, std::size_t j, double sum) -> void {
        if (j == num_refs) {
            double mean = sum / static_cast<double>(num_refs);
            if (mean > best.mean_si_sdr) {
                best.mean_si_sdr = mean;
                best.assignment = pick;
            }
            return;
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (used[i]) continue;
            used[i] = true;
            pick[j] = static_cast<int>(i);
            self(self, j + 1, sum + scores[i][j]);
            used[i] = false;
        }
    };
    recurse(recurse, 0, 0.0);
    best.per_source.resize(num_refs);
    for (std::size_t j = 0; j < num_refs; ++j)
        best.per_source[j] = scores[best.assignment[j]][j];
    return best;
}

inline std::vector<std::vector<double>> pairwise_si_sdr(
    const std::vector<std::vector<float>>& estimates,
    const std::vector<std::vector<float>>& references, double epsilon) {
    std::vector<std::vector<double>> scores(estimates.size(),
                                            std::vector<double>(references.size()));
    for (std::size_t i = 0; i < estimates.size(); ++i)
        for (std::size_t j = 0; j < references.size(); ++j)
            scores[i][j] = si_sdr(estimates[i], references[j], epsilon);
    return scores;
}

}  // namespace detail

/// Permutation-invariant SI-SDR: best of all M! estimate-to-reference
/// permutations.
inline SepScore pit_si_sdr(const std::vector<std::vector<float>>& estimates,
                           const std::vector<std::vector<float>>& references,
                           double epsilon = 1e-24) {
    if (estimates.size() != references.size())
        throw ShapeError("pit_si_sdr: count mismatch");
    if (estimates.empty()) throw ShapeError("pit_si_sdr: empty input");
    return detail::best_selection(detail::pairwise_si_sdr(estimates, references, epsilon),
                                  references.size());
}

/// Harsh mismatch metric: references are padded with constant-epsilon
/// signals up to the estimate count, then scored permutation-invariantly.
inline SepScore all_outputs_eval(const std::vector<std::vector<float>>& estimates,
                                 std::vector<std::vector<float>> references,
                                 double epsilon = 1e-8) {
    if (references.size() > estimates.size())
        throw ShapeError("all_outputs_eval: more references than estimates");
    if (estimates.empty()) throw ShapeError("all_outputs_eval: empty input");
    const std::size_t len = estimates[0].size();
    while (references.size() < estimates.size())
        references.emplace_back(len, static_cast<float>(epsilon));
    return pit_si_sdr(estimates, references);
}

/// Forgiving mismatch metric: given the oracle speaker count N, score only
/// the best ordered selection of N of the M estimates.
inline SepScore pis_eval(const std::vector<std::vector<float>>& estimates,
                         const std::vector<std::vector<float>>& references,
                         double epsilon = 1e-24) {
    if (references.size() > estimates.size())
        throw ShapeError("pis_eval: more references than estimates");
    if (references.empty()) throw ShapeError("pis_eval: empty references");
    return detail::best_selection(detail::pairwise_si_sdr(estimates, references, epsilon),
                                  references.size());
}

}  // namespace ssgd
