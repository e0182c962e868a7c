// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Kept free of the unit-test framework so each criterion reads as a
// straight check against its stated tolerance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ssgd/backends.hpp"
#include "ssgd/ingest.hpp"
#include "ssgd/metrics.hpp"
#include "ssgd/rttm.hpp"
#include "ssgd/stitch.hpp"
#include "ssgd/synth.hpp"

using namespace ssgd;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<float> random_signal(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<float> u(-0.5f, 0.5f);
    std::vector<float> out(n);
    for (auto& s : out) s = u(rng);
    return out;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---------------------------------------------------------------------------

void der_golden() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;

    {
        Annotation ref;
        ref.add(Segment(0, 10), "A");
        auto r = der(ref, ref);
        ok &= close(r.der, 0.0, 1e-9) && r.speaker_map.at("A") == "A";
    }
    {
        Annotation ref;
        ref.add(Segment(0, 10), "A");
        auto r = der(ref, Annotation{});
        ok &= close(r.missed, 1.0, 1e-9) && close(r.false_alarm, 0.0, 1e-9) &&
              close(r.confusion, 0.0, 1e-9) && close(r.der, 1.0, 1e-9);
    }
    {
        Annotation ref, hyp;
        ref.add(Segment(0, 10), "A");
        hyp.add(Segment(0, 9), "s1");
        auto r = der(ref, hyp);
        ok &= close(r.missed, 0.1, 1e-9) && close(r.false_alarm, 0.0, 1e-9) &&
              close(r.confusion, 0.0, 1e-9) && close(r.der, 0.1, 1e-9);
    }
    {
        Annotation ref, hyp;
        ref.add(Segment(0, 5), "A");
        ref.add(Segment(5, 10), "B");
        hyp.add(Segment(0, 10), "s1");
        auto r = der(ref, hyp);
        ok &= r.speaker_map.at("s1") == "A" && close(r.missed, 0.0, 1e-9) &&
              close(r.false_alarm, 0.0, 1e-9) && close(r.confusion, 0.5, 1e-9) &&
              close(r.der, 0.5, 1e-9);
    }

    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 60.0);
    std::uniform_int_distribution<int> nseg(1, 10);
    auto random_annotation = [&](const std::string& prefix) {
        Annotation a;
        int n = nseg(rng);
        for (int i = 0; i < n; ++i) {
            double s = u(rng), d = 0.2 + u(rng) / 10;
            a.add(Segment(s, s + d), prefix + std::to_string(i % 4));
        }
        return a;
    };
    for (int rep = 0; rep < 200 && ok; ++rep) {
        auto ref = random_annotation("r");
        auto hyp = random_annotation("h");
        auto r = der(ref, hyp);
        ok &= close(r.der, r.missed + r.false_alarm + r.confusion, 1e-9);
        Annotation relabeled;
        for (const auto& e : hyp.entries()) relabeled.add(e.segment, "zz_" + e.speaker);
        auto r2 = der(ref, relabeled);
        ok &= close(r2.der, r.der, 1e-9) && close(r2.missed, r.missed, 1e-9) &&
              close(r2.false_alarm, r.false_alarm, 1e-9) &&
              close(r2.confusion, r.confusion, 1e-9);
    }

    double elapsed = seconds_since(t0);
    ok &= elapsed < 5.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "4 golden cases + 200 randomized pairs in %.2f s", elapsed);
    report("DER scorer golden tests", ok, buf);
}

void si_sdr_units() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> scale(0.01, 50.0);
    for (int rep = 0; rep < 100 && ok; ++rep) {
        auto ref = random_signal(rng, 512);
        auto est = random_signal(rng, 512);
        for (std::size_t i = 0; i < est.size(); ++i) est[i] += ref[i];
        auto scaled = est;
        float a = static_cast<float>(scale(rng));
        for (auto& x : scaled) x *= a;
        ok &= close(si_sdr(scaled, ref), si_sdr(est, ref), 1e-6);
    }
    ok &= si_sdr({1.0f, 1.0f}, {1.0f, 0.0f}) == 0.0;
    auto s = random_signal(rng, 4096);
    ok &= si_sdr(s, s) == 120.0;

    double elapsed = seconds_since(t0);
    ok &= elapsed < 1.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "scale invariance x100, hand case, cap in %.2f s", elapsed);
    report("SI-SDR unit tests", ok, buf);
}

void pit_oracle_equivalence() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;

    std::mt19937 rng(11);
    auto brute_force = [](const std::vector<std::vector<float>>& est,
                          const std::vector<std::vector<float>>& ref) {
        std::vector<int> perm(est.size());
        std::iota(perm.begin(), perm.end(), 0);
        double best = -1e18;
        do {
            double sum = 0.0;
            for (std::size_t j = 0; j < ref.size(); ++j) sum += si_sdr(est[perm[j]], ref[j]);
            best = std::max(best, sum / ref.size());
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    };

    for (int rep = 0; rep < 50 && ok; ++rep) {
        std::size_t m = 2 + rep % 3;               // M in 2..4
        std::size_t n = 1 + rep % m;               // N <= M
        std::vector<std::vector<float>> est, ref;
        for (std::size_t i = 0; i < m; ++i) est.push_back(random_signal(rng, 256));
        for (std::size_t j = 0; j < n; ++j) ref.push_back(random_signal(rng, 256));

        ok &= close(pis_eval(est, ref).mean_si_sdr, brute_force(est, ref), 1e-9);
        if (n == m) {
            double pit = pit_si_sdr(est, ref).mean_si_sdr;
            ok &= close(pit, brute_force(est, ref), 1e-9);
            ok &= close(pis_eval(est, ref).mean_si_sdr, pit, 1e-9);
            ok &= close(all_outputs_eval(est, ref).mean_si_sdr, pit, 1e-9);
        }
    }

    double elapsed = seconds_since(t0);
    ok &= elapsed < 30.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "50 random instances vs exhaustive search in %.2f s",
                  elapsed);
    report("PIT/PIsEval/all-outputs oracle equivalence", ok, buf);
}

PipelineConfig acceptance_cfg(double latency) {
    PipelineConfig cfg;
    cfg.latency = latency;
    return cfg;
}

void end_to_end_oracle() {
    auto t0 = std::chrono::steady_clock::now();
    Scenario sc = generate(3, 120.0, 0.2, 1234);
    AudioStream stream(sc.mixture(), 16000);
    EnergyVad vad;
    FilterBankEmbedder embedder;
    PipelineConfig cfg = acceptance_cfg(5.0);

    OracleSeparator oracle(sc.stems, 3);
    Annotation hyp_oracle = run_pipeline(stream, oracle, vad, embedder, cfg);
    double der_oracle = der(sc.ground_truth, hyp_oracle).der;
    std::size_t speakers = hyp_oracle.speakers().size();

    BandSplitSeparator bands(Scenario::speaker_bands(3));
    Annotation hyp_bands = run_pipeline(stream, bands, vad, embedder, cfg);
    double der_bands = der(sc.ground_truth, hyp_bands).der;

    double elapsed = seconds_since(t0);
    bool ok = speakers == 3 && der_oracle < 0.05 && der_bands < 0.15 && elapsed < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%zu speakers, oracle DER %.2f%%, band-split DER %.2f%%, %.1f s", speakers,
                  100.0 * der_oracle, 100.0 * der_bands, elapsed);
    report("End-to-end oracle pipeline", ok, buf);
}

void causality() {
    Scenario sc = generate(3, 120.0, 0.2, 99);
    auto mixture = sc.mixture();
    EnergyVad vad;
    FilterBankEmbedder embedder;
    OracleSeparator oracle(sc.stems, 3);

    bool ok = true;
    const double t = 60.0;
    for (double latency : {0.5, 1.0, 5.0}) {
        PipelineConfig cfg = acceptance_cfg(latency);
        AudioStream full(mixture, 16000);
        Annotation a = crop(run_pipeline(full, oracle, vad, embedder, cfg), Segment(0, t));

        std::vector<float> cut(mixture.begin(),
                               mixture.begin() + static_cast<std::size_t>((t + latency) * 16000));
        AudioStream truncated(cut, 16000);
        Annotation b = crop(run_pipeline(truncated, oracle, vad, embedder, cfg), Segment(0, t));

        a.sort();
        b.sort();
        ok &= a.entries() == b.entries();
    }
    report("Causality (latencies 0.5/1.0/5.0, outputs on [0,60] bitwise equal)", ok);
}

/// Wraps a separator and applies a deterministic pseudo-random permutation to
/// the channel order of every window.
class ShuffledSeparator : public Separator {
public:
    explicit ShuffledSeparator(const Separator& inner, unsigned seed)
        : inner_(inner), seed_(seed) {}
    int num_outputs() const override { return inner_.num_outputs(); }
    std::vector<SourceEstimate> separate(const AudioWindow& window) const override {
        auto out = inner_.separate(window);
        std::mt19937 rng(seed_ ^ static_cast<unsigned>(std::llround(window.start * 1000)));
        std::shuffle(out.begin(), out.end(), rng);
        return out;
    }

private:
    const Separator& inner_;
    unsigned seed_;
};

void permutation_robustness() {
    Scenario sc = generate(3, 120.0, 0.2, 55);
    AudioStream stream(sc.mixture(), 16000);
    EnergyVad vad;
    FilterBankEmbedder embedder;
    PipelineConfig cfg = acceptance_cfg(5.0);

    OracleSeparator oracle(sc.stems, 3);
    ShuffledSeparator shuffled(oracle, 0xBEEF);
    Annotation a = run_pipeline(stream, oracle, vad, embedder, cfg);
    Annotation b = run_pipeline(stream, shuffled, vad, embedder, cfg);

    // identical up to speaker-founding order: cross-DER must be zero
    double cross = der(a, b).der;
    bool ok = cross <= 1e-9;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "cross-DER %.3g", cross);
    report("Permutation robustness", ok, buf);
}

void stitching_geometry() {
    auto counts_for = [](double latency) {
        PipelineConfig cfg = acceptance_cfg(latency);
        LatencyBuffer buffer(cfg);
        for (int k = 0; k < 60; ++k) {
            ActivityMatrix m;
            m.start = 0.5 * k;
            m.values = {std::vector<double>(500, 1.0)};
            buffer.push(m, {{0, "speaker_0"}});
        }
        return buffer.window_counts();
    };

    bool ok = true;
    for (int c : counts_for(0.5)) ok &= c == 1;
    auto high = counts_for(5.0);
    ok &= high.size() > 1500;
    for (std::size_t f = 500; f < 1500; ++f) ok &= high[f] == 10;  // steady state
    report("Stitching geometry (1 window at 0.5 s latency, 10 at 5.0 s)", ok);
}

void rttm_round_trip() {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(0.0, 600.0);
    std::uniform_int_distribution<int> nseg(1, 12);
    bool ok = true;
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        Annotation ann;
        int n = nseg(rng);
        for (int i = 0; i < n; ++i) {
            double s = u(rng), d = 0.05 + u(rng) / 50;
            ann.add(Segment(s, s + d), "spk" + std::to_string(i % 5));
        }
        ann.sort();
        auto parsed = parse_rttm(write_rttm({{"f", ann}}));
        Annotation got = parsed.at("f");
        got.sort();
        ok &= got.size() == ann.size();
        for (std::size_t i = 0; ok && i < got.size(); ++i) {
            ok &= got.entries()[i].speaker == ann.entries()[i].speaker;
            ok &= std::abs(got.entries()[i].segment.start - ann.entries()[i].segment.start) <=
                  0.0011;
            ok &= std::abs(got.entries()[i].segment.end - ann.entries()[i].segment.end) <= 0.0021;
        }

        // UEM round trip
        std::vector<Segment> regions;
        for (int i = 0; i < 3; ++i) {
            double s = u(rng);
            regions.push_back(Segment(s, s + 1.0 + u(rng) / 10));
        }
        regions = Annotation::merge_segments(regions);
        auto uem = parse_uem(write_uem({{"f", regions}})).at("f");
        ok &= uem.size() == regions.size();
        for (std::size_t i = 0; ok && i < uem.size(); ++i) {
            ok &= std::abs(uem[i].start - regions[i].start) <= 0.0011;
            ok &= std::abs(uem[i].end - regions[i].end) <= 0.0011;
        }
    }
    report("RTTM/UEM round-trip (1000 randomized annotations, 1 ms)", ok);
}

void mismatch_suite_check() {
    std::unique_ptr<OracleSeparator> sep;
    auto factory = [&](const Scenario& sc) -> const Separator* {
        auto stems = sc.stems;
        stems.resize(5, std::vector<float>(stems[0].size(), 0.0f));
        sep = std::make_unique<OracleSeparator>(stems, 5);
        return sep.get();
    };
    auto rows = mismatch_suite(factory, 5, 21, /*duration=*/2.0);
    bool ok = rows.size() == 4;
    for (const auto& row : rows) {
        ok &= row.pis_eval_db >= row.all_outputs_db;
        if (row.n_spks == 5) ok &= close(row.pis_eval_db, row.all_outputs_db, 1e-9);
        if (row.n_spks < 5) ok &= row.pis_eval_db > row.all_outputs_db;
    }
    report("Mismatch suite (oracle M=5: forgiving >= harsh, equal at N=5)", ok);
}

}  // namespace

int main() {
    std::printf("Corpus-scale results (real meetings + trained models) are out of scope; the\n"
                "criteria below are the substituted property suites.\n\n");
    der_golden();
    si_sdr_units();
    pit_oracle_equivalence();
    end_to_end_oracle();
    causality();
    permutation_robustness();
    stitching_geometry();
    rttm_round_trip();
    mismatch_suite_check();
    std::printf("\n%s (%d failure%s)\n", g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES",
                g_failures, g_failures == 1 ? "" : "s");
    return g_failures == 0 ? 0 : 1;
}
