// Command-line front end: run the streaming diarization pipeline, score
// RTTM files, sweep latencies, evaluate separation, and synthesize
// desk-scale scenarios.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssgd/backends.hpp"
#include "ssgd/ingest.hpp"
#include "ssgd/metrics.hpp"
#include "ssgd/rttm.hpp"
#include "ssgd/stitch.hpp"
#include "ssgd/synth.hpp"

namespace {

using namespace ssgd;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("file not found: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write: " + path);
    f << text;
}

std::string file_id(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

/// Backend selection shared by `run` and `sweep`.
struct BackendOptions {
    std::string separator = "band-split";
    std::vector<std::string> stem_paths;  // oracle separator
    std::string bands = "0:1000,1000:2000,2000:8000";  // band-split separator
    double vad_threshold_db = -40.0;
    int vad_hangover = 2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--separator", separator, "Separation backend: oracle | band-split")
            ->check(CLI::IsMember({"oracle", "band-split"}));
        cmd->add_option("--stems", stem_paths,
                        "Ground-truth stem WAVs for the oracle separator");
        cmd->add_option("--bands", bands,
                        "Comma-separated lo:hi Hz bands for the band-split separator");
        cmd->add_option("--vad-threshold-db", vad_threshold_db, "Energy VAD threshold, dBFS");
        cmd->add_option("--vad-hangover", vad_hangover, "VAD median smoothing half width, frames");
    }

    std::unique_ptr<Separator> make_separator(int num_outputs_hint) const {
        if (separator == "oracle") {
            if (stem_paths.empty())
                throw ConfigError("oracle separator needs --stems");
            std::vector<std::vector<float>> stems;
            for (const auto& p : stem_paths) stems.push_back(open_wav(p).samples());
            int m = std::max<int>(num_outputs_hint, static_cast<int>(stems.size()));
            return std::make_unique<OracleSeparator>(std::move(stems), m);
        }
        std::vector<std::pair<double, double>> parsed;
        std::stringstream ss(bands);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw ConfigError("bad band '" + tok + "', expected lo:hi");
            parsed.emplace_back(std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
        }
        return std::make_unique<BandSplitSeparator>(std::move(parsed));
    }
};

void attach_pipeline_options(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--window", cfg.window, "Window length, seconds");
    cmd->add_option("--step", cfg.step, "Window step, seconds");
    cmd->add_option("--latency", cfg.latency, "Output latency, seconds (in [step, window])");
    cmd->add_option("--tau-active", cfg.tau_active, "Activity binarization threshold");
    cmd->add_option("--delta-new", cfg.delta_new, "New-speaker cosine distance threshold");
    cmd->add_option("--rho-update", cfg.rho_update,
                    "Minimum speech seconds for a centroid update");
}

Annotation run_one(const std::string& wav_path, const BackendOptions& backends,
                   const PipelineConfig& cfg) {
    auto stream = open_wav(wav_path);
    auto separator = backends.make_separator(2);
    EnergyVad vad(backends.vad_threshold_db, backends.vad_hangover);
    FilterBankEmbedder embedder;
    return run_pipeline(stream, *separator, vad, embedder, cfg);
}

void print_der_line(const std::string& name, const DerReport& r) {
    std::printf("%-20s DER %5.1f  FA %5.1f  MS %5.1f  SC %5.1f\n", name.c_str(),
                100.0 * r.der, 100.0 * r.false_alarm, 100.0 * r.missed,
                100.0 * r.confusion);
}

int cmd_run(const std::vector<std::string>& inputs, const std::string& outdir,
            const BackendOptions& backends, PipelineConfig cfg) {
    cfg.validate();
    std::filesystem::create_directories(outdir);
    for (const auto& input : inputs) {
        auto t0 = std::chrono::steady_clock::now();
        Annotation ann = run_one(input, backends, cfg);
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string id = file_id(input);
        write_file((std::filesystem::path(outdir) / (id + ".rttm")).string(),
                   write_rttm({{id, ann}}));
        std::printf("%s: %zu speakers, %.2f s wall\n", id.c_str(), ann.speakers().size(),
                    wall);
    }
    return kExitOk;
}

int cmd_score(const std::string& ref_path, const std::string& hyp_path,
              const std::string& uem_path, double collar, bool overlap_only,
              const std::string& csv_path) {
    auto refs = parse_rttm(read_file(ref_path));
    auto hyps = parse_rttm(read_file(hyp_path));
    std::map<std::string, std::vector<Segment>> uems;
    if (!uem_path.empty()) uems = parse_uem(read_file(uem_path));

    std::string csv = "file,der,fa,ms,sc\n";
    double ms = 0.0, fa = 0.0, sc = 0.0, total = 0.0;
    int scored = 0;
    for (const auto& [id, hyp] : hyps) {
        auto it = refs.find(id);
        if (it == refs.end()) {
            std::fprintf(stderr, "warning: %s missing from reference, skipped\n", id.c_str());
            continue;
        }
        std::optional<std::vector<Segment>> uem;
        if (auto u = uems.find(id); u != uems.end()) uem = u->second;
        DerReport r = der(it->second, hyp, uem, collar, overlap_only);
        print_der_line(id, r);
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f\n", id.c_str(), r.der,
                      r.false_alarm, r.missed, r.confusion);
        csv += line;
        ms += r.missed * r.total_speech;
        fa += r.false_alarm * r.total_speech;
        sc += r.confusion * r.total_speech;
        total += r.total_speech;
        ++scored;
    }
    for (const auto& [id, ref] : refs) {
        if (hyps.count(id)) continue;
        // a reference file with no hypothesis at all is a total miss
        DerReport r = der(ref, Annotation{}, std::nullopt, collar, overlap_only);
        print_der_line(id, r);
        ms += r.missed * r.total_speech;
        total += r.total_speech;
        ++scored;
    }
    if (scored == 0) throw ConfigError("no common file-ids between reference and hypothesis");
    if (total > 0.0) {
        DerReport agg;
        agg.missed = ms / total;
        agg.false_alarm = fa / total;
        agg.confusion = sc / total;
        agg.der = agg.missed + agg.false_alarm + agg.confusion;
        print_der_line("TOTAL", agg);
    }
    if (!csv_path.empty()) write_file(csv_path, csv);
    return kExitOk;
}

int cmd_sweep(const std::string& input, const std::string& ref_path,
              std::vector<double> latencies, const BackendOptions& backends,
              PipelineConfig cfg, const std::string& csv_path) {
    auto refs = parse_rttm(read_file(ref_path));
    auto it = refs.find(file_id(input));
    if (it == refs.end())
        throw ConfigError("reference has no file-id '" + file_id(input) + "'");

    std::string csv = "latency,der,fa,ms,sc\n";
    for (double latency : latencies) {
        if (latency < cfg.step || latency > cfg.window)
            throw ConfigError("latency " + std::to_string(latency) +
                              " outside valid range [" + std::to_string(cfg.step) + ", " +
                              std::to_string(cfg.window) + "]");
        cfg.latency = latency;
        cfg.validate();
        Annotation hyp = run_one(input, backends, cfg);
        DerReport r = der(it->second, hyp);
        std::printf("latency %.2f: ", latency);
        print_der_line("", r);
        char line[256];
        std::snprintf(line, sizeof(line), "%.3f,%.6f,%.6f,%.6f,%.6f\n", latency, r.der,
                      r.false_alarm, r.missed, r.confusion);
        csv += line;
    }
    if (!csv_path.empty()) write_file(csv_path, csv);
    std::fputs(csv.c_str(), stdout);
    return kExitOk;
}

int cmd_sep_eval(const std::vector<std::string>& est_paths,
                 const std::vector<std::string>& ref_paths, const std::string& mode) {
    std::vector<std::vector<float>> est, ref;
    std::size_t shortest = SIZE_MAX;
    for (const auto& p : est_paths) {
        est.push_back(open_wav(p).samples());
        shortest = std::min(shortest, est.back().size());
    }
    for (const auto& p : ref_paths) {
        ref.push_back(open_wav(p).samples());
        shortest = std::min(shortest, ref.back().size());
    }
    for (auto& v : est) v.resize(shortest);
    for (auto& v : ref) v.resize(shortest);

    SepScore score;
    if (mode == "pit")
        score = pit_si_sdr(est, ref);
    else if (mode == "all-outputs")
        score = all_outputs_eval(est, ref);
    else
        score = pis_eval(est, ref);

    for (std::size_t j = 0; j < score.per_source.size(); ++j) {
        std::string ref_name = j < ref_paths.size() ? file_id(ref_paths[j]) : "(epsilon pad)";
        std::string est_name = file_id(est_paths[score.assignment[j]]);
        std::printf("%s -> %s: %.2f dB\n", est_name.c_str(), ref_name.c_str(),
                    score.per_source[j]);
    }
    std::printf("mean SI-SDR: %.2f dB\n", score.mean_si_sdr);
    return kExitOk;
}

int cmd_simulate(int num_speakers, double duration, double overlap_ratio, unsigned seed,
                 const std::string& outdir) {
    Scenario sc = generate(num_speakers, duration, overlap_ratio, seed);
    std::filesystem::create_directories(outdir);
    auto dir = std::filesystem::path(outdir);
    write_wav((dir / "mixture.wav").string(), sc.mixture());
    for (int i = 0; i < sc.num_speakers; ++i)
        write_wav((dir / (Scenario::speaker_label(i) + ".wav")).string(), sc.stems[i]);
    write_file((dir / "ground_truth.rttm").string(),
               write_rttm({{"mixture", sc.ground_truth}}));
    std::printf("measured overlap ratio: %.3f\n", sc.overlap_ratio);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming separation-guided speaker diarization"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML-style config file (flags win)");

    PipelineConfig cfg;
    BackendOptions backends;

    // run
    auto* run = app.add_subcommand("run", "Diarize WAV files to RTTM");
    std::vector<std::string> run_inputs;
    std::string run_outdir = ".";
    run->add_option("inputs", run_inputs, "Input WAV files")->required();
    run->add_option("-o,--outdir", run_outdir, "Output directory for RTTM files");
    attach_pipeline_options(run, cfg);
    backends.attach(run);

    // score
    auto* score = app.add_subcommand("score", "Score hypothesis RTTM against reference");
    std::string score_ref, score_hyp, score_uem, score_csv;
    double collar = 0.0;
    bool overlap_only = false;
    score->add_option("reference", score_ref, "Reference RTTM")->required();
    score->add_option("hypothesis", score_hyp, "Hypothesis RTTM")->required();
    score->add_option("--uem", score_uem, "UEM scoring regions");
    score->add_option("--collar", collar, "Collar, seconds");
    score->add_flag("--overlap-only", overlap_only, "Score only overlapped reference speech");
    score->add_option("--csv", score_csv, "Write machine-readable CSV here");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Re-run the pipeline over a latency grid");
    std::string sweep_input, sweep_ref, sweep_csv;
    std::vector<double> sweep_latencies = {0.5, 5.0};
    sweep->add_option("input", sweep_input, "Input WAV")->required();
    sweep->add_option("reference", sweep_ref, "Reference RTTM")->required();
    sweep->add_option("--latencies", sweep_latencies, "Latencies to test, seconds");
    sweep->add_option("--csv", sweep_csv, "Write CSV here");
    attach_pipeline_options(sweep, cfg);
    backends.attach(sweep);

    // sep-eval
    auto* sep_eval = app.add_subcommand("sep-eval", "Separation quality metrics");
    std::vector<std::string> est_paths, ref_paths;
    std::string mode = "pit";
    sep_eval->add_option("--est", est_paths, "Estimated source WAVs")->required();
    sep_eval->add_option("--ref", ref_paths, "Reference source WAVs")->required();
    sep_eval->add_option("--mode", mode, "pit | all-outputs | pis-eval")
        ->check(CLI::IsMember({"pit", "all-outputs", "pis-eval"}));

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario");
    int sim_speakers = 3;
    double sim_duration = 120.0, sim_overlap = 0.2;
    unsigned sim_seed = 0;
    std::string sim_outdir = "scenario";
    simulate->add_option("--num-speakers", sim_speakers, "Speakers (1..5)");
    simulate->add_option("--duration", sim_duration, "Duration, seconds");
    simulate->add_option("--overlap-ratio", sim_overlap, "Target overlap ratio [0,1)");
    simulate->add_option("--seed", sim_seed, "Random seed");
    simulate->add_option("-o,--outdir", sim_outdir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_inputs, run_outdir, backends, cfg);
        if (score->parsed())
            return cmd_score(score_ref, score_hyp, score_uem, collar, overlap_only, score_csv);
        if (sweep->parsed())
            return cmd_sweep(sweep_input, sweep_ref, sweep_latencies, backends, cfg, sweep_csv);
        if (sep_eval->parsed()) return cmd_sep_eval(est_paths, ref_paths, mode);
        if (simulate->parsed())
            return cmd_simulate(sim_speakers, sim_duration, sim_overlap, sim_seed, sim_outdir);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
