// vascnet command-line driver.
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "vascnet/parallel.hpp"
#include "vascnet/phantom.hpp"
#include "vascnet/pipeline.hpp"
#include "vascnet/server.hpp"

namespace fs = std::filesystem;
using namespace vascnet;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kStageFailure = 3;

bool is_validation(ErrorKind k) {
    switch (k) {
        case ErrorKind::Parameter:
        case ErrorKind::Format:
        case ErrorKind::UnsupportedFormat:
        case ErrorKind::Io:
        case ErrorKind::IncompleteLandmarks:
        case ErrorKind::Landmark:
        case ErrorKind::Ambiguity:
        case ErrorKind::Join:
            return true;
        default:
            return false;
    }
}

int report(const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    if (const auto* se = dynamic_cast<const StageError*>(&e)) {
        if (se->stage() == "config" || e.kind() == ErrorKind::IncompleteLandmarks) return kValidation;
        return kStageFailure;
    }
    return is_validation(e.kind()) ? kValidation : kStageFailure;
}

void add_em_flags(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--beta", cfg.em.beta, "Prior coupling strength")->check(CLI::NonNegativeNumber);
    cmd->add_option("--n-icm", cfg.em.n_icm, "ICM sweeps per EM iteration")->check(CLI::PositiveNumber);
    cmd->add_option("--n-em", cfg.em.n_em_max, "Maximum EM iterations")->check(CLI::PositiveNumber);
    cmd->add_option("--eps", cfg.em.eps_em, "Relative log-posterior convergence threshold")->check(CLI::PositiveNumber);
    cmd->add_option("--init-percentile", cfg.init_percentile, "Intensity quantile seeding the vessel class");
}

void print_features(const std::vector<FeatureRow>& rows) { std::cout << features_csv(rows); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cerebral artery network extraction and feature analysis"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 1;
    unsigned threads = 0;
    fs::path config_file;
    app.add_option("--seed", seed, "Seed for every random draw");
    app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
    app.add_option("--config", config_file, "Pipeline config JSON")->check(CLI::ExistingFile);

    PipelineConfig pc;
    fs::path out_path, aux_path, landmark_path, class_path, truth_path;
    int port = 8080;
    std::string host = "127.0.0.1";
    bool serve_after = false;

    auto* seg = app.add_subcommand("segment", "HMRF-EM vessel segmentation of an intensity volume");
    seg->add_option("input", pc.input, "Intensity volume (.nii or .json)")->required()->check(CLI::ExistingFile);
    seg->add_option("-o,--output", out_path, "Binary mask output")->required();
    seg->add_option("--em-trace", aux_path, "Write the log-posterior trace CSV here");
    add_em_flags(seg, pc);

    auto* skel = app.add_subcommand("skeletonize", "Thin a binary mask and recover centerline radii");
    skel->add_option("input", pc.input, "Binary mask")->required()->check(CLI::ExistingFile);
    skel->add_option("-o,--output", out_path, "Skeleton volume output")->required();
    skel->add_option("--centerline", aux_path, "Centerline CSV output");

    auto* graph = app.add_subcommand("graph", "Build the vessel network from a binary mask");
    graph->add_option("input", pc.input, "Binary mask")->required()->check(CLI::ExistingFile);
    graph->add_option("-o,--output", out_path, "Graph JSON output")->required();
    graph->add_option("--guide", aux_path, "Write the MIP labeling guide JSON here");

    auto* feat = app.add_subcommand("features", "Classify a network with landmarks and extract features");
    feat->add_option("graph", pc.input, "Graph JSON")->required()->check(CLI::ExistingFile);
    feat->add_option("--landmarks", landmark_path, "Landmark JSON")->required()->check(CLI::ExistingFile);
    feat->add_option("--classification", class_path, "Classification config JSON")->check(CLI::ExistingFile);
    feat->add_option("-o,--output", out_path, "Feature CSV output (stdout when omitted)");
    feat->add_option("--table", aux_path, "Dynamic graph table JSON output");
    feat->add_option("--snap-tolerance", pc.snap_tolerance_mm, "Landmark snapping radius (mm)");
    feat->add_option("--spur-factor", pc.spur_factor, "Delete terminal traces shorter than this many junction radii (0 keeps all)");

    PhantomOptions phantom;
    fs::path sim_config, fbd_file;
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic subject with ground truth");
    sim->add_option("-o,--output-dir", out_path, "Output directory")->required();
    sim->add_option("--sim-config", sim_config, "Simulation config JSON")->check(CLI::ExistingFile);
    sim->add_option("--fbd", fbd_file, "Fourier dictionary JSON")->check(CLI::ExistingFile);
    sim->add_option("--dim", phantom.dim, "Built-in phantom grid size (field of view is 96 mm)");
    sim->add_option("--jitter", phantom.jitter_deg, "Bending-plane jitter range (degrees)");
    sim->add_flag("!--no-pcomm-l", phantom.include_pcomm_l, "Leave out the left Pcomm");
    sim->add_flag("!--no-pcomm-r", phantom.include_pcomm_r, "Leave out the right Pcomm");

    auto* val = app.add_subcommand("validate", "Compare extracted features with ground truth");
    val->add_option("features", pc.input, "Extracted feature CSV")->required()->check(CLI::ExistingFile);
    val->add_option("truth", truth_path, "Ground-truth feature CSV")->required()->check(CLI::ExistingFile);
    val->add_option("-o,--output", out_path, "Comparison JSON output (stdout when omitted)");

    auto* run = app.add_subcommand("run", "Full pipeline: segment, skeletonize, network, landmarks, features");
    run->add_option("input", pc.input, "Intensity volume")->check(CLI::ExistingFile);
    run->add_option("-o,--output-dir", pc.output_dir, "Artifact root directory");
    run->add_option("--landmarks", landmark_path, "Landmark JSON")->check(CLI::ExistingFile);
    run->add_option("--classification", class_path, "Classification config JSON")->check(CLI::ExistingFile);
    run->add_option("--spacing", pc.target_spacing, "Isotropic target spacing in mm (0: finest input spacing)");
    run->add_option("--snap-tolerance", pc.snap_tolerance_mm, "Landmark snapping radius (mm)");
    run->add_option("--spur-factor", pc.spur_factor, "Delete terminal traces shorter than this many junction radii (0 keeps all)");
    run->add_flag("--binary", pc.input_is_binary, "Input is already a vessel mask");
    run->add_flag("--resample-first", pc.resample_first, "Resample before segmentation");
    run->add_flag("--em-trace", pc.write_em_trace, "Write the EM log-posterior trace");
    run->add_flag("--serve", serve_after, "Serve the labeling API when no landmark file is given");
    run->add_option("--port", port, "Port for --serve");
    run->add_option("--host", host, "Host for --serve");
    add_em_flags(run, pc);

    auto* srv = app.add_subcommand("serve", "Serve the /v1 labeling API for a processed subject");
    srv->add_option("subject_dir", out_path, "Subject artifact directory")->required()->check(CLI::ExistingDirectory);
    srv->add_option("--classification", class_path, "Classification config JSON")->check(CLI::ExistingFile);
    srv->add_option("--port", port, "Port");
    srv->add_option("--host", host, "Host");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (!config_file.empty()) {
            PipelineConfig from_file = pipeline_config_from_json(read_json(config_file), pc);
            // Flags given on the command line win over the file.
            if (!pc.input.empty()) from_file.input = pc.input;
            pc = from_file;
        }
        pc.seed = seed;
        if (threads > 0) pc.threads = threads;
        set_thread_count(pc.threads > 0 ? pc.threads : std::max(1u, std::thread::hardware_concurrency()));
        if (!landmark_path.empty()) pc.landmarks = landmark_path;
        if (!class_path.empty()) pc.classification = class_path;
        const ClassificationConfig classes =
            class_path.empty() ? ClassificationConfig::defaults() : classification_from_json(read_json(class_path));

        if (seg->parsed()) {
            const Volume3D vol = read_volume(pc.input);
            const auto res = segment_vessels(vol, pc);
            write_volume(res.mask, out_path);
            if (!aux_path.empty()) write_text(aux_path, em_trace_csv(res.em));
            std::cerr << "EM stopped: " << to_string(res.em.stop) << ", " << res.mask.foreground_count() << " vessel voxels\n";
        } else if (skel->parsed()) {
            const BinaryVolume mask = read_binary_volume(pc.input);
            const auto net = build_network_from_mask(mask);
            write_volume(net.skeleton, out_path);
            if (!aux_path.empty()) write_text(aux_path, centerline_csv(net.centerline));
        } else if (graph->parsed()) {
            const BinaryVolume mask = read_binary_volume(pc.input);
            const auto net = build_network_from_mask(mask);
            write_json(out_path, to_json(net.network));
            if (!aux_path.empty()) write_json(aux_path, to_json(labeling_guide(to_volume(mask), net.network)));
            std::cerr << net.network.nodes.size() << " nodes, " << net.network.traces.size() << " traces\n";
        } else if (feat->parsed()) {
            const VesselNetwork net = network_from_json(read_json(pc.input));
            const LandmarkSet lm = resolve_landmarks(net, landmark_file_from_json(read_json(landmark_path)), pc.snap_tolerance_mm, pc.spur_factor);
            DynamicGraphTable table;
            const auto rows = features_for(net, lm, classes, &table);
            if (!aux_path.empty()) write_json(aux_path, to_json(table));
            if (out_path.empty()) print_features(rows);
            else write_text(out_path, features_csv(rows));
        } else if (sim->parsed()) {
            SimConfig cfg;
            std::map<std::string, FourierArtery> fbd;
            std::map<std::string, Vec3> landmark_positions;
            if (!sim_config.empty()) {
                if (fbd_file.empty()) throw Error(ErrorKind::Parameter, "--sim-config needs --fbd");
                cfg = sim_config_from_json(read_json(sim_config));
                fbd = fbd_from_json(read_json(fbd_file));
                for (const auto& l : canonical_labels())
                    if (cfg.landmarks.count(l)) landmark_positions[l] = cfg.landmarks.at(l);
            } else {
                phantom.seed = seed;
                Phantom ph = build_cow_phantom(phantom);
                cfg = ph.config;
                fbd = ph.fbd;
                landmark_positions = phantom_landmarks(cfg);
            }
            cfg.seed = seed;
            const SimResult res = simulate_subject(cfg, fbd);
            fs::create_directories(out_path);
            write_volume(res.intensity, out_path / "intensity.nii");
            write_volume(res.mask, out_path / "mask.nii");
            write_text(out_path / "ground_truth.csv", features_csv(res.truth.rows));
            write_json(out_path / "provenance.json", provenance_json(res.truth, cfg));
            write_json(out_path / "sim_config.json", to_json(cfg));
            write_json(out_path / "fbd.json", fbd_to_json(fbd));
            write_json(out_path / "landmarks.json", to_json(LandmarkFile{{}, landmark_positions}));
            std::cerr << res.truth.arteries.size() << " arteries, " << res.mask.foreground_count() << " vessel voxels\n";
        } else if (val->parsed()) {
            const auto ex = features_from_csv(read_text(pc.input));
            const auto gt = features_from_csv(read_text(truth_path));
            const Json report = to_json(compare(ex, gt));
            if (out_path.empty()) std::cout << report.dump(2) << "\n";
            else write_json(out_path, report);
        } else if (run->parsed()) {
            try {
                const auto res = run_pipeline(pc);
                std::cerr << "artifacts in " << res.subject_dir.string() << "\n";
                print_features(res.features);
            } catch (const StageError& e) {
                if (!(serve_after && e.kind() == ErrorKind::IncompleteLandmarks)) throw;
                const fs::path dir = subject_directory(pc);
                LabelingService svc(network_from_json(read_json(dir / "graph.json")), read_json(dir / "guide.json"), classes, dir);
                std::cerr << "serving /v1 on " << host << ":" << port << "\n";
                serve(svc, host, port);
            }
        } else if (srv->parsed()) {
            LabelingService svc(network_from_json(read_json(out_path / "graph.json")), read_json(out_path / "guide.json"), classes,
                                out_path);
            std::cerr << "serving /v1 on " << host << ":" << port << "\n";
            serve(svc, host, port);
        }
    } catch (const Error& e) {
        return report(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStageFailure;
    }
    return kOk;
}
