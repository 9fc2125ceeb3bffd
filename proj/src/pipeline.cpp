#include "vascnet/pipeline.hpp"

#include <chrono>
#include <cstdio>

#include "vascnet/parallel.hpp"

namespace vascnet {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
auto timed_stage(const std::string& name, std::vector<StageTiming>& timings, F&& f) {
    const auto t0 = Clock::now();
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            timings.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()});
        } else {
            auto r = f();
            timings.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()});
            return r;
        }
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    } catch (const fs::filesystem_error& e) {
        throw StageError(name, Error(ErrorKind::Io, e.what()));
    }
}

Json em_json(const EmParams& p) {
    return {{"k", p.k},       {"mu", p.mu},         {"sigma", p.sigma},   {"beta", p.beta},
            {"eps_em", p.eps_em}, {"n_icm", p.n_icm}, {"n_em_max", p.n_em_max}, {"sigma_floor_fraction", p.sigma_floor_fraction}};
}

std::string path_or_empty(const std::optional<fs::path>& p) { return p ? p->string() : std::string{}; }

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void PipelineConfig::validate() const {
    if (input.empty()) throw Error(ErrorKind::Parameter, "no input volume given");
    if (!fs::exists(input)) throw Error(ErrorKind::Io, "input volume not found: " + input.string());
    if (classification && !fs::exists(*classification))
        throw Error(ErrorKind::Io, "classification config not found: " + classification->string());
    if (landmarks && !fs::exists(*landmarks)) throw Error(ErrorKind::Io, "landmark file not found: " + landmarks->string());
    if (!(init_percentile > 0.0 && init_percentile < 1.0)) throw Error(ErrorKind::Parameter, "init_percentile must lie in (0,1)");
    if (!(target_spacing >= 0.0)) throw Error(ErrorKind::Parameter, "target_spacing must be >= 0");
    if (!(snap_tolerance_mm > 0.0)) throw Error(ErrorKind::Parameter, "snap_tolerance_mm must be > 0");
    if (!(spur_factor >= 0.0)) throw Error(ErrorKind::Parameter, "spur_factor must be >= 0");
    if (!input_is_binary) {
        EmParams probe = em;
        if (probe.mu.empty()) probe.mu.assign(static_cast<std::size_t>(probe.k), 1.0);
        if (probe.sigma.empty()) probe.sigma.assign(static_cast<std::size_t>(probe.k), 1.0);
        probe.validate();
    }
}

Json PipelineConfig::effective() const {
    return {{"input", input.string()},
            {"input_is_binary", input_is_binary},
            {"em", em_json(em)},
            {"init_percentile", init_percentile},
            {"target_spacing", target_spacing},
            {"resample_first", resample_first},
            {"classification", path_or_empty(classification)},
            {"landmarks", path_or_empty(landmarks)},
            {"snap_tolerance_mm", snap_tolerance_mm},
            {"spur_factor", spur_factor},
            {"seed", seed}};
}

std::uint64_t PipelineConfig::hash() const { return fnv1a(effective().dump()); }

PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig c) {
    try {
        if (j.contains("input")) c.input = j.at("input").get<std::string>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.input_is_binary = j.value("input_is_binary", c.input_is_binary);
        c.init_percentile = j.value("init_percentile", c.init_percentile);
        c.target_spacing = j.value("target_spacing", c.target_spacing);
        c.resample_first = j.value("resample_first", c.resample_first);
        if (j.contains("classification")) c.classification = j.at("classification").get<std::string>();
        if (j.contains("landmarks")) c.landmarks = j.at("landmarks").get<std::string>();
        c.snap_tolerance_mm = j.value("snap_tolerance_mm", c.snap_tolerance_mm);
        c.spur_factor = j.value("spur_factor", c.spur_factor);
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        c.write_em_trace = j.value("write_em_trace", c.write_em_trace);
        if (j.contains("em")) {
            const auto& e = j.at("em");
            c.em.k = e.value("k", c.em.k);
            c.em.mu = e.value("mu", c.em.mu);
            c.em.sigma = e.value("sigma", c.em.sigma);
            c.em.beta = e.value("beta", c.em.beta);
            c.em.eps_em = e.value("eps_em", c.em.eps_em);
            c.em.n_icm = e.value("n_icm", c.em.n_icm);
            c.em.n_em_max = e.value("n_em_max", c.em.n_em_max);
            c.em.sigma_floor_fraction = e.value("sigma_floor_fraction", c.em.sigma_floor_fraction);
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Format, std::string("malformed pipeline config: ") + e.what());
    }
    return c;
}

SegmentationResult segment_vessels(const Volume3D& vol, const PipelineConfig& cfg) {
    const LabelMap init = threshold_initial(vol, cfg.init_percentile);
    EmParams params = cfg.em;
    if (params.k != 2) throw Error(ErrorKind::Parameter, "vessel segmentation uses two classes");
    if (params.mu.empty() || params.sigma.empty()) params = initial_params_from_labels(init, vol, params);
    EmResult em = em_segment(vol, init, params);
    BinaryVolume mask = foreground_of(em.labels, vol.spacing(), 2);
    return {std::move(mask), std::move(em)};
}

NetworkResult build_network_from_mask(const BinaryVolume& mask) {
    const DistanceField field = distance_transform(mask);
    BinaryVolume skel = skeletonize_3d(mask);
    SparseCenterline cl = compute_radii(skel, field, mask.spacing());
    VesselNetwork net = build_vessel_network(skel, cl);
    return {std::move(skel), std::move(cl), std::move(net)};
}

LandmarkSet resolve_landmarks(const VesselNetwork& net, const LandmarkFile& file, double tolerance_mm, double spur_factor) {
    LandmarkSet lm = file.set;
    if (lm.assignments.empty() && !file.positions.empty()) {
        if (spur_factor > 0.0) {
            for (int id : spurious_traces(remove_traces(net, lm.deleted_edges), spur_factor))
                if (net.find_trace(id)) lm.deleted_edges.push_back(id);
        }
        const VesselNetwork pruned = lm.deleted_edges.empty() ? net : remove_traces(net, lm.deleted_edges);
        lm.assignments = snap_landmarks(pruned, file.positions, tolerance_mm).assignments;
    }
    lm.validate(&net);
    return lm;
}

std::vector<FeatureRow> features_for(const VesselNetwork& net, const LandmarkSet& lm, const ClassificationConfig& classes,
                                     DynamicGraphTable* table_out) {
    DynamicGraphTable table = apply_landmarks(net, lm, classes);
    auto rows = extract_features(table);
    if (table_out) *table_out = std::move(table);
    return rows;
}

PipelineResult process_volume(const Volume3D& input, const PipelineConfig& cfg, const std::optional<LandmarkFile>& landmarks,
                              const ClassificationConfig& classes) {
    if (cfg.threads > 0) set_thread_count(cfg.threads);
    std::vector<StageTiming> timings;
    const double target = cfg.target_spacing > 0.0 ? cfg.target_spacing : input.spacing().min();
    const bool isotropic = input.spacing() == Spacing{target, target, target};

    std::optional<Volume3D> vol;
    std::optional<EmResult> em;
    std::optional<BinaryVolume> mask;
    if (cfg.resample_first && !isotropic)
        vol = timed_stage("resample", timings, [&] { return resample_isotropic(input, target); });
    else
        vol = input;

    if (cfg.input_is_binary) {
        mask = timed_stage("segment", timings, [&] {
            std::vector<std::uint8_t> bits(vol->size());
            for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (*vol)[i] >= 0.5f ? 1 : 0;
            return BinaryVolume(vol->dims(), vol->spacing(), std::move(bits));
        });
    } else {
        auto seg = timed_stage("segment", timings, [&] { return segment_vessels(*vol, cfg); });
        mask = std::move(seg.mask);
        em = std::move(seg.em);
    }
    if (!cfg.resample_first && !isotropic) {
        mask = timed_stage("resample", timings, [&] { return resample_isotropic(*mask, target); });
        vol = resample_isotropic(*vol, target);
    }

    NetworkResult graph = timed_stage("network", timings, [&] { return build_network_from_mask(*mask); });

    std::optional<LandmarkSet> lm;
    std::optional<DynamicGraphTable> table;
    std::vector<FeatureRow> rows;
    if (landmarks) {
        lm = timed_stage("landmarks", timings, [&] { return resolve_landmarks(graph.network, *landmarks, cfg.snap_tolerance_mm, cfg.spur_factor); });
        DynamicGraphTable t;
        rows = timed_stage("features", timings, [&] { return features_for(graph.network, *lm, classes, &t); });
        table = std::move(t);
    }
    return PipelineResult{{},        std::move(*vol), std::move(*mask), std::move(em), std::move(graph), std::move(lm),
                          std::move(table), std::move(rows), std::move(timings)};
}

fs::path subject_directory(const PipelineConfig& cfg) {
    return cfg.output_dir / ("subject-" + hex64(fnv1a(read_text(cfg.input))));
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw StageError("config", e);
    }
    const auto t0 = Clock::now();
    std::vector<StageTiming> io_timings;
    const fs::path dir = timed_stage("load", io_timings, [&] { return subject_directory(cfg); });
    const Volume3D input = timed_stage("load", io_timings, [&] { return read_volume(cfg.input); });
    const ClassificationConfig classes = timed_stage("load", io_timings, [&] {
        return cfg.classification ? classification_from_json(read_json(*cfg.classification)) : ClassificationConfig::defaults();
    });
    std::optional<LandmarkFile> lf;
    if (cfg.landmarks) lf = timed_stage("load", io_timings, [&] { return landmark_file_from_json(read_json(*cfg.landmarks)); });

    PipelineResult res = process_volume(input, cfg, lf, classes);
    res.subject_dir = dir;

    timed_stage("write", res.timings, [&] {
        fs::create_directories(dir);
        write_volume(res.mask, dir / "binary.nii");
        if (res.em && cfg.write_em_trace) write_text(dir / "em_trace.csv", em_trace_csv(*res.em));
        write_text(dir / "centerline.csv", centerline_csv(res.graph.centerline));
        write_json(dir / "graph.json", to_json(res.graph.network));
        write_json(dir / "guide.json", to_json(labeling_guide(res.volume, res.graph.network)));
        if (res.landmarks) write_json(dir / "landmarks.json", to_json(*res.landmarks));
        if (res.table) write_json(dir / "table.json", to_json(*res.table));
        if (res.landmarks) {
            write_text(dir / "features.csv", features_csv(res.features));
            write_json(dir / "features.json", to_json(res.features));
        }
    });

    Json timings = Json::array();
    for (const auto& t : io_timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    for (const auto& t : res.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    Json manifest = {{"config", cfg.effective()},
                     {"config_hash", hex64(cfg.hash())},
                     {"seed", cfg.seed},
                     {"threads", thread_count()},
                     {"timings", timings},
                     {"compute_seconds", std::chrono::duration<double>(Clock::now() - t0).count()},
                     {"labeling_seconds", 0.0},
                     {"nodes", res.graph.network.nodes.size()},
                     {"traces", res.graph.network.traces.size()},
                     {"complete", res.landmarks.has_value()}};
    if (res.em) manifest["em_stop"] = to_string(res.em->stop);
    write_json(dir / "manifest.json", manifest);

    if (!res.landmarks)
        throw StageError("landmarks", Error(ErrorKind::IncompleteLandmarks,
                                            "no landmark file given; label the network in serve mode or pass --landmarks"));
    return res;
}

}  // namespace vascnet
