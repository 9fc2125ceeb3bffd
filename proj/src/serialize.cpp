#include "vascnet/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace vascnet {

namespace fs = std::filesystem;

namespace {

Json vec3(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }
Json idx3(const Index3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Format, "expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
Index3 idx3_from(const Json& j) {
    if (!j.is_array() || j.size() < 3) throw Error(ErrorKind::Format, "expected a voxel coordinate array");
    return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>(), j[2].get<std::int64_t>()};
}

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Format, std::string("malformed ") + what + ": " + e.what());
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
        out << text;
        if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

Json read_json(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Format, path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);
    return buf;
}

Json to_json(const VesselNetwork& net) {
    Json j;
    j["dims"] = {net.dims.nx, net.dims.ny, net.dims.nz};
    j["spacing"] = {net.spacing.x, net.spacing.y, net.spacing.z};
    j["next_node_id"] = net.next_node_id;
    j["next_trace_id"] = net.next_trace_id;
    Json nodes = Json::array();
    for (const auto& n : net.nodes) nodes.push_back({{"id", n.id}, {"voxel", idx3(n.voxel)}, {"kind", to_string(n.kind)}});
    j["nodes"] = std::move(nodes);
    Json traces = Json::array();
    for (const auto& t : net.traces) {
        Json pts = Json::array();
        for (const auto& p : t.points) {
            Json e = {p.voxel.x, p.voxel.y, p.voxel.z, p.radius_mm};
            if (!p.owned) e.push_back(0);
            pts.push_back(std::move(e));
        }
        Json absorbed = Json::array();
        for (const auto& a : t.absorbed) absorbed.push_back(idx3(a));
        traces.push_back({{"id", t.id},
                          {"start", t.start},
                          {"end", t.end},
                          {"closed", t.closed},
                          {"points", std::move(pts)},
                          {"absorbed", std::move(absorbed)}});
    }
    j["traces"] = std::move(traces);
    return j;
}

VesselNetwork network_from_json(const Json& j) {
    return guarded("graph JSON", [&] {
        VesselNetwork net;
        const auto& d = j.at("dims");
        net.dims = {d.at(0).get<std::int64_t>(), d.at(1).get<std::int64_t>(), d.at(2).get<std::int64_t>()};
        const auto& s = j.at("spacing");
        net.spacing = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
        for (const auto& n : j.at("nodes"))
            net.nodes.push_back({n.at("id").get<int>(), idx3_from(n.at("voxel")), node_kind_from_string(n.at("kind").get<std::string>())});
        for (const auto& t : j.at("traces")) {
            GraphTrace tr;
            tr.id = t.at("id").get<int>();
            tr.start = t.at("start").get<int>();
            tr.end = t.at("end").get<int>();
            tr.closed = t.value("closed", false);
            for (const auto& p : t.at("points")) {
                TracePoint tp;
                tp.voxel = idx3_from(p);
                tp.radius_mm = p.at(3).get<double>();
                tp.owned = p.size() < 5 || p.at(4).get<int>() != 0;
                tr.points.push_back(tp);
            }
            for (const auto& a : t.value("absorbed", Json::array())) tr.absorbed.push_back(idx3_from(a));
            net.traces.push_back(std::move(tr));
        }
        int max_node = -1, max_trace = -1;
        for (const auto& n : net.nodes) max_node = std::max(max_node, n.id);
        for (const auto& t : net.traces) max_trace = std::max(max_trace, t.id);
        net.next_node_id = j.value("next_node_id", max_node + 1);
        net.next_trace_id = j.value("next_trace_id", max_trace + 1);
        return net;
    });
}

Json to_json(const LandmarkSet& lm) {
    Json a = Json::object();
    for (const auto& [label, id] : lm.assignments) a[label] = id;
    return {{"assignments", a}, {"deleted_edges", lm.deleted_edges}, {"version", lm.version}};
}

Json to_json(const LandmarkFile& lf) {
    Json j = to_json(lf.set);
    if (!lf.positions.empty()) {
        Json p = Json::object();
        for (const auto& [label, v] : lf.positions) p[label] = vec3(v);
        j["positions"] = std::move(p);
    }
    return j;
}

LandmarkFile landmark_file_from_json(const Json& j) {
    return guarded("landmark JSON", [&] {
        if (!j.is_object()) throw Error(ErrorKind::Format, "landmark file must be a JSON object");
        LandmarkFile lf;
        const Json assignments = j.value("assignments", Json::object());
        for (const auto& [label, id] : assignments.items()) lf.set.assignments[label] = id.get<int>();
        for (const auto& t : j.value("deleted_edges", Json::array())) lf.set.deleted_edges.push_back(t.get<int>());
        lf.set.version = j.value("version", 1);
        const Json positions = j.value("positions", Json::object());
        for (const auto& [label, p] : positions.items()) lf.positions[label] = vec3_from(p);
        return lf;
    });
}

ClassificationConfig classification_from_json(const Json& j) {
    return guarded("classification config", [&] {
        ClassificationConfig c;
        for (const auto& s : j.at("segments")) {
            SegmentDef d;
            d.name = s.at("name").get<std::string>();
            d.from = s.at("from").get<std::string>();
            d.to = s.at("to").get<std::string>();
            d.via = s.value("via", std::vector<std::string>{});
            d.fault_tolerant = s.value("fault_tolerant", false);
            c.segments.push_back(std::move(d));
        }
        for (const auto& s : j.at("subnetworks"))
            c.subnetworks.push_back({s.at("name").get<std::string>(), s.at("roots").get<std::vector<std::string>>()});
        c.validate();
        return c;
    });
}

Json to_json(const ClassificationConfig& cfg) {
    Json segs = Json::array(), subs = Json::array();
    for (const auto& s : cfg.segments)
        segs.push_back({{"name", s.name}, {"from", s.from}, {"to", s.to}, {"via", s.via}, {"fault_tolerant", s.fault_tolerant}});
    for (const auto& s : cfg.subnetworks) subs.push_back({{"name", s.name}, {"roots", s.roots}});
    return {{"segments", segs}, {"subnetworks", subs}};
}

Json to_json(const DynamicGraphTable& table) {
    Json segs = Json::array(), subs = Json::array();
    for (const auto& s : table.segments) {
        Json rev = Json::array();
        for (bool r : s.reversed) rev.push_back(r);
        segs.push_back({{"name", s.name},
                        {"present", s.present},
                        {"trace_ids", s.trace_ids},
                        {"reversed", rev},
                        {"node_path", s.node_path}});
    }
    for (const auto& s : table.subnetworks)
        subs.push_back({{"name", s.name}, {"present", s.present}, {"root_nodes", s.root_nodes}, {"trace_ids", s.trace_ids}});
    return {{"segments", segs},
            {"subnetworks", subs},
            {"nodes", table.network.nodes.size()},
            {"traces", table.network.traces.size()}};
}

std::string centerline_csv(const SparseCenterline& cl) {
    std::string out = "x,y,z,radius_mm\n";
    for (const auto& p : cl.points)
        out += std::to_string(p.voxel.x) + "," + std::to_string(p.voxel.y) + "," + std::to_string(p.voxel.z) + "," +
               format_fixed(p.radius_mm) + "\n";
    return out;
}

namespace {
const char* kFeatureHeader =
    "artery,present,total_length_mm,mean_radius_mm,total_volume_mm3,branch_count,mean_section_area_mm2,"
    "surface_area_mm2,tortuosity,fractal_dimension";
}

std::string features_csv(const std::vector<FeatureRow>& rows) {
    std::string out = std::string(kFeatureHeader) + "\n";
    for (const auto& r : rows) {
        out += r.artery + "," + (r.present ? "1" : "0");
        if (r.present) {
            out += "," + format_fixed(r.total_length) + "," + format_fixed(r.mean_radius) + "," + format_fixed(r.total_volume) +
                   "," + std::to_string(r.branch_count) + "," + format_fixed(r.mean_section_area) + "," +
                   format_fixed(r.surface_area) + "," + (r.tortuosity ? format_fixed(*r.tortuosity) : "") + "," +
                   (r.fractal_dimension ? format_fixed(*r.fractal_dimension) : "");
        } else {
            out += ",,,,,,,,";
        }
        out += "\n";
    }
    return out;
}

std::vector<FeatureRow> features_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kFeatureHeader))
        throw Error(ErrorKind::Format, "feature CSV header does not match the expected columns");
    std::vector<FeatureRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10) throw Error(ErrorKind::Format, "feature CSV line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
        try {
            FeatureRow r;
            r.artery = f[0];
            r.present = f[1] == "1";
            if (r.present) {
                r.total_length = std::stod(f[2]);
                r.mean_radius = std::stod(f[3]);
                r.total_volume = std::stod(f[4]);
                r.branch_count = std::stoi(f[5]);
                r.mean_section_area = std::stod(f[6]);
                r.surface_area = std::stod(f[7]);
                if (!f[8].empty()) r.tortuosity = std::stod(f[8]);
                if (!f[9].empty()) r.fractal_dimension = std::stod(f[9]);
            }
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::Format, "feature CSV line " + std::to_string(lineno) + " has a non-numeric field");
        }
    }
    return rows;
}

Json to_json(const std::vector<FeatureRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json j = {{"artery", r.artery}, {"present", r.present}};
        if (r.present) {
            j["total_length_mm"] = r.total_length;
            j["mean_radius_mm"] = r.mean_radius;
            j["total_volume_mm3"] = r.total_volume;
            j["branch_count"] = r.branch_count;
            j["mean_section_area_mm2"] = r.mean_section_area;
            j["surface_area_mm2"] = r.surface_area;
            j["tortuosity"] = r.tortuosity ? Json(*r.tortuosity) : Json(nullptr);
            j["fractal_dimension"] = r.fractal_dimension ? Json(*r.fractal_dimension) : Json(nullptr);
        }
        arr.push_back(std::move(j));
    }
    return {{"rows", arr}};
}

Json to_json(const GuidePackage& guide) {
    Json views = Json::array();
    for (const auto& v : guide.views) {
        Json nodes = Json::array();
        for (const auto& n : v.nodes) nodes.push_back({{"id", n.id}, {"u", n.u}, {"v", n.v}});
        views.push_back({{"axis", v.axis}, {"width", v.width}, {"height", v.height}, {"pixels", v.pixels}, {"nodes", nodes}});
    }
    return {{"views", views}};
}

Json fbd_to_json(const std::map<std::string, FourierArtery>& fbd) {
    Json entries = Json::object();
    for (const auto& [name, fa] : fbd)
        entries[name] = {{"order", fa.order},
                         {"coeffs_u", fa.coeffs_u},
                         {"coeffs_v", fa.coeffs_v},
                         {"trend_u", fa.trend_u},
                         {"trend_v", fa.trend_v}};
    return {{"entries", entries}};
}

std::map<std::string, FourierArtery> fbd_from_json(const Json& j) {
    return guarded("FBD JSON", [&] {
        std::map<std::string, FourierArtery> out;
        for (const auto& [name, e] : j.at("entries").items()) {
            FourierArtery fa;
            fa.order = e.at("order").get<int>();
            fa.coeffs_u = e.at("coeffs_u").get<std::vector<double>>();
            fa.coeffs_v = e.at("coeffs_v").get<std::vector<double>>();
            fa.trend_u = e.value("trend_u", 0.0);
            fa.trend_v = e.value("trend_v", 0.0);
            fa.validate();
            out[name] = std::move(fa);
        }
        return out;
    });
}

Json to_json(const SimConfig& cfg) {
    Json lm = Json::object();
    for (const auto& [k, v] : cfg.landmarks) lm[k] = vec3(v);
    Json arts = Json::array();
    for (const auto& a : cfg.arteries)
        arts.push_back({{"name", a.name},
                        {"start_label", a.start_label},
                        {"end_label", a.end_label},
                        {"radius_profile", a.radius.samples},
                        {"fbd_key", a.fbd_key},
                        {"group", a.group},
                        {"plane_normal", vec3(a.plane_normal)}});
    Json groups = Json::array();
    for (const auto& g : cfg.groups) groups.push_back({{"name", g.name}, {"roots", g.roots}});
    Json aggs = Json::array();
    for (const auto& a : cfg.aggregates) aggs.push_back({{"name", a.name}, {"groups", a.groups}});
    return {{"grid",
             {{"dims", {cfg.grid.dims.nx, cfg.grid.dims.ny, cfg.grid.dims.nz}},
              {"spacing", {cfg.grid.spacing.x, cfg.grid.spacing.y, cfg.grid.spacing.z}}}},
            {"landmarks", lm},
            {"arteries", arts},
            {"groups", groups},
            {"aggregates", aggs},
            {"intensity",
             {{"mu_b", cfg.intensity.mu_b}, {"sigma_b", cfg.intensity.sigma_b}, {"mu_v", cfg.intensity.mu_v}, {"sigma_v", cfg.intensity.sigma_v}}},
            {"jitter_deg", cfg.jitter_deg},
            {"seed", cfg.seed},
            {"samples_per_artery", cfg.samples_per_artery}};
}

SimConfig sim_config_from_json(const Json& j) {
    return guarded("simulation config", [&] {
        SimConfig cfg;
        const auto& g = j.at("grid");
        const auto& d = g.at("dims");
        const auto& s = g.at("spacing");
        cfg.grid.dims = {d.at(0).get<std::int64_t>(), d.at(1).get<std::int64_t>(), d.at(2).get<std::int64_t>()};
        cfg.grid.spacing = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
        for (const auto& [k, v] : j.at("landmarks").items()) cfg.landmarks[k] = vec3_from(v);
        for (const auto& a : j.at("arteries")) {
            SimArtery sa;
            sa.name = a.at("name").get<std::string>();
            sa.start_label = a.at("start_label").get<std::string>();
            sa.end_label = a.at("end_label").get<std::string>();
            sa.radius.samples = a.at("radius_profile").get<std::vector<double>>();
            sa.fbd_key = a.value("fbd_key", sa.name);
            sa.group = a.value("group", std::string{});
            if (a.contains("plane_normal")) sa.plane_normal = vec3_from(a.at("plane_normal"));
            cfg.arteries.push_back(std::move(sa));
        }
        for (const auto& gr : j.value("groups", Json::array()))
            cfg.groups.push_back({gr.at("name").get<std::string>(), gr.value("roots", std::vector<std::string>{})});
        for (const auto& a : j.value("aggregates", Json::array()))
            cfg.aggregates.push_back({a.at("name").get<std::string>(), a.at("groups").get<std::vector<std::string>>()});
        if (j.contains("intensity")) {
            const auto& im = j.at("intensity");
            cfg.intensity.mu_b = im.value("mu_b", cfg.intensity.mu_b);
            cfg.intensity.sigma_b = im.value("sigma_b", cfg.intensity.sigma_b);
            cfg.intensity.mu_v = im.value("mu_v", cfg.intensity.mu_v);
            cfg.intensity.sigma_v = im.value("sigma_v", cfg.intensity.sigma_v);
        }
        cfg.jitter_deg = j.value("jitter_deg", cfg.jitter_deg);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.samples_per_artery = j.value("samples_per_artery", cfg.samples_per_artery);
        return cfg;
    });
}

Json provenance_json(const GroundTruth& truth, const SimConfig& cfg) {
    Json arts = Json::array();
    for (const auto& a : truth.arteries)
        arts.push_back({{"name", a.name},
                        {"group", a.group},
                        {"start_label", a.start_label},
                        {"end_label", a.end_label},
                        {"jitter_angle_rad", a.jitter_angle},
                        {"samples", a.points.size()}});
    return {{"seed", truth.seed},
            {"graph_nodes", truth.graph_nodes},
            {"graph_edges", truth.graph_edges},
            {"arteries", arts},
            {"config", to_json(cfg)}};
}

Json to_json(const ComparisonReport& report) {
    Json feats = Json::array();
    for (const auto& f : report.features) {
        Json j = {{"feature", f.feature},
                  {"arteries", f.arteries},
                  {"extracted", f.extracted},
                  {"truth", f.truth},
                  {"percent_diff", f.percent_diff}};
        if (f.correlation) j["correlation"] = {{"r", f.correlation->r}, {"p", f.correlation->p}, {"n", f.correlation->n}};
        else j["correlation"] = nullptr;
        feats.push_back(std::move(j));
    }
    return {{"features", feats}};
}

std::string em_trace_csv(const EmResult& res) {
    std::string out = "iteration,log_p_before,log_p_after,rel_change,accepted\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        const auto& it = res.trace[i];
        out += std::to_string(i) + "," + format_fixed(it.log_p_before) + "," + format_fixed(it.log_p_after) + "," +
               format_fixed(it.rel_change) + "," + (it.accepted ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace vascnet
