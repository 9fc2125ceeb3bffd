#include "vascnet/landmarks.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>

namespace vascnet {

namespace {

double trace_length_mm(const GraphTrace& t, const Spacing& s) {
    double len = 0.0;
    for (std::size_t i = 1; i < t.points.size(); ++i)
        len += distance(to_physical(t.points[i - 1].voxel, s), to_physical(t.points[i].voxel, s));
    return len;
}

struct Step {
    int node;
    int trace;
    bool operator<(const Step& o) const { return node != o.node ? node < o.node : trace < o.trace; }
    bool operator==(const Step& o) const = default;
};

struct Route {
    double length = std::numeric_limits<double>::infinity();
    std::vector<Step> steps;  // first step has trace -1
};

bool route_less(const Route& a, const Route& b) {
    if (a.length != b.length) return a.length < b.length;
    return std::lexicographical_compare(a.steps.begin(), a.steps.end(), b.steps.begin(), b.steps.end());
}

// Shortest path by physical length; ties resolve to the lexicographically
// smaller node sequence (then trace ids).
std::optional<Route> shortest_route(const VesselNetwork& net, const std::vector<double>& lengths, int from, int to,
                                    const std::set<int>& blocked) {
    std::map<int, Route> best;
    std::set<int> done;
    best[from] = Route{0.0, {{from, -1}}};
    while (true) {
        int cur = -1;
        for (const auto& [node, r] : best) {
            if (done.count(node)) continue;
            if (cur < 0 || route_less(r, best.at(cur))) cur = node;
        }
        if (cur < 0) return std::nullopt;
        if (cur == to) return best.at(to);
        done.insert(cur);
        if (cur != from && blocked.count(cur)) continue;
        const Route here = best.at(cur);
        for (std::size_t i = 0; i < net.traces.size(); ++i) {
            const auto& t = net.traces[i];
            if (t.start == t.end) continue;
            int other = -1;
            if (t.start == cur) other = t.end;
            else if (t.end == cur) other = t.start;
            if (other < 0 || done.count(other)) continue;
            Route cand = here;
            cand.length += lengths[i];
            cand.steps.push_back({other, t.id});
            auto it = best.find(other);
            if (it == best.end() || route_less(cand, it->second)) best[other] = std::move(cand);
        }
    }
}

}  // namespace

const std::vector<std::string>& canonical_labels() {
    static const std::vector<std::string> labels{
        "M1-M2_L",      "M1-M2_R",      "A1-A2_L",       "A1-A2_R",       "ICA-MCA-ACA_L", "ICA-MCA-ACA_R",
        "Pcomm-ICA_L",  "Pcomm-ICA_R",  "ICA_Root_L",    "ICA_Root_R",    "P1-P2-Pcomm_L", "P1-P2-Pcomm_R",
        "PCA-BA",       "BA-VA",        "VA_Root_L",     "VA_Root_R"};
    return labels;
}

bool is_canonical_label(const std::string& label) {
    const auto& l = canonical_labels();
    return std::find(l.begin(), l.end(), label) != l.end();
}

void LandmarkSet::validate(const VesselNetwork* net) const {
    std::set<int> used;
    for (const auto& [label, id] : assignments) {
        if (!is_canonical_label(label)) throw Error(ErrorKind::Landmark, "unknown landmark label '" + label + "'");
        if (!used.insert(id).second) throw Error(ErrorKind::Landmark, "node " + std::to_string(id) + " is assigned to more than one label");
        if (net && !net->find_node(id))
            throw Error(ErrorKind::Landmark, "landmark " + label + " refers to node " + std::to_string(id) + " which is not in the network");
    }
    std::set<int> dels;
    for (int t : deleted_edges) {
        if (!dels.insert(t).second) throw Error(ErrorKind::Landmark, "trace " + std::to_string(t) + " deleted twice");
        if (net && !net->find_trace(t)) throw Error(ErrorKind::Landmark, "deleted edge " + std::to_string(t) + " is not in the network");
    }
}

LandmarkSet snap_landmarks(const VesselNetwork& net, const std::map<std::string, Vec3>& positions, double tolerance_mm) {
    const auto degrees = net.node_degrees();
    LandmarkSet out;
    std::map<int, std::string> taken;
    for (const auto& [label, p] : positions) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < net.nodes.size(); ++i) {
            if (degrees[i] == 0) continue;
            const double d = distance(to_physical(net.nodes[i].voxel, net.spacing), p);
            if (d < best_d) {
                best_d = d;
                best = net.nodes[i].id;
            }
        }
        if (best < 0 || best_d > tolerance_mm)
            throw Error(ErrorKind::Landmark, "no network node within " + std::to_string(tolerance_mm) + " mm of landmark " + label);
        if (taken.count(best))
            throw Error(ErrorKind::Landmark, "landmarks " + taken.at(best) + " and " + label + " snap to the same node " + std::to_string(best));
        taken[best] = label;
        out.assignments[label] = best;
    }
    return out;
}

ClassificationConfig ClassificationConfig::defaults() {
    ClassificationConfig c;
    for (const std::string side : {"L", "R"}) {
        c.segments.push_back({"ICA_" + side, "ICA_Root_" + side, "ICA-MCA-ACA_" + side, {"Pcomm-ICA_" + side}, false});
        c.segments.push_back({"M1_" + side, "ICA-MCA-ACA_" + side, "M1-M2_" + side, {}, false});
        c.segments.push_back({"A1_" + side, "ICA-MCA-ACA_" + side, "A1-A2_" + side, {}, true});
        c.segments.push_back({"Pcomm_" + side, "Pcomm-ICA_" + side, "P1-P2-Pcomm_" + side, {}, true});
        c.segments.push_back({"P1_" + side, "PCA-BA", "P1-P2-Pcomm_" + side, {}, true});
        c.segments.push_back({"VA_" + side, "VA_Root_" + side, "BA-VA", {}, false});
    }
    c.segments.push_back({"Acomm", "A1-A2_L", "A1-A2_R", {}, true});
    c.segments.push_back({"BA", "BA-VA", "PCA-BA", {}, false});
    c.subnetworks = {{"MCA_L", {"M1-M2_L"}},
                     {"MCA_R", {"M1-M2_R"}},
                     {"ACA", {"A1-A2_L", "A1-A2_R"}},
                     {"PCA_L", {"P1-P2-Pcomm_L"}},
                     {"PCA_R", {"P1-P2-Pcomm_R"}}};
    return c;
}

std::vector<std::string> ClassificationConfig::mandatory_labels() const {
    std::set<std::string> out;
    for (const auto& s : segments)
        if (!s.fault_tolerant) {
            out.insert(s.from);
            out.insert(s.to);
        }
    return {out.begin(), out.end()};
}

void ClassificationConfig::validate() const {
    std::set<std::string> names;
    for (const auto& s : segments) {
        if (s.name.empty() || s.from.empty() || s.to.empty()) throw Error(ErrorKind::Parameter, "segment definitions need name, from and to");
        if (s.from == s.to) throw Error(ErrorKind::Parameter, "segment " + s.name + " starts and ends at the same landmark");
        if (!names.insert(s.name).second) throw Error(ErrorKind::Parameter, "duplicate artery name " + s.name);
    }
    for (const auto& s : subnetworks) {
        if (s.roots.empty()) throw Error(ErrorKind::Parameter, "subnetwork " + s.name + " has no roots");
        if (!names.insert(s.name).second) throw Error(ErrorKind::Parameter, "duplicate artery name " + s.name);
    }
    for (const std::string reserved : {"Proximal", "Distal"})
        if (names.count(reserved)) throw Error(ErrorKind::Parameter, reserved + " is a reserved group name");
}

const SegmentEntry* DynamicGraphTable::find_segment(const std::string& name) const {
    for (const auto& s : segments)
        if (s.name == name) return &s;
    return nullptr;
}

const SubnetworkEntry* DynamicGraphTable::find_subnetwork(const std::string& name) const {
    for (const auto& s : subnetworks)
        if (s.name == name) return &s;
    return nullptr;
}

DynamicGraphTable apply_landmarks(const VesselNetwork& net, const LandmarkSet& lm, const ClassificationConfig& cfg) {
    cfg.validate();
    lm.validate(&net);

    std::vector<std::string> missing;
    for (const auto& label : cfg.mandatory_labels())
        if (!lm.assignments.count(label)) missing.push_back(label);
    if (!missing.empty()) {
        std::string msg = "missing mandatory landmarks:";
        for (const auto& m : missing) msg += " " + m;
        throw Error(ErrorKind::IncompleteLandmarks, msg);
    }

    DynamicGraphTable table;
    std::vector<int> keep;
    for (const auto& [label, id] : lm.assignments) keep.push_back(id);
    table.network = lm.deleted_edges.empty() ? net : remove_traces(net, lm.deleted_edges, keep);
    const VesselNetwork& g = table.network;
    for (const auto& [label, id] : lm.assignments)
        if (!g.find_node(id)) throw Error(ErrorKind::Landmark, "landmark " + label + " lost its node after edge deletion");

    std::vector<double> lengths;
    for (const auto& t : g.traces) lengths.push_back(trace_length_mm(t, g.spacing));
    std::set<int> landmark_nodes(keep.begin(), keep.end());

    std::map<int, std::string> trace_owner;
    for (const auto& def : cfg.segments) {
        SegmentEntry e;
        e.name = def.name;
        const auto a = lm.assignments.find(def.from);
        const auto b = lm.assignments.find(def.to);
        std::optional<Route> route;
        if (a != lm.assignments.end() && b != lm.assignments.end()) {
            std::set<int> blocked = landmark_nodes;
            blocked.erase(a->second);
            blocked.erase(b->second);
            for (const auto& v : def.via) {
                auto it = lm.assignments.find(v);
                if (it != lm.assignments.end()) blocked.erase(it->second);
            }
            route = shortest_route(g, lengths, a->second, b->second, blocked);
        }
        if (!route) {
            if (!def.fault_tolerant) {
                throw Error(ErrorKind::Landmark, "no path between " + def.from + " and " + def.to + " for artery " + def.name);
            }
            table.segments.push_back(std::move(e));
            continue;
        }
        e.present = true;
        e.node_path.push_back(route->steps.front().node);
        for (std::size_t i = 1; i < route->steps.size(); ++i) {
            const auto& st = route->steps[i];
            const GraphTrace* t = g.find_trace(st.trace);
            e.trace_ids.push_back(st.trace);
            e.reversed.push_back(t->start != e.node_path.back());
            e.node_path.push_back(st.node);
            auto [it, fresh] = trace_owner.emplace(st.trace, def.name);
            if (!fresh) {
                throw Error(ErrorKind::Ambiguity, "arteries " + it->second + " and " + def.name + " both resolve to trace " +
                                                      std::to_string(st.trace));
            }
        }
        table.segments.push_back(std::move(e));
    }

    std::set<int> claimed;
    for (const auto& [t, owner] : trace_owner) claimed.insert(t);
    for (const auto& def : cfg.subnetworks) {
        SubnetworkEntry e;
        e.name = def.name;
        for (const auto& r : def.roots) {
            auto it = lm.assignments.find(r);
            if (it != lm.assignments.end()) e.root_nodes.push_back(it->second);
        }
        std::set<int> roots(e.root_nodes.begin(), e.root_nodes.end());
        std::set<int> seen(roots.begin(), roots.end());
        std::queue<int> q;
        for (int r : e.root_nodes) q.push(r);
        std::set<int> mine;
        while (!q.empty()) {
            const int node = q.front();
            q.pop();
            if (!roots.count(node) && landmark_nodes.count(node)) continue;
            for (const auto& t : g.traces) {
                if (t.start != node && t.end != node) continue;
                if (claimed.count(t.id)) continue;
                claimed.insert(t.id);
                mine.insert(t.id);
                for (int other : {t.start, t.end})
                    if (seen.insert(other).second) q.push(other);
            }
        }
        e.trace_ids.assign(mine.begin(), mine.end());
        e.present = !e.root_nodes.empty() && !e.trace_ids.empty();
        table.subnetworks.push_back(std::move(e));
    }
    return table;
}

}  // namespace vascnet
