#pragma once

// JSON records and CSV series for traces, phase profiles, certificates,
// existence reports and orbit graphs.

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rotnum/error.hpp"
#include "rotnum/flow.hpp"
#include "rotnum/nms.hpp"
#include "rotnum/orbit.hpp"
#include "rotnum/rotation.hpp"

namespace rotnum {

using Json = nlohmann::json;

inline std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// CSV ------------------------------------------------------------------------

inline void write_trace_csv(std::ostream& os, const PullbackTrace& tr, const std::string& meta) {
    os << "# " << meta << '\n';
    os << 't';
    const auto n = tr.points.empty() ? 0 : tr.points.front().size();
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << (i + 1);
    os << ",a,b,c,rho,theta,theta_dot\n";
    for (std::size_t k = 0; k < tr.size(); ++k) {
        os << format17(tr.times[k]);
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << format17(tr.points[k][i]);
        os << ',' << format17(tr.a[k]) << ',' << format17(tr.b[k]) << ',' << format17(tr.c[k]) << ','
           << format17(tr.rho[k]) << ',' << format17(tr.theta[k]) << ',' << format17(tr.theta_dot[k]) << '\n';
    }
}

inline void write_phase_csv(std::ostream& os, const PhaseProfile& prof, const std::string& meta) {
    os << "# " << meta << '\n' << "eta,phi\n";
    for (std::size_t k = 0; k < prof.etas.size(); ++k) os << format17(prof.etas[k]) << ',' << format17(prof.phis[k]) << '\n';
}

inline void write_homotopy_csv(std::ostream& os, const HomotopyCertificate& cert, const std::string& meta) {
    os << "# " << meta << '\n' << "t,psi0,psi1\n";
    for (std::size_t k = 0; k < cert.t.size(); ++k) {
        os << format17(cert.t[k]) << ',' << format17(cert.psi0[k]) << ',' << format17(cert.psi1[k]) << '\n';
    }
}

/// Columns of a CSV with a header row; lines starting with '#' are skipped.
inline std::map<std::string, std::vector<double>> read_csv_columns(std::istream& in) {
    std::map<std::string, std::vector<double>> cols;
    std::vector<std::string> names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (names.empty()) {
            names = fields;
            for (const auto& name : names) cols[name];
            continue;
        }
        if (fields.size() != names.size()) {
            throw ParseError("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(names.size()) + " (line " + std::to_string(line_no) + ")",
                             line_no);
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(fields[i], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0) throw ParseError("non-numeric CSV field '" + fields[i] + "'", line_no);
            cols[names[i]].push_back(v);
        }
    }
    if (names.empty()) throw ParseError("CSV has no header row", line_no);
    return cols;
}

struct AngleSeries {
    std::vector<double> t;
    std::vector<double> theta;
};

inline AngleSeries read_angle_csv(std::istream& in) {
    auto cols = read_csv_columns(in);
    if (!cols.count("t") || !cols.count("theta")) throw ParseError("angle CSV needs columns 't' and 'theta'", 0);
    return {std::move(cols["t"]), std::move(cols["theta"])};
}

// JSON -----------------------------------------------------------------------

inline Json to_json(const RotationResult& r, Verdict verdict) {
    return {{"orbit", r.orbit_label},
            {"eta", r.eta},
            {"rot", r.rot},
            {"verdict", to_string(verdict)},
            {"samples", r.summary.samples},
            {"min_rho", r.summary.min_rho},
            {"min_abs_theta_dot", r.summary.min_abs_theta_dot},
            {"theta_dot_sign", r.summary.theta_dot_sign}};
}

inline Json orbit_report(const ClosedOrbit& o, const OrbitClass& c) {
    return {{"label", o.label},
            {"p", to_std(o.p)},
            {"T", o.T},
            {"defect", o.closure_defect},
            {"class", to_string(c.kind)},
            {"kind", to_string(c.kind)},
            {"parameter", c.parameter},
            {"trace", c.trace_value},
            {"convention", to_string(c.convention)}};
}

inline Json to_json(const PhaseProfile& p, const std::string& orbit) {
    return {{"orbit", orbit},
            {"samples", p.etas.size()},
            {"phi0", p.phis.empty() ? 0.0 : p.phis.front()},
            {"maxrot", p.maxrot},
            {"argmax_eta", p.argmax_eta},
            {"refined", p.refined},
            {"min_phi", p.min_phi},
            {"max_offset", p.max_offset},
            {"min_offset", p.min_offset},
            {"wrap_defect", p.wrap_defect}};
}

inline Json to_json(const GenerationCertificate& c, const std::string& orbit, double eta) {
    return {{"orbit", orbit},
            {"eta", eta},
            {"verdict", to_string(c.verdict)},
            {"min_abs_theta_dot", c.min_abs_theta_dot},
            {"witness_time", c.witness_time},
            {"min_theta_dot", c.min_theta_dot},
            {"max_theta_dot", c.max_theta_dot}};
}

inline Json to_json(const ExistenceReport& r) {
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"label", row.label},
                        {"index", row.index},
                        {"class", to_string(row.orbit_class.kind)},
                        {"parameter", row.orbit_class.parameter},
                        {"trace", row.orbit_class.trace_value},
                        {"rot", row.rot},
                        {"maxrot", row.maxrot},
                        {"argmax_eta", row.argmax_eta},
                        {"min_offset", row.min_offset},
                        {"pass", row.pass}});
    }
    Json j = {{"decision", r.decision},
              {"vacuous", r.vacuous},
              {"threshold", r.threshold},
              {"candidate", r.candidate},
              {"attachment_order", r.attachment_order},
              {"collar_turns", r.collar_turns},
              {"rows", rows},
              {"notes", r.notes}};
    if (!r.sweep.empty()) {
        Json sweep = Json::array();
        for (const auto& e : r.sweep) sweep.push_back({{"candidate", e.candidate}, {"decision", e.decision}});
        j["sweep"] = sweep;
    }
    return j;
}

inline Json to_json(const HomotopyCertificate& c) {
    return {{"samples", c.t.size()},
            {"epsilon", c.epsilon},
            {"min_derivative", c.min_derivative},
            {"start", c.psi1.front()},
            {"end", c.psi1.back()}};
}

/// {nodes: [{label, index}], edges: [[i, j]]}; edge endpoints are node
/// positions or labels.
inline OrbitGraph graph_from_json(const Json& j) {
    OrbitGraph g;
    try {
        for (const auto& n : j.at("nodes")) g.nodes.push_back({n.at("label").get<std::string>(), n.value("index", 0)});
        auto endpoint = [&](const Json& e) -> std::size_t {
            if (e.is_string()) {
                const auto label = e.get<std::string>();
                for (std::size_t k = 0; k < g.nodes.size(); ++k)
                    if (g.nodes[k].label == label) return k;
                throw GraphError("edge references unknown node '" + label + "'", {});
            }
            const auto v = e.get<long long>();
            if (v < 0) throw GraphError("negative node position in edge", {});
            return static_cast<std::size_t>(v);
        };
        if (j.contains("edges")) {
            for (const auto& e : j.at("edges")) {
                if (!e.is_array() || e.size() != 2) throw GraphError("edges must be pairs", {});
                g.edges.emplace_back(endpoint(e[0]), endpoint(e[1]));
            }
        }
    } catch (const Json::exception& e) {
        throw GraphError(std::string("malformed orbit graph: ") + e.what(), {});
    }
    return g;
}

inline Json graph_to_json(const OrbitGraph& g) {
    Json nodes = Json::array(), edges = Json::array();
    for (const auto& n : g.nodes) nodes.push_back({{"label", n.label}, {"index", n.index}});
    for (const auto& [i, j] : g.edges) edges.push_back({i, j});
    return {{"nodes", nodes}, {"edges", edges}};
}

/// Either a bare array of expression strings or {"candidates": [...]}.
inline std::vector<std::string> candidates_from_json(const Json& j) {
    try {
        const Json& list = j.is_object() ? j.at("candidates") : j;
        return list.get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
        throw SceneError(std::string("malformed candidate list: ") + e.what());
    }
}

}  // namespace rotnum
