#include "linkforge/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "linkforge/errors.hpp"

namespace linkforge {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_svg(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

ordered_json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    ordered_json j = ordered_json::parse(in, nullptr, false);
    if (j.is_discarded()) throw IoError("malformed JSON in " + path);
    return j;
}

// Axis-aligned bounds with a 5% margin, widened when degenerate.
struct Bounds {
    double lo_x = 0.0, lo_y = 0.0, hi_x = 1.0, hi_y = 1.0;
    bool any = false;

    void add(Vec2 p) {
        if (!any) {
            lo_x = hi_x = p.x;
            lo_y = hi_y = p.y;
            any = true;
            return;
        }
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    void finish() {
        const double w = hi_x - lo_x, h = hi_y - lo_y;
        double pad = 0.05 * std::max(w, h);
        if (pad <= 0.0) pad = 0.5;
        lo_x -= pad;
        hi_x += pad;
        lo_y -= pad;
        hi_y += pad;
    }
    double diag() const {
        const double w = hi_x - lo_x, h = hi_y - lo_y;
        return std::max(w, h);
    }
};

// Mechanical y points up, SVG y points down.
std::string svg_open(const Bounds& b) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt_svg(b.lo_x) << " "
       << fmt_svg(-b.hi_y) << " " << fmt_svg(b.hi_x - b.lo_x) << " " << fmt_svg(b.hi_y - b.lo_y)
       << "\">\n";
    return os.str();
}

void svg_polyline(std::ostringstream& os, const std::vector<Vec2>& pts, bool closed,
                  const char* stroke, double width) {
    if (pts.empty()) return;
    os << "<path d=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
        os << (i == 0 ? "M " : "L ") << fmt_svg(pts[i].x) << " " << fmt_svg(-pts[i].y) << " ";
    if (closed) os << "Z";
    os << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt_svg(width)
       << "\" stroke-linejoin=\"round\" stroke-linecap=\"round\"/>\n";
}

constexpr const char* kLayerPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                         "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

} // namespace

// --------------------------------------------------------------------- JSON

ordered_json mechanism_to_json(const Mechanism& m) {
    ordered_json joints = ordered_json::array();
    for (const Joint& j : m.joints)
        joints.push_back(ordered_json{
            {"x", j.pos.x}, {"y", j.pos.y}, {"fixed", j.is_fixed}, {"target", j.is_target}});
    ordered_json links = ordered_json::array();
    for (const auto& [a, b] : m.linkages) links.push_back(ordered_json::array({a, b}));
    return ordered_json{{"joints", std::move(joints)}, {"linkages", std::move(links)}};
}

Mechanism mechanism_from_json(const ordered_json& j) {
    Mechanism m;
    try {
        for (const auto& jj : j.at("joints")) {
            Joint joint;
            joint.pos = {jj.at("x").get<double>(), jj.at("y").get<double>()};
            joint.is_fixed = jj.at("fixed").get<bool>();
            joint.is_target = jj.at("target").get<bool>();
            m.joints.push_back(joint);
        }
        for (const auto& l : j.at("linkages"))
            m.linkages.push_back({l.at(0).get<int>(), l.at(1).get<int>()});
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad mechanism JSON: ") + e.what());
    }
    if (m.joint_count() > 1) m.joints[1].is_actuated = true;
    m.solution_order = compute_solution_order(m);
    return m;
}

void save_mechanism(const std::string& path, const Mechanism& m) {
    write_text_file(path, mechanism_to_json(m).dump(2) + "\n");
}

Mechanism load_mechanism(const std::string& path) { return mechanism_from_json(parse_json_file(path)); }

ordered_json curve_to_json(const Curve& c) {
    ordered_json pts = ordered_json::array();
    for (Vec2 p : c.points) pts.push_back(ordered_json::array({p.x, p.y}));
    return ordered_json{{"points", std::move(pts)}, {"closed", c.closed}};
}

Curve curve_from_json(const ordered_json& j) {
    Curve c;
    try {
        for (const auto& p : j.at("points"))
            c.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        c.closed = j.at("closed").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad curve JSON: ") + e.what());
    }
    return c;
}

void save_curve_json(const std::string& path, const Curve& c) {
    write_text_file(path, curve_to_json(c).dump() + "\n");
}

Curve load_curve_json(const std::string& path) { return curve_from_json(parse_json_file(path)); }

// ---------------------------------------------------------------------- CSV

void save_curve_csv(const std::string& path, const Curve& c) {
    std::ostringstream os;
    os << "x,y\n";
    for (Vec2 p : c.points) os << fmt17(p.x) << "," << fmt17(p.y) << "\n";
    write_text_file(path, os.str());
}

Curve load_curve_csv(const std::string& path, bool closed) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    Curve c;
    c.closed = closed;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line == "x,y") continue; // headerless files fall through to parsing
        }
        const char* s = line.c_str();
        char* end = nullptr;
        const double x = std::strtod(s, &end);
        if (end == s || *end != ',') throw IoError("bad CSV row in " + path + ": " + line);
        s = end + 1;
        const double y = std::strtod(s, &end);
        if (end == s) throw IoError("bad CSV row in " + path + ": " + line);
        c.points.push_back({x, y});
    }
    return c;
}

void save_trace_csv(const std::string& path, const TraceBatch& trace, int b) {
    std::ostringstream os;
    os << "t,joint,x,y\n";
    for (int t = 0; t < trace.T; ++t)
        for (int n = 0; n < trace.N; ++n) {
            const Vec2 p = trace.pos(b, n, t);
            os << t << "," << n << "," << fmt17(p.x) << "," << fmt17(p.y) << "\n";
        }
    write_text_file(path, os.str());
}

// ------------------------------------------------------------------ dataset

void save_dataset(const std::string& path, const std::vector<DatasetItem>& items) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const DatasetItem& it : items) {
        ordered_json rec{{"id", it.id},
                         {"mechanism", mechanism_to_json(it.mech)},
                         {"curve", curve_to_json(it.curve)}};
        out << rec.dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<DatasetItem> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<DatasetItem> items;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ordered_json rec = ordered_json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw IoError("malformed dataset record in " + path);
        DatasetItem it;
        try {
            it.id = rec.at("id").get<std::uint64_t>();
            it.mech = mechanism_from_json(rec.at("mechanism"));
            it.curve = curve_from_json(rec.at("curve"));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(std::string("bad dataset record: ") + e.what());
        }
        items.push_back(std::move(it));
    }
    return items;
}

// ------------------------------------------------------------------ reports

ordered_json metric_report_json(const CombinedResult& r, double rotation) {
    return ordered_json{{"chamfer", r.chamfer},
                        {"ordered", r.ordered.value},
                        {"combined", r.value},
                        {"shift", r.ordered.shift},
                        {"direction", r.ordered.reversed ? "reversed" : "forward"},
                        {"rotation", rotation}};
}

ordered_json layer_assignment_to_json(const LayerAssignment& a) {
    return ordered_json{{"z", a.z}, {"M", a.M}, {"feasible", a.feasible}};
}

// ---------------------------------------------------------------------- SVG

std::string curve_svg(const Curve& c) {
    Bounds b;
    for (Vec2 p : c.points) b.add(p);
    b.finish();
    std::ostringstream os;
    os << svg_open(b);
    svg_polyline(os, c.points, c.closed, "#1f77b4", 0.008 * b.diag());
    os << "</svg>\n";
    return os.str();
}

std::string mechanism_svg(const Mechanism& m, const TraceBatch* trace, int b,
                          const LayerAssignment* layers) {
    Bounds bb;
    for (const Joint& j : m.joints) bb.add(j.pos);
    std::vector<Vec2> path;
    if (trace && trace->feasible[b]) {
        path = joint_trace(*trace, b, m.target_joint());
        for (Vec2 p : path) bb.add(p);
    }
    bb.finish();
    const double unit = bb.diag();

    std::ostringstream os;
    os << svg_open(bb);
    svg_polyline(os, path, true, "#c0c0c0", 0.006 * unit);
    for (std::size_t i = 0; i < m.linkages.size(); ++i) {
        const auto& [a, c] = m.linkages[i];
        const char* color = "#333333";
        if (layers && i < layers->z.size())
            color = kLayerPalette[layers->z[i] % int(std::size(kLayerPalette))];
        os << "<line x1=\"" << fmt_svg(m.joints[a].pos.x) << "\" y1=\""
           << fmt_svg(-m.joints[a].pos.y) << "\" x2=\"" << fmt_svg(m.joints[c].pos.x)
           << "\" y2=\"" << fmt_svg(-m.joints[c].pos.y) << "\" stroke=\"" << color
           << "\" stroke-width=\"" << fmt_svg(0.012 * unit) << "\" stroke-linecap=\"round\"/>\n";
    }
    for (const Joint& j : m.joints) {
        os << "<circle cx=\"" << fmt_svg(j.pos.x) << "\" cy=\"" << fmt_svg(-j.pos.y)
           << "\" r=\"" << fmt_svg(0.015 * unit) << "\" fill=\""
           << (j.is_fixed ? "#000000" : "#ffffff") << "\" stroke=\"#000000\" stroke-width=\""
           << fmt_svg(0.004 * unit) << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// -------------------------------------------------------------------- files

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace linkforge
