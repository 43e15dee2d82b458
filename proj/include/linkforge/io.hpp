#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linkforge/curve.hpp"
#include "linkforge/layer_assign.hpp"
#include "linkforge/mechanism.hpp"
#include "linkforge/metrics.hpp"
#include "linkforge/solver.hpp"
#include "linkforge/train.hpp"

namespace linkforge {

using ordered_json = nlohmann::ordered_json;

// Mechanism JSON: {"joints":[{"x":f,"y":f,"fixed":b,"target":b}...],
// "linkages":[[i,j]...]}. Joint 1 is the actuated joint by convention, so the
// flag is implied rather than stored. Round-trips bit-exactly.
ordered_json mechanism_to_json(const Mechanism& m);
Mechanism mechanism_from_json(const ordered_json& j);
void save_mechanism(const std::string& path, const Mechanism& m);
Mechanism load_mechanism(const std::string& path);

// Curve JSON: {"points":[[x,y]...],"closed":bool}.
ordered_json curve_to_json(const Curve& c);
Curve curve_from_json(const ordered_json& j);
void save_curve_json(const std::string& path, const Curve& c);
Curve load_curve_json(const std::string& path);

// Curve CSV: header "x,y", one point per row in path order. The file does not
// record closedness, so loading takes it as a parameter.
void save_curve_csv(const std::string& path, const Curve& c);
Curve load_curve_csv(const std::string& path, bool closed = true);

// Newline-delimited JSON dataset, one record per line:
// {"id":n,"mechanism":{...},"curve":{...}}. ids are stable across save/load.
void save_dataset(const std::string& path, const std::vector<DatasetItem>& items);
std::vector<DatasetItem> load_dataset(const std::string& path);

// Trace CSV: columns t,joint,x,y for one batch row.
void save_trace_csv(const std::string& path, const TraceBatch& trace, int b);

// Metric report: {chamfer, ordered, combined, shift, direction, rotation}.
ordered_json metric_report_json(const CombinedResult& r, double rotation);

// Layer assignment: {"z":[...],"M":n,"feasible":b}.
ordered_json layer_assignment_to_json(const LayerAssignment& a);

// Standalone SVG of a curve (polyline, y flipped so +y is up).
std::string curve_svg(const Curve& c);

// SVG of a mechanism at its initial configuration: linkages as strokes
// (colored by layer when an assignment is given), joints as circles (fixed
// filled), plus the target joint's traced path when a trace row is given.
std::string mechanism_svg(const Mechanism& m, const TraceBatch* trace = nullptr, int b = 0,
                          const LayerAssignment* layers = nullptr);

// Whole-file helpers; throw IoError on any filesystem failure.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace linkforge
