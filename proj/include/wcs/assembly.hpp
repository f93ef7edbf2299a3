// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wcs/pose.hpp"
#include "wcs/text.hpp"

namespace wcs {

using json = nlohmann::json;

/// Document field missing or ill-typed; message names the JSON path.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// A part reference (adjacency, joint, location) that resolves to nothing.
class ReferenceError : public std::runtime_error {
public:
    explicit ReferenceError(const std::string& what) : std::runtime_error(what) {}
};

class UnknownPart : public std::runtime_error {
public:
    explicit UnknownPart(const std::string& what) : std::runtime_error(what) {}
};

struct Joint {
    std::string other_part;
    std::string kind;

    bool operator==(const Joint&) const = default;
};

struct PartSpec {
    std::string name;        // CAD-derived identifier (may be a serial-style DLD)
    std::string gld;         // short generic description; defaults to name
    std::string part_class;  // free-form category used for gripper compatibility
    double mass = 0.0;       // kilograms; carried for context rendering only
    Pose design_pose;        // in the shared assembly origin frame
    std::vector<std::string> adjacent;
    std::vector<Joint> joints;
    std::optional<std::string> subassembly;
    std::array<double, 3> extent{0.05, 0.05, 0.05};  // collision AABB size, meters

    bool operator==(const PartSpec&) const = default;
};

struct AssemblySpec {
    std::string assembly_name;
    Pose origin_frame;
    std::vector<PartSpec> parts;

    bool operator==(const AssemblySpec&) const = default;

    const PartSpec* find(const std::string& name) const {
        for (const auto& p : parts) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }

    bool adjacent(const std::string& a, const std::string& b) const {
        const PartSpec* p = find(a);
        if (!p) return false;
        return std::find(p->adjacent.begin(), p->adjacent.end(), b) != p->adjacent.end();
    }
};

struct GripperSpec {
    std::string name;
    std::string description;  // what parts this gripper is intended to handle
    std::vector<std::string> compatible_classes;
    Pose grasp_offset;        // TCP -> part when grasped

    bool operator==(const GripperSpec&) const = default;
};

enum class StationKind { Bin, Kit, Vise, Rack };

inline std::string to_string(StationKind k) {
    switch (k) {
        case StationKind::Bin: return "bin";
        case StationKind::Kit: return "kit";
        case StationKind::Vise: return "vise";
        case StationKind::Rack: return "rack";
    }
    return "bin";
}

struct StationSpec {
    std::string name;
    Pose pose;
    StationKind kind = StationKind::Bin;
    std::array<double, 3> extent{0.25, 0.25, 0.25};

    bool operator==(const StationSpec&) const = default;
};

struct RobotSpec {
    std::string name;
    Pose base_pose;
    Aabb workspace;   // world frame, meters
    Pose tcp_pose;    // initial TCP pose; defaults to base_pose
    Pose retract_pose;

    bool operator==(const RobotSpec& other) const {
        return name == other.name && base_pose == other.base_pose &&
               workspace.min == other.workspace.min && workspace.max == other.workspace.max &&
               tcp_pose == other.tcp_pose && retract_pose == other.retract_pose;
    }
};

struct RackSlot {
    Pose slot_pose;
    GripperSpec gripper;

    bool operator==(const RackSlot&) const = default;
};

struct WorkcellSpec {
    std::vector<RobotSpec> robots;
    std::vector<RackSlot> tool_rack;
    std::vector<StationSpec> stations;
    std::map<std::string, Pose> initial_part_locations;

    bool operator==(const WorkcellSpec&) const = default;

    const RobotSpec* find_robot(const std::string& name) const {
        for (const auto& r : robots) {
            if (r.name == name) return &r;
        }
        return nullptr;
    }

    const GripperSpec* find_gripper(const std::string& name) const {
        for (const auto& s : tool_rack) {
            if (s.gripper.name == name) return &s.gripper;
        }
        return nullptr;
    }

    const StationSpec* find_station(const std::string& name) const {
        for (const auto& s : stations) {
            if (s.name == name) return &s;
        }
        return nullptr;
    }
};

namespace detail {

inline const json& require_key(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path + "." + key + ": missing");
    return *it;
}

inline std::string get_string(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require_key(obj, key, path);
    if (!v.is_string()) throw SchemaError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline std::string get_string_or(const json& obj, const std::string& key, const std::string& path,
                                 const std::string& fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    if (!obj[key].is_string()) throw SchemaError(path + "." + key + ": expected a string");
    return obj[key].get<std::string>();
}

inline double get_number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw SchemaError(path + "." + key + ": expected a number");
    return obj[key].get<double>();
}

inline Pose parse_pose(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 16) {
        throw SchemaError(path + ": expected a 16-element row-major pose array");
    }
    std::array<double, 16> m{};
    for (std::size_t i = 0; i < 16; ++i) {
        if (!v[i].is_number()) throw SchemaError(path + "[" + std::to_string(i) + "]: expected a number");
        m[i] = v[i].get<double>();
    }
    Pose p{m};
    try {
        p.validate();
    } catch (const PoseError& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return p;
}

inline Pose get_pose(const json& obj, const std::string& key, const std::string& path) {
    return parse_pose(require_key(obj, key, path), path + "." + key);
}

inline std::array<double, 3> get_vec3_or(const json& obj, const std::string& key, const std::string& path,
                                         std::array<double, 3> fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (!v.is_array() || v.size() != 3) throw SchemaError(path + "." + key + ": expected a 3-element array");
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!v[i].is_number()) throw SchemaError(path + "." + key + "[" + std::to_string(i) + "]: expected a number");
        out[i] = v[i].get<double>();
    }
    return out;
}

inline json pose_to_json(const Pose& p) {
    json arr = json::array();
    for (double v : p.raw()) arr.push_back(v);
    return arr;
}

}  // namespace detail

/// Validates cross-references and adjacency symmetry on an already-parsed spec.
inline void validate_assembly(const AssemblySpec& spec) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < spec.parts.size(); ++i) {
        const auto& part = spec.parts[i];
        if (part.name.empty()) throw SchemaError("parts[" + std::to_string(i) + "].name: must be nonempty");
        if (!names.insert(part.name).second) {
            throw SchemaError("parts[" + std::to_string(i) + "].name: duplicate part name \"" + part.name + "\"");
        }
    }
    for (std::size_t i = 0; i < spec.parts.size(); ++i) {
        const auto& part = spec.parts[i];
        for (std::size_t j = 0; j < part.adjacent.size(); ++j) {
            if (!names.count(part.adjacent[j])) {
                throw ReferenceError("parts[" + std::to_string(i) + "].adjacent[" + std::to_string(j) +
                                     "]: unknown part \"" + part.adjacent[j] + "\"");
            }
        }
        for (std::size_t j = 0; j < part.joints.size(); ++j) {
            if (!names.count(part.joints[j].other_part)) {
                throw ReferenceError("parts[" + std::to_string(i) + "].joints[" + std::to_string(j) +
                                     "]: unknown part \"" + part.joints[j].other_part + "\"");
            }
        }
    }
    // adjacency must be symmetric across the whole assembly
    for (std::size_t i = 0; i < spec.parts.size(); ++i) {
        const auto& part = spec.parts[i];
        for (std::size_t j = 0; j < part.adjacent.size(); ++j) {
            if (!spec.adjacent(part.adjacent[j], part.name)) {
                throw ReferenceError("parts[" + std::to_string(i) + "].adjacent[" + std::to_string(j) +
                                     "]: adjacency not symmetric (\"" + part.adjacent[j] + "\" does not list \"" +
                                     part.name + "\")");
            }
        }
    }
}

/// Parses and validates an assembly document.
inline AssemblySpec load_assembly(const std::string& document) {
    json root = json::parse(document);  // precondition: syntactically valid JSON
    AssemblySpec spec;
    spec.assembly_name = detail::get_string(root, "assembly_name", "$");
    spec.origin_frame = detail::get_pose(root, "origin_frame", "$");
    const json& parts = detail::require_key(root, "parts", "$");
    if (!parts.is_array()) throw SchemaError("$.parts: expected an array");
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string path = "parts[" + std::to_string(i) + "]";
        const json& pj = parts[i];
        if (!pj.is_object()) throw SchemaError(path + ": expected an object");
        PartSpec part;
        part.name = detail::get_string(pj, "name", path);
        part.gld = detail::get_string_or(pj, "gld", path, part.name);
        part.part_class = detail::get_string(pj, "part_class", path);
        part.mass = detail::get_number_or(pj, "mass", path, 0.0);
        if (part.mass < 0) throw SchemaError(path + ".mass: must be >= 0");
        part.design_pose = detail::get_pose(pj, "design_pose", path);
        part.extent = detail::get_vec3_or(pj, "extent", path, part.extent);
        if (pj.contains("adjacent")) {
            const json& adj = pj["adjacent"];
            if (!adj.is_array()) throw SchemaError(path + ".adjacent: expected an array");
            for (std::size_t j = 0; j < adj.size(); ++j) {
                if (!adj[j].is_string()) {
                    throw SchemaError(path + ".adjacent[" + std::to_string(j) + "]: expected a string");
                }
                part.adjacent.push_back(adj[j].get<std::string>());
            }
        }
        if (pj.contains("joints")) {
            const json& joints = pj["joints"];
            if (!joints.is_array()) throw SchemaError(path + ".joints: expected an array");
            for (std::size_t j = 0; j < joints.size(); ++j) {
                const std::string jpath = path + ".joints[" + std::to_string(j) + "]";
                if (!joints[j].is_object()) throw SchemaError(jpath + ": expected an object");
                Joint joint;
                joint.other_part = detail::get_string(joints[j], "part", jpath);
                joint.kind = detail::get_string(joints[j], "kind", jpath);
                part.joints.push_back(std::move(joint));
            }
        }
        if (pj.contains("subassembly")) {
            if (!pj["subassembly"].is_string()) throw SchemaError(path + ".subassembly: expected a string");
            part.subassembly = pj["subassembly"].get<std::string>();
        }
        spec.parts.push_back(std::move(part));
    }
    validate_assembly(spec);
    return spec;
}

/// Serializes back to the document schema; load_assembly(to_json_document(s)) == s.
inline std::string to_json_document(const AssemblySpec& spec) {
    json root;
    root["assembly_name"] = spec.assembly_name;
    root["origin_frame"] = detail::pose_to_json(spec.origin_frame);
    root["parts"] = json::array();
    for (const auto& part : spec.parts) {
        json pj;
        pj["name"] = part.name;
        pj["gld"] = part.gld;
        pj["part_class"] = part.part_class;
        pj["mass"] = part.mass;
        pj["design_pose"] = detail::pose_to_json(part.design_pose);
        pj["extent"] = json::array({part.extent[0], part.extent[1], part.extent[2]});
        pj["adjacent"] = part.adjacent;
        pj["joints"] = json::array();
        for (const auto& joint : part.joints) {
            pj["joints"].push_back(json{{"part", joint.other_part}, {"kind", joint.kind}});
        }
        if (part.subassembly) pj["subassembly"] = *part.subassembly;
        root["parts"].push_back(std::move(pj));
    }
    return root.dump(2);
}

/// Replaces the GLD of every named part. Keys must match existing parts.
inline AssemblySpec annotate_gld(AssemblySpec spec, const std::map<std::string, std::string>& annotations) {
    for (const auto& [name, gld] : annotations) {
        PartSpec* found = nullptr;
        for (auto& part : spec.parts) {
            if (part.name == name) {
                found = &part;
                break;
            }
        }
        if (!found) throw UnknownPart("annotate_gld: no part named \"" + name + "\"");
        found->gld = gld;
    }
    return spec;
}

inline WorkcellSpec load_workcell(const std::string& document) {
    json root = json::parse(document);
    WorkcellSpec cell;
    const json& robots = detail::require_key(root, "robots", "$");
    if (!robots.is_array()) throw SchemaError("$.robots: expected an array");
    for (std::size_t i = 0; i < robots.size(); ++i) {
        const std::string path = "robots[" + std::to_string(i) + "]";
        const json& rj = robots[i];
        RobotSpec robot;
        robot.name = detail::get_string(rj, "name", path);
        robot.base_pose = detail::get_pose(rj, "base_pose", path);
        const json& ws = detail::require_key(rj, "workspace", path);
        robot.workspace.min = detail::get_vec3_or(ws, "min", path + ".workspace", {0, 0, 0});
        robot.workspace.max = detail::get_vec3_or(ws, "max", path + ".workspace", {0, 0, 0});
        for (std::size_t k = 0; k < 3; ++k) {
            if (robot.workspace.min[k] > robot.workspace.max[k]) {
                throw SchemaError(path + ".workspace: min exceeds max");
            }
        }
        robot.tcp_pose = rj.contains("tcp_pose") ? detail::get_pose(rj, "tcp_pose", path) : robot.base_pose;
        robot.retract_pose = rj.contains("retract_pose") ? detail::get_pose(rj, "retract_pose", path) : robot.tcp_pose;
        cell.robots.push_back(std::move(robot));
    }
    std::set<std::string> robot_names;
    for (std::size_t i = 0; i < cell.robots.size(); ++i) {
        if (!robot_names.insert(cell.robots[i].name).second) {
            throw SchemaError("robots[" + std::to_string(i) + "].name: duplicate robot name");
        }
    }
    if (root.contains("tool_rack")) {
        const json& rack = root["tool_rack"];
        if (!rack.is_array()) throw SchemaError("$.tool_rack: expected an array");
        std::set<std::string> gripper_names;
        for (std::size_t i = 0; i < rack.size(); ++i) {
            const std::string path = "tool_rack[" + std::to_string(i) + "]";
            RackSlot slot;
            slot.slot_pose = detail::get_pose(rack[i], "slot_pose", path);
            const json& gj = detail::require_key(rack[i], "gripper", path);
            slot.gripper.name = detail::get_string(gj, "name", path + ".gripper");
            slot.gripper.description = detail::get_string_or(gj, "description", path + ".gripper", "");
            slot.gripper.grasp_offset = detail::get_pose(gj, "grasp_offset", path + ".gripper");
            if (gj.contains("compatible_classes")) {
                const json& cc = gj["compatible_classes"];
                if (!cc.is_array()) throw SchemaError(path + ".gripper.compatible_classes: expected an array");
                for (const auto& c : cc) {
                    if (!c.is_string()) throw SchemaError(path + ".gripper.compatible_classes: expected strings");
                    slot.gripper.compatible_classes.push_back(c.get<std::string>());
                }
            }
            if (!gripper_names.insert(slot.gripper.name).second) {
                throw SchemaError(path + ".gripper.name: duplicate gripper name \"" + slot.gripper.name + "\"");
            }
            cell.tool_rack.push_back(std::move(slot));
        }
    }
    if (root.contains("stations")) {
        const json& stations = root["stations"];
        if (!stations.is_array()) throw SchemaError("$.stations: expected an array");
        std::set<std::string> station_names;
        for (std::size_t i = 0; i < stations.size(); ++i) {
            const std::string path = "stations[" + std::to_string(i) + "]";
            StationSpec st;
            st.name = detail::get_string(stations[i], "name", path);
            st.pose = detail::get_pose(stations[i], "pose", path);
            const std::string kind = detail::get_string(stations[i], "kind", path);
            if (kind == "bin") st.kind = StationKind::Bin;
            else if (kind == "kit") st.kind = StationKind::Kit;
            else if (kind == "vise") st.kind = StationKind::Vise;
            else if (kind == "rack") st.kind = StationKind::Rack;
            else throw SchemaError(path + ".kind: must be one of bin, kit, vise, rack");
            st.extent = detail::get_vec3_or(stations[i], "extent", path, st.extent);
            if (!station_names.insert(st.name).second) {
                throw SchemaError(path + ".name: duplicate station name \"" + st.name + "\"");
            }
            cell.stations.push_back(std::move(st));
        }
    }
    if (root.contains("initial_part_locations")) {
        const json& locs = root["initial_part_locations"];
        if (!locs.is_object()) throw SchemaError("$.initial_part_locations: expected an object");
        for (auto it = locs.begin(); it != locs.end(); ++it) {
            cell.initial_part_locations[it.key()] =
                detail::parse_pose(it.value(), "initial_part_locations." + it.key());
        }
    }
    return cell;
}

/// Every part placed in the cell must exist in the companion assembly.
inline void validate_workcell(const WorkcellSpec& cell, const AssemblySpec& assembly) {
    for (const auto& [name, pose] : cell.initial_part_locations) {
        (void)pose;
        if (!assembly.find(name)) {
            throw ReferenceError("initial_part_locations." + name + ": unknown part \"" + name + "\"");
        }
    }
}

/// Deterministic, prompt-ready textual dictionary. Parts are rendered in
/// declaration order; map keys sorted; re-rendering is byte-identical.
inline std::string render_context(const AssemblySpec& spec) {
    std::string out;
    out += "assembly: " + spec.assembly_name + "\n";
    out += "origin_frame: " + format_pose(spec.origin_frame) + "\n";
    out += "parts (" + std::to_string(spec.parts.size()) + "):\n";
    for (const auto& part : spec.parts) {
        out += "- name: " + part.name + "\n";
        out += "  gld: " + part.gld + "\n";
        out += "  class: " + part.part_class + "\n";
        out += "  mass: " + format_double(part.mass) + "\n";
        out += "  design_pose: " + format_pose(part.design_pose) + "\n";
        out += "  adjacent:";
        if (part.adjacent.empty()) {
            out += " none";
        } else {
            for (std::size_t i = 0; i < part.adjacent.size(); ++i) {
                out += (i == 0 ? " " : ", ") + part.adjacent[i];
            }
        }
        out += "\n";
        if (!part.joints.empty()) {
            out += "  joints:";
            for (std::size_t i = 0; i < part.joints.size(); ++i) {
                out += (i == 0 ? " " : ", ") + part.joints[i].other_part + ":" + part.joints[i].kind;
            }
            out += "\n";
        }
        if (part.subassembly) {
            out += "  subassembly: " + *part.subassembly + "\n";
        }
    }
    return out;
}

inline std::string render_context(const WorkcellSpec& cell) {
    std::string out = "workcell:\n";
    out += "robots (" + std::to_string(cell.robots.size()) + "):\n";
    for (const auto& robot : cell.robots) {
        out += "- name: " + robot.name + "\n";
        out += "  base_pose: " + format_pose(robot.base_pose) + "\n";
        out += "  workspace: box{min=(" + format_double(robot.workspace.min[0]) + ", " +
               format_double(robot.workspace.min[1]) + ", " + format_double(robot.workspace.min[2]) + "), max=(" +
               format_double(robot.workspace.max[0]) + ", " + format_double(robot.workspace.max[1]) + ", " +
               format_double(robot.workspace.max[2]) + ")}\n";
        out += "  retract_pose: " + format_pose(robot.retract_pose) + "\n";
    }
    out += "grippers (" + std::to_string(cell.tool_rack.size()) + "):\n";
    for (std::size_t i = 0; i < cell.tool_rack.size(); ++i) {
        const auto& slot = cell.tool_rack[i];
        out += "- name: " + slot.gripper.name + "\n";
        out += "  rack_slot: " + std::to_string(i) + "\n";
        if (!slot.gripper.description.empty()) {
            out += "  handles: " + slot.gripper.description + "\n";
        }
        out += "  compatible_classes:";
        if (slot.gripper.compatible_classes.empty()) {
            out += " any";
        } else {
            for (std::size_t j = 0; j < slot.gripper.compatible_classes.size(); ++j) {
                out += (j == 0 ? " " : ", ") + slot.gripper.compatible_classes[j];
            }
        }
        out += "\n";
        out += "  grasp_offset: " + format_pose(slot.gripper.grasp_offset) + "\n";
    }
    out += "stations (" + std::to_string(cell.stations.size()) + "):\n";
    for (const auto& st : cell.stations) {
        out += "- name: " + st.name + "\n";
        out += "  kind: " + to_string(st.kind) + "\n";
        out += "  pose: " + format_pose(st.pose) + "\n";
    }
    out += "initial_part_locations:\n";
    for (const auto& [name, pose] : cell.initial_part_locations) {
        out += "  " + name + ": " + format_pose(pose) + "\n";
    }
    return out;
}

}  // namespace wcs
