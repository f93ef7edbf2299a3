// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace wcs {

struct ApiMethod {
    std::string name;
    int arity = 0;  // receiver excluded
    std::string doc;
};

struct ApiBuiltin {
    std::string name;
    int min_args = 0;
    int max_args = 0;  // -1 = variadic
    std::string doc;
};

/// Script-visible signature catalog, shared by the static checker, the
/// interpreter, and the SGA's API reference prompt.
struct ApiCatalog {
    std::vector<ApiMethod> methods;
    std::vector<ApiBuiltin> builtins;

    const ApiMethod* find_method(const std::string& name) const {
        for (const auto& m : methods) {
            if (m.name == name) return &m;
        }
        return nullptr;
    }

    const ApiBuiltin* find_builtin(const std::string& name) const {
        for (const auto& b : builtins) {
            if (b.name == name) return &b;
        }
        return nullptr;
    }

    static ApiCatalog builtin_default() {
        ApiCatalog c;
        c.methods = {
            {"get_robot", 1, "workcell.get_robot(name) -> robot: access a robot by name."},
            {"detect", 1, "workcell.detect(part) -> pose: observed pose of a part."},
            {"design_pose", 1, "workcell.design_pose(part) -> pose: part design pose in the assembly origin frame."},
            {"station_pose", 1, "workcell.station_pose(name) -> pose: station pose in the world frame."},
            {"grasp_offset", 1, "workcell.grasp_offset(gripper) -> pose: TCP-to-part transform used when grasping."},
            {"move_cartesian", 1,
             "robot.move_cartesian(pose): linear TCP motion; raises MotionException for unreachable targets and "
             "CollisionError when the swept path hits a body."},
            {"attach_gripper", 1, "robot.attach_gripper(name): exchange the mounted gripper at the tool rack."},
            {"pick", 1,
             "robot.pick(part): grasp the part next to the TCP; raises GripperMismatch when the mounted gripper "
             "cannot handle the part's class."},
            {"place", 2, "robot.place(part, pose): move the held part to the pose and release it."},
            {"insert", 2,
             "robot.insert(part, target_part): seat the held part at its design pose relative to an adjacent "
             "part, then release it."},
            {"retract", 0, "robot.retract(): move the TCP to the robot's retracted pose."},
            {"inverse", 0, "pose.inverse() -> pose: rigid inverse."},
            {"translated", 3, "pose.translated(dx, dy, dz) -> pose: world-frame positional offset."},
        };
        c.builtins = {
            {"range", 1, 3, "range(stop) / range(start, stop[, step]): integer sequence for `for` loops."},
            {"len", 1, 1, "len(value) -> number: length of a list or string."},
            {"print", 0, -1, "print(...): write values to the run log."},
            {"random_uniform", 2, 2, "random_uniform(lo, hi) -> number: uniform draw from the workcell RNG."},
            {"translation", 3, 3, "translation(x, y, z) -> pose: identity rotation at the given point."},
        };
        return c;
    }

    static ApiCatalog from_json_text(const std::string& text) {
        nlohmann::json root = nlohmann::json::parse(text);
        ApiCatalog c;
        for (const auto& mj : root.at("methods")) {
            c.methods.push_back({mj.at("name").get<std::string>(), mj.at("arity").get<int>(),
                                 mj.value("doc", std::string{})});
        }
        for (const auto& bj : root.at("builtins")) {
            c.builtins.push_back({bj.at("name").get<std::string>(), bj.at("min_args").get<int>(),
                                  bj.at("max_args").get<int>(), bj.value("doc", std::string{})});
        }
        return c;
    }

    static ApiCatalog from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open api catalog: " + path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return from_json_text(text);
    }

    std::string to_json_text() const {
        nlohmann::json root;
        root["methods"] = nlohmann::json::array();
        for (const auto& m : methods) {
            root["methods"].push_back({{"name", m.name}, {"arity", m.arity}, {"doc", m.doc}});
        }
        root["builtins"] = nlohmann::json::array();
        for (const auto& b : builtins) {
            root["builtins"].push_back(
                {{"name", b.name}, {"min_args", b.min_args}, {"max_args", b.max_args}, {"doc", b.doc}});
        }
        return root.dump(2);
    }

    /// Reference text used as the D entry of the SGA context.
    std::string render_reference() const {
        std::string out = "Workcell script API reference:\n";
        for (const auto& m : methods) {
            out += "- " + m.doc + "\n";
        }
        out += "Builtins:\n";
        for (const auto& b : builtins) {
            out += "- " + b.doc + "\n";
        }
        out += "Attributes: robot.tcp_pose (pose), robot.name (string), pose.x, pose.y, pose.z (meters).\n";
        out += "Poses compose with the @ operator; scripts define def main(workcell).\n";
        return out;
    }
};

}  // namespace wcs
