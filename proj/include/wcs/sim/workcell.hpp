// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wcs/assembly.hpp"
#include "wcs/pose.hpp"

namespace wcs {

enum class SimErrorKind { MotionException, CollisionError, GripperMismatch, GraspFault, StateError };

inline const char* to_string(SimErrorKind k) {
    switch (k) {
        case SimErrorKind::MotionException: return "MotionException";
        case SimErrorKind::CollisionError: return "CollisionError";
        case SimErrorKind::GripperMismatch: return "GripperMismatch";
        case SimErrorKind::GraspFault: return "GraspFault";
        case SimErrorKind::StateError: return "StateError";
    }
    return "SimError";
}

class SimError : public std::runtime_error {
public:
    SimError(SimErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

    SimErrorKind kind() const { return kind_; }
    const std::string& message() const { return message_; }

private:
    SimErrorKind kind_;
    std::string message_;
};

struct SimConfig {
    double grasp_tolerance = 0.005;   // meters, translation
    double insert_tolerance = 1e-6;   // meters
    int sweep_steps = 64;             // interpolation samples, endpoints included
    double tcp_half_extent = 0.075;   // the moving TCP box is a 0.15 m cube
    double detect_sigma = 0.0;        // Gaussian translation noise, meters
    std::uint64_t seed = 0;
};

enum class OpType { Move, AttachGripper, Pick, Place, Insert, Detect };

inline const char* to_string(OpType t) {
    switch (t) {
        case OpType::Move: return "move";
        case OpType::AttachGripper: return "attach_gripper";
        case OpType::Pick: return "pick";
        case OpType::Place: return "place";
        case OpType::Insert: return "insert";
        case OpType::Detect: return "detect";
    }
    return "?";
}

/// Record of one successful state-changing operation; behavior effect
/// checks read these back after a script run.
struct OpEvent {
    OpType type = OpType::Move;
    std::string robot;
    std::string part;         // part or gripper name, depending on type
    std::string target_part;  // insert only
    Pose target;

    bool operator==(const OpEvent&) const = default;
};

struct HeldBy {
    std::string robot;
    Pose grasp_offset;  // TCP -> part, fixed at pick time

    bool operator==(const HeldBy&) const = default;
};

struct PartState {
    Pose pose;
    std::optional<HeldBy> held;

    bool operator==(const PartState&) const = default;
};

struct RobotState {
    std::string name;
    Pose tcp_pose;
    Aabb workspace;
    std::optional<std::string> mounted_gripper;
    Pose retract_pose;

    bool operator==(const RobotState& o) const {
        return name == o.name && tcp_pose == o.tcp_pose && workspace.min == o.workspace.min &&
               workspace.max == o.workspace.max && mounted_gripper == o.mounted_gripper &&
               retract_pose == o.retract_pose;
    }
};

/// Exactly one of slot / robot is set.
struct GripperLocation {
    std::optional<int> slot;
    std::optional<std::string> robot;

    bool operator==(const GripperLocation&) const = default;
};

class Workcell;

/// Deep snapshot; restore yields a state structurally equal to the
/// snapshotted one.
struct Checkpoint {
    std::shared_ptr<const Workcell> state;
    std::string label;
};

/// Deterministic kinematic workcell: robots, grippers, parts, stations.
/// Value-semantic; copies share the immutable assembly/cell specs.
class Workcell {
public:
    Workcell(AssemblySpec assembly, WorkcellSpec cell, SimConfig config = {})
        : assembly_(std::make_shared<const AssemblySpec>(std::move(assembly))),
          cell_(std::make_shared<const WorkcellSpec>(std::move(cell))),
          config_(config),
          rng_(config.seed) {
        validate_workcell(*cell_, *assembly_);
        if (config_.sweep_steps < 2) throw std::invalid_argument("sweep_steps must be at least 2");
        for (const auto& robot : cell_->robots) {
            RobotState rs;
            rs.name = robot.name;
            rs.tcp_pose = robot.tcp_pose;
            rs.workspace = robot.workspace;
            rs.retract_pose = robot.retract_pose;
            robots_[robot.name] = std::move(rs);
        }
        for (std::size_t i = 0; i < cell_->tool_rack.size(); ++i) {
            const std::string& name = cell_->tool_rack[i].gripper.name;
            home_slots_[name] = static_cast<int>(i);
            rack_[name] = GripperLocation{static_cast<int>(i), std::nullopt};
        }
        for (const auto& [name, pose] : cell_->initial_part_locations) {
            parts_[name] = PartState{pose, std::nullopt};
        }
    }

    const AssemblySpec& assembly() const { return *assembly_; }
    const WorkcellSpec& cell() const { return *cell_; }
    const SimConfig& config() const { return config_; }
    const std::map<std::string, RobotState>& robots() const { return robots_; }
    const std::map<std::string, PartState>& parts() const { return parts_; }
    const std::map<std::string, GripperLocation>& rack() const { return rack_; }
    const std::vector<OpEvent>& op_log() const { return op_log_; }
    std::int64_t step_counter() const { return step_counter_; }

    /// Monotone mutation counter; any state change advances it.
    std::uint64_t version() const { return version_; }

    bool operator==(const Workcell& o) const {
        return robots_ == o.robots_ && parts_ == o.parts_ && rack_ == o.rack_ &&
               step_counter_ == o.step_counter_ && version_ == o.version_ && op_log_ == o.op_log_ &&
               rng_ == o.rng_;
    }
    bool operator!=(const Workcell& o) const { return !(*this == o); }

    // --- script-visible queries --------------------------------------------

    const RobotState& robot(const std::string& name) const {
        auto it = robots_.find(name);
        if (it == robots_.end()) throw SimError(SimErrorKind::StateError, "unknown robot \"" + name + "\"");
        return it->second;
    }

    Pose design_pose(const std::string& part) const {
        const PartSpec* spec = assembly_->find(part);
        if (!spec) throw SimError(SimErrorKind::StateError, "unknown part \"" + part + "\"");
        return spec->design_pose;
    }

    Pose station_pose(const std::string& name) const {
        const StationSpec* st = cell_->find_station(name);
        if (!st) throw SimError(SimErrorKind::StateError, "unknown station \"" + name + "\"");
        return st->pose;
    }

    Pose grasp_offset_of(const std::string& gripper) const {
        const GripperSpec* g = cell_->find_gripper(gripper);
        if (!g) throw SimError(SimErrorKind::StateError, "unknown gripper \"" + gripper + "\"");
        return g->grasp_offset;
    }

    // --- script-visible operations -----------------------------------------

    void move_cartesian(const std::string& robot_name, const Pose& target) {
        RobotState& robot = require_robot(robot_name);
        if (!robot.workspace.contains(target.tx(), target.ty(), target.tz())) {
            throw SimError(SimErrorKind::MotionException,
                           "unreachable position: target (" + format_double(target.tx()) + ", " +
                               format_double(target.ty()) + ", " + format_double(target.tz()) +
                               ") is outside the workspace of \"" + robot_name + "\"");
        }
        if (auto hit = swept_hit(robot_name, robot.tcp_pose, target)) {
            throw SimError(SimErrorKind::CollisionError,
                           "collision between \"" + robot_name + "\" and \"" + *hit + "\"");
        }
        robot.tcp_pose = target;
        settle_held_parts(robot_name);
        ++step_counter_;
        log_event({OpType::Move, robot_name, "", "", target});
    }

    void retract(const std::string& robot_name) {
        const Pose target = require_robot(robot_name).retract_pose;
        move_cartesian(robot_name, target);
    }

    void attach_gripper(const std::string& robot_name, const std::string& gripper) {
        RobotState& robot = require_robot(robot_name);
        auto loc = rack_.find(gripper);
        if (loc == rack_.end()) {
            throw SimError(SimErrorKind::StateError, "unknown gripper \"" + gripper + "\"");
        }
        if (loc->second.robot && *loc->second.robot == robot_name) return;  // already mounted here
        if (loc->second.robot) {
            throw SimError(SimErrorKind::StateError,
                           "gripper \"" + gripper + "\" is already mounted on \"" + *loc->second.robot + "\"");
        }
        if (auto held = held_part(robot_name)) {
            throw SimError(SimErrorKind::GraspFault,
                           "cannot change gripper while holding \"" + *held + "\"");
        }
        if (robot.mounted_gripper) {
            rack_[*robot.mounted_gripper] = GripperLocation{home_slots_.at(*robot.mounted_gripper), std::nullopt};
        }
        rack_[gripper] = GripperLocation{std::nullopt, robot_name};
        robot.mounted_gripper = gripper;
        ++step_counter_;
        log_event({OpType::AttachGripper, robot_name, gripper, "", Pose{}});
    }

    void pick(const std::string& robot_name, const std::string& part_name) {
        RobotState& robot = require_robot(robot_name);
        PartState& part = require_part(part_name);
        if (!robot.mounted_gripper) {
            throw SimError(SimErrorKind::GraspFault, "no gripper mounted on \"" + robot_name + "\"");
        }
        if (auto held = held_part(robot_name)) {
            throw SimError(SimErrorKind::GraspFault,
                           "robot \"" + robot_name + "\" is already holding \"" + *held + "\"");
        }
        if (part.held) {
            throw SimError(SimErrorKind::GraspFault, "part \"" + part_name + "\" is already held");
        }
        const GripperSpec& gripper = *cell_->find_gripper(*robot.mounted_gripper);
        const PartSpec& part_spec = *assembly_->find(part_name);
        if (!compatible(gripper, part_spec.part_class)) {
            throw SimError(SimErrorKind::GripperMismatch,
                           "gripper \"" + gripper.name + "\" cannot grasp part \"" + part_name +
                               "\" of class \"" + part_spec.part_class + "\"");
        }
        const Pose grasp_point = compose(part.pose, invert(gripper.grasp_offset));
        const double dist = translation_distance(robot.tcp_pose, grasp_point);
        if (dist > config_.grasp_tolerance) {
            throw SimError(SimErrorKind::GraspFault,
                           "not within grasp tolerance: TCP is " + format_double(dist) +
                               " m from the grasp point of \"" + part_name + "\"");
        }
        const Pose actual_offset = compose(invert(robot.tcp_pose), part.pose);
        part.held = HeldBy{robot_name, actual_offset};
        part.pose = compose(robot.tcp_pose, actual_offset);  // exact rigidity from here on
        ++step_counter_;
        log_event({OpType::Pick, robot_name, part_name, "", part.pose});
    }

    void place(const std::string& robot_name, const std::string& part_name, const Pose& target) {
        PartState& part = require_part(part_name);
        require_holding(robot_name, part_name, part);
        const Pose tcp_target = compose(target, invert(part.held->grasp_offset));
        move_cartesian(robot_name, tcp_target);
        part.held.reset();
        log_event({OpType::Place, robot_name, part_name, "", target});
    }

    void insert(const std::string& robot_name, const std::string& part_name, const std::string& target_part) {
        PartState& part = require_part(part_name);
        require_holding(robot_name, part_name, part);
        const PartState& anchor = require_part(target_part);
        if (!assembly_->adjacent(part_name, target_part)) {
            throw SimError(SimErrorKind::StateError, "cannot insert \"" + part_name + "\" on \"" + target_part +
                                                         "\": parts are not adjacent in the assembly");
        }
        const Pose target =
            compose(anchor.pose, compose(invert(design_pose(target_part)), design_pose(part_name)));
        const Pose tcp_target = compose(target, invert(part.held->grasp_offset));
        move_cartesian(robot_name, tcp_target);
        part.held.reset();
        log_event({OpType::Insert, robot_name, part_name, target_part, target});
    }

    Pose detect(const std::string& part_name) {
        const PartState& part = require_part(part_name);
        Pose observed = part.pose;
        if (config_.detect_sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, config_.detect_sigma);
            observed.set_translation(observed.tx() + noise(rng_), observed.ty() + noise(rng_),
                                     observed.tz() + noise(rng_));
        }
        log_event({OpType::Detect, "", part_name, "", observed});
        return observed;
    }

    double random_uniform(double lo, double hi) {
        if (!(lo <= hi)) throw SimError(SimErrorKind::StateError, "random_uniform: lo must not exceed hi");
        std::uniform_real_distribution<double> dist(lo, hi);
        ++version_;
        return dist(rng_);
    }

    // --- checkpointing ------------------------------------------------------

    Checkpoint checkpoint(std::string label = "") const {
        return Checkpoint{std::make_shared<const Workcell>(*this), std::move(label)};
    }

    void restore(const Checkpoint& cp) { *this = *cp.state; }

    /// Max deviation of any held part from compose(tcp, grasp_offset).
    double rigidity_error() const {
        double worst = 0.0;
        for (const auto& [name, part] : parts_) {
            (void)name;
            if (!part.held) continue;
            const Pose expected = compose(robots_.at(part.held->robot).tcp_pose, part.held->grasp_offset);
            worst = std::max(worst, pose_distance(part.pose, expected));
        }
        return worst;
    }

    // --- state dump (debugging interface) ------------------------------------

    nlohmann::json state_json() const {
        nlohmann::json root;
        root["step_counter"] = step_counter_;
        root["robots"] = nlohmann::json::object();
        for (const auto& [name, robot] : robots_) {
            nlohmann::json rj;
            rj["tcp_pose"] = detail::pose_to_json(robot.tcp_pose);
            if (robot.mounted_gripper) rj["mounted_gripper"] = *robot.mounted_gripper;
            root["robots"][name] = std::move(rj);
        }
        root["parts"] = nlohmann::json::object();
        for (const auto& [name, part] : parts_) {
            nlohmann::json pj;
            pj["pose"] = detail::pose_to_json(part.pose);
            if (part.held) {
                pj["held_by"] = part.held->robot;
                pj["grasp_offset"] = detail::pose_to_json(part.held->grasp_offset);
            }
            root["parts"][name] = std::move(pj);
        }
        root["rack"] = nlohmann::json::object();
        for (const auto& [name, loc] : rack_) {
            root["rack"][name] = loc.slot ? nlohmann::json(*loc.slot) : nlohmann::json(*loc.robot);
        }
        std::ostringstream rng_text;
        rng_text << rng_;
        root["rng"] = rng_text.str();
        return root;
    }

    void load_state_json(const nlohmann::json& root) {
        step_counter_ = root.value("step_counter", std::int64_t{0});
        if (root.contains("robots")) {
            for (auto it = root["robots"].begin(); it != root["robots"].end(); ++it) {
                RobotState& robot = require_robot(it.key());
                robot.tcp_pose = detail::parse_pose(it.value().at("tcp_pose"), "robots." + it.key() + ".tcp_pose");
                if (it.value().contains("mounted_gripper")) {
                    robot.mounted_gripper = it.value()["mounted_gripper"].get<std::string>();
                } else {
                    robot.mounted_gripper.reset();
                }
            }
        }
        if (root.contains("parts")) {
            parts_.clear();
            for (auto it = root["parts"].begin(); it != root["parts"].end(); ++it) {
                PartState part;
                part.pose = detail::parse_pose(it.value().at("pose"), "parts." + it.key() + ".pose");
                if (it.value().contains("held_by")) {
                    part.held = HeldBy{it.value()["held_by"].get<std::string>(),
                                       detail::parse_pose(it.value().at("grasp_offset"),
                                                          "parts." + it.key() + ".grasp_offset")};
                }
                parts_[it.key()] = std::move(part);
            }
        }
        if (root.contains("rack")) {
            for (auto it = root["rack"].begin(); it != root["rack"].end(); ++it) {
                if (it.value().is_number_integer()) {
                    rack_[it.key()] = GripperLocation{it.value().get<int>(), std::nullopt};
                } else {
                    rack_[it.key()] = GripperLocation{std::nullopt, it.value().get<std::string>()};
                }
            }
        }
        if (root.contains("rng")) {
            std::istringstream rng_text(root["rng"].get<std::string>());
            rng_text >> rng_;
        }
        ++version_;
    }

    /// One-line-per-entity summary for the exec CLI.
    std::string summary() const {
        std::string out;
        for (const auto& [name, robot] : robots_) {
            out += "robot " + name + ": tcp=" + format_pose(robot.tcp_pose);
            out += robot.mounted_gripper ? " gripper=\"" + *robot.mounted_gripper + "\"" : " gripper=none";
            out += "\n";
        }
        for (const auto& [name, part] : parts_) {
            out += "part " + name + ": " + format_pose(part.pose);
            if (part.held) out += " held_by=" + part.held->robot;
            out += "\n";
        }
        out += "steps: " + std::to_string(step_counter_) + "\n";
        return out;
    }

private:
    RobotState& require_robot(const std::string& name) {
        auto it = robots_.find(name);
        if (it == robots_.end()) throw SimError(SimErrorKind::StateError, "unknown robot \"" + name + "\"");
        return it->second;
    }

    PartState& require_part(const std::string& name) {
        auto it = parts_.find(name);
        if (it == parts_.end()) throw SimError(SimErrorKind::StateError, "unknown part \"" + name + "\"");
        return it->second;
    }

    void require_holding(const std::string& robot_name, const std::string& part_name, const PartState& part) {
        require_robot(robot_name);
        if (!part.held || part.held->robot != robot_name) {
            throw SimError(SimErrorKind::StateError,
                           "robot \"" + robot_name + "\" is not holding \"" + part_name + "\"");
        }
    }

    std::optional<std::string> held_part(const std::string& robot_name) const {
        for (const auto& [name, part] : parts_) {
            if (part.held && part.held->robot == robot_name) return name;
        }
        return std::nullopt;
    }

    static bool compatible(const GripperSpec& gripper, const std::string& part_class) {
        if (gripper.compatible_classes.empty()) return true;  // unrestricted gripper
        for (const auto& c : gripper.compatible_classes) {
            if (c == part_class) return true;
        }
        return false;
    }

    void settle_held_parts(const std::string& robot_name) {
        const Pose& tcp = robots_.at(robot_name).tcp_pose;
        for (auto& [name, part] : parts_) {
            (void)name;
            if (part.held && part.held->robot == robot_name) {
                part.pose = compose(tcp, part.held->grasp_offset);
            }
        }
    }

    /// Collision bodies seen by a moving robot: stations, parts it is not
    /// holding, and the other robots' TCP boxes.
    std::vector<std::pair<std::string, Aabb>> collision_bodies(const std::string& moving_robot) const {
        std::vector<std::pair<std::string, Aabb>> bodies;
        for (const auto& st : cell_->stations) {
            bodies.emplace_back(st.name, Aabb::centered(st.pose.tx(), st.pose.ty(), st.pose.tz(),
                                                        st.extent[0] / 2, st.extent[1] / 2, st.extent[2] / 2));
        }
        for (const auto& [name, part] : parts_) {
            if (part.held && part.held->robot == moving_robot) continue;
            const PartSpec* spec = assembly_->find(name);
            const auto ext = spec ? spec->extent : std::array<double, 3>{0.05, 0.05, 0.05};
            bodies.emplace_back(name, Aabb::centered(part.pose.tx(), part.pose.ty(), part.pose.tz(),
                                                     ext[0] / 2, ext[1] / 2, ext[2] / 2));
        }
        for (const auto& [name, robot] : robots_) {
            if (name == moving_robot) continue;
            const double h = config_.tcp_half_extent;
            bodies.emplace_back(name, Aabb::centered(robot.tcp_pose.tx(), robot.tcp_pose.ty(),
                                                     robot.tcp_pose.tz(), h, h, h));
        }
        return bodies;
    }

    /// Point-in-inflated-box sweep over evenly spaced samples. Bodies already
    /// in contact at either endpoint are exempt (grasp and release contact).
    std::optional<std::string> swept_hit(const std::string& moving_robot, const Pose& start,
                                         const Pose& end) const {
        const auto bodies = collision_bodies(moving_robot);
        const double h = config_.tcp_half_extent;
        auto inside_inflated = [h](const Aabb& box, double x, double y, double z) {
            return x > box.min[0] - h && x < box.max[0] + h && y > box.min[1] - h && y < box.max[1] + h &&
                   z > box.min[2] - h && z < box.max[2] + h;
        };
        std::vector<bool> exempt(bodies.size());
        for (std::size_t b = 0; b < bodies.size(); ++b) {
            exempt[b] = inside_inflated(bodies[b].second, start.tx(), start.ty(), start.tz()) ||
                        inside_inflated(bodies[b].second, end.tx(), end.ty(), end.tz());
        }
        const int n = config_.sweep_steps;
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(n - 1);
            const double x = start.tx() + t * (end.tx() - start.tx());
            const double y = start.ty() + t * (end.ty() - start.ty());
            const double z = start.tz() + t * (end.tz() - start.tz());
            for (std::size_t b = 0; b < bodies.size(); ++b) {
                if (exempt[b]) continue;
                if (inside_inflated(bodies[b].second, x, y, z)) return bodies[b].first;
            }
        }
        return std::nullopt;
    }

    void log_event(OpEvent event) {
        op_log_.push_back(std::move(event));
        ++version_;
    }

    std::shared_ptr<const AssemblySpec> assembly_;
    std::shared_ptr<const WorkcellSpec> cell_;
    SimConfig config_;
    std::map<std::string, RobotState> robots_;
    std::map<std::string, PartState> parts_;
    std::map<std::string, GripperLocation> rack_;
    std::map<std::string, int> home_slots_;
    std::vector<OpEvent> op_log_;
    std::int64_t step_counter_ = 0;
    std::uint64_t version_ = 0;
    std::mt19937_64 rng_;
};

}  // namespace wcs
