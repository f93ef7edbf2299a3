# SPDX-License-Identifier: Apache-2.0
"""Regenerates the replay transcripts and golden scripts under assets/.

The transcripts emulate the chat sessions the pipeline replays in tests:
a task-decomposition response followed by one script per subtask, plus the
debugging-loop and gripper-selection sessions.
"""

import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
ASSETS = ROOT / "assets"

PARTS = ["Base", "Kingpin", "Hanger", "Nut", "Axle", "Wheel", "Bearing"]

# Table-I order for the gripper-selection experiment
TABLE_ORDER = ["Kingpin", "Wheel", "Bearing", "Nut", "Base", "Axle", "Hanger"]

DLD = {
    "Kingpin": "Kingpin-Bolt-91257A662-Zinc-Plated-Hex-Head-Screw",
    "Wheel": "Powell-Peralta-90a-art-bones-wheel",
    "Bearing": "Hardcore-Bearing",
    "Nut": "Kingpin-Nut-93298A135-Medium-Strength-Steel-Nylon-Insert-Flange-Locknut",
    "Base": "Aera-Baseplate-Pneumatic-Fixture-v26",
    "Axle": "Aera-Trucks-4140-Axle-+4MM",
    "Hanger": "Area-K4-Hanger",
}

GRIPPER = {
    "Base": "Custom Baseplate Gripper",
    "Kingpin": "Custom Kingpin Gripper",
    "Hanger": "All-Purpose Gripper",
    "Nut": "Ratcheting Gripper",
    "Axle": "All-Purpose Gripper",
    "Wheel": "All-Purpose Gripper",
    "Bearing": "All-Purpose Gripper",
}

INSERT_TARGET = {
    "Kingpin": "Base",
    "Hanger": "Base",
    "Nut": "Kingpin",
    "Axle": "Hanger",
    "Wheel": "Axle",
    "Bearing": "Wheel",
}


def detect_script(part):
    return f'''def main(workcell):
    """Detect the {part} and report its pose."""
    # ask the camera where the part currently is
    pose = workcell.detect("{part}")
    print("{part} at", pose)
'''


def pick_script(part, gripper):
    return f'''def main(workcell):
    """Pick up the {part} from the kit."""
    robot = workcell.get_robot("robot_left")
    # select the tool suited to this part
    robot.attach_gripper("{gripper}")
    pose = workcell.detect("{part}")
    grasp = pose @ workcell.grasp_offset("{gripper}").inverse()
    # approach from above, then descend to the grasp point
    robot.move_cartesian(grasp.translated(0.0, 0.0, 0.2))
    robot.move_cartesian(grasp)
    robot.pick("{part}")
    robot.retract()
'''


def place_base_script():
    return '''def main(workcell):
    """Place the Base in the vise."""
    robot = workcell.get_robot("robot_left")
    # the assembly origin frame is anchored at the vise
    anchor = workcell.station_pose("vise")
    target = anchor @ workcell.design_pose("Base")
    robot.retract()
    robot.place("Base", target)
    robot.retract()
'''


def insert_script(part, target):
    return f'''def main(workcell):
    """Insert the {part} on the {target}."""
    robot = workcell.get_robot("robot_left")
    # seat the held part at its design pose relative to the {target}
    robot.retract()
    robot.insert("{part}", "{target}")
    robot.retract()
'''


def fenced(text, info=""):
    return f"```{info}\n{text}```"


def golden_plan():
    plan = []
    for part in PARTS:
        plan.append({"subtask": f"Detect the {part}", "behavior": "Detect", "parts": [part]})
        plan.append({"subtask": f"Pick up the {part}", "behavior": "Pick", "parts": [part]})
        if part == "Base":
            plan.append({"subtask": "Place the Base in the vise", "behavior": "Place", "parts": ["Base"]})
        else:
            target = INSERT_TARGET[part]
            plan.append({
                "subtask": f"Insert the {part} on the {target}",
                "behavior": "Insert",
                "parts": [part, target],
            })
    return plan


def golden_transcript():
    entries = [{
        "expect_contains": ["Assemble the Skateboard Truck"],
        "response": "Here is the subtask plan.\n" + fenced(json.dumps(golden_plan(), indent=2) + "\n", "json"),
    }]
    for item in golden_plan():
        part = item["parts"][0]
        if item["behavior"] == "Detect":
            script = detect_script(part)
        elif item["behavior"] == "Pick":
            script = pick_script(part, GRIPPER[part])
        elif item["behavior"] == "Place":
            script = place_base_script()
        else:
            script = insert_script(part, item["parts"][1])
        entries.append({"expect_contains": [item["subtask"]], "response": fenced(script)})
    return entries


def gripper_transcript(names, wrong_first_kingpin):
    """One pick session per part, in Table-I order."""
    entries = []
    for part in TABLE_ORDER:
        name = names[part]
        if part == "Kingpin" and wrong_first_kingpin:
            entries.append({
                "expect_contains": [f"Pick up the {name}"],
                "response": fenced(pick_script(name, "All-Purpose Gripper")),
            })
            entries.append({
                "expect_contains": ["GripperMismatch", "All-Purpose Gripper"],
                "response": fenced(pick_script(name, "Custom Kingpin Gripper")),
            })
        else:
            entries.append({
                "expect_contains": [f"Pick up the {name}"],
                "response": fenced(pick_script(name, GRIPPER[part])),
            })
    return entries


def debug_loop_transcript():
    v1 = '''def main(workcell):
    """Move the robot to 100 random positions."""
    robot = workcell.get_robot("robot_left")
    raise Exception("early exception raised on purpose")
    for i in range(100):
        print("Generating a wild transform")
        dx = random_uniform(-2.0, 2.0)
        dy = random_uniform(-2.0, 2.0)
        dz = random_uniform(-2.0, 2.0)
        target = robot.tcp_pose.translated(dx, dy, dz)
        robot.move_cartesian(target)
'''
    v2 = '''def main(workcell):
    """Move the robot to 100 random positions."""
    robot = workcell.get_robot("robot_left")
    # raise Exception("early exception raised on purpose")
    for i in range(100):
        print("Generating a wild transform")
        dx = random_uniform(-2.0, 2.0)
        dy = random_uniform(-2.0, 2.0)
        dz = random_uniform(-2.0, 2.0)
        target = robot.tcp_pose.translated(dx, dy, dz)
        robot.move_cartesian(target)
'''
    v3 = '''def main(workcell):
    """Move the robot to 100 random positions."""
    robot = workcell.get_robot("robot_left")
    # raise Exception("early exception raised on purpose")
    for i in range(100):
        print("Generating a wild transform")
        dx = random_uniform(-0.2, 0.2)
        dy = random_uniform(-0.2, 0.2)
        dz = random_uniform(-0.2, 0.2)
        target = robot.tcp_pose.translated(dx, dy, dz)
        try:
            robot.move_cartesian(target)
        except Exception:
            print("skipping unreachable position")
'''
    return [
        {"expect_contains": ["Move the robot to 100 random positions"], "response": fenced(v1)},
        {"expect_contains": ["Exception: early exception raised on purpose"], "response": fenced(v2)},
        {"expect_contains": ["MotionException", "unreachable position"], "response": fenced(v3)},
    ], v1


def exhaustion_transcript(max_attempts=5):
    plan = [{"subtask": "Pick up the Kingpin", "behavior": "Pick", "parts": ["Kingpin"]}]
    entries = [{
        "expect_contains": ["Pick the kingpin"],
        "response": fenced(json.dumps(plan, indent=2) + "\n", "json"),
    }]
    entries.append({
        "expect_contains": ["Pick up the Kingpin"],
        "response": fenced(pick_script("Kingpin", "All-Purpose Gripper")),
    })
    for _ in range(max_attempts - 1):
        entries.append({
            "expect_contains": ["GripperMismatch"],
            "response": fenced(pick_script("Kingpin", "All-Purpose Gripper")),
        })
    return entries


def stale_draft_transcript():
    # two drafts generated up front, then the regeneration of draft 2 after
    # the live state was moved out from under it
    s1 = pick_script("Kingpin", "Custom Kingpin Gripper")
    s2 = insert_script("Kingpin", "Base")
    return [
        {"expect_contains": ["Pick up the Kingpin"], "response": fenced(s1)},
        {"expect_contains": ["Insert the Kingpin on the Base"], "response": fenced(s2)},
        {"expect_contains": ["Insert the Kingpin on the Base"], "response": fenced(s2)},
    ]


def tda_only_transcript():
    return [{
        "expect_contains": ["Assemble the Skateboard Truck"],
        "response": fenced(json.dumps(golden_plan(), indent=2) + "\n", "json"),
    }]


def write(path, data):
    path.write_text(json.dumps(data, indent=2) + "\n")
    print(f"wrote {path.relative_to(ROOT)}")


def main():
    transcripts = ASSETS / "transcripts"
    transcripts.mkdir(exist_ok=True)
    write(transcripts / "golden_truck.json", golden_transcript())
    write(transcripts / "gripper_gld.json",
          gripper_transcript({p: p for p in PARTS}, wrong_first_kingpin=False))
    write(transcripts / "gripper_dld.json", gripper_transcript(DLD, wrong_first_kingpin=True))
    debug_entries, flawed_example = debug_loop_transcript()
    write(transcripts / "debug_loop.json", debug_entries)
    write(transcripts / "exhaustion.json", exhaustion_transcript())
    write(transcripts / "stale_draft.json", stale_draft_transcript())
    write(transcripts / "tda_only.json", tda_only_transcript())

    scripts = ASSETS / "scripts"
    scripts.mkdir(exist_ok=True)
    (scripts / "flawed_random_motion.wcs").write_text(flawed_example)
    v2 = debug_entries[1]["response"].split("```\n")[1].rsplit("```", 1)[0]
    (scripts / "random_motion_unreachable.wcs").write_text(v2)
    (scripts / "pick_kingpin_bolt.wcs").write_text(pick_script("Kingpin", "Custom Kingpin Gripper"))
    (scripts / "place_kingpin_on_baseplate.wcs").write_text(
        '''def main(workcell):
    """Place Kingpin Bolt on Baseplate."""
    robot = workcell.get_robot("robot_left")
    # locate the baseplate as it sits in the vise
    base_now = workcell.detect("Base")
    # kingpin target: its design pose expressed relative to the baseplate
    base_design = workcell.design_pose("Base")
    kingpin_design = workcell.design_pose("Kingpin")
    target = base_now @ base_design.inverse() @ kingpin_design
    # move clear, place, and retract again
    robot.retract()
    robot.place("Kingpin", target)
    robot.retract()
''')
    (scripts / "insert_part_on_kingpin.wcs").write_text(
        '''def main(workcell):
    """Insert Part on Kingpin Bolt."""
    robot = workcell.get_robot("robot_left")
    # fetch the nut that fastens onto the kingpin
    robot.attach_gripper("Ratcheting Gripper")
    pose = workcell.detect("Nut")
    grasp = pose @ workcell.grasp_offset("Ratcheting Gripper").inverse()
    robot.move_cartesian(grasp.translated(0.0, 0.0, 0.2))
    robot.move_cartesian(grasp)
    robot.pick("Nut")
    robot.retract()
    robot.insert("Nut", "Kingpin")
    robot.retract()
''')
    print("wrote golden scripts")


if __name__ == "__main__":
    main()
