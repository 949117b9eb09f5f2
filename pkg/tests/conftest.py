import json

import pytest

from mip.domain import load_map


def make_doc(true_rows, human_rows=None, robot_rows=None, fog_rows=None,
             start=None, goal=None, size=None):
    """Assemble a map document from char-matrix rows.

    Human/robot view rows default to the accurate view implied by the true
    layer (slippery cells marked 's', everything else '.').
    """
    size = size or len(true_rows)
    accurate = ["".join("s" if ch == "~" else "." for ch in row) for row in true_rows]
    if start is None:
        start = next((r, row.index("A")) for r, row in enumerate(true_rows) if "A" in row)
    if goal is None:
        goal = next((r, row.index("G")) for r, row in enumerate(true_rows) if "G" in row)
    doc = {
        "size": size,
        "start": list(start),
        "goal": list(goal),
        "layers": {
            "true": list(true_rows),
            "human": list(human_rows or accurate),
            "robot": list(robot_rows or accurate),
            "fog": list(fog_rows or ["." * size] * size),
        },
    }
    return json.dumps(doc)


TRUE4 = [
    "A..~",
    ".H..",
    "....",
    "~..G",
]
HUMAN4 = [
    "...s",
    "....",
    "..s.",  # false positive at (2,2)
    "s...",
]
ROBOT4 = [
    ".s.s",  # false positive at (0,1)
    "....",
    "....",
    "s...",
]


@pytest.fixture
def grid4():
    return load_map(make_doc(TRUE4, HUMAN4, ROBOT4), name="t4")


@pytest.fixture
def open4():
    """Hazard-free 4x4 board with accurate views."""
    rows = ["A...", "....", "....", "...G"]
    return load_map(make_doc(rows), name="open4")


# An 8x8 with a winding safe route along the top and right edges plus decoy
# pockets; one view error each (both false positives on free cells).
TRUE8 = [
    "A.......",
    ".~~~~~..",
    ".~...~..",
    ".~.~.~~.",
    ".~.~....",
    ".~.~~~~.",
    "...~....",
    "..~~..G.",
]


def make_grid8():
    human = ["".join("s" if ch == "~" else "." for ch in row) for row in TRUE8]
    robot = [r for r in human]
    # one matching error each: human believes (0,4) slippery, robot believes (6,1)
    human[0] = human[0][:4] + "s" + human[0][5:]
    robot[6] = robot[6][:1] + "s" + robot[6][2:]
    fog = ["." * 8] * 8
    return load_map(make_doc(TRUE8, human, robot, fog), name="t8")


@pytest.fixture
def grid8():
    return make_grid8()
