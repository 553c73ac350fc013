"""The trace column schema and the distributed file roles.

The authoritative column list lives in ``data/column_schema.csv`` next to
this module; everything here is a thin loader over it plus the handful of
structural constants the readers and writers share.

Flat layout: one CSV per run named ``results_<testcase_id>_r<run_id>.csv``
holding the common columns, the VUT group, and one repetition of the
actor/obstacle/controller group per entity (the group column names repeat
verbatim; groups are told apart by their leading id column).

Distributed layout: one folder per run named ``<testcase_id>_r<run_id>``
holding up to seven role files, VUT_status.csv being the only mandatory
one.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from importlib import resources

GROUPS = ("common", "vut", "actor", "obstacle", "controller")

# A repeated group starts at its id column and runs through its last
# column; the flat reader slices the header with these.
GROUP_LEADERS = {"Actor_Id": "actor", "Obst_Id": "obstacle",
                 "Traffic_Ctrl_Id": "controller"}
GROUP_LAST = {"actor": "Actor_TTC", "obstacle": "Obst_NTD",
              "controller": "Traffic_Ctrl_phase"}

ROLE_VUT = "VUT_status.csv"
ROLE_ACTORS_TRUE = "Environment_actors_true.csv"
ROLE_ACTORS_PERCEIVED = "Environment_actors_perceived.csv"
ROLE_OBSTACLES_TRUE = "Environment_obstacles_true.csv"
ROLE_OBSTACLES_PERCEIVED = "Environment_obstacles_perceived.csv"
ROLE_LIGHTS_TRUE = "TrafficLight_true.csv"
ROLE_LIGHTS_PERCEIVED = "TrafficLight_perceived.csv"

ROLE_FILES = (
    ROLE_VUT,
    ROLE_ACTORS_TRUE,
    ROLE_ACTORS_PERCEIVED,
    ROLE_OBSTACLES_TRUE,
    ROLE_OBSTACLES_PERCEIVED,
    ROLE_LIGHTS_TRUE,
    ROLE_LIGHTS_PERCEIVED,
)

FLAT_NAME_RE = re.compile(r"^results_(?P<tc>.+)_r(?P<run>\d{1,3})\.csv$")
DIR_NAME_RE = re.compile(r"^(?P<tc>.+)_r(?P<run>\d{1,3})$")


def flat_filename(testcase_id: str, run_id: int) -> str:
    return f"results_{testcase_id}_r{run_id:02d}.csv"


def dir_name(testcase_id: str, run_id: int) -> str:
    return f"{testcase_id}_r{run_id:02d}"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    group: str
    kind: str           # float | int | bool | tag | id | code | array | ttc
    unit: str
    required: str       # yes | no | alt_pos
    allow_empty: bool
    description: str


def _load_columns() -> tuple:
    cols = []
    ref = resources.files("vistakit").joinpath("data/column_schema.csv")
    with ref.open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            cols.append(ColumnSpec(
                name=row["name"],
                group=row["group"],
                kind=row["kind"],
                unit=row["unit"],
                required=row["required"],
                allow_empty=row["allow_empty"] == "yes",
                description=row["description"],
            ))
    return tuple(cols)


COLUMNS = _load_columns()
BY_NAME = {c.name: c for c in COLUMNS}


def group_columns(group: str) -> tuple:
    return tuple(c for c in COLUMNS if c.group == group)


def required_names(group: str) -> tuple:
    return tuple(c.name for c in group_columns(group) if c.required == "yes")


# Column names per distributed role file, in writing order.  The
# perceived role files carry only the overlay channel keyed by id.
ROLE_COLUMNS = {
    ROLE_VUT: ("Time", "Step_number") + tuple(c.name for c in group_columns("vut")),
    ROLE_ACTORS_TRUE: ("Time", "Step_number") + tuple(
        c.name for c in group_columns("actor") if c.name != "Actor_bbox_perceived"
    ),
    ROLE_ACTORS_PERCEIVED: ("Time", "Step_number", "Actor_Id", "Actor_bbox_perceived"),
    ROLE_OBSTACLES_TRUE: ("Time", "Step_number") + tuple(
        c.name for c in group_columns("obstacle") if c.name != "Obst_poly_perceived"
    ),
    ROLE_OBSTACLES_PERCEIVED: ("Time", "Step_number", "Obst_Id", "Obst_poly_perceived"),
    ROLE_LIGHTS_TRUE: ("Time", "Step_number") + tuple(
        c.name for c in group_columns("controller")
    ),
    ROLE_LIGHTS_PERCEIVED: ("Time", "Step_number") + tuple(
        c.name for c in group_columns("controller")
    ),
}
