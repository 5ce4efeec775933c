"""Building thermal mapping: simulated sensor networks, field reconstruction and X3D scenes."""

import json as _json

from ._core import (
    Archive,
    Building,
    Scenario,
    ThermomapError,
    decode_sample,
    encode_sample,
    ground_truth,
    load_building,
    load_scenario,
    nominal_polycount,
    open_archive,
    place_sensors,
    reconstruct,
    scenario_preset,
    sha256_hex,
    simulate,
    truth_scene,
)
from ._core import validate as _validate

__all__ = [
    "Archive",
    "Building",
    "Scenario",
    "ThermomapError",
    "decode_sample",
    "encode_sample",
    "ground_truth",
    "legend",
    "load_building",
    "load_scenario",
    "nominal_polycount",
    "open_archive",
    "place_sensors",
    "reconstruct",
    "scenario_preset",
    "sha256_hex",
    "simulate",
    "truth_scene",
    "validate",
]


def validate(config_text, plane="z=1.5", width=128, height=128, strategy="corners8", t=0.0):
    """Truth vs reconstruction on a plane; returns the report as a dict."""
    return _json.loads(_validate(config_text, plane, width, height, strategy, t))


def legend(scene):
    """Colour legend of a scene dict returned by Archive.scene or truth_scene."""
    return _json.loads(scene["legend"])
