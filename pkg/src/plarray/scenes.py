"""Bundled synthetic scenes and transmitter-height presets.

Two stand-in environments ship with the package: a medium office-like room
(facets: window, whiteboard, back wall, floor) and a large corridor-like
space (left/right walls, back wall, floor).  The height presets give the
per-position transmitter heights used with each environment family.
"""

from importlib import resources

from .fileio import load_environment

UE_HEIGHTS_MEDIUM = {"M1": 1.546, "M2": 0.895, "M3": 2.235, "M4": 1.478, "M5": 1.202}
UE_HEIGHTS_LARGE = {"L1": 1.145, "L2": 1.317, "L3": 1.162, "L4": 1.590, "L5": 1.592}
UE_HEIGHTS = {**UE_HEIGHTS_MEDIUM, **UE_HEIGHTS_LARGE}

# default transmitter ground positions (x, y) for each scene family
DEFAULT_UE_XY = {"medium_like": (3.0, 0.4), "large_like": (8.0, -0.3)}

BUILTIN_SCENES = ("medium_like", "large_like")


def scene_path(name: str) -> str:
    """Filesystem path of a bundled scene JSON."""
    if name not in BUILTIN_SCENES:
        raise KeyError(f"unknown scene {name!r}; available: {BUILTIN_SCENES}")
    return str(resources.files("plarray").joinpath(f"data/{name}.json"))


def load_scene(name: str):
    return load_environment(scene_path(name))


def medium_like():
    return load_scene("medium_like")


def large_like():
    return load_scene("large_like")


def ue_position(preset: str, scene: str = None, xy=None):
    """Transmitter position from a height preset plus ground coordinates."""
    h = UE_HEIGHTS[preset]
    if xy is None:
        scene = scene or ("medium_like" if preset.startswith("M") else "large_like")
        xy = DEFAULT_UE_XY[scene]
    return (float(xy[0]), float(xy[1]), h)
