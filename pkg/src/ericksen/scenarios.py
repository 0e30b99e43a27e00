"""Experiment presets and the INI scenario format."""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigurationError
from .flow import FlowConfig, FlowProblem, initial_point_defect, initial_state
from .mesh import BoundarySpec, Mesh, build_box_mesh_3d, build_rect_mesh_2d, select_boundary
from .potential import Potential, quartic_well

S_STAR = 0.750025

BOUNDARY_KINDS = {
    # kind: (gamma_s faces, gamma_n faces)
    "radial_all": (("all",), ("all",)),
    "plane_z": (("zmin", "zmax"), ("zmin", "zmax")),
    "radial_sides": (("xmin", "xmax", "ymin", "ymax"), ("xmin", "xmax", "ymin", "ymax")),
}


@dataclass
class Scenario:
    name: str
    dim: int
    resolution: Tuple[int, ...]
    box: Tuple[Tuple[float, float], ...]
    kappa: float
    boundary: str
    potential: str = "quartic"
    s_star: float = S_STAR
    dt: float = 0.02
    defect_location: Tuple[float, float] = (0.25, 0.25)
    defect_eps: float = 0.05
    tilt: float = 0.0
    max_steps: int = 2000
    stop_tol: Optional[float] = None
    rel_tol: float = 1e-10
    stride: int = 10

    def validate(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.resolution) != self.dim or len(self.box) != self.dim:
            raise ConfigurationError("resolution and box must have one entry per dimension")
        if self.boundary not in BOUNDARY_KINDS:
            raise ConfigurationError(f"unknown boundary kind {self.boundary!r}")
        if self.dim == 2 and self.boundary != "radial_all":
            raise ConfigurationError(f"boundary kind {self.boundary!r} needs a 3D mesh")
        if self.potential not in ("quartic", "none"):
            raise ConfigurationError(f"unknown potential {self.potential!r}")
        if self.stride < 1:
            raise ConfigurationError("stride must be >= 1")

    # construction ----------------------------------------------------------

    def build_mesh(self) -> Mesh:
        self.validate()
        try:
            if self.dim == 2:
                return build_rect_mesh_2d(*self.resolution, box=self.box)
            return build_box_mesh_3d(*self.resolution, box=self.box)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

    def build_potential(self) -> Potential:
        return quartic_well(enabled=self.potential == "quartic")

    def boundary_data(self, mesh: Mesh):
        gs, gn = BOUNDARY_KINDS[self.boundary]
        sets = select_boundary(mesh, BoundarySpec(gs, gn))
        g = np.full(len(sets["gamma_s"]), self.s_star)
        x = mesh.vertices[sets["gamma_n"]]
        q = np.zeros((len(x), mesh.dim))
        if self.boundary == "plane_z":
            bottom = np.isin(sets["gamma_n"], mesh.boundary_tags["zmin"])
            q[bottom, 0] = 1.0
            q[~bottom, 1] = 1.0
        else:
            center = np.mean(np.asarray(self.box, dtype=float)[:2], axis=1)
            d = x[:, :2] - center
            q[:, :2] = d / np.linalg.norm(d, axis=1, keepdims=True)
        return sets, g, q

    def build(self, **overrides):
        """Mesh, flow problem and initial ``(s, n)``."""
        mesh = self.build_mesh()
        sets, g, q = self.boundary_data(mesh)
        config = FlowConfig(kappa=self.kappa, dt=self.dt, potential=self.build_potential(),
                            gamma_s=sets["gamma_s"], g=g, gamma_n=sets["gamma_n"], q=q,
                            max_steps=self.max_steps, stop_tol=self.stop_tol,
                            rel_tol=self.rel_tol)
        for key, value in overrides.items():
            setattr(config, key, value)
        problem = FlowProblem(mesh, config)
        n0 = initial_point_defect(mesh, self.defect_location, self.defect_eps, self.tilt)
        s0, n0 = initial_state(problem, n0, self.s_star)
        return problem, s0, n0

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


_UNIT2 = ((0.0, 1.0), (0.0, 1.0))
_UNIT3 = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))

PRESETS = {
    "point2d": Scenario("point2d", 2, (64, 64), _UNIT2, kappa=2.0, boundary="radial_all",
                        potential="quartic", max_steps=1000),
    "plane3d": Scenario("plane3d", 3, (16, 16, 16), _UNIT3, kappa=0.2, boundary="plane_z",
                        potential="none"),
    # side-wall runs share a small out-of-plane seed: an exactly planar
    # director is a fixed point of the flow and could never escape
    "fluting": Scenario("fluting", 3, (16, 16, 16), _UNIT3, kappa=2.0, boundary="radial_sides",
                        potential="none", tilt=0.1),
    "propeller": Scenario("propeller", 3, (16, 16, 16), _UNIT3, kappa=0.1,
                          boundary="radial_sides", potential="none", tilt=0.1),
    "floating": Scenario("floating", 3, (21, 15, 21), ((0.0, 1.0), (0.0, 0.7143), (0.0, 1.0)),
                         kappa=0.1, boundary="radial_sides", potential="none", tilt=0.1),
}


def preset(name: str) -> Scenario:
    try:
        return dataclasses.replace(PRESETS[name])
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# INI format ----------------------------------------------------------------

def _fmt_tuple(values):
    return ", ".join(repr(v) for v in values)


def _parse_floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _parse_box(text):
    parts = [p.strip() for p in text.split(";") if p.strip()]
    box = []
    for p in parts:
        lo, hi = _parse_floats(p.replace(":", " "))
        box.append((lo, hi))
    return tuple(box)


def to_ini(scn: Scenario) -> str:
    cp = configparser.ConfigParser()
    cp["scenario"] = {"name": scn.name}
    cp["mesh"] = {
        "dim": str(scn.dim),
        "resolution": ", ".join(str(r) for r in scn.resolution),
        "box": "; ".join(f"{lo!r}:{hi!r}" for lo, hi in scn.box),
    }
    cp["model"] = {"kappa": repr(scn.kappa), "potential": scn.potential, "s_star": repr(scn.s_star)}
    cp["boundary"] = {"kind": scn.boundary}
    cp["initial"] = {
        "defect_location": _fmt_tuple(scn.defect_location),
        "defect_eps": repr(scn.defect_eps),
        "tilt": repr(scn.tilt),
    }
    cp["flow"] = {
        "dt": repr(scn.dt),
        "max_steps": str(scn.max_steps),
        "stop_tol": "auto" if scn.stop_tol is None else repr(scn.stop_tol),
        "rel_tol": repr(scn.rel_tol),
    }
    cp["output"] = {"stride": str(scn.stride)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def from_ini(text: str) -> Scenario:
    """Parse a scenario file.

    ``[scenario] base = <preset>`` starts from a preset; any other key
    overrides it. Without a base every section must be complete.
    """
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc

    def get(section, key):
        return cp.get(section, key, fallback=None)

    base = get("scenario", "base")
    fields = dataclasses.asdict(preset(base)) if base else {}
    parsers = {
        ("scenario", "name"): ("name", str),
        ("mesh", "dim"): ("dim", int),
        ("mesh", "resolution"): ("resolution", lambda t: tuple(int(float(v)) for v in t.replace(",", " ").split())),
        ("mesh", "box"): ("box", _parse_box),
        ("model", "kappa"): ("kappa", float),
        ("model", "potential"): ("potential", str.strip),
        ("model", "s_star"): ("s_star", float),
        ("boundary", "kind"): ("boundary", str.strip),
        ("initial", "defect_location"): ("defect_location", _parse_floats),
        ("initial", "defect_eps"): ("defect_eps", float),
        ("initial", "tilt"): ("tilt", float),
        ("flow", "dt"): ("dt", float),
        ("flow", "max_steps"): ("max_steps", int),
        ("flow", "stop_tol"): ("stop_tol", lambda t: None if t.strip() == "auto" else float(t)),
        ("flow", "rel_tol"): ("rel_tol", float),
        ("output", "stride"): ("stride", int),
    }
    known = set(parsers) | {("scenario", "base")}
    for section in cp.sections():
        for key in cp[section]:
            if (section, key) not in known:
                raise ConfigurationError(f"unknown config key [{section}] {key}")
    for (section, key), (name, parse) in parsers.items():
        raw = get(section, key)
        if raw is None:
            continue
        try:
            fields[name] = parse(raw)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for [{section}] {key}: {raw!r}") from exc
    try:
        scn = Scenario(**fields)
    except TypeError as exc:
        raise ConfigurationError(f"incomplete scenario: {exc}") from exc
    scn.resolution = tuple(scn.resolution)
    scn.box = tuple(tuple(b) for b in scn.box)
    scn.validate()
    return scn
