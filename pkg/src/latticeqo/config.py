"""Configuration files: nested YAML with dotted-path CLI overrides.

The schema is documented in the README; builders here turn the validated
mapping into the domain objects.  Unknown keys fail fast so typos do not
silently fall back to defaults.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ValidationError
from .calibration import (
    DEVICE_LENGTH_CM,
    CouplingModel,
    SweepConfig,
    default_coupling_model,
    fit_quadratic,
)
from .dynamics import ZGrid
from .lattice import (
    EMITTER,
    Boundary,
    EmitterSpec,
    LatticeKind,
    LatticeSpec,
    SiteLabel,
    Sublattice,
    boundary_midpoint,
    bulk_center_site,
)


def load_config(path, overrides: tuple[str, ...] = ()) -> dict:
    """Read a YAML config and apply key=value overrides on dotted paths."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ValidationError(f"config file {path} is not valid YAML: {exc}")
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ValidationError("config root must be a mapping")
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override {item!r} must look like key.path=value")
        key, _, raw = item.partition("=")
        node = cfg
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationError(f"override path {key!r} crosses a non-mapping node")
        node[parts[-1]] = yaml.safe_load(raw)
    return cfg


def _take(section: dict, key: str, default=None, required: bool = False):
    if key not in section:
        if required:
            raise ValidationError(f"missing required config field {key!r}")
        return default
    return section[key]


def _check_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValidationError(f"unknown {where} fields: {sorted(unknown)}")


def lattice_spec_from(cfg: dict) -> LatticeSpec:
    sec = cfg.get("lattice")
    if not isinstance(sec, dict):
        raise ValidationError("config needs a 'lattice' mapping")
    _check_unknown(
        sec,
        {"kind", "nx", "ny", "vx", "vy", "onsite_energy", "boundary", "dx", "dy", "cap_edges"},
        "lattice",
    )
    kind_name = _take(sec, "kind", required=True)
    try:
        kind = LatticeKind(str(kind_name).lower())
    except ValueError:
        raise ValidationError(f"unknown lattice kind {kind_name!r} (square or lieb)")
    boundary = Boundary(str(_take(sec, "boundary", "open")).lower())
    return LatticeSpec(
        kind=kind,
        nx=int(_take(sec, "nx", 1)),
        ny=int(_take(sec, "ny", 1)),
        vx=float(_take(sec, "vx", 1.0)),
        vy=float(_take(sec, "vy", 1.0)),
        onsite_energy=float(_take(sec, "onsite_energy", 0.0)),
        boundary=boundary,
        dx=float(_take(sec, "dx", 1.0)),
        dy=float(_take(sec, "dy", 1.0)),
        cap_edges=bool(_take(sec, "cap_edges", False)),
    )


def site_label_from(node: Any, spec: LatticeSpec) -> SiteLabel:
    """Parse a site reference: "emitter", a named default, or an explicit
    {sublattice, ix, iy} mapping."""
    if isinstance(node, str):
        name = node.lower()
        if name in ("emitter", "qe"):
            return EMITTER
        if name == "boundary_midpoint":
            return boundary_midpoint(spec)
        if name == "bulk_center":
            return bulk_center_site(spec)
        raise ValidationError(f"unknown site reference {node!r}")
    if isinstance(node, dict):
        _check_unknown(node, {"sublattice", "ix", "iy", "at"}, "site")
        default_sub = "S" if spec.kind is LatticeKind.SQUARE else None
        sub_name = _take(node, "sublattice", default_sub, required=default_sub is None)
        try:
            sub = Sublattice(str(sub_name).upper())
        except ValueError:
            raise ValidationError(f"unknown sublattice {sub_name!r}")
        at = _take(node, "at")
        if at == "boundary_midpoint":
            return boundary_midpoint(spec, sub)
        if at == "bulk_center":
            return bulk_center_site(spec, sub)
        if at is not None:
            raise ValidationError(f"unknown site placement {at!r}")
        ix = _take(node, "ix", required=True)
        iy = _take(node, "iy", required=True)
        return SiteLabel((int(ix), int(iy)), sub)
    raise ValidationError(f"cannot parse site reference {node!r}")


def emitter_spec_from(cfg: dict, spec: LatticeSpec) -> Optional[EmitterSpec]:
    sec = cfg.get("emitter")
    if sec is None:
        return None
    if not isinstance(sec, dict):
        raise ValidationError("'emitter' must be a mapping")
    _check_unknown(sec, {"v2", "v2_ratio", "omega0", "attach"}, "emitter")
    if ("v2" in sec) == ("v2_ratio" in sec):
        raise ValidationError("emitter needs exactly one of v2 or v2_ratio")
    v2 = float(sec["v2"]) if "v2" in sec else float(sec["v2_ratio"]) * spec.vx
    attach_node = _take(sec, "attach", "boundary_midpoint")
    attachment = site_label_from(attach_node, spec)
    if attachment.sublattice is Sublattice.EMITTER:
        raise ValidationError("emitter cannot attach to itself")
    return EmitterSpec(v2=v2, attachment=attachment, omega0=float(_take(sec, "omega0", 0.0)))


def zgrid_from(cfg: dict) -> ZGrid:
    sec = cfg.get("grid", {})
    if not isinstance(sec, dict):
        raise ValidationError("'grid' must be a mapping")
    _check_unknown(sec, {"z_max", "samples"}, "grid")
    return ZGrid(
        z_max=float(_take(sec, "z_max", DEVICE_LENGTH_CM)),
        samples=int(_take(sec, "samples", 201)),
    )


def coupling_model_from(cfg: dict) -> CouplingModel:
    sec = cfg.get("coupling")
    if sec is None:
        return default_coupling_model()
    if not isinstance(sec, dict):
        raise ValidationError("'coupling' must be a mapping")
    _check_unknown(sec, {"anchors", "coefficients", "lambda_min", "lambda_max"}, "coupling")
    if ("anchors" in sec) == ("coefficients" in sec):
        raise ValidationError("coupling needs exactly one of anchors or coefficients")
    lam_lo = sec.get("lambda_min")
    lam_hi = sec.get("lambda_max")
    if "anchors" in sec:
        anchors = [(float(l), float(v)) for l, v in sec["anchors"]]
        model = fit_quadratic(anchors, label="config-anchors").model
        lam_lo = float(lam_lo) if lam_lo is not None else model.lambda_min
        lam_hi = float(lam_hi) if lam_hi is not None else model.lambda_max
        return CouplingModel(model.a, model.b, model.c, lam_lo, lam_hi, label=model.label)
    coeffs = sec["coefficients"]
    if not (isinstance(coeffs, (list, tuple)) and len(coeffs) == 3):
        raise ValidationError("coefficients must be [a, b, c]")
    if lam_lo is None or lam_hi is None:
        raise ValidationError("explicit coefficients need lambda_min and lambda_max")
    a, b, c = (float(x) for x in coeffs)
    return CouplingModel(a, b, c, float(lam_lo), float(lam_hi), label="config-coefficients")


def lambda_grid_from(cfg: dict) -> np.ndarray:
    sec = cfg.get("sweep")
    if not isinstance(sec, dict):
        raise ValidationError("config needs a 'sweep' mapping")
    _check_unknown(sec, {"lambda_min", "lambda_max", "points", "observables", "propagator", "tol", "device_length"}, "sweep")
    lo = float(_take(sec, "lambda_min", required=True))
    hi = float(_take(sec, "lambda_max", required=True))
    n = int(_take(sec, "points", required=True))
    if n < 1:
        raise ValidationError("sweep needs at least 1 wavelength point")
    if n == 1:
        return np.array([lo])
    if not lo < hi:
        raise ValidationError("sweep wavelength range is empty")
    return np.linspace(lo, hi, n)


def sweep_config_from(cfg: dict) -> SweepConfig:
    spec = lattice_spec_from(cfg)
    emitter = emitter_spec_from(cfg, spec)
    sec = cfg["sweep"]
    lambdas = tuple(float(x) for x in lambda_grid_from(cfg))
    default_obs = ("qe_population", "participation_ratio") if emitter else ("participation_ratio",)
    observables = tuple(sec.get("observables", default_obs))
    initial_node = cfg.get("initial", "emitter" if emitter else "bulk_center")
    initial = site_label_from(initial_node, spec)
    return SweepConfig(
        lattice=spec,
        initial=initial,
        lambdas=lambdas,
        emitter=emitter,
        observables=observables,
        device_length=float(sec.get("device_length", DEVICE_LENGTH_CM)),
        propagator=str(sec.get("propagator", "chebyshev")),
        tol=float(sec.get("tol", 1e-10)),
    )
