from dataclasses import dataclass, fields, replace

from .exceptions import InvalidParameter


@dataclass(frozen=True)
class Numerics:
    """
    Every numerical knob in one immutable value.
    Radii and distances marked "factor" are multiplied by the field scale 1 + max|z_j|.
    """

    # ---------- roots ----------
    aberth_iterations: int = 200
    aberth_tol: float = 1e-13
    cluster_tol: float = 1e-7
    guard_band: float = 1e-8

    # ---------- integration ----------
    rtol: float = 1e-10
    atol: float = 1e-12
    r_switch_factor: float = 2.0
    r_escape_factor: float = 10.0
    land_factor: float = 1e-6
    return_factor: float = 1e-6
    arclength_factor: float = 1e4
    time_budget: float = 1e12
    min_step: float = 1e-14
    section_xtol: float = 1e-12

    # ---------- periodic domains ----------
    ray_count: int = 64
    bisect_iterations: int = 60
    bisect_tol: float = 1e-10
    confirm_returns: int = 3
    period_match: float = 1e-3

    # ---------- periodgon ----------
    closure_tol: float = 1e-9
    planar_tol: float = 1e-10
    chord_tol: float = 1e-9

    # ---------- sepal zones ----------
    sepal_probes: int = 12

    def with_tol(self, rtol: float) -> "Numerics":
        """Scale both integrator tolerances, keeping their ratio."""
        if rtol <= 0:
            raise InvalidParameter("tolerance must be positive")
        return replace(self, rtol=rtol, atol=rtol * self.atol / self.rtol)


def _check(values: dict) -> dict:
    known = {f.name: f.type for f in fields(Numerics)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise InvalidParameter(f"Unknown numerics keys: {unknown}")
    for key, value in values.items():
        if value is None or value <= 0:
            raise InvalidParameter(f"{key} must be positive, got {value!r}")
    return values


def numerics(**overrides) -> Numerics:
    """
    Defaults, then settings.VFIELD, then explicit overrides.
    Safe to call without configured settings (the defaults are returned).
    """
    from django.conf import settings
    from django.core.exceptions import ImproperlyConfigured

    merged = {}
    try:
        merged.update(getattr(settings, "VFIELD", {}) or {})
    except ImproperlyConfigured:
        pass
    merged.update({key: value for key, value in overrides.items() if value is not None})
    return Numerics(**_check(merged))
