from abc import ABC, abstractmethod
from enum import Enum

from django.db.models import TextChoices

# --------------------------------------------
# Enums and Common Types
# --------------------------------------------


class Glyph(Enum):
    DOT = "dot"  # small filled circle
    RING = "ring"  # open circle
    CROSS = "cross"
    DIAMOND = "diamond"
    SQUARE = "square"


class EventKind(TextChoices):
    HOMOCLINIC_CHORD = "homoclinic_chord", "Homoclinic Chord"
    MULTI_LOOP = "multi_loop", "Multi Loop"
    PARABOLIC_DELTA = "parabolic_delta", "Parabolic Delta"
    PARABOLIC_EPS0 = "parabolic_eps0", "Parabolic Eps0"
    DIAGNOSTIC = "diagnostic", "Diagnostic"


# --------------------------------------------
# Abstract Base
# --------------------------------------------


class BaseEventKind(ABC):
    """
    Base class for all bifurcation event kinds.
    Each subclass defines:
      - which fields its `data` payload must carry
      - how the event is drawn on the bifurcation disk
    """

    name: str = "base"
    description: str = "Base event kind"
    glyph: Glyph = Glyph.DOT

    # ---------- Required Definitions ----------
    @classmethod
    @abstractmethod
    def required_data(cls) -> dict:
        """Fields required in `data` when recording the event."""
        pass

    @classmethod
    @abstractmethod
    def help_text(cls) -> str:
        pass

    # ---------- Optional Utilities ----------
    @classmethod
    def schema(cls) -> dict:
        return {
            "kind": cls.name,
            "description": cls.description,
            "glyph": cls.glyph.value,
            "required_data": cls.required_data(),
            "help_text": cls.help_text(),
        }


# --------------------------------------------
# Homoclinic loops
# --------------------------------------------


class HomoclinicChord(BaseEventKind):
    """
    A horizontal chord of the periodgon: two separatrices of infinity coalesce
    in the unrotated field at the recorded alpha.
    """

    name = "homoclinic_chord"
    description = "Homoclinic loop through infinity predicted by an interior periodgon chord"
    glyph = Glyph.DOT

    @classmethod
    def required_data(cls):
        return {
            "vertex_pair": {"type": "pair", "label": "Periodgon vertices joined by the chord"},
            "center_pair": {"type": "pair", "label": "Centers of the edges next to the chord"},
            "alpha_star": {"type": "number", "label": "Fiber parameter of the bifurcation"},
            "chord": {"type": "complex", "label": "Chord vector at alpha = 0"},
        }

    @classmethod
    def help_text(cls):
        return "Recorded once per chord and per solution alpha in the scanned window."


class MultiLoop(BaseEventKind):
    name = "multi_loop"
    description = "Periodic domain bounded by more than one homoclinic loop"
    glyph = Glyph.RING

    @classmethod
    def required_data(cls):
        return {
            "center": {"type": "integer", "label": "Index of the center"},
            "loop_count": {"type": "integer", "label": "Number of homoclinic loops", "min": 2},
            "escape_sector_pairs": {"type": "list", "label": "(in, out) separatrix pairs"},
            "theta_locus": {
                "type": "number",
                "label": "Refined theta of the locus",
                "required": False,
            },
            "band": {"type": "pair", "label": "Theta edges of the band", "required": False},
            "unresolved": {
                "type": "text",
                "label": "Why the refinement stopped",
                "required": False,
            },
        }

    @classmethod
    def help_text(cls):
        return "Nongeneric: the periodgon edge order is ambiguous here."


# --------------------------------------------
# Parabolic loci
# --------------------------------------------


class ParabolicDelta(BaseEventKind):
    name = "parabolic_delta"
    description = "Double root of z^k + eps1 z + eps0 (discriminant zero)"
    glyph = Glyph.DIAMOND

    @classmethod
    def required_data(cls):
        return {
            "discriminant": {"type": "number", "label": "|discriminant| at the coordinates"},
            "double_root": {"type": "complex", "label": "Location of the double root"},
        }

    @classmethod
    def help_text(cls):
        return "Lies at s = 1/2 on the rays theta = 2 pi j / (k - 1)."


class ParabolicEps0(BaseEventKind):
    name = "parabolic_eps0"
    description = "z_1 merges with the origin (eps0 = 0)"
    glyph = Glyph.SQUARE

    @classmethod
    def required_data(cls):
        return {
            "locus": {"type": "text", "label": "Locus description"},
        }

    @classmethod
    def help_text(cls):
        return "The whole circle s = 0; one event stands for it."


class Diagnostic(BaseEventKind):
    name = "diagnostic"
    description = "A grid node that could not be evaluated"
    glyph = Glyph.CROSS

    @classmethod
    def required_data(cls):
        return {
            "error": {"type": "text", "label": "Failure class"},
            "message": {"type": "text", "label": "Failure message"},
        }

    @classmethod
    def help_text(cls):
        return "Failures are recorded, never dropped."


# --------------------------------------------
# Registry
# --------------------------------------------

EVENT_KIND_CLASSES = {
    "homoclinic_chord": HomoclinicChord,
    "multi_loop": MultiLoop,
    "parabolic_delta": ParabolicDelta,
    "parabolic_eps0": ParabolicEps0,
    "diagnostic": Diagnostic,
}
