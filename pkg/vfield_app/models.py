from django.core.exceptions import ValidationError
from django.db import models

from .event_kinds import EVENT_KIND_CLASSES, EventKind


def validate_schema_data(provided: dict, schema: dict, label: str):
    missing_fields = [
        field_name
        for field_name, field_def in schema.items()
        if field_def.get("required", True) and field_name not in (provided or {})
    ]
    if missing_fields:
        raise ValidationError({label: f"Missing required fields: {missing_fields}"})


class ScanRun(models.Model):
    k = models.PositiveSmallIntegerField()
    n_s = models.PositiveIntegerField()
    n_theta = models.PositiveIntegerField()
    config = models.JSONField(default=dict, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    def clean(self):
        if self.k < 2:
            raise ValidationError({"k": "k must be at least 2"})
        if self.n_s < 2 or self.n_theta < 2:
            raise ValidationError("Grid resolutions must be at least 2")

    def save(self, *args, **kwargs):
        self.full_clean()
        super().save(*args, **kwargs)

    def __str__(self):
        return f"Scan k={self.k} ({self.n_s}x{self.n_theta})"


class BifurcationEvent(models.Model):
    run = models.ForeignKey(to=ScanRun, on_delete=models.CASCADE, related_name="events")
    sequence = models.PositiveIntegerField()

    kind = models.CharField(max_length=32, choices=EventKind.choices)
    k = models.PositiveSmallIntegerField()
    s = models.FloatField()
    theta = models.FloatField()
    alpha = models.FloatField()
    data = models.JSONField(default=dict, blank=True)

    class Meta:
        ordering = ["run", "sequence"]
        unique_together = ("run", "sequence")

    @property
    def kind_instance(self):
        return EVENT_KIND_CLASSES.get(self.kind)

    def clean(self):
        if not 0.0 <= self.s <= 1.0:
            raise ValidationError({"s": f"s must lie in [0, 1], got {self.s}"})
        if self.kind == EventKind.PARABOLIC_EPS0 and self.s != 0.0:
            raise ValidationError({"s": "parabolic_eps0 events lie on s = 0"})
        if self.run_id and self.k != self.run.k:
            raise ValidationError({"k": "Event k differs from its run"})
        if self.kind_instance:
            validate_schema_data(self.data, self.kind_instance.required_data(), "data")

    def save(self, *args, **kwargs):
        self.full_clean()
        super().save(*args, **kwargs)

    def __str__(self):
        return f"{self.kind} at s={self.s:.4f}, theta={self.theta:.4f}, alpha={self.alpha:.4f}"
