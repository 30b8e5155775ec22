from __future__ import annotations

from django.core.validators import MaxValueValidator, MinValueValidator
from django.db import models


class SolveRun(models.Model):
    """One recorded staffing run: the chosen staffing and how hard it was to get."""

    label = models.CharField(max_length=200, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    alpha_star = models.FloatField(
        null=True, blank=True, validators=[MinValueValidator(0.0), MaxValueValidator(1.0)]
    )
    alpha = models.FloatField(validators=[MinValueValidator(0.0), MaxValueValidator(1.0)])
    omega_count = models.PositiveIntegerField()
    time_limit = models.FloatField(null=True, blank=True)
    threads = models.PositiveIntegerField(default=1)
    staffing = models.JSONField(default=dict)
    cost = models.PositiveIntegerField()
    coverage = models.FloatField()
    confidence_lb = models.FloatField()
    master_lower_bound = models.PositiveIntegerField()
    wall_seconds = models.FloatField(default=0.0)
    run_dir = models.CharField(max_length=500, blank=True)
    performance = models.JSONField(default=dict, blank=True)

    class Meta:
        ordering = ["-created_at", "-id"]

    @property
    def master_gap(self) -> float:
        return (self.cost - self.master_lower_bound) / self.cost if self.cost else 0.0

    def as_summary(self) -> dict:
        return {
            "id": self.pk,
            "label": self.label,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "alpha": self.alpha,
            "staffing": self.staffing,
            "cost": self.cost,
            "coverage": self.coverage,
        }

    def as_detail(self) -> dict:
        return {
            **self.as_summary(),
            "alpha_star": self.alpha_star,
            "omega_count": self.omega_count,
            "time_limit": self.time_limit,
            "threads": self.threads,
            "confidence_lb": self.confidence_lb,
            "master_lower_bound": self.master_lower_bound,
            "master_gap": self.master_gap,
            "wall_seconds": self.wall_seconds,
            "run_dir": self.run_dir,
            "performance": self.performance,
        }

    def __str__(self) -> str:  # pragma: no cover - admin helper
        return f"{self.label or 'run'} #{self.pk} (cost {self.cost})"
