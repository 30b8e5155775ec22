from django.contrib import admin

from . import models


@admin.register(models.SolveRun)
class SolveRunAdmin(admin.ModelAdmin):
    list_display = ("id", "label", "created_at", "alpha", "omega_count", "cost", "coverage", "master_lower_bound")
    list_filter = ("created_at", "threads")
    search_fields = ("label", "run_dir")
    readonly_fields = ("created_at",)
