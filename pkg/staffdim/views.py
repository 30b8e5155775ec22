from __future__ import annotations

from django.http import JsonResponse
from django.shortcuts import get_object_or_404
from django.views.decorators.http import require_GET

from .models import SolveRun

RUN_LIST_LIMIT = 200


@require_GET
def run_list(request):
    runs = SolveRun.objects.all()[:RUN_LIST_LIMIT]
    return JsonResponse({"runs": [run.as_summary() for run in runs]})


@require_GET
def run_detail(request, pk: int):
    run = get_object_or_404(SolveRun, pk=pk)
    return JsonResponse(run.as_detail())
