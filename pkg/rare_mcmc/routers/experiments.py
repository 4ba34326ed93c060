from fastapi import APIRouter, HTTPException
import asyncio
import logging

from ..errors import RareMCMCError
from ..models import ExperimentConfig, ExperimentResult
from ..services.harness import PRESETS, run_experiment

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/experiments", tags=["experiments"])


@router.post("", response_model=ExperimentResult)
async def create_experiment(config: ExperimentConfig):
    """Run a batched estimator comparison and return its reports."""
    # CPU-bound; keep the event loop free
    loop = asyncio.get_running_loop()
    try:
        result = await loop.run_in_executor(None, lambda: run_experiment(config, threads=config.threads or 1))
    except RareMCMCError as e:
        raise HTTPException(status_code=400, detail=str(e))

    if not result.reports:
        raise HTTPException(status_code=400, detail={"message": "Every estimator failed", "errors": result.errors})

    return result


@router.get("/presets")
async def list_presets():
    """Benchmark configurations accepted as `preset` by the CLI."""
    return PRESETS
