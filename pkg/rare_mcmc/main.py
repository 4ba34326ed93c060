from fastapi import FastAPI
from contextlib import asynccontextmanager
import logging

from . import __version__
from .config import configure_logging, get_settings
from .routers import experiments, oracle

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    # Startup: logging from RARE_MCMC_LOG_LEVEL
    configure_logging()
    logger.info("rare_mcmc API up, %s worker thread(s) configured", get_settings().threads or "auto")
    yield


app = FastAPI(
    title="rare_mcmc",
    description="Gibbs-sampler estimation of heavy-tailed rare-event probabilities",
    version=__version__,
    lifespan=lifespan,
)

# Include API routers
app.include_router(experiments.router)
app.include_router(oracle.router)


@app.get("/health")
async def health_check():
    """Health check endpoint for Render."""
    return {"status": "healthy"}
