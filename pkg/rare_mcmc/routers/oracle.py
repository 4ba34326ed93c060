from fastapi import APIRouter, HTTPException, Query
from typing import Literal, Optional
import asyncio

from ..errors import DomainError, OracleInfeasibleError, RareMCMCError
from ..models import OracleResult
from ..services.distributions import (
    make_count_distribution,
    make_step_distribution,
    max_tail_fixed,
    max_tail_random,
)
from ..services.oracle import tail_prob_closed_form, tail_prob_quadrature

router = APIRouter(prefix="/api/oracle", tags=["oracle"])


def _raise_http(e: RareMCMCError):
    if isinstance(e, OracleInfeasibleError):
        raise HTTPException(status_code=409, detail=str(e))
    if isinstance(e, DomainError):
        raise HTTPException(status_code=422, detail=str(e))
    raise HTTPException(status_code=400, detail=str(e))


@router.get("/tail", response_model=OracleResult)
async def tail_probability(
    a: float,
    n: int = Query(..., ge=1),
    beta: Optional[float] = None,
    dist: Literal["pareto", "weibull"] = "pareto",
    shape: Optional[float] = None,
    scale: float = 1.0,
    method: Literal["quadrature", "closed_form"] = "quadrature",
):
    """P(S_n > a) for a fixed number of steps, n <= 4."""
    try:
        d = make_step_distribution(dist, beta=beta, shape=shape, scale=scale)
        if method == "closed_form":
            return tail_prob_closed_form(d, n, a)
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, lambda: tail_prob_quadrature(d, n, a))
    except RareMCMCError as e:
        _raise_http(e)


@router.get("/max-tail")
async def max_tail(
    a: float,
    beta: Optional[float] = None,
    dist: Literal["pareto", "weibull"] = "pareto",
    shape: Optional[float] = None,
    scale: float = 1.0,
    n: Optional[int] = Query(None, ge=1),
    rho: Optional[float] = None,
    lam: Optional[float] = None,
):
    """Normalizing constant P(M > a) of the MCMC estimator."""
    if sum(value is not None for value in (n, rho, lam)) != 1:
        raise HTTPException(status_code=422, detail="Give exactly one of n, rho or lam")
    try:
        d = make_step_distribution(dist, beta=beta, shape=shape, scale=scale)
        if n is not None:
            p_max = max_tail_fixed(d, n, a)
        elif rho is not None:
            p_max = max_tail_random(d, make_count_distribution("geometric", rho=rho), a)
        else:
            p_max = max_tail_random(d, make_count_distribution("poisson", lam=lam), a)
    except RareMCMCError as e:
        _raise_http(e)

    return {"a": a, "p_max": p_max}
