from fastapi import APIRouter, HTTPException, Request
from fastapi.concurrency import run_in_threadpool
import logging
from slowapi import Limiter
from slowapi.util import get_remote_address

from app.cache import cache_manager
from app.models.geometry_schema import Geometry, MultipoleTruncation
from app.models.request_schema import ComparisonResponse, OracleRequest
from app.services import pfa_service, scattering_service
from app.services.material_service import build_material
from app.utils.errors import CasimirError
from app.utils.units import um_to_m
from app.api.errors import to_http_exception

# Setup logging
logger = logging.getLogger(__name__)

# Create a router for the scattering-oracle endpoints
router = APIRouter(prefix="/oracle")
cache_router = APIRouter(prefix="/cache")

# Get limiter from app state
limiter = Limiter(key_func=get_remote_address)


def _compare(oracle_request):
    model = build_material(oracle_request.material, oracle_request.plasma_ev, oracle_request.gamma_ev)
    radius, a = um_to_m(oracle_request.radius_um), um_to_m(oracle_request.a_um)
    geom = Geometry(radius=radius, gap=a)
    truncation = MultipoleTruncation.for_geometry(geom, oracle_request.temperature_k, l_max=oracle_request.l_max,
                                                  m_max=oracle_request.m_max, n_max=oracle_request.n_max)
    approx = pfa_service.force_approx(model, radius, a, oracle_request.temperature_k)
    oracle = scattering_service.force_scattering(model, geom, oracle_request.temperature_k, truncation)
    return ComparisonResponse(
        a_um=oracle_request.a_um,
        radius_um=oracle_request.radius_um,
        approx_n=approx.total,
        oracle_n=oracle.total,
        pfa_n=approx.pfa_total,
        approx_error_percent=100.0 * abs(approx.total - oracle.total) / abs(oracle.total),
        pfa_error_percent=100.0 * abs(approx.pfa_total - oracle.total) / abs(oracle.total),
        l_max=truncation.l_max,
        m_max=truncation.m_max,
        n_max=truncation.n_max,
    )


@router.post("/force", response_model=ComparisonResponse)
@limiter.limit("2/minute")
async def oracle_force(oracle_request: OracleRequest, request: Request):
    """Scattering-formula force compared with the approximate formula and the PFA.

    Expensive: minutes at R/a ~ 10 with the default truncation.
    """
    try:
        return await run_in_threadpool(_compare, oracle_request)
    except HTTPException:
        raise
    except CasimirError as e:
        raise to_http_exception(e)
    except ValueError as e:
        # truncation overrides that fail validation (m_max > l_max)
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing oracle force: {e}")
        raise HTTPException(status_code=500, detail="Failed to compute oracle force")


@cache_router.delete("/oracle")
def clear_oracle_cache():
    """Drop every cached oracle energy"""
    removed = cache_manager.clear_oracle_cache()
    return {"removed": removed}


@cache_router.get("/stats")
def cache_stats():
    """Backend and key count of the oracle cache"""
    return cache_manager.oracle_cache_stats()
