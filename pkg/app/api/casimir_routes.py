from fastapi import APIRouter, HTTPException, Query, Request
import logging
from slowapi import Limiter
from slowapi.util import get_remote_address

from app.models.material_schema import MaterialKind
from app.models.request_schema import ForceRequest, PressureResponse, ThetaResponse
from app.models.result_schema import ForceResult
from app.services import lifshitz_service, pfa_service
from app.services.material_service import build_material
from app.utils.errors import CasimirError
from app.utils.units import pa_to_mpa, um_to_m
from app.api.errors import to_http_exception

# Setup logging
logger = logging.getLogger(__name__)

# Create a router for our API endpoints
router = APIRouter()

# Get limiter from app state
limiter = Limiter(key_func=get_remote_address)


@router.get("/health")
def health():
    """Liveness check"""
    return {"status": "ok"}


@router.post("/force", response_model=ForceResult)
@limiter.limit("30/minute")
def compute_force(force_request: ForceRequest, request: Request):
    """Approximate sphere-plate force (exact n=0 plus curvature-corrected PFA)"""
    try:
        model = build_material(force_request.material, force_request.plasma_ev, force_request.gamma_ev)
        return pfa_service.force_approx(model, um_to_m(force_request.radius_um), um_to_m(force_request.a_um),
                                        force_request.temperature_k)
    except HTTPException:
        raise
    except CasimirError as e:
        raise to_http_exception(e)
    except Exception as e:
        logger.error(f"Error computing force: {e}")
        raise HTTPException(status_code=500, detail="Failed to compute force")


@router.post("/gradient", response_model=ForceResult)
@limiter.limit("30/minute")
def compute_gradient(force_request: ForceRequest, request: Request):
    """Approximate sphere-plate force gradient"""
    try:
        model = build_material(force_request.material, force_request.plasma_ev, force_request.gamma_ev)
        return pfa_service.gradient_approx(model, um_to_m(force_request.radius_um), um_to_m(force_request.a_um),
                                           force_request.temperature_k)
    except HTTPException:
        raise
    except CasimirError as e:
        raise to_http_exception(e)
    except Exception as e:
        logger.error(f"Error computing gradient: {e}")
        raise HTTPException(status_code=500, detail="Failed to compute gradient")


@router.get("/theta", response_model=ThetaResponse)
def get_theta(a_um: float = Query(..., gt=0)):
    """θ and θ̃ from the shipped Au table"""
    try:
        theta, theta_tilde = pfa_service.theta_coeffs(pfa_service.load_theta_table(), um_to_m(a_um))
        return ThetaResponse(a_um=a_um, theta=theta, theta_tilde=theta_tilde)
    except CasimirError as e:
        raise to_http_exception(e)
    except Exception as e:
        logger.error(f"Error looking up theta: {e}")
        raise HTTPException(status_code=500, detail="Failed to look up theta")


@router.get("/pressure", response_model=PressureResponse)
def get_pressure(a_um: float = Query(..., gt=0), temperature_k: float = Query(300.0, gt=0),
                 material: MaterialKind = Query(MaterialKind.drude), plasma_ev: float = Query(9.0, gt=0),
                 gamma_ev: float = Query(0.035, ge=0)):
    """Parallel-plate Lifshitz pressure in mPa"""
    try:
        model = build_material(material, plasma_ev, gamma_ev)
        a = um_to_m(a_um)
        grid = lifshitz_service.matsubara_grid(temperature_k, a=a)
        return PressureResponse(
            a_um=a_um,
            temperature_k=temperature_k,
            material=model.label,
            pressure_mpa=pa_to_mpa(lifshitz_service.pp_pressure(model, a, temperature_k, grid)),
            zero_mode_mpa=pa_to_mpa(lifshitz_service.pp_zero_mode_pressure(model, a, temperature_k)),
            ideal_pressure_mpa=pa_to_mpa(lifshitz_service.ideal_pp_pressure(a)),
            n_max=grid.n_max,
        )
    except CasimirError as e:
        raise to_http_exception(e)
    except Exception as e:
        logger.error(f"Error computing pressure: {e}")
        raise HTTPException(status_code=500, detail="Failed to compute pressure")
