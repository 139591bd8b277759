from fastapi import HTTPException

from app.utils.errors import ConfigError, DataValidationError, DomainError, NumericalError, RangeError


def to_http_exception(error):
    """Map a package error onto an HTTPException"""
    if isinstance(error, RangeError):
        return HTTPException(status_code=422, detail=str(error))
    if isinstance(error, (DomainError, ConfigError, DataValidationError)):
        return HTTPException(status_code=400, detail=str(error))
    if isinstance(error, NumericalError):
        return HTTPException(status_code=503, detail=str(error))
    return HTTPException(status_code=500, detail=str(error))
