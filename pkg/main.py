from fastapi import FastAPI
from app.api.casimir_routes import router as casimir_router
from app.api.oracle_routes import router as oracle_router, cache_router
from dotenv import load_dotenv
import logging
from slowapi import Limiter, _rate_limit_exceeded_handler
from slowapi.util import get_remote_address
from slowapi.errors import RateLimitExceeded
import uvicorn

import app as package

# Load environment variables from .env file
load_dotenv()

# Setup logging
logger = logging.getLogger(__name__)

# Create rate limiter
limiter = Limiter(key_func=get_remote_address)

# Create FastAPI application
app = FastAPI(title="Sphere-Plate Casimir", version=package.__version__)
app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)

# Add our API routes
app.include_router(casimir_router)
app.include_router(oracle_router)
app.include_router(cache_router)


# Check services when the app starts
@app.on_event("startup")
async def startup_event():
    # Check Redis connection
    from app.cache.redis_client import check_redis
    if not check_redis():
        logger.warning("Redis connection failed. Running without the oracle result cache.")


# Run the application
if __name__ == "__main__":

    uvicorn.run("main:app", host="0.0.0.0", port=8000, reload=True)
