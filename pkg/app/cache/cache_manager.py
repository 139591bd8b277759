"""
Oracle free-energy cache on top of the Redis client.

Keys are `oracle:<sha256>` over a canonical JSON of every input that changes
the value; values are repr(float) so a hit is bit-identical to recomputing.
"""

import json
import hashlib
import logging

from app.cache import redis_client as cache
from app.cache.redis_client import CACHE_TTL

# Setup logging
logger = logging.getLogger(__name__)

ORACLE_PREFIX = "oracle:"
# Bump when the matrix assembly changes
ORACLE_KEY_VERSION = 1


def oracle_key(model, geom, temperature, truncation, n_nodes_extra):
    payload = {
        "version": ORACLE_KEY_VERSION,
        "material": model.model_dump(mode="json"),
        "radius": repr(geom.radius),
        "gap": repr(geom.gap),
        "temperature": repr(temperature),
        "truncation": truncation.model_dump(),
        "nodes": n_nodes_extra,
    }
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()
    return f"{ORACLE_PREFIX}{digest}"


def get_energy(key):
    """Cached energy for key, or None on a miss or cache failure"""
    try:
        cached = cache.redis_client.get(key)
        if cached is None:
            return None
        logger.debug(f"Oracle cache hit {key}")
        return float(cached)
    except Exception as e:
        logger.warning(f"Oracle cache read failed: {e}")
        return None


def set_energy(key, value):
    try:
        cache.redis_client.setex(key, CACHE_TTL, repr(float(value)))
    except Exception as e:
        logger.warning(f"Oracle cache write failed: {e}")


def clear_oracle_cache():
    """Remove every cached oracle energy; returns the number of keys removed"""
    return cache.clear_prefix(ORACLE_PREFIX)


def oracle_cache_stats():
    return cache.get_cache_stats(ORACLE_PREFIX)
