"""
In-process propagator cache
Chirp propagators are the expensive part of every simulation and the same
chirp appears several times per sequence, so they are memoized per
(sweep, offset, substep bound).
"""

import logging
import os
import threading
from collections import OrderedDict
from typing import Callable, Optional

from app.core.schema import ChirpSpec

logger = logging.getLogger(__name__)


class PropagatorCache:
    """
    Thread-safe LRU store of chirp propagators

    Values are immutable, so a hit returns exactly what a recomputation
    would produce and cached and uncached runs stay byte-identical.
    """

    def __init__(self, max_entries: Optional[int] = None):
        if max_entries is None:
            max_entries = int(os.getenv("DSWEEP_CACHE_SIZE", "4096"))
        self.max_entries = max_entries
        self.enabled = os.getenv("CACHE_ENABLED", "true").lower() == "true"
        self._store: "OrderedDict[str, object]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _generate_cache_key(self, spec: ChirpSpec, offset: float, max_phase_step: float) -> str:
        """
        Generate unique cache key
        Format: chirp:{f_start}:{f_end}:{duration}:{amplitude}:{offset}:{step}
        """
        key_parts = [
            "chirp",
            repr(float(spec.f_start)),
            repr(float(spec.f_end)),
            repr(float(spec.duration)),
            repr(float(spec.amplitude)),
            repr(float(offset)),
            repr(float(max_phase_step)),
        ]
        return ":".join(key_parts)

    def get_or_compute(
        self,
        spec: ChirpSpec,
        offset: float,
        max_phase_step: float,
        compute: Callable[[], object],
    ):
        """Return the cached propagator, computing and storing it on a miss"""
        if not self.enabled:
            return compute()

        cache_key = self._generate_cache_key(spec, offset, max_phase_step)
        with self._lock:
            if cache_key in self._store:
                self._store.move_to_end(cache_key)
                self.hits += 1
                return self._store[cache_key]
            self.misses += 1

        value = compute()

        with self._lock:
            self._store[cache_key] = value
            self._store.move_to_end(cache_key)
            while len(self._store) > self.max_entries:
                self._store.popitem(last=False)
        logger.debug("Cached %s", cache_key)
        return value

    def clear(self):
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0

    def get_stats(self) -> dict:
        """Get cache statistics"""
        if not self.enabled:
            return {"enabled": False}

        with self._lock:
            return {
                "enabled": True,
                "entries": len(self._store),
                "max_entries": self.max_entries,
                "hits": self.hits,
                "misses": self.misses,
                "hit_rate": self._calculate_hit_rate(self.hits, self.misses),
            }

    def _calculate_hit_rate(self, hits: int, misses: int) -> float:
        """Calculate cache hit rate percentage"""
        total = hits + misses
        if total == 0:
            return 0.0
        return round((hits / total) * 100, 2)


# Global cache manager instance
cache_manager = PropagatorCache()
