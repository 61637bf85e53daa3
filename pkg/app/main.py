"""
Double-sweep toolkit - HTTP service
FastAPI application exposing design, profile, figure and verification runs
"""

import logging
import os
import time

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.middleware.gzip import GZipMiddleware
from slowapi import Limiter, _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded
from slowapi.util import get_remote_address

from app import __version__
from app.api import routes
from app.core.cache import cache_manager
from app.core.config import configure_logging

configure_logging()
logger = logging.getLogger(__name__)

# Rate limiter
limiter = Limiter(key_func=get_remote_address)

app = FastAPI(
    title="Double-Sweep API",
    description="Broadband excitation and π/2 rotation pulses from Fourier-designed waveforms and adiabatic double sweeps.",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc",
)

app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)

app.add_middleware(
    CORSMiddleware,
    allow_origins=os.getenv("ALLOWED_ORIGINS", "*").split(","),
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Profiles are long CSV-like tables
app.add_middleware(GZipMiddleware, minimum_size=1000)


@app.middleware("http")
async def add_process_time_header(request: Request, call_next):
    """Add response time header for monitoring"""
    start_time = time.time()
    response = await call_next(request)
    process_time = time.time() - start_time
    response.headers["X-Process-Time"] = f"{process_time:.3f}s"
    return response


@app.on_event("startup")
async def startup_event():
    logger.info("🚀 Starting double-sweep service v%s", __version__)
    logger.info("✨ Propagator cache: %s", cache_manager.get_stats())


@app.on_event("shutdown")
async def shutdown_event():
    logger.info("👋 Shutting down, cache stats %s", cache_manager.get_stats())
    cache_manager.clear()


app.include_router(routes.router)


@app.get("/")
async def root():
    return {"service": "double-sweep", "version": __version__, "docs": "/docs"}


@app.get("/health")
@limiter.limit("100/minute")
async def health_check(request: Request):
    """Health check endpoint with propagator-cache stats"""
    return {
        "status": "healthy",
        "service": "double-sweep",
        "version": __version__,
        "cache": cache_manager.get_stats(),
    }


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        app,
        host="0.0.0.0",
        port=int(os.getenv("PORT", "8000")),
        reload=os.getenv("ENV") == "development",
    )
