"""
API Routes for the double-sweep toolkit
Design, profile, figure and verification endpoints over the same code paths as the CLI
"""

import json
import logging
import time
from typing import Any, Dict, List, Optional

from fastapi import APIRouter, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, ValidationError

from app.core.composer import to_manifest
from app.core.config import RunConfig
from app.core.errors import DoubleSweepError, UnknownFigureError
from app.core.fourier import coefficients, design_report, waveform, waveform_duration
from app.core.schema import CoefficientSet, DesignReportRow, OffsetProfile, RunManifest
from app.services.orchestrator import PROFILE_FAMILIES, orchestrator
from app.services.verification import run_verification

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/v1", tags=["pulses"])


class DesignResponse(BaseModel):
    coefficients: CoefficientSet
    peak_amplitude: float
    waveform_duration: float
    report: List[DesignReportRow]


class ProfileResponse(BaseModel):
    manifest: RunManifest
    profile: OffsetProfile
    sequence: Dict[str, Any] = Field(description="Serialized PulseSequence")


class VerifyRequest(BaseModel):
    config: Dict[str, Any] = Field(default_factory=dict)
    inject_u0: Optional[float] = None


def _config(values: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise HTTPException(status_code=422, detail=e.errors(include_url=False, include_context=False))


def _timed(content: Dict[str, Any], start_time: float) -> JSONResponse:
    compute_ms = (time.time() - start_time) * 1000
    return JSONResponse(content=content, headers={"X-Compute-Time": f"{compute_ms:.2f}ms"})


@router.post("/design", response_model=DesignResponse)
async def design(values: Dict[str, Any]):
    """Fourier coefficients and tabulated series values for a design"""
    start_time = time.time()
    config = _config(values)
    p = config.design()
    c = coefficients(p)
    wave = waveform(c, p)
    response = DesignResponse(
        coefficients=c,
        peak_amplitude=wave.peak_amplitude,
        waveform_duration=waveform_duration(p),
        report=design_report(c, p, config.grid().offsets()),
    )
    return _timed(response.model_dump(mode="json"), start_time)


@router.post("/profile/{family}", response_model=ProfileResponse)
def profile(family: str, values: Dict[str, Any]):
    """
    Simulate an offset profile
    Runs in the threadpool; integrated sweeps can take seconds
    """
    if family not in PROFILE_FAMILIES:
        raise HTTPException(status_code=404, detail=f"Unknown family '{family}'. Valid: {', '.join(PROFILE_FAMILIES)}")
    start_time = time.time()
    config = _config(values)
    try:
        sequence = orchestrator.build_sequence(family, config)
        result = orchestrator.simulate(family, sequence, config)
    except DoubleSweepError as e:
        raise HTTPException(status_code=400, detail=str(e))

    response = {
        "manifest": orchestrator.manifest_for(sequence, config).model_dump(mode="json"),
        "profile": result.model_dump(mode="json"),
        "sequence": json.loads(to_manifest(sequence)),
    }
    return _timed(response, start_time)


@router.get("/figures")
async def list_figures():
    """Figure presets and their parameters"""
    return {name: orchestrator.preset(name) for name in orchestrator.figure_names()}


@router.post("/reproduce/{name}", response_model=RunManifest)
def reproduce(name: str, overrides: Optional[Dict[str, Any]] = None):
    """Run a figure preset and write its files to the configured output directory"""
    try:
        manifest = orchestrator.figure_run(name, overrides or {})
    except UnknownFigureError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ValidationError as e:
        raise HTTPException(status_code=422, detail=e.errors(include_url=False, include_context=False))
    except DoubleSweepError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return manifest


@router.post("/verify")
def verify(request: VerifyRequest):
    """Invariant suite; 200 with passed=false when a gate fails, missed targets under deviations"""
    config = _config(request.config)
    override = None
    if request.inject_u0 is not None:
        u = list(coefficients(config.design()).u)
        u[0] = request.inject_u0
        override = CoefficientSet(u=u)
    report = run_verification(config, override)
    return {
        "passed": report.passed,
        "failed": report.failed,
        "deviations": report.deviations,
        **report.model_dump(mode="json"),
    }
