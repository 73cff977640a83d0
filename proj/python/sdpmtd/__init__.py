"""Python bindings for the SDP + MTD simulator."""

from ._core import (
    CheckResult,
    Report,
    SdpmtdError,
    Verifier,
    build_spa,
    fluid_mean_wait_ms,
    hmac_sha256,
    run_file,
    run_text,
)

__all__ = [
    "CheckResult",
    "Report",
    "SdpmtdError",
    "Verifier",
    "build_spa",
    "fluid_mean_wait_ms",
    "hmac_sha256",
    "run_file",
    "run_text",
]
