"""Radiation-field extraction and decay-exponent detectors."""

from .extract import RadiationSamples, extract_radiation, richardson_limit
from .fit import ExpansionFit, fit_expansion, refine_leading_exponent
from .mellin import (
    Cutoff,
    MellinScan,
    PoleScanResult,
    locate_pole,
    mellin,
    mellin_pole_scan,
    mellin_samples,
    mellin_scan,
)
from .peel import PeeledTerm, peel_exponents

__all__ = [
    "RadiationSamples", "extract_radiation", "richardson_limit",
    "ExpansionFit", "fit_expansion", "refine_leading_exponent",
    "Cutoff", "MellinScan", "PoleScanResult", "locate_pole", "mellin", "mellin_pole_scan",
    "mellin_samples", "mellin_scan",
    "PeeledTerm", "peel_exponents",
]
