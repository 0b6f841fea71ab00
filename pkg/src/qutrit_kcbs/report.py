"""Experiment orchestration: configuration, exact and sampled runs, verdicts
against the classical bounds, and JSON/CSV persistence."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import __version__
from .errors import ClosureFailure, ConfigError, IncompatiblePair
from .geometry import SYMMETRIC_STATE, optimal_pentagram, symmetric_pentagram
from .lhv import eq1_certificate, eq2_certificate
from .photons import (
    STREAM_RATE,
    DetectorModel,
    Estimate,
    TallyTable,
    blocked_click_rate,
    click_rate,
    estimate_correlation,
    exact_blocked_probability,
    exact_click_probability,
    exact_context_correlation,
    exact_overlap_term,
    overlap_term,
    sample_context,
    tallies_to_csv,
)
from .pipeline import AuditReport, ContextPipeline, build_pipeline, perturb, shared_measurement_audit
from .qutrit import QutritState

__all__ = [
    "RunConfig",
    "Verdict",
    "Report",
    "EQ1_BOUND",
    "EQ2_BOUND",
    "VERDICT_SIGMAS",
    "make_pipeline",
    "run_ideal",
    "run_montecarlo",
    "run_lhv",
    "verdict",
    "dumps",
    "loads",
]

EQ1_BOUND = -3
EQ2_BOUND = -4
VERDICT_SIGMAS = 4.0
U64 = 1 << 64

_KEYS = {
    "theta": "theta",
    "state": "state",
    "shots": "shots",
    "efficiency": "efficiency",
    "darkRate": "dark_rate",
    "postselect": "postselect",
    "jitterSigma": "jitter_sigma",
    "seed": "seed",
}


@dataclass(frozen=True)
class RunConfig:
    theta: float | str = "optimal"
    state: tuple | str = "symmetric"
    shots: int = 100_000
    efficiency: float = 1.0
    dark_rate: float = 0.0
    postselect: bool = False
    jitter_sigma: float = 0.0
    seed: int = 1

    def __post_init__(self):
        if isinstance(self.theta, str):
            if self.theta != "optimal":
                raise ConfigError(f"theta must be a number or 'optimal', got {self.theta!r}")
        elif not math.isfinite(float(self.theta)):
            raise ConfigError("theta must be finite")
        if isinstance(self.state, str):
            if self.state != "symmetric":
                raise ConfigError(f"state must be 3 amplitudes or 'symmetric', got {self.state!r}")
        else:
            amps = tuple(complex(z) for z in self.state)
            if len(amps) != 3 or not any(amps):
                raise ConfigError("state needs three amplitudes, not all zero")
            object.__setattr__(self, "state", amps)
        if not isinstance(self.shots, int) or self.shots < 0:
            raise ConfigError("shots must be a non-negative integer")
        for name in ("efficiency", "dark_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if not self.jitter_sigma >= 0.0:
            raise ConfigError("jitter_sigma must be non-negative")
        if not isinstance(self.seed, int) or not 0 <= self.seed < U64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def detector(self) -> DetectorModel:
        return DetectorModel(self.efficiency, self.dark_rate, self.postselect)

    def psi(self) -> QutritState:
        if self.state == "symmetric":
            return SYMMETRIC_STATE
        return QutritState.normalized(self.state)

    def to_dict(self) -> dict:
        out = {}
        for key, attr in _KEYS.items():
            v = getattr(self, attr)
            if attr == "state" and not isinstance(v, str):
                v = [[z.real, z.imag] for z in v]
            out[key] = v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - set(_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {_KEYS[k]: v for k, v in d.items()}
        if "state" in kw and not isinstance(kw["state"], str):
            try:
                kw["state"] = tuple(
                    complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z) for z in kw["state"]
                )
            except (TypeError, ValueError, IndexError) as exc:
                raise ConfigError(f"bad state entry: {exc}") from exc
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class Verdict:
    status: str  # "violated" | "consistent"
    z: float

    def to_dict(self) -> dict:
        return {"status": self.status, "z": self.z}


def verdict(est: Estimate, bound: float) -> Verdict:
    """Violated iff the mean is below the bound by more than four stderr."""
    gap = bound - est.mean
    if est.stderr > 0:
        z = gap / est.stderr
    else:
        z = math.copysign(math.inf, gap) if gap != 0 else 0.0
    violated = est.mean < bound and gap > VERDICT_SIGMAS * est.stderr
    return Verdict("violated" if violated else "consistent", z)


@dataclass(frozen=True)
class Report:
    mode: str
    eq1_terms: tuple[Estimate, ...]
    eq1_lhs: Estimate
    eq2_lhs: Estimate
    overlap_term: Estimate
    click_rates: dict
    audit: AuditReport
    verdicts: dict
    provenance: dict
    eq1_bound: int = EQ1_BOUND
    eq2_bound: int = EQ2_BOUND
    double_clicks: int = 0
    tallies: tuple[TallyTable, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "eq1Terms": [e.to_dict() for e in self.eq1_terms],
            "eq1Lhs": self.eq1_lhs.to_dict(),
            "eq1Bound": self.eq1_bound,
            "eq2Lhs": self.eq2_lhs.to_dict(),
            "eq2Bound": self.eq2_bound,
            "overlapTerm": self.overlap_term.to_dict(),
            "clickRates": {k: v.to_dict() for k, v in self.click_rates.items()},
            "audit": self.audit.to_dict(),
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "doubleClicks": self.double_clicks,
            "tallies": [t.to_dict() for t in self.tallies],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls(
            mode=d["mode"],
            eq1_terms=tuple(Estimate.from_dict(e) for e in d["eq1Terms"]),
            eq1_lhs=Estimate.from_dict(d["eq1Lhs"]),
            eq2_lhs=Estimate.from_dict(d["eq2Lhs"]),
            overlap_term=Estimate.from_dict(d["overlapTerm"]),
            click_rates={k: Estimate.from_dict(v) for k, v in d["clickRates"].items()},
            audit=AuditReport.from_dict(d["audit"]),
            verdicts={k: Verdict(v["status"], v["z"]) for k, v in d["verdicts"].items()},
            provenance=d["provenance"],
            eq1_bound=d["eq1Bound"],
            eq2_bound=d["eq2Bound"],
            double_clicks=d["doubleClicks"],
            tallies=tuple(TallyTable.from_dict(t) for t in d["tallies"]),
        )

    def config(self) -> RunConfig:
        return RunConfig.from_dict(self.provenance["config"])


def dumps(obj) -> str:
    """JSON text; floats use Python's shortest round-trip repr (lossless)."""
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def loads(text: str) -> Report:
    return Report.from_dict(json.loads(text))


def make_pipeline(cfg: RunConfig) -> ContextPipeline:
    """Pentagram -> pipeline -> optional jitter, turning geometry failures
    into :class:`ConfigError`."""
    pent = optimal_pentagram() if cfg.theta == "optimal" else symmetric_pentagram(float(cfg.theta))
    try:
        pl = build_pipeline(pent)
    except (IncompatiblePair, ClosureFailure) as exc:
        raise ConfigError(f"measurement geometry rejected: {exc}") from exc
    if cfg.jitter_sigma > 0:
        pl = perturb(pl, cfg.jitter_sigma, cfg.seed)
    return pl


def _provenance(cfg: RunConfig, mode: str) -> dict:
    return {"mode": mode, "config": cfg.to_dict(), "seed": cfg.seed, "version": __version__}


def _sum(estimates) -> Estimate:
    estimates = list(estimates)
    mean = 0.0
    for e in estimates:
        mean += e.mean
    stderr = math.sqrt(sum(e.stderr**2 for e in estimates))
    ns = [e.n for e in estimates]
    return Estimate(mean, stderr, 0 if 0 in ns else min(ns))


def _difference(a: Estimate, b: Estimate) -> Estimate:
    n = 0 if 0 in (a.n, b.n) else min(a.n, b.n)
    return Estimate(a.mean - b.mean, math.hypot(a.stderr, b.stderr), n)


def _assemble(cfg, mode, pl, terms, overlap, rates, tallies=()) -> Report:
    eq1 = _sum(terms)
    eq2 = _difference(eq1, overlap)
    return Report(
        mode=mode,
        eq1_terms=tuple(terms),
        eq1_lhs=eq1,
        eq2_lhs=eq2,
        overlap_term=overlap,
        click_rates=rates,
        audit=shared_measurement_audit(pl),
        verdicts={"eq1": verdict(eq1, EQ1_BOUND), "eq2": verdict(eq2, EQ2_BOUND)},
        provenance=_provenance(cfg, mode),
        double_clicks=sum(t.double_clicks for t in tallies),
        tallies=tuple(tallies),
    )


def run_ideal(cfg: RunConfig = RunConfig()) -> Report:
    """Noise-free evaluation: exact Born probabilities, detector model
    applied analytically, no sampling."""
    pl = make_pipeline(cfg)
    psi = cfg.psi()
    det = cfg.detector
    terms = [Estimate.exact(exact_context_correlation(pl, k, psi, det)) for k in range(1, 6)]
    overlap = Estimate.exact(exact_overlap_term(pl, psi, det))
    rates = {
        "p1": Estimate.exact(exact_click_probability(pl.pentagram[0], psi, det)),
        "r1": Estimate.exact(
            det.dark_rate + det.efficiency * exact_blocked_probability(pl, psi) * (1.0 - det.dark_rate)
        ),
        "r2": Estimate.exact(exact_click_probability(pl.a1_prime, psi, det)),
    }
    return _assemble(cfg, "exact", pl, terms, overlap, rates)


def run_montecarlo(cfg: RunConfig = RunConfig(), workers: int = 1) -> Report:
    """Sample the five contexts and the three overlap click rates.

    Each of the eight runs uses ``cfg.shots`` photons on its own random
    stream, so the terms are statistically independent.
    """
    if cfg.shots <= 0:
        raise ConfigError("Monte Carlo mode needs shots > 0")
    pl = make_pipeline(cfg)
    psi = cfg.psi()
    det = cfg.detector
    tallies = [sample_context(pl, k, psi, det, cfg.shots, cfg.seed, workers=workers) for k in range(1, 6)]
    terms = [estimate_correlation(t) for t in tallies]
    rate1 = sample_context(pl, 1, psi, det, cfg.shots, cfg.seed, stream=STREAM_RATE, workers=workers)
    rate5 = sample_context(pl, 5, psi, det, cfg.shots, cfg.seed, stream=STREAM_RATE, workers=workers)
    rates = {
        "p1": click_rate(rate1, 0),
        "r1": blocked_click_rate(pl, psi, det, cfg.shots, cfg.seed),
        "r2": click_rate(rate5, 1),
    }
    overlap = overlap_term(rates["p1"], rates["r1"], rates["r2"])
    return _assemble(cfg, "montecarlo", pl, terms, overlap, rates, tallies)


def run_lhv() -> dict:
    """Exhaustive classical bounds of both inequalities with their minimisers."""
    c1, c2 = eq1_certificate(), eq2_certificate()
    return {
        "eq1_min": c1.minimum,
        "eq2_min": c2.minimum,
        "certificates": {"eq1": c1.to_dict(), "eq2": c2.to_dict()},
    }


def write_csv(report: Report, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(tallies_to_csv(report.tallies))


def rerun(report: Report) -> Report:
    """Re-execute a report from its embedded provenance."""
    cfg = report.config()
    if report.provenance["mode"] == "exact":
        return run_ideal(cfg)
    return run_montecarlo(cfg)
