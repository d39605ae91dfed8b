"""qpde command-line harness: verify, sweep, census, coeffs.

Reports are deterministic JSON (sorted keys, no timestamps unless --timing);
CSV files use '.' decimals and '\\n' line endings.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import oracle
from .grid import GridSpec, flat_to_position, from_fourier, khat_diagonal, khat_nd, position_to_flat, to_fourier
from .sim import BudgetExceeded, StateVector, check_budget, circuit_unitary

SCHEMA_VERSION = 1

METHODS = {
    "advection": ("ja", "dft", "smooth"),
    "heat": ("gaussian_ja", "dft", "smooth_pauli", "smooth_gaussian"),
    "wave": ("ja", "dft", "smooth", "block"),
    "poisson": ("dft", "ddim", "smooth"),
    "lindblad": ("dilation",),
}

EXIT_OK, EXIT_TOLERANCE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Strict):
    d: int = Field(1, ge=1, le=6)
    n: int = Field(3, ge=1, le=12)


class InitialCondition(_Strict):
    kind: Literal["plane_wave", "gaussian", "delta", "custom", "band_limited", "zero"] = "gaussian"
    k: list[int] = Field(default_factory=list)
    sigma: float = Field(0.1, gt=0)
    center: list[float] = Field(default_factory=list)
    l: list[int] = Field(default_factory=list)
    path: Optional[str] = None
    kmax: int = Field(2, ge=0)
    mean_free: bool = False


class ExperimentConfig(_Strict):
    version: Literal[1] = SCHEMA_VERSION
    pde: Literal["advection", "heat", "wave", "poisson", "lindblad"]
    method: str
    grid: GridConfig = Field(default_factory=GridConfig)
    r: Optional[list[float]] = None
    u: float = Field(1.0, gt=0)
    v: float = Field(1.0, gt=0)
    t: float = Field(0.0, ge=0)
    tau: Optional[float] = Field(None, gt=0)
    steps: Optional[int] = Field(None, ge=1)
    epsilon: float = Field(1e-6, gt=0, lt=1)
    kmax: Optional[int] = Field(None, ge=1)
    initial: InitialCondition = Field(default_factory=InitialCondition)
    initial_velocity: InitialCondition = Field(default_factory=lambda: InitialCondition(kind="zero"))
    seed: int = 0
    report_name: str = "report"
    field_csv: bool = False

    @field_validator("report_name")
    @classmethod
    def _plain_name(cls, v):
        if not v or "/" in v or "\\" in v:
            raise ValueError("report_name must be a plain file stem")
        return v

    @model_validator(mode="after")
    def _check_method(self):
        if self.method not in METHODS[self.pde]:
            raise ValueError(f"method for {self.pde} must be one of {METHODS[self.pde]}")
        if self.r is not None and len(self.r) != self.grid.d:
            raise ValueError("r needs one entry per dimension")
        return self


class VerificationReport(_Strict):
    config: dict
    passed: bool
    checks: dict
    operator_distance: Optional[float] = Field(None, ge=0)
    state_fidelity: Optional[float] = Field(None, ge=0, le=1)
    survival_probability: dict = Field(default_factory=dict)
    gate_counts: dict = Field(default_factory=dict)
    metrics: dict = Field(default_factory=dict)
    wall_time: Optional[float] = None
    error: Optional[str] = None


class InputError(ValueError):
    pass


# ---------------------------------------------------------------- initial conditions


def initial_field(ic: InitialCondition, grid: GridSpec, rng: np.random.Generator) -> np.ndarray:
    """Function values in position order (flattened C-order over dimensions)."""
    N, d = grid.N, grid.d
    x = grid.positions()
    if ic.kind == "zero":
        return np.zeros(N**d, dtype=complex)
    if ic.kind == "plane_wave":
        ks = ic.k or [0] * d
        if len(ks) != d:
            raise InputError("plane_wave needs one k per dimension")
        out = oracle.plane_wave(grid, ks)
    elif ic.kind == "gaussian":
        c = ic.center or [float(x[N // 2])] * d
        if len(c) != d:
            raise InputError("gaussian center needs one entry per dimension")
        out = np.ones(1)
        for ax in range(d):
            dx = (x - c[ax] + 0.5) % 1.0 - 0.5
            out = np.kron(out, np.exp(-(dx**2) / (2 * ic.sigma**2)))
        out = out.astype(complex)
    elif ic.kind == "delta":
        ls = ic.l or [0] * d
        if len(ls) != d or any(not 0 <= v < N for v in ls):
            raise InputError("delta needs one in-range index per dimension")
        out = np.zeros(N**d, dtype=complex)
        out[np.ravel_multi_index(tuple(ls), (N,) * d)] = 1.0
    elif ic.kind == "custom":
        if not ic.path:
            raise InputError("custom initial condition needs a path")
        p = Path(ic.path)
        arr = np.load(p) if p.suffix == ".npy" else np.loadtxt(p, dtype=complex, ndmin=1)
        out = np.asarray(arr, dtype=complex).reshape(-1)
        if out.size != N**d:
            raise InputError(f"custom field has {out.size} values, grid needs {N**d}")
    else:  # band_limited
        if not 0 <= ic.kmax < N // 2:
            raise InputError("band_limited kmax must be below N/2")
        mask = np.all([np.abs(k) <= ic.kmax for k in khat_nd(grid.n, d)], axis=0)
        c = (rng.normal(size=N**d) + 1j * rng.normal(size=N**d)) * mask
        out = flat_to_position(from_fourier(c, grid.n, d), grid.n, d).reshape(-1)
    if ic.mean_free:
        out = out - out.mean()
    return out


def _state(values: np.ndarray, grid: GridSpec) -> StateVector:
    a = position_to_flat(values, grid.n, grid.d)
    if np.linalg.norm(a) == 0:
        raise InputError("initial condition is identically zero")
    return StateVector.from_amplitudes(a)


def _fidelity(a: np.ndarray, b: np.ndarray) -> float:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def _sum_counts(blocks) -> dict:
    out: dict = {}
    for b in blocks:
        for k, v in b.gate_counts().items():
            if isinstance(v, (int, float)) and k != "scale":
                out[k] = out.get(k, 0) + v
    return out


def _gate_total(counts: dict) -> int:
    return int(sum(counts.get(k, 0) for k in ("one_qubit", "two_qubit", "multi_controlled")))


# ---------------------------------------------------------------- per-PDE verification


def _verify_advection(cfg: ExperimentConfig, grid: GridSpec, rng) -> dict:
    from . import advection as A

    r = cfg.r or [1.0] * grid.d
    prob = A.AdvectionProblem(grid, r, cfg.t, cfg.epsilon)
    f0 = _state(initial_field(cfg.initial, grid, rng), grid)
    ref = A.advect_oracle(prob, f0).amplitudes
    res: dict = {"checks": {}, "metrics": {}}
    if cfg.method == "smooth":
        check_budget(grid.num_qubits)
        c = A.build_advection_smooth(prob)
        out = StateVector(f0.num_qubits, from_fourier(np.exp(1j * c.global_phase) * _run_plain(c, to_fourier(f0.amplitudes, grid.n, grid.d)), grid.n, grid.d))
        fid = _fidelity(out.amplitudes, ref)
        counts = c.gate_counts()
        res["checks"]["fidelity_vs_sine_oracle"] = (1 - fid, 1e-4)
        if grid.num_qubits <= 10:
            target = np.exp(-2j * np.pi * cfg.t * sum(ra * k for ra, k in zip(r, khat_nd(grid.n, grid.d))))
            dist = float(np.abs(circuit_unitary(c) - np.diag(target)).max())
            res["operator_distance"] = dist
            res["checks"]["operator_vs_linear_phase"] = (dist, 1e-12)
        res.update(state_fidelity=fid, survival={"measured": 1.0, "predicted": 1.0}, gate_counts=counts)
        res["metrics"].update(gate_total=_gate_total(counts), ancillas=0, D=0, depth=len(c.gates))
        return res
    blocks = A.build_advection_ja(prob) if cfg.method == "ja" else A.build_advection_dft(prob)
    check_budget(grid.num_qubits + max(b.ancilla_count for b in blocks))
    out, p = A.run_in_fourier(blocks, f0, grid.n, grid.d)
    fid = _fidelity(out.amplitudes, ref)
    dist = float(np.linalg.norm(out.amplitudes - ref / np.linalg.norm(ref)))
    tol = grid.d * cfg.epsilon if cfg.method == "ja" else 1e-10
    res["checks"]["state_distance"] = (dist, tol)
    pred = float(np.prod([1 / b.scale**2 for b in blocks]))
    counts = _sum_counts(blocks)
    res.update(state_fidelity=fid, survival={"measured": p, "predicted": pred}, gate_counts=counts)
    res["metrics"].update(gate_total=_gate_total(counts), ancillas=max(b.ancilla_count for b in blocks),
                          D=max(b.extra["D"] for b in blocks), select_calls=int(counts.get("select_calls", 0)))
    return res


def _run_plain(circuit, amps: np.ndarray) -> np.ndarray:
    from .sim import run_circuit

    s = run_circuit(circuit, StateVector(circuit.num_qubits, amps))
    return s.amplitudes


def _verify_heat(cfg: ExperimentConfig, grid: GridSpec, rng) -> dict:
    from . import heat as H
    from .advection import run_in_fourier

    prob = H.HeatProblem(grid, cfg.u, cfg.t, cfg.epsilon, cfg.kmax)
    f0 = _state(initial_field(cfg.initial, grid, rng), grid)
    ref, p_ref = H.heat_oracle(prob, f0)
    res: dict = {"checks": {}, "metrics": {}}
    n, d = grid.n, grid.d
    c0 = to_fourier(f0.amplitudes, n, d)
    ksq = sum(k**2 for k in khat_nd(n, d))
    smooth_target = from_fourier(np.exp(-4 * np.pi**2 * cfg.t * cfg.u * ksq) * c0, n, d)
    if cfg.method == "smooth_pauli":
        check_budget(grid.num_qubits + 1)
        plan = H.build_heat_smooth_pauli(prob, "parallel")
        out, p = H.run_smooth_pauli(plan, f0, n, d)
        pred = plan.predicted_p(f0, n, d)
        fid = _fidelity(out.amplitudes, smooth_target)
        res["checks"]["fidelity_vs_gaussian_target"] = (1 - fid, 1e-10)
        res["checks"]["survival_prediction"] = (abs(p - pred), 1e-9)
        counts = _sum_counts(plan.blocks)
        res.update(state_fidelity=fid, survival={"measured": p, "predicted": pred}, gate_counts=counts)
        res["metrics"].update(gate_total=_gate_total(counts), ancillas=1, D=0, depth=plan.depth,
                              fidelity_vs_stencil_oracle=_fidelity(out.amplitudes, ref.amplitudes))
        return res
    if cfg.method == "smooth_gaussian":
        if cfg.kmax is None:
            raise InputError("smooth_gaussian needs kmax")
        blocks = H.build_heat_smooth_gaussian(prob)
        target = smooth_target
        tol_name = "fidelity_vs_gaussian_target"
    else:
        blocks = H.build_heat_gaussian_ja(prob) if cfg.method == "gaussian_ja" else H.build_heat_dft(prob)
        target = ref.amplitudes
        tol_name = "fidelity_vs_stencil_oracle"
    check_budget(grid.num_qubits + max(b.ancilla_count for b in blocks))
    out, p = run_in_fourier(blocks, f0, n, d)
    fid = _fidelity(out.amplitudes, target)
    scale2 = float(np.prod([b.scale**2 for b in blocks]))
    target_p = p_ref if cfg.method != "smooth_gaussian" else float(np.vdot(target, target).real)
    res["checks"][tol_name] = (1 - fid, 1e-10 if cfg.method == "dft" else max(cfg.epsilon, 1e-10))
    res["checks"]["scale_corrected_survival"] = (abs(p * scale2 - target_p), 1e-10 if cfg.method == "dft" else 10 * cfg.epsilon)
    counts = _sum_counts(blocks)
    res.update(state_fidelity=fid, survival={"measured": p, "predicted": target_p / scale2, "oracle_p": p_ref}, gate_counts=counts)
    res["metrics"].update(gate_total=_gate_total(counts), ancillas=max(b.ancilla_count for b in blocks),
                          D=max(b.extra["D"] for b in blocks), select_calls=int(counts.get("select_calls", 0)))
    return res


def _verify_wave(cfg: ExperimentConfig, grid: GridSpec, rng) -> dict:
    from . import wave as W

    n, d = grid.n, grid.d
    res: dict = {"checks": {}, "metrics": {}}
    if cfg.method == "block":
        be = W.build_wave_block_encoding(d, n)
        check_budget(be.circuit.num_qubits)
        inv_c, dev, _ = W.extract_block_constant(be, W.wave_htilde(d, n))
        counts = be.gate_counts()
        res["operator_distance"] = float(dev)
        res["checks"]["block_proportionality"] = (float(dev), 1e-10)
        res.update(gate_counts=counts, survival={})
        res["metrics"].update(gate_total=_gate_total(counts), ancillas=be.ancilla_count, D=0, inverse_constant=inv_c)
        return res
    if cfg.method == "smooth":
        if d == 1:
            c = W.build_wave_smooth(1, n, cfg.t * cfg.v)
            import scipy.linalg

            E = scipy.linalg.expm(-2j * np.pi * cfg.t * cfg.v * W.smooth_wave_generator(1, n))
            dist = float(np.abs(circuit_unitary(c) - E).max())
            res["checks"]["operator_vs_generator"] = (dist, 1e-12)
        else:
            if cfg.tau is None or cfg.kmax is None:
                raise InputError("Trotterized smooth wave needs tau and kmax")
            c = W.build_wave_smooth(d, n, cfg.t * cfg.v, cfg.tau * cfg.v)
            check_budget(c.num_qubits)
            import scipy.linalg

            E = scipy.linalg.expm(-2j * np.pi * cfg.t * cfg.v * W.smooth_wave_generator(d, n))
            cols = W.band_limited_columns(d, n, cfg.kmax)
            dist = float(np.linalg.norm((circuit_unitary(c) - E)[:, cols], 2))
            bound = W.trotter_error_bound(d, cfg.kmax, cfg.t * cfg.v, cfg.tau * cfg.v)
            res["checks"]["trotter_error_vs_bound"] = (dist, bound)
            res["metrics"]["literal_bound"] = W.trotter_error_bound(d, cfg.kmax, cfg.t * cfg.v, cfg.tau * cfg.v, two_pi=False)
        counts = c.gate_counts()
        res.update(operator_distance=dist, gate_counts=counts, survival={"measured": 1.0, "predicted": 1.0})
        res["metrics"].update(gate_total=_gate_total(counts), ancillas=0, D=0, depth=len(c.gates))
        return res
    if d != 1:
        raise InputError("the ja/dft wave circuits are one-dimensional")
    ham = W.wave_hamiltonian(1, n, 1.0)
    f = position_to_flat(initial_field(cfg.initial, grid, rng), n, 1)
    df = position_to_flat(initial_field(cfg.initial_velocity, grid, rng), n, 1) / cfg.v
    enc = W.encode_initial("A", 0, f, df, ham)
    T = cfg.t * cfg.v
    ref = W.evolve_wave_oracle(ham, enc.state, T).amplitudes
    be = W.build_wave_1d_ja(n, T, cfg.epsilon) if cfg.method == "ja" else W.build_wave_1d_dft(n, T)
    check_budget(be.circuit.num_qubits)
    out, p = W.run_wave_1d(be, enc.state, n)
    fid = _fidelity(out.amplitudes, ref)
    res["checks"]["fidelity_vs_dense_evolution"] = (1 - fid, max(cfg.epsilon, 1e-10) if cfg.method == "ja" else 1e-10)
    fr, dfr = W.decode(ham, "A", 0, out.amplitudes * math.sqrt(p) * be.scale, enc.norm)
    fo, dfo = oracle.wave_second_order(grid, cfg.v, flat_to_position(f, n, 1), flat_to_position(df * cfg.v, n, 1), cfg.t)
    mf = lambda a: a - a.mean()  # noqa: E731
    res["metrics"]["decoded_field_error"] = float(np.abs(mf(flat_to_position(fr, n, 1)) - mf(fo)).max())
    counts = be.gate_counts()
    res.update(state_fidelity=fid, survival={"measured": p, "predicted": 1 / be.scale**2}, gate_counts=counts)
    res["metrics"].update(gate_total=_gate_total(counts), ancillas=be.ancilla_count, D=be.extra["D"],
                          select_calls=int(be.extra["select_calls"]))
    return res


def _verify_poisson(cfg: ExperimentConfig, grid: GridSpec, rng) -> dict:
    from . import poisson as P
    from .advection import run_in_fourier

    n, d = grid.n, grid.d
    prob = P.PoissonProblem(grid, cfg.epsilon if cfg.epsilon < 1 else 1e-2, cfg.kmax)
    g = _state(initial_field(cfg.initial, grid, rng), grid)
    try:
        ref, p_ref = P.poisson_oracle(prob, g)
    except P.PoissonInputError as e:
        raise InputError(str(e)) from e
    res: dict = {"checks": {}, "metrics": {}}
    if cfg.method == "dft":
        be = P.build_poisson_1d_dft(prob)
        check_budget(be.circuit.num_qubits)
        out, p = run_in_fourier([be], g, n, d)
        fid = _fidelity(out.amplitudes, ref.amplitudes)
        res["checks"]["fidelity_vs_pinv_oracle"] = (1 - fid, 1e-10)
        res["checks"]["scale_corrected_survival"] = (abs(p * be.scale**2 - p_ref) / p_ref, 1e-9)
        counts = be.gate_counts()
        res.update(state_fidelity=fid, survival={"measured": p, "predicted": p_ref / be.scale**2}, gate_counts=counts)
        res["metrics"].update(gate_total=_gate_total(counts), ancillas=be.ancilla_count, D=be.extra["D"],
                              select_calls=int(be.extra["select_calls"]))
        return res
    if cfg.method == "ddim":
        inv = P.build_poisson_ddim(prob)
        target = P.A_diagonal(n, d)
    else:
        if cfg.kmax is None:
            raise InputError("smooth Poisson needs kmax")
        inv = P.build_poisson_smooth(prob)
        target = P.A_smooth_diagonal(n, d)
    nz = np.abs(target) > 1e-9
    if cfg.method == "smooth":
        nz &= P.band_limited_mask(n, d, cfg.kmax)
    vals = inv.spectral_values()
    exact = np.zeros_like(target)
    exact[nz] = 1 / target[nz]
    rel = float(np.abs(vals[nz] - exact[nz]).max() / np.abs(exact[nz]).max())
    res["operator_distance"] = rel
    res["checks"]["relative_spectral_error"] = (rel, prob.epsilon)
    c = to_fourier(g.amplitudes, n, d)
    want = from_fourier(np.where(nz, exact, 0) * c, n, d)
    got = from_fourier(np.where(nz, vals, 0) * c, n, d)
    fid = _fidelity(got, want) if np.linalg.norm(want) > 0 else 1.0
    acct = inv.gate_accounting()
    res.update(state_fidelity=fid, survival={}, gate_counts=acct)
    res["metrics"].update(gate_total=int(acct["outer_terms"] * acct["controlled_op_gates"]), ancillas=0,
                          D=int(acct["outer_terms"]), series_terms=int(acct["outer_terms"]))
    return res


def _verify_lindblad(cfg: ExperimentConfig, grid: GridSpec, rng) -> dict:
    from . import lindblad as L

    check_budget(grid.num_qubits + 1, "density")
    f = initial_field(cfg.initial, grid, rng)
    if np.abs(f.imag).max() > 1e-12:
        raise InputError("diagonal encoding needs a real field")
    f = f.real
    if f.min() < -1e-15:
        raise InputError("negative input values")
    f = np.clip(f, 0, None)
    f = f / f.sum()
    steps = cfg.steps or L.calibrate_steps(f, cfg.t, grid, cfg.epsilon, cfg.u)
    enc = L.evolve_lindblad_heat(f, cfg.t, steps, grid, cfg.u, record_every=max(1, steps // 8))
    ref = L.fd_heat_reference(f, cfg.t, grid, cfg.u)
    l1 = float(np.abs(enc.diagonal - ref).sum())
    res: dict = {"checks": {}, "metrics": {}}
    res["checks"]["l1_vs_fd_heat"] = (l1, cfg.epsilon)
    res["checks"]["trace_drift"] = (enc.extra["max_trace_drift"], 1e-10)
    res["checks"]["negative_diagonal"] = (max(0.0, -enc.extra["min_diagonal"]), 1e-10)
    res["checks"]["offdiagonal_mass"] = (enc.extra["max_offdiagonal"], 1e-10)
    c = L.dilation_circuit(L.heat_jumps(grid.n, 1, cfg.u)[0], grid.n, cfg.t / steps)
    per = c.gate_counts()
    counts = {k: v * steps * 2 * grid.d for k, v in per.items()}
    res.update(survival={"measured": 1.0, "predicted": 1.0}, gate_counts=counts, operator_distance=l1)
    res["metrics"].update(gate_total=_gate_total(counts), ancillas=1, D=0, steps=steps)
    res["trajectory_csv"] = L.trajectory_csv(enc)
    return res


VERIFIERS = {
    "advection": _verify_advection,
    "heat": _verify_heat,
    "wave": _verify_wave,
    "poisson": _verify_poisson,
    "lindblad": _verify_lindblad,
}


def _round(x):
    """Floats to 12 significant digits so reports are stable across BLAS builds."""
    if isinstance(x, float):
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, np.generic):
        return _round(x.item())
    return x


def cmd_verify(cfg: ExperimentConfig, timing: bool = False) -> tuple:
    """Returns (VerificationReport, extra files {name: text}, exit code)."""
    rng = np.random.default_rng(cfg.seed)
    grid = GridSpec(cfg.grid.d, cfg.grid.n, "unit" if cfg.pde == "lindblad" else "symmetric")
    start = time.perf_counter()
    files: dict = {}
    echo = json.loads(cfg.model_dump_json())
    try:
        res = VERIFIERS[cfg.pde](cfg, grid, rng)
    except BudgetExceeded as e:
        rep = VerificationReport(config=echo, passed=False, checks={}, error=f"budget exceeded: {e}")
        return rep, files, EXIT_BUDGET
    except (InputError, ValueError) as e:
        rep = VerificationReport(config=echo, passed=False, checks={}, error=str(e))
        return rep, files, EXIT_INPUT
    checks = {k: {"value": float(v), "tolerance": float(tol), "pass": bool(v <= tol)} for k, (v, tol) in res["checks"].items()}
    passed = all(c["pass"] for c in checks.values())
    if "trajectory_csv" in res:
        files["trajectory.csv"] = res["trajectory_csv"]
    rep = VerificationReport(
        config=echo,
        passed=passed,
        checks=_round(checks),
        operator_distance=_round(res.get("operator_distance")),
        state_fidelity=_round(res.get("state_fidelity")),
        survival_probability=_round(res.get("survival", {})),
        gate_counts=_round(res.get("gate_counts", {})),
        metrics=_round(res.get("metrics", {})),
        wall_time=round(time.perf_counter() - start, 3) if timing else None,
    )
    return rep, files, EXIT_OK if passed else EXIT_TOLERANCE


def report_json(rep: VerificationReport) -> str:
    return json.dumps(rep.model_dump(), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- sweep


SWEEP_AXES = ("n", "t", "epsilon", "d", "kmax")
SWEEP_COLUMNS = ["axis_value", "gate_total", "ancillas", "D", "fidelity", "p", "status"]


def _with_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    data = json.loads(cfg.model_dump_json())
    if axis in ("n", "d"):
        data["grid"][axis] = int(value)
        if axis == "d" and data.get("r") is not None:
            data["r"] = [data["r"][0]] * int(value)
    elif axis == "kmax":
        data["kmax"] = int(value)
    else:
        data[axis] = float(value)
    return ExperimentConfig.model_validate(data)


def loglog_slope(x, y) -> Optional[float]:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def cmd_sweep(cfg: ExperimentConfig, axis: str, values) -> tuple:
    """Returns (csv text, summary dict, exit code)."""
    if axis not in SWEEP_AXES:
        raise InputError(f"axis must be one of {SWEEP_AXES}")
    rows, metrics, failed = [], [], False
    for v in values:
        try:
            rep, _, code = cmd_verify(_with_axis(cfg, axis, v))
        except ValidationError as e:
            rep, code = None, EXIT_INPUT
            err = str(e.errors()[0]["msg"])
        failed |= code != EXIT_OK
        m = rep.metrics if rep else {}
        status = "ok" if code == EXIT_OK else ("fail" if code == EXIT_TOLERANCE else "error")
        p = rep.survival_probability.get("measured") if rep else None
        rows.append([v, m.get("gate_total", ""), m.get("ancillas", ""), m.get("D", ""),
                     rep.state_fidelity if rep and rep.state_fidelity is not None else "", "" if p is None else p, status])
        metrics.append((float(v), m, status, rep.error if rep else err))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    xs = [x for x, *_ in metrics]
    keys = sorted({k for _, m, _, _ in metrics for k, v in m.items() if isinstance(v, (int, float))})
    slopes = {}
    for k in keys:
        ys = [m.get(k, 0) for _, m, _, _ in metrics]
        entry = {"vs_axis": loglog_slope(xs, ys)}
        if axis == "n":
            entry["vs_N"] = loglog_slope([2**x for x in xs], ys)
        slopes[k] = _round(entry)
    summary = {
        "axis": axis,
        "values": [_round(x) for x in xs],
        "slopes": slopes,
        "errors": {repr(x): e for x, _, _, e in metrics if e},
        "config": json.loads(cfg.model_dump_json()),
    }
    return buf.getvalue(), summary, EXIT_TOLERANCE if failed else EXIT_OK


# ---------------------------------------------------------------- census / coeffs


def cmd_census(ds, n: int) -> tuple:
    from .wave import census_csv, wave_gate_census

    cens = [wave_gate_census(d, n) for d in ds]
    ok = all(r.count == c["expected_rows"][r.kind] for c in cens for r in c["rows"])
    summary = [{"d": c["d"], "n": c["n"], "cnot_total": c["cnot_total"], "controls_expected": c["controls_expected"],
                "weight_bound": c["weight_bound"], "rows": {r.kind: {"count": r.count, "expected": c["expected_rows"][r.kind],
                                                                   "controls": r.controls, "max_weight": r.max_weight,
                                                                   "cnots": r.cnots} for r in c["rows"]}} for c in cens]
    return census_csv(cens), summary, EXIT_OK if ok else EXIT_TOLERANCE


def series_for(cfg: ExperimentConfig):
    """The SeriesSpec behind the configured method (one dimension)."""
    from . import series as S

    N = 2**cfg.grid.n
    if cfg.pde == "advection" and cfg.method in ("ja", "dft"):
        r = (cfg.r or [1.0])[0]
        if cfg.method == "ja":
            return S.jacobi_anger_coeffs(-cfg.t * N * r, cfg.epsilon)
        k = khat_diagonal(cfg.grid.n)
        return S.dft_series_of_diagonal(np.exp(-1j * cfg.t * N * r * np.sin(2 * np.pi * k / N)))
    if cfg.pde == "heat":
        if cfg.method == "gaussian_ja":
            return S.heat_composite_series(cfg.t, cfg.u, N, cfg.epsilon)
        if cfg.method == "dft":
            from .heat import heat_kernel_1d

            return S.dft_series_of_diagonal(heat_kernel_1d(cfg.grid.n, cfg.u, cfg.t))
        if cfg.method == "smooth_gaussian" and cfg.kmax:
            return S.smooth_gaussian_series(cfg.t, cfg.u, cfg.epsilon, cfg.kmax)
    if cfg.pde == "wave" and cfg.method in ("ja", "dft"):
        from .wave import build_wave_1d_dft

        if cfg.method == "ja":
            return S.jacobi_anger_coeffs(-2 * cfg.t * cfg.v * N, cfg.epsilon)
        return build_wave_1d_dft(cfg.grid.n, cfg.t * cfg.v).extra["series"]
    if cfg.pde == "poisson" and cfg.method == "dft":
        from .poisson import A_diagonal, _pinv_diag

        return S.dft_series_of_diagonal(_pinv_diag(A_diagonal(cfg.grid.n, 1)))
    raise InputError(f"{cfg.pde}/{cfg.method} has no single Fourier series to export")


# ---------------------------------------------------------------- entry point


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.model_validate_json(fh.read())


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return p


def _parse_values(s: str) -> list:
    vals = []
    for part in s.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            vals += list(range(int(a), int(b) + 1))
        elif part:
            vals.append(float(part) if any(c in part for c in ".eE") else int(part))
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpde", description="QFT-based PDE circuits: verification harness")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment JSON")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--budget", type=int, default=None, help="statevector qubit budget (QPDE_BUDGET fallback)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        fmt = p.add_mutually_exclusive_group()
        fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
        fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")

    p = sub.add_parser("verify", help="run circuit and oracle on one configuration")
    common(p)
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    p = sub.add_parser("sweep", help="verify over a list of axis values")
    common(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma list, ranges as a..b")
    p = sub.add_parser("census", help="gate census of the wave block encodings")
    common(p, config_required=False)
    p.add_argument("--d", default="1..6", help="dimensions, e.g. 1..6")
    p.add_argument("--n", type=int, default=5)
    p = sub.add_parser("coeffs", help="export the series coefficients of a configuration")
    common(p)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.budget is not None:
        os.environ["QPDE_BUDGET"] = str(args.budget)
    out = Path(args.out)
    try:
        if args.verb == "census":
            text, summary, code = cmd_census([int(x) for x in _parse_values(args.d)], args.n)
            if args.fmt != "json":
                _write(out, "census.csv", text)
            if args.fmt != "csv":
                _write(out, "census.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
            return code
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        if args.verb == "verify":
            rep, files, code = cmd_verify(cfg, timing=args.timing)
            _write(out, f"{cfg.report_name}.json", report_json(rep))
            for name, text in files.items():
                if args.fmt != "json":
                    _write(out, name, text)
            if cfg.field_csv or args.fmt == "csv":
                _write(out, f"{cfg.report_name}_summary.csv", _report_csv(rep))
            print(f"{'PASS' if rep.passed else 'FAIL'} {cfg.pde}/{cfg.method}" + (f": {rep.error}" if rep.error else ""))
            return code
        if args.verb == "sweep":
            text, summary, code = cmd_sweep(cfg, args.axis, _parse_values(args.values))
            _write(out, f"{cfg.report_name}_sweep.csv", text)
            _write(out, f"{cfg.report_name}_sweep_summary.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
            return code
        if args.verb == "coeffs":
            ser = series_for(cfg)
            _write(out, f"{cfg.report_name}_coeffs.csv", ser.to_csv())
            return EXIT_OK
    except ValidationError as e:
        print(f"invalid config: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


def _report_csv(rep: VerificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "value", "tolerance", "pass"])
    for k in sorted(rep.checks):
        c = rep.checks[k]
        w.writerow([k, repr(c["value"]), repr(c["tolerance"]), c["pass"]])
    return buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
