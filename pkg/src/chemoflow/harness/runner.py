"""Coupled time loop, norm monitoring, persistence.

One coupled cycle is Lie splitting: the fluid advances with the current
density, then the chemotaxis pair advances against the updated velocity.
The monitor tracks raw and t^beta-weighted L^(rho q) norms each output
step; the blow-up flag is sticky and latches the last healthy time as the
horizon estimate. Threshold crossing and non-finite fields are evidence of
blow-up, never a proof.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ..fields import (
    Grid2D,
    ScalarField,
    VectorField,
    divergence,
    lq_norm,
    read_snapshot,
    write_snapshot,
)
from ..fracops import FracHistory
from ..ks_macro import BlowupDetected, ChiModel, KSState, step_ks
from ..ns_fluid import FluidState, step_fluid
from .config import DIMENSION, InitialSpec, SimConfig, dump


@dataclass
class MonitorRecord:
    t: float
    norm_n: float
    norm_c: float
    norm_u: float
    weighted_n: float
    weighted_c: float
    weighted_u: float
    blowup_flag: bool
    t_max_estimate: float

    CSV_HEADER = "t,norm_n,norm_c,norm_u,weighted_n,weighted_c,weighted_u,blowup_flag,t_max_estimate"

    def to_csv_row(self) -> str:
        vals = [self.t, self.norm_n, self.norm_c, self.norm_u,
                self.weighted_n, self.weighted_c, self.weighted_u]
        return ",".join(repr(float(v)) for v in vals) \
            + f",{int(self.blowup_flag)},{float(self.t_max_estimate)!r}"


def build_scalar(grid: Grid2D, spec: InitialSpec) -> ScalarField:
    if spec.kind == "zero":
        return ScalarField.zeros(grid)
    if spec.kind == "uniform":
        return ScalarField(grid, np.full((grid.nx, grid.ny), spec.params[0]))
    if spec.kind == "gaussian_bump":
        cx, cy, width, mass = spec.params
        xc, yc = grid.cell_centers()
        blob = np.exp(-((xc - cx) ** 2 + (yc - cy) ** 2) / (2.0 * width ** 2))
        blob *= mass / (np.sum(blob) * grid.cell_area)
        return ScalarField(grid, blob)
    if spec.kind == "cosine_mode":
        j, k, amp = spec.params
        xc, yc = grid.cell_centers()
        return ScalarField(grid, amp * np.cos(j * np.pi * xc / grid.lx)
                           * np.cos(k * np.pi * yc / grid.ly))
    if spec.kind == "from_file":
        f, _, _ = read_snapshot(spec.params[0])
        if f.grid != grid:
            raise ValueError(f"{spec.params[0]}: snapshot grid does not match config grid")
        return f
    raise ValueError(f"unsupported initial kind {spec.kind!r}")


def build_phi(grid: Grid2D, expression: str) -> ScalarField:
    if expression == "linear_y":
        return ScalarField.from_function(grid, lambda x, y: y)
    if expression.startswith("from_file(") and expression.endswith(")"):
        f, _, _ = read_snapshot(expression[len("from_file("):-1])
        return f
    raise ValueError(f"unsupported phi expression {expression!r}")


def chi_from_config(cfg: SimConfig) -> ChiModel:
    if cfg.chi_model == "const_beta":
        return ChiModel("const_beta", beta=cfg.chi_beta)
    return ChiModel(cfg.chi_model)


def speed_field(u: VectorField) -> ScalarField:
    """Cell-centered velocity magnitude for norm monitoring."""
    ux_c = 0.5 * (u.ux[:-1, :] + u.ux[1:, :])
    uy_c = 0.5 * (u.uy[:, :-1] + u.uy[:, 1:])
    return ScalarField(u.grid, np.hypot(ux_c, uy_c))


def monitor(ks: KSState, fluid: FluidState | None, t: float, cfg: SimConfig,
            prev: MonitorRecord | None = None) -> MonitorRecord:
    rq = cfg.monitor_rho * cfg.monitor_q
    beta = cfg.monitor_beta
    norm_n = lq_norm(ks.n, rq)
    norm_c = lq_norm(ks.c, rq)
    norm_u = lq_norm(speed_field(fluid.u), rq) if fluid is not None else 0.0
    w = t ** beta if t > 0.0 else 0.0
    norms = (norm_n, norm_c, norm_u)
    healthy = all(math.isfinite(v) and v <= cfg.monitor_threshold for v in norms)
    flag = (prev.blowup_flag if prev else False) or not healthy
    if prev is not None and prev.blowup_flag:
        t_max = prev.t_max_estimate
    elif not healthy:
        t_max = prev.t if prev is not None else 0.0
    else:
        t_max = math.inf
    return MonitorRecord(
        t=t, norm_n=norm_n, norm_c=norm_c, norm_u=norm_u,
        weighted_n=w * norm_n, weighted_c=w * norm_c, weighted_u=w * norm_u,
        blowup_flag=flag, t_max_estimate=t_max,
    )


def advance_coupled(ks: KSState, fluid: FluidState, dt: float, alpha: float,
                    div_tol: float = 1e-8, cg_tol: float = 1e-12,
                    cg_max_iter: int = 4000):
    """One splitting cycle: fluid with current density, then the pair with
    the updated velocity. Non-finite fields surface as BlowupDetected."""
    try:
        fluid = step_fluid(fluid, ks.n, dt, div_tol=div_tol,
                           cg_tol=cg_tol, cg_max_iter=cg_max_iter)
        ks = step_ks(ks, fluid.u, dt, alpha, div_tol=div_tol)
    except BlowupDetected:
        raise
    except FloatingPointError as exc:
        raise BlowupDetected(str(exc)) from exc
    return ks, fluid


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_checkpoint(path, ks: KSState, fluid: FluidState | None, step: int,
                    cfg: SimConfig) -> None:
    payload = {
        "step": np.int64(step),
        "t0": ks.n_hist.t0,
        "dt": ks.n_hist.dt,
        "n_hist": ks.n_hist.stacked(),
        "c_hist": ks.c_hist.stacked(),
        "gamma": ks.gamma,
        "config": np.frombuffer(dump(cfg).encode("utf-8"), dtype=np.uint8),
    }
    if fluid is not None:
        payload.update(ux=fluid.u.ux, uy=fluid.u.uy, p=fluid.p.values,
                       phi=fluid.phi.values)
    np.savez(path, **payload)


def load_checkpoint(path, cfg: SimConfig):
    data = np.load(path)
    grid = Grid2D(cfg.nx, cfg.ny, cfg.lx, cfg.ly)
    n_hist = FracHistory(data["n_hist"][0], float(data["t0"]), float(data["dt"]))
    for snap in data["n_hist"][1:]:
        n_hist.append(snap)
    c_hist = FracHistory(data["c_hist"][0], float(data["t0"]), float(data["dt"]))
    for snap in data["c_hist"][1:]:
        c_hist.append(snap)
    ks = KSState(
        n=ScalarField(grid, data["n_hist"][-1].copy()),
        c=ScalarField(grid, data["c_hist"][-1].copy()),
        n_hist=n_hist, c_hist=c_hist,
        gamma=float(data["gamma"]), chi=chi_from_config(cfg),
    )
    fluid = None
    if "ux" in data:
        fluid = FluidState(
            u=VectorField(grid, data["ux"].copy(), data["uy"].copy()),
            p=ScalarField(grid, data["p"].copy()),
            phi=ScalarField(grid, data["phi"].copy()),
        )
    return ks, fluid, int(data["step"])


def _write_outputs(out_dir, ks, fluid, step, t):
    write_snapshot(os.path.join(out_dir, f"n_{step:06d}.csv"), ks.n, "n", t)
    write_snapshot(os.path.join(out_dir, f"c_{step:06d}.csv"), ks.c, "c", t)
    if fluid is not None:
        g = ks.grid
        ux_c = ScalarField(g, 0.5 * (fluid.u.ux[:-1, :] + fluid.u.ux[1:, :]))
        uy_c = ScalarField(g, 0.5 * (fluid.u.uy[:, :-1] + fluid.u.uy[:, 1:]))
        write_snapshot(os.path.join(out_dir, f"ux_{step:06d}.csv"), ux_c, "ux", t)
        write_snapshot(os.path.join(out_dir, f"uy_{step:06d}.csv"), uy_c, "uy", t)
        write_snapshot(os.path.join(out_dir, f"p_{step:06d}.csv"), fluid.p, "p", t)


def run_simulation(cfg: SimConfig, restart_from=None, checkpoint_every: int | None = None):
    """Drive a ks_only or tfksns run; returns the list of MonitorRecords.

    Writes per-field CSV snapshots every ``output_every`` steps plus
    monitor.csv and summary.txt into the output directory. A blow-up flag
    stops the loop (the evidence is in the records, not an exception).
    """
    if cfg.model not in ("ks_only", "tfksns"):
        raise ValueError(f"run_simulation handles ks_only/tfksns, not {cfg.model!r}")
    os.makedirs(cfg.output_dir, exist_ok=True)
    grid = Grid2D(cfg.nx, cfg.ny, cfg.lx, cfg.ly)
    with_fluid = cfg.model == "tfksns"

    if restart_from is not None:
        ks, fluid, start_step = load_checkpoint(restart_from, cfg)
        if with_fluid and fluid is None:
            raise ValueError("checkpoint has no fluid state but model is tfksns")
    else:
        n0 = build_scalar(grid, cfg.initial_n)
        c0 = build_scalar(grid, cfg.initial_c)
        ks = KSState.create(n0, c0, cfg.dt, gamma=cfg.gamma, chi=chi_from_config(cfg),
                            advect_scheme=cfg.advect_scheme)
        fluid = FluidState.at_rest(grid, build_phi(grid, cfg.phi_expression)) if with_fluid else None
        start_step = 0

    n_steps = round(cfg.t_end / cfg.dt)
    records = []
    rec = monitor(ks, fluid, ks.t, cfg) if start_step == 0 else None
    if rec is not None:
        records.append(rec)
        _write_outputs(cfg.output_dir, ks, fluid, 0, ks.t)

    prev = rec
    for step in range(start_step + 1, n_steps + 1):
        try:
            if with_fluid:
                ks, fluid = advance_coupled(ks, fluid, cfg.dt, cfg.alpha,
                                            div_tol=cfg.div_tol, cg_tol=cfg.cg_tol,
                                            cg_max_iter=cfg.cg_max_iter)
            else:
                step_ks(ks, VectorField.zeros(grid), cfg.dt, cfg.alpha)
        except BlowupDetected:
            rec = MonitorRecord(
                t=step * cfg.dt, norm_n=math.inf, norm_c=math.inf, norm_u=math.inf,
                weighted_n=math.inf, weighted_c=math.inf, weighted_u=math.inf,
                blowup_flag=True,
                t_max_estimate=prev.t if prev is not None else 0.0,
            )
            records.append(rec)
            break
        if step % cfg.output_every == 0 or step == n_steps:
            rec = monitor(ks, fluid, step * cfg.dt, cfg, prev=prev)
            records.append(rec)
            prev = rec
            _write_outputs(cfg.output_dir, ks, fluid, step, step * cfg.dt)
            if rec.blowup_flag:
                break
        if checkpoint_every and step % checkpoint_every == 0:
            save_checkpoint(os.path.join(cfg.output_dir, f"checkpoint_{step:06d}.npz"),
                            ks, fluid, step, cfg)

    _write_monitor_csv(os.path.join(cfg.output_dir, "monitor.csv"), records)
    _write_summary(os.path.join(cfg.output_dir, "summary.txt"), cfg, records)
    return records


def _write_monitor_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MonitorRecord.CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.to_csv_row() + "\n")


def _write_summary(path, cfg, records):
    last = records[-1] if records else None
    lines = [
        f"model = {cfg.model}",
        f"alpha = {cfg.alpha!r}",
        f"steps_recorded = {len(records)}",
        f"final_t = {last.t!r}" if last else "final_t = none",
        f"blowup_flagged = {last.blowup_flag if last else False}",
    ]
    if last and last.blowup_flag:
        lines.append(f"t_max_estimate = {last.t_max_estimate!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
