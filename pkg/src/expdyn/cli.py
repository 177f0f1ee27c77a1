"""Command-line front end: ``expdyn run|converge|subspace --config <path>``."""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass

import numpy as np

from .assembly import Assembler
from .config import ConfigError, RunConfig, load_config
from .diagnostics import DENSE_CAP, fit_order, relative_errors, subspace_sweep
from .io import CONVERGE_COLUMNS, RUN_COLUMNS, SUBSPACE_COLUMNS, write_csv, write_vtk
from .material import is_linear
from .mesh import Mesh, MeshError, cantilever, read_mesh
from .propagator import KrylovMode, PropagatorConfig, RunResult, run
from .reference import DirectIntegratorConfig, NonConvergenceError, LinearSolveError, run_direct, static_solve
from .system import MechanicalSystem


class SimulationError(RuntimeError):
    pass


@dataclass
class Problem:
    mesh: Mesh
    assembler: Assembler
    system: MechanicalSystem
    u0: np.ndarray
    v0: np.ndarray
    probe: int


def probe_node(mesh: Mesh) -> int:
    """Node closest to the centroid of the loaded faces (or of the X-max face if nothing is loaded)."""
    if mesh.neumann:
        nodes = np.unique(np.concatenate([t.face_nodes.ravel() for t in mesh.neumann]))
        target = mesh.nodes[nodes].mean(axis=0)
    else:
        lo, hi = mesh.bounding_box()
        target = np.array([hi[0], 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])])
    return int(np.argmin(np.linalg.norm(mesh.nodes - target, axis=1)))


def build_problem(cfg: RunConfig, threads: int = 1) -> Problem:
    if cfg.mesh.file is not None:
        mesh = read_mesh(cfg.mesh.file)
    else:
        mesh = cantilever(cfg.mesh.lengths, cfg.mesh.divisions)
    asm = Assembler(mesh, cfg.material, threads=threads)
    tractions = {t.name: np.array(cfg.load.traction) for t in mesh.neumann}
    body = np.array(cfg.load.body_force) if any(cfg.load.body_force) else None
    P = asm.external_force(tractions, body)
    n = asm.dofs.n_free
    u0 = np.zeros(n)
    if cfg.load.presolve and np.any(P):
        u0 = static_solve(MechanicalSystem(asm, P))
    system = MechanicalSystem(asm, P if cfg.load.active else None, load_active=cfg.load.active)
    vfull = np.zeros(mesh.n_dofs)
    vel = np.array(cfg.initial.velocity)
    if np.any(vel):
        weight = np.ones(mesh.n_nodes)
        if cfg.initial.profile == "quadratic":
            x = mesh.nodes[:, 0]
            weight = ((x - x.min()) / (x.max() - x.min())) ** 2
        vfull = (weight[:, None] * vel[None, :]).ravel()
    v0 = asm.dofs.restrict(vfull)
    probe = cfg.output.probe if cfg.output.probe is not None else probe_node(mesh)
    if not 0 <= probe < mesh.n_nodes:
        raise ConfigError(f"probe node {probe} is not a mesh node")
    return Problem(mesh, asm, system, u0, v0, probe)


def simulate(problem: Problem, cfg: RunConfig, scheme: str, dt: float, t_final: float,
             every: int = 1, clock=time.perf_counter) -> RunResult:
    spec = cfg.integrator
    if scheme == "ep":
        mode = KrylovMode(m=spec.krylov_m) if spec.krylov_m else KrylovMode(tol=spec.krylov_tol)
        pcfg = PropagatorConfig(dt, t_final, mode, output_every=every, calibrate=spec.calibrate)
        state = problem.system.state(problem.u0, problem.v0)
        return run(pcfg, problem.system, state, clock=clock)
    common = dict(variant=spec.variant, max_iters=spec.max_iters, tol=spec.picard_tol)
    if scheme == "newmark":
        dcfg = DirectIntegratorConfig.newmark(dt, spec.beta if spec.beta is not None else 0.25,
                                              spec.gamma if spec.gamma is not None else 0.5, **common)
    else:
        dcfg = DirectIntegratorConfig.hht(dt, spec.alpha, spec.beta, spec.gamma, **common)
    return run_direct(dcfg, problem.system, problem.u0, problem.v0, t_final, every, clock=clock)


def _zero_clock():
    return 0.0


def _probe_values(problem: Problem, u):
    full = problem.assembler.dofs.expand(u)
    return full[3 * problem.probe: 3 * problem.probe + 3]


def cmd_run(cfg: RunConfig, threads: int = 1, deterministic: bool = False) -> int:
    problem = build_problem(cfg, 1 if deterministic else threads)
    clock = _zero_clock if deterministic else time.perf_counter
    spec = cfg.integrator
    result = simulate(problem, cfg, spec.scheme, spec.dt, spec.t_final, cfg.output.every, clock)
    rows = []
    for rec in result.records:
        e = rec.energy
        rows.append((rec.step, rec.t, spec.scheme, *_probe_values(problem, rec.u), e.kinetic,
                     e.potential, e.total, rec.m_used, rec.epsilon_m, rec.wall_seconds))
        if cfg.output.vtk:
            full = problem.assembler.dofs.expand(rec.u)
            write_vtk(f"{cfg.output.vtk_prefix}_{rec.step:06d}.vtk", problem.mesh, full,
                      f"expdyn step {rec.step} t={rec.t!r}")
    write_csv(cfg.output.csv, RUN_COLUMNS, rows)
    if result.failed:
        raise SimulationError(str(result.failure))
    return 0


def cmd_converge(cfg: RunConfig, threads: int = 1, deterministic: bool = False) -> int:
    if cfg.converge is None:
        raise ConfigError("converge needs a [converge] block")
    conv = cfg.converge
    t_final = cfg.integrator.t_final
    for dt in conv.dts + (conv.reference_dt,):
        steps = t_final / dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ConfigError(f"step {dt!r} does not divide t_final = {t_final!r}")
    problem = build_problem(cfg, 1 if deterministic else threads)
    ref = simulate(problem, cfg, conv.reference_scheme, conv.reference_dt, t_final,
                   every=10**9)
    if ref.failed:
        raise SimulationError(f"reference run failed: {ref.failure}")
    u_ref, v_ref = ref.records[-1].u, ref.records[-1].v
    rows = []
    orders = []
    for scheme in conv.schemes:
        errs = []
        for dt in conv.dts:
            res = simulate(problem, cfg, scheme, dt, t_final, every=10**9)
            if res.failed:
                err = (float("nan"), float("nan"))
            else:
                entry = relative_errors(res.records[-1].u, res.records[-1].v, u_ref, v_ref)
                err = (entry.rel_error_u, entry.rel_error_v)
            errs.append(err)
            rows.append(("error", scheme, dt, *err))
        errs = np.array(errs)
        pu, pv = fit_order(conv.dts, errs[:, 0]), fit_order(conv.dts, errs[:, 1])
        orders.append(("order", scheme, float("nan"), pu, pv))
        print(f"{scheme}: fitted order u={pu:.4f} v={pv:.4f}"
              if np.isfinite(pu) else f"{scheme}: fitted order not available")
    write_csv(conv.csv, CONVERGE_COLUMNS, rows + orders)
    return 0


def cmd_subspace(cfg: RunConfig, threads: int = 1, deterministic: bool = False) -> int:
    if cfg.subspace is None:
        raise ConfigError("subspace needs a [subspace] block")
    if not is_linear(cfg.material):
        raise ConfigError("the subspace study needs a linear material")
    sub = cfg.subspace
    problem = build_problem(cfg, 1 if deterministic else threads)
    system = problem.system
    if 2 * system.n > DENSE_CAP:
        raise SimulationError(f"state dimension {2 * system.n} exceeds the dense cap {DENSE_CAP}; "
                              "use a coarser mesh")
    if sub.initial == "random":
        rng = np.random.default_rng(sub.seed)
        w = rng.standard_normal(2 * system.n)
    else:
        if not np.any(problem.u0) and not np.any(problem.v0):
            raise ConfigError("static initial state is zero; set a load or initial velocity")
        w = system.state(problem.u0, problem.v0).as_array()
    op = system.operator(system.hbar())
    points = subspace_sweep(op, w, sub.dts, sub.m_values)
    write_csv(sub.csv, SUBSPACE_COLUMNS, [(p.dt, p.m, p.actual, p.estimate) for p in points])
    return 0


COMMANDS = {"run": cmd_run, "converge": cmd_converge, "subspace": cmd_subspace}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="expdyn", description="Exponential-propagator elastodynamics")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--threads", type=int, default=1, help="threads for element assembly")
    parser.add_argument("--deterministic", action="store_true",
                        help="sequential assembly and zero wall-clock column")
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args.threads, args.deterministic)
    except ConfigError as exc:
        print(f"expdyn: config error: {exc}", file=sys.stderr)
        return 2
    except MeshError as exc:
        print(f"expdyn: mesh error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, NonConvergenceError, LinearSolveError) as exc:
        print(f"expdyn: simulation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
