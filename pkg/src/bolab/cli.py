"""Command-line entry point: every experiment behind one reproducible runner.

Layout:  bolab [global flags] <module> <action> [options]

Global flags: --out-dir, --seed, --threads, --config FILE (key=value lines,
command-line flags win), --plot (render PNG figures next to the delimited
artifacts), --list.  Exit codes: 0 success, 2 validation error, 3 numerical
diagnostic, 4 I/O error.  Every artifact starts with a comment naming the
generating subcommand and seed; a run_manifest.json records the full
configuration, library versions and wall time.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__, bo, euler, gas, gibbs, io, solitons, transport
from .density import TWO_PI, CircleDensity
from .errors import ConfigurationError, NumericalDiagnostic
from .fields import FourierField

EXPERIMENTS: List[Tuple[str, str]] = [
    ("bo travelling-wave", "exact travelling-wave profile, speed and mass"),
    ("bo evolve", "spectral time integration of the wave equation"),
    ("gibbs sample", "random-walk Metropolis draws from the mass-ball ensemble"),
    ("solitons evolve", "pole-dynamics trajectory and field reconstruction"),
    ("gas sample", "MCMC draws from the circular log-gas"),
    ("gas partition", "Toeplitz-determinant partition function"),
    ("gas equilibrium", "equilibrium density of a cosine potential"),
    ("gas clt", "central-limit experiment for linear statistics"),
    ("transport w2", "Wasserstein-2 distance between circle densities"),
    ("transport geodesic", "displacement interpolation between densities"),
    ("transport check-fti", "free transportation inequality check"),
    ("transport check-hwi", "entropy-transport-information inequality check"),
    ("euler evolve", "isentropic gas evolution by spectral collocation"),
    ("euler variational", "one backward-Euler minimizing-movement step"),
    ("euler cosec-limit", "interaction-sum hydrodynamic limit experiment"),
    ("euler entropy-check", "entropy production bounds along a gas trajectory"),
]


def _cosine_potential(g: float) -> FourierField:
    return FourierField.from_modes({1: g / 2.0, -1: g / 2.0}, 1)


def _load_density(spec: str) -> CircleDensity:
    """A density from a named built-in or a CSV grid file."""
    if spec == "uniform":
        return CircleDensity.uniform()
    if spec == "cosine":
        return CircleDensity.from_callable(
            lambda t: (1.0 + np.cos(t)) / TWO_PI, cutoff=4)
    if spec == "tilted":
        return CircleDensity.from_callable(
            lambda t: (1.0 + 0.3 * np.cos(t) + 0.2 * np.sin(2 * t)) / TWO_PI,
            cutoff=8)
    _, vals = io.read_grid_csv(spec)
    return CircleDensity.from_values(vals, normalize=True)


def _grid(G: int) -> np.ndarray:
    return TWO_PI * np.arange(G) / G


# -- handlers --------------------------------------------------------------
# each returns a dict merged into the run manifest; `ctx` carries
# out-dir/meta/plot flags and the run's seed

class RunContext:
    def __init__(self, out_dir: str, meta: str, plot: bool, seed: int):
        self.out_dir = out_dir
        self.meta = meta
        self.plot = plot
        self.seed = seed
        self.artifacts: List[str] = []

    def path(self, name: str) -> str:
        p = os.path.join(self.out_dir, name)
        self.artifacts.append(name)
        return p


def _run_bo_travelling_wave(args, ctx: RunContext) -> dict:
    w = bo.TravellingWave(args.r, args.beta)
    f = w.profile(args.modes)
    x = _grid(f.grid_size)
    io.write_csv(ctx.path("profile.csv"), ctx.meta, ["x", "f(x)"],
                 zip(x, f.values()))
    report = {"speed": w.speed, "mass": w.mass,
              "residual": bo.travelling_wave_residual(w, args.modes)}
    io.write_json(ctx.path("travelling_wave.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        plots.line_plot(ctx.path("profile.png"), x, [f.values()], ["profile"],
                        "travelling-wave profile")
    return report


def _run_bo_evolve(args, ctx: RunContext) -> dict:
    w = bo.TravellingWave(args.r, args.beta)
    u0 = w.profile(args.modes)
    traj = bo.evolve(u0, args.beta, args.t_final, args.dt,
                     store_every=args.store_every)
    x = _grid(u0.grid_size)
    rows = []
    for t, state in traj:
        for xv, uv in zip(x, state.values()):
            rows.append((t, xv, uv))
    io.write_csv(ctx.path("trajectory.csv"), ctx.meta, ["t", "x", "u"], rows)
    masses = [bo.mass(s) for s in traj.states]
    hams = [bo.hamiltonian(s, args.beta) for s in traj.states]
    report = {"times": list(traj.times), "mass": masses, "hamiltonian": hams}
    io.write_json(ctx.path("conserved.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        z = np.array([s.values() for s in traj.states])
        plots.heatmap(ctx.path("trajectory.png"), traj.times, x, z,
                      "wave evolution")
    return {"mass_drift": float(np.max(np.abs(np.array(masses) - masses[0])))}


def _run_gibbs_sample(args, ctx: RunContext) -> dict:
    p = gibbs.GibbsParams(args.beta, args.ball_n, args.modes, args.steps,
                          args.burn_in, ctx.seed, args.proposal_scale)
    samples = gibbs.metropolis(p)
    cols = ([f"a{j}" for j in range(1, args.modes + 1)]
            + [f"b{j}" for j in range(1, args.modes + 1)])
    io.write_csv(ctx.path("samples.csv"), ctx.meta, cols, samples.draws)
    var = np.var(samples.draws, axis=0)
    report = {"acceptance_rate": samples.acceptance_rate,
              "proposal_scale_final": samples.proposal_scale_final,
              "n_draws": len(samples),
              "mode_variances": list(var)}
    io.write_json(ctx.path("gibbs.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        plots.histogram(ctx.path("samples.png"), samples.draws[:, 0],
                        "first cosine mode")
    return {"acceptance_rate": samples.acceptance_rate}


def _default_poles(n: int, k: float, eta: float) -> solitons.PoleConfiguration:
    xi = TWO_PI / k * (np.arange(n) + 0.5) / n
    return solitons.PoleConfiguration(xi + 1j * eta, k)


def _run_solitons_evolve(args, ctx: RunContext) -> dict:
    if args.poles_file:
        _, data = io.read_table_csv(args.poles_file)
        poles = data[:, 0] + 1j * data[:, 1]
        c0 = solitons.PoleConfiguration(poles, args.k)
    else:
        c0 = _default_poles(args.n, args.k, args.eta)
    traj = solitons.evolve_poles(c0, args.dt_out, args.t_final)
    rows = []
    for i, t in enumerate(traj.times):
        for j in range(traj.poles.shape[1]):
            q = traj.poles[i, j]
            rows.append((t, j, q.real, q.imag))
    io.write_csv(ctx.path("poles.csv"), ctx.meta, ["t", "j", "xi", "eta"], rows)
    u_final = solitons.reconstruct_u(traj.configuration(traj.times[-1]))
    io.atomic_write_text(ctx.path("field.txt"),
                         f"# {ctx.meta}\n" + io.field_to_text(u_final))
    k0 = solitons.kinetic_energy(c0)
    k1 = solitons.kinetic_energy(traj.configuration(traj.times[-1]))
    report = {"kinetic_initial": [k0.real, k0.imag],
              "kinetic_final": [k1.real, k1.imag],
              "kinetic_drift": abs(k1 - k0) / max(abs(k0), 1e-300),
              "beta": args.beta}
    io.write_json(ctx.path("solitons.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        plots.scatter_poles(ctx.path("poles.png"),
                            traj.poles.real.ravel(), traj.poles.imag.ravel(),
                            "pole trajectories")
    return report


def _run_gas_sample(args, ctx: RunContext) -> dict:
    v = _cosine_potential(2.0 * args.g)
    samples = gas.mcmc_ensemble(v, args.n, args.steps, ctx.seed)
    rows = []
    for i in range(len(samples)):
        for j, th in enumerate(samples.angles[i]):
            rows.append((i, j, th))
    io.write_csv(ctx.path("angles.csv"), ctx.meta,
                 ["sample", "index", "angle"], rows)
    report = {"acceptance_rate": samples.acceptance_rate,
              "n_samples": len(samples)}
    io.write_json(ctx.path("gas_sample.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        plots.histogram(ctx.path("angles.png"), samples.angles.ravel(),
                        "angle marginal")
    return report


def _run_gas_partition(args, ctx: RunContext) -> dict:
    v = _cosine_potential(2.0 * args.g) if args.g != 0 else None
    logz = gas.log_toeplitz_partition(v, args.n)
    report = {"n": args.n, "g": args.g, "log_partition": logz}
    if args.g == 0:
        exact = math.lgamma(args.n + 1) + args.n * math.log(TWO_PI)
        report["log_partition_closed_form"] = exact
        report["abs_error"] = abs(logz - exact)
    io.write_json(ctx.path("gas_partition.json"), report, ctx.meta)
    return report


def _run_gas_equilibrium(args, ctx: RunContext) -> dict:
    Q = _cosine_potential(2.0 * args.g)
    rho = gas.equilibrium_density(Q)
    x = _grid(1024)
    io.write_csv(ctx.path("equilibrium.csv"), ctx.meta, ["x", "rho"],
                 zip(x, rho(x)))
    report = {"energy": gas.equilibrium_energy(Q, rho),
              "curvature_margin": gas.curvature_margin(Q),
              "min_density": rho.min_value()}
    io.write_json(ctx.path("gas_equilibrium.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        plots.line_plot(ctx.path("equilibrium.png"), x, [rho(x)], ["rho"],
                        "equilibrium density")
    return report


def _run_gas_clt(args, ctx: RunContext) -> dict:
    r = math.exp(-args.eta)
    gfield = FourierField.from_modes(
        {m: r ** abs(m) for m in range(-8, 9) if m != 0}, 8)
    gfield = gfield * 2.0
    v = _cosine_potential(2.0 * args.g) if args.g != 0 else None
    rep = gas.clt_experiment(gfield, args.n, args.samples, ctx.seed, v=v)
    report = {"n": rep.n, "mean": rep.mean, "variance": rep.variance,
              "classical_variance": rep.classical_variance,
              "ks_statistic": rep.ks_statistic,
              "tail_sigma": rep.tail_sigma,
              "tail_r_squared": rep.tail_r_squared}
    io.write_json(ctx.path("gas_clt.json"), report, ctx.meta)
    return report


def _run_transport_w2(args, ctx: RunContext) -> dict:
    mu = _load_density(args.rho0)
    nu = _load_density(args.rho1)
    d = transport.w2_circle(mu, nu, chordal=args.chordal)
    report = {"w2": d, "w2_squared": d * d, "chordal": args.chordal}
    io.write_json(ctx.path("transport_w2.json"), report, ctx.meta)
    return report


def _run_transport_geodesic(args, ctx: RunContext) -> dict:
    rho0 = _load_density(args.rho0)
    rho1 = _load_density(args.rho1)
    path = transport.displacement_geodesic(rho0, rho1, args.steps)
    x = _grid(512)
    rows = []
    for t, dens in zip(path.times, path.densities):
        for xv, rv in zip(x, dens(x)):
            rows.append((t, xv, rv))
    io.write_csv(ctx.path("geodesic.csv"), ctx.meta, ["t", "x", "rho"], rows)
    w2 = transport.w2_circle(rho0, rho1)
    report = {"w2": w2, "kinetic_energy": path.kinetic_energy(),
              "shift": path.map1.shift}
    io.write_json(ctx.path("transport_geodesic.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        z = np.array([d(x) for d in path.densities])
        plots.heatmap(ctx.path("geodesic.png"), path.times, x, z,
                      "displacement interpolation")
    return report


def _run_transport_fti(args, ctx: RunContext) -> dict:
    Q = _cosine_potential(2.0 * args.g)
    omega = _load_density(args.omega)
    rep = transport.free_transport_check(omega, Q)
    report = {"lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds,
              **rep.detail}
    io.write_json(ctx.path("transport_fti.json"), report, ctx.meta)
    return report


def _run_transport_hwi(args, ctx: RunContext) -> dict:
    rho0 = _load_density(args.rho0)
    rho1 = _load_density(args.rho1)
    rep = transport.hwi_converse_check(rho0, rho1, args.steps)
    report = {"lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds,
              **rep.detail}
    io.write_json(ctx.path("transport_hwi.json"), report, ctx.meta)
    return report


def _initial_state(args) -> euler.GasState:
    if getattr(args, "state_file", None):
        names, data = io.read_table_csv(args.state_file)
        return euler.GasState(data[:, 1], data[:, 2])
    x = _grid(args.grid)
    rho = (1.0 + args.amplitude * np.cos(x)) / TWO_PI
    v = args.velocity_amplitude * np.sin(x)
    return euler.GasState(rho / (TWO_PI * np.mean(rho)), v)


def _run_euler_evolve(args, ctx: RunContext) -> dict:
    s0 = _initial_state(args)
    traj = euler.evolve_euler(s0, args.dt, args.t_final)
    x = s0.grid
    rows = []
    for i in range(0, len(traj.states), args.store_every):
        t = traj.times[i]
        st = traj.states[i]
        for xv, rv, vv in zip(x, st.rho, st.v):
            rows.append((t, xv, rv, vv))
    io.write_csv(ctx.path("euler_trajectory.csv"), ctx.meta,
                 ["t", "x", "rho", "v"], rows)
    report = {"energy_drift": traj.energy_drift(),
              "final_time": float(traj.times[-1]),
              "shock_time": traj.shock_time,
              "diagnostic": traj.diagnostic}
    io.write_json(ctx.path("euler_evolve.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        plots.line_plot(ctx.path("euler_final.png"), x,
                        [traj.final.rho, traj.final.v], ["rho", "v"],
                        "final gas state")
    return report


def _run_euler_variational(args, ctx: RunContext) -> dict:
    s0 = _initial_state(args)
    rep = euler.variational_step(s0, args.tau, details=True)
    x = s0.grid
    io.write_csv(ctx.path("euler_state.csv"), ctx.meta, ["x", "rho", "v"],
                 zip(x, rep.state.rho, rep.state.v))
    report = {"energy": rep.energy, "energy_identity": rep.energy_identity,
              "dissipation_lhs": rep.dissipation_lhs,
              "energy_before": s0.total_energy(),
              "iterations": rep.n_iterations}
    io.write_json(ctx.path("euler_variational.json"), report, ctx.meta)
    return report


def _run_euler_cosec(args, ctx: RunContext) -> dict:
    rho = _load_density(args.density)
    rep = euler.cosec_limit_experiment(rho, args.n)
    report = {"n": rep.n, "value": rep.value, "target": rep.target,
              "relative_error": abs(rep.value - rep.target) / abs(rep.target)}
    io.write_json(ctx.path("euler_cosec.json"), report, ctx.meta)
    return report


def _run_euler_entropy(args, ctx: RunContext) -> dict:
    Q = _cosine_potential(2.0 * args.g)
    rho0 = gas.equilibrium_density(Q)
    x = _grid(args.grid)
    r = rho0(x)
    s0 = euler.GasState(r / (TWO_PI * np.mean(r)),
                        args.velocity_amplitude * np.sin(x))
    traj = euler.evolve_euler(s0, args.dt, args.t_final)
    rep = euler.entropy_production_check(traj, rho0,
                                         stride=max(len(traj) // 10, 1))
    io.write_csv(ctx.path("entropy_series.csv"), ctx.meta,
                 ["t", "sigma", "w2_squared", "transport_bound"],
                 zip(rep.times, rep.sigma, rep.w2_squared, rep.transport_bound))
    report = {"energy": rep.energy, "rate_bound": rep.rate_bound,
              "c_kappa": rep.c_kappa, "rate_holds": rep.rate_holds,
              "transport_holds": rep.transport_holds}
    io.write_json(ctx.path("euler_entropy.json"), report, ctx.meta)
    if ctx.plot:
        from . import plots
        plots.line_plot(ctx.path("entropy_series.png"), rep.times,
                        [rep.sigma, rep.w2_squared, rep.transport_bound],
                        ["entropy", "w2^2", "bound"], "entropy production",
                        xlabel="t")
    return report


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bolab",
        description="experiments for the circle-wave / log-gas toolkit")
    p.add_argument("--out-dir", default=".", help="artifact directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--config", default=None,
                   help="key=value file of option defaults; flags win")
    p.add_argument("--plot", action="store_true",
                   help="render PNG figures next to the delimited artifacts")
    p.add_argument("--list", action="store_true", dest="list_experiments",
                   help="list available experiments and exit")
    sub = p.add_subparsers(dest="module")

    bo_p = sub.add_parser("bo", help="wave dynamics")
    bo_sub = bo_p.add_subparsers(dest="action")
    tw = bo_sub.add_parser("travelling-wave")
    tw.add_argument("--r", type=float, default=0.5)
    tw.add_argument("--beta", type=float, default=1.0)
    tw.add_argument("--modes", type=int, default=256)
    ev = bo_sub.add_parser("evolve")
    ev.add_argument("--r", type=float, default=0.5)
    ev.add_argument("--beta", type=float, default=1.0)
    ev.add_argument("--modes", type=int, default=128)
    ev.add_argument("--dt", type=float, default=1e-3)
    ev.add_argument("--t-final", type=float, default=1.0)
    ev.add_argument("--store-every", type=int, default=100)

    gb = sub.add_parser("gibbs", help="invariant-ensemble sampler")
    gb_sub = gb.add_subparsers(dest="action")
    gs = gb_sub.add_parser("sample")
    gs.add_argument("--beta", type=float, default=0.0)
    gs.add_argument("--ball-n", type=float, default=1.0)
    gs.add_argument("--modes", type=int, default=4)
    gs.add_argument("--steps", type=int, default=5000)
    gs.add_argument("--burn-in", type=int, default=1000)
    gs.add_argument("--proposal-scale", type=float, default=1.0)

    so = sub.add_parser("solitons", help="pole dynamics")
    so_sub = so.add_subparsers(dest="action")
    se = so_sub.add_parser("evolve")
    se.add_argument("--n", type=int, default=2)
    se.add_argument("--k", type=float, default=1.0)
    se.add_argument("--beta", type=float, default=0.5)
    se.add_argument("--eta", type=float, default=1.0)
    se.add_argument("--poles-file", default=None)
    se.add_argument("--t-final", type=float, default=1.0)
    se.add_argument("--dt-out", type=float, default=0.05)

    ga = sub.add_parser("gas", help="circular log-gas")
    ga_sub = ga.add_subparsers(dest="action")
    g1 = ga_sub.add_parser("sample")
    g1.add_argument("--n", type=int, default=16)
    g1.add_argument("--g", type=float, default=0.25)
    g1.add_argument("--steps", type=int, default=2000)
    g2 = ga_sub.add_parser("partition")
    g2.add_argument("--n", type=int, default=4)
    g2.add_argument("--g", type=float, default=0.0)
    g3 = ga_sub.add_parser("equilibrium")
    g3.add_argument("--g", type=float, default=0.25)
    g4 = ga_sub.add_parser("clt")
    g4.add_argument("--n", type=int, default=32)
    g4.add_argument("--g", type=float, default=0.0)
    g4.add_argument("--eta", type=float, default=1.0)
    g4.add_argument("--samples", type=int, default=2000)

    tr = sub.add_parser("transport", help="circle optimal transport")
    tr_sub = tr.add_subparsers(dest="action")
    t1 = tr_sub.add_parser("w2")
    t1.add_argument("--rho0", default="uniform")
    t1.add_argument("--rho1", default="cosine")
    t1.add_argument("--chordal", action="store_true")
    t2 = tr_sub.add_parser("geodesic")
    t2.add_argument("--rho0", default="uniform")
    t2.add_argument("--rho1", default="cosine")
    t2.add_argument("--steps", type=int, default=11)
    t3 = tr_sub.add_parser("check-fti")
    t3.add_argument("--g", type=float, default=0.25)
    t3.add_argument("--omega", default="tilted")
    t4 = tr_sub.add_parser("check-hwi")
    t4.add_argument("--rho0", default="uniform")
    t4.add_argument("--rho1", default="tilted")
    t4.add_argument("--steps", type=int, default=11)

    eu = sub.add_parser("euler", help="isentropic gas limit")
    eu_sub = eu.add_subparsers(dest="action")
    e1 = eu_sub.add_parser("evolve")
    e1.add_argument("--grid", type=int, default=256)
    e1.add_argument("--amplitude", type=float, default=0.2)
    e1.add_argument("--velocity-amplitude", type=float, default=0.1)
    e1.add_argument("--state-file", default=None)
    e1.add_argument("--dt", type=float, default=2e-3)
    e1.add_argument("--t-final", type=float, default=0.5)
    e1.add_argument("--store-every", type=int, default=50)
    e2 = eu_sub.add_parser("variational")
    e2.add_argument("--grid", type=int, default=128)
    e2.add_argument("--amplitude", type=float, default=0.2)
    e2.add_argument("--velocity-amplitude", type=float, default=0.1)
    e2.add_argument("--state-file", default=None)
    e2.add_argument("--tau", type=float, default=0.02)
    e3 = eu_sub.add_parser("cosec-limit")
    e3.add_argument("--n", type=int, default=200)
    e3.add_argument("--density", default="uniform")
    e4 = eu_sub.add_parser("entropy-check")
    e4.add_argument("--g", type=float, default=0.25)
    e4.add_argument("--grid", type=int, default=128)
    e4.add_argument("--velocity-amplitude", type=float, default=0.2)
    e4.add_argument("--dt", type=float, default=5e-3)
    e4.add_argument("--t-final", type=float, default=0.3)
    return p


HANDLERS: Dict[Tuple[str, str], Callable] = {
    ("bo", "travelling-wave"): _run_bo_travelling_wave,
    ("bo", "evolve"): _run_bo_evolve,
    ("gibbs", "sample"): _run_gibbs_sample,
    ("solitons", "evolve"): _run_solitons_evolve,
    ("gas", "sample"): _run_gas_sample,
    ("gas", "partition"): _run_gas_partition,
    ("gas", "equilibrium"): _run_gas_equilibrium,
    ("gas", "clt"): _run_gas_clt,
    ("transport", "w2"): _run_transport_w2,
    ("transport", "geodesic"): _run_transport_geodesic,
    ("transport", "check-fti"): _run_transport_fti,
    ("transport", "check-hwi"): _run_transport_hwi,
    ("euler", "evolve"): _run_euler_evolve,
    ("euler", "variational"): _run_euler_variational,
    ("euler", "cosec-limit"): _run_euler_cosec,
    ("euler", "entropy-check"): _run_euler_entropy,
}


def _parse_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigurationError(f"malformed config line: {line!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if val.lower() in ("true", "false"):
                parsed = val.lower() == "true"
            else:
                try:
                    parsed = int(val)
                except ValueError:
                    try:
                        parsed = float(val)
                    except ValueError:
                        parsed = val
            values[key] = parsed
    return values


def _known_dests(parser: argparse.ArgumentParser) -> set:
    dests = set()
    stack = [parser]
    while stack:
        cur = stack.pop()
        for action in cur._actions:
            if action.dest and action.dest != "help":
                dests.add(action.dest)
            if isinstance(action, argparse._SubParsersAction):
                stack.extend(action.choices.values())
    return dests


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    # apply config-file defaults before the real parse; explicit flags win
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        try:
            cfg = _parse_config_file(cfg_path)
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 4
        except ConfigurationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        unknown = set(cfg) - _known_dests(parser)
        if unknown:
            print(f"error: unknown config keys: {sorted(unknown)}",
                  file=sys.stderr)
            return 2
        # subparsers parse into a fresh namespace, so the defaults must be
        # installed on every (sub)parser that owns a matching option
        stack = [parser]
        while stack:
            cur = stack.pop()
            own = {a.dest for a in cur._actions}
            cur.set_defaults(**{k: v for k, v in cfg.items() if k in own})
            for action in cur._actions:
                if isinstance(action, argparse._SubParsersAction):
                    stack.extend(action.choices.values())

    args = parser.parse_args(argv)
    if args.list_experiments:
        for name, desc in EXPERIMENTS:
            print(f"{name:28s} {desc}")
        return 0
    if not args.module or not getattr(args, "action", None):
        parser.print_usage(sys.stderr)
        print("error: a module and action are required (see --list)",
              file=sys.stderr)
        return 2
    handler = HANDLERS.get((args.module, args.action))
    if handler is None:
        print(f"error: unknown experiment {args.module} {args.action}",
              file=sys.stderr)
        return 2

    os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    meta = f"subcommand={args.module} {args.action} seed={args.seed}"
    started = time.time()
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        ctx = RunContext(args.out_dir, meta, args.plot, args.seed)
        summary = handler(args, ctx)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalDiagnostic as exc:
        print(f"numerical diagnostic: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    import scipy
    manifest = {
        "subcommand": f"{args.module} {args.action}",
        "seed": args.seed,
        "config": {k: v for k, v in sorted(vars(args).items())
                   if k not in ("list_experiments",)},
        "versions": {"package": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__,
                     "python": sys.version.split()[0]},
        "artifacts": ctx.artifacts,
        "summary": io._jsonable(summary),
        "wall_time_s": round(time.time() - started, 3),
    }
    io.write_json(os.path.join(args.out_dir, "run_manifest.json"), manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
