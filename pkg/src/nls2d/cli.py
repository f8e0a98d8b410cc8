"""Command-line front door.

    nls2d <command> [--config FILE] [--output DIR] [--seed S] [--workers K]

Commands: townes, nls, hartree, sweep-lambda, stability, manybody,
definetti, exponents.  Every run writes manifest.json (fully resolved
config), results.json (schema-validated), delimited sweep/profile data,
and a PNG figure.  Exit codes: 0 success, 2 config error, 3 numerical
failure, 4 inconclusive estimator.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import reports
from .config import COMMANDS, ConfigError, RunConfig, validate
from .serialize import dumps, write_csv, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INCONCLUSIVE = 4


def _profile_from_model(model):
    from .functionals import BumpProfile, GaussianProfile

    if model["profile"] == "none":
        return None
    if model["profile"] == "gaussian":
        return GaussianProfile(integral=model["a"], sigma=model["sigma"])
    return BumpProfile(integral=model["a"], radius=model["radius"])


def _model_params(cfg: RunConfig):
    from .functionals import ModelParams

    model = cfg.values["model"]
    n_particles = 2
    if "manybody" in cfg.values:
        n_particles = max(cfg.values["manybody"]["n_list"], default=2)
    w = _profile_from_model(model)
    # with no profile, "a" still sets the local NLS coupling
    coupling = model["a"] if w is None else None
    return ModelParams(
        s=model["s"],
        w=w,
        beta=model["beta"],
        n_particles=n_particles,
        coupling=coupling,
    )


def _grid(cfg: RunConfig):
    from .grids import Grid2D

    g = cfg.values["grid"]
    return Grid2D(g["half_extent"], g["points"])


def _outdir(cfg: RunConfig) -> str:
    out = cfg.values["output"]["directory"]
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(cfg: RunConfig, out: str) -> None:
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        fh.write(dumps(cfg.manifest()))


# -- command runners --------------------------------------------------------


def _run_townes(cfg: RunConfig, out: str) -> int:
    from .minimize import shoot_townes, townes_residual

    profile = shoot_townes()
    csv_path = os.path.join(out, "townes_profile.csv")
    write_csv(csv_path, ["r", "Q"], zip(profile.radii, profile.values))
    record = {
        "a_star": profile.mass,
        "q_zero": float(profile.values[0]),
        "ode_residual_sup": townes_residual(profile),
        "profile_csv": "townes_profile.csv",
    }
    write_json(os.path.join(out, "results.json"), record, kind="townes")
    reports.render_townes(profile, os.path.join(out, "townes_profile.png"))
    print(dumps(record), end="")
    return EXIT_OK


def _run_minimize(cfg: RunConfig, out: str) -> int:
    from .minimize import MinimizeOptions, minimize_energy

    params = _model_params(cfg)
    grid = _grid(cfg)
    opts_cfg = cfg.values["minimize"]
    options = MinimizeOptions(
        max_iterations=opts_cfg["max_iterations"],
        step=opts_cfg["step"],
        tolerance=opts_cfg["tolerance"],
        backtrack=opts_cfg["backtrack"],
    )
    result = minimize_energy(cfg.command, params, grid, options)
    field_file = "minimizer.field"
    with open(os.path.join(out, field_file), "wb") as fh:
        fh.write(result.field.to_bytes())
    record = {
        "functional": cfg.command,
        "energy": result.report.as_dict(),
        "converged": result.converged,
        "iterations": result.iterations,
        "residual": result.residual,
        "field_file": field_file,
    }
    write_json(os.path.join(out, "results.json"), record, kind="minimize")
    reports.render_density(result.field, os.path.join(out, "density.png"),
                           title=f"{cfg.command} minimizer density")
    print(dumps(record), end="")
    return EXIT_OK


def _run_sweep_lambda(cfg: RunConfig, out: str) -> int:
    from .functionals import interaction_error
    from .grids import Field2D, normalize

    params = _model_params(cfg)
    if params.w is None:
        raise ConfigError(["model.profile: sweep-lambda needs an interaction"])
    grid = _grid(cfg)
    u = normalize(Field2D(grid, np.exp(-grid.rsq / 2.0)))
    lambdas = cfg.values["sweep"]["lambdas"]
    workers = max(cfg.values["sweep"]["workers"], 1)
    w = params.w

    def job(lam):
        return interaction_error(u, w, lam)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(job, lambdas))
    else:
        errors = [job(lam) for lam in lambdas]
    csv_path = os.path.join(out, "sweep_lambda.csv")
    write_csv(csv_path, ["lambda", "error"], zip(lambdas, errors))
    record = {"lambdas": list(map(float, lambdas)), "errors": errors,
              "csv": "sweep_lambda.csv"}
    write_json(os.path.join(out, "results.json"), record, kind="sweep_lambda")
    reports.render_sweep(lambdas, errors, os.path.join(out, "sweep_lambda.png"))
    print(dumps(record), end="")
    return EXIT_OK


def _run_stability(cfg: RunConfig, out: str) -> int:
    from .functionals import stability_quotient

    params = _model_params(cfg)
    if params.w is None:
        raise ConfigError(["model.profile: stability needs an interaction"])
    grid = _grid(cfg)
    result = stability_quotient(params.w, grid,
                                polish_steps=cfg.values["stability"]["polish_steps"])
    witness_file = "witness.field"
    with open(os.path.join(out, witness_file), "wb") as fh:
        fh.write(result.witness.to_bytes())
    record = {"quotient": result.value, "unstable": result.unstable,
              "witness_file": witness_file}
    write_json(os.path.join(out, "results.json"), record, kind="stability")
    reports.render_density(result.witness, os.path.join(out, "witness.png"),
                           title="stability witness density")
    print(dumps(record), end="")
    return EXIT_OK


def _run_manybody(cfg: RunConfig, out: str) -> int:
    from .functionals import scaled_potential
    from .manybody import (
        assemble_hamiltonian,
        gse2_error_terms,
        ground_state,
        hartree_energy_in_span,
        moments,
        one_body_modes,
        perturbed_ground_energy,
        reduced_density,
        two_body_tensor,
    )

    params = _model_params(cfg)
    grid = _grid(cfg)
    mb = cfg.values["manybody"]
    basis = one_body_modes(params, grid, mb["modes"])
    records = []
    for N in mb["n_list"]:
        if params.w is not None:
            w_grid = scaled_potential(params.w, N, params.beta, grid)
            tensor = two_body_tensor(basis, w_grid)
        else:
            from .manybody import TwoBodyTensor

            M = basis.size
            tensor = TwoBodyTensor(np.zeros((M, M, M, M)))
        H = assemble_hamiltonian(basis, tensor, N)
        e_n, psi = ground_state(H, N)
        e_eps = perturbed_ground_energy(basis, tensor, N, mb["epsilon"])
        m1, m2 = moments(psi, basis)
        g1 = reduced_density(psi, 1)
        terms = gse2_error_terms(psi, basis, mb["cutoff"], mb["delta"], N)
        e_span, _ = hartree_energy_in_span(basis, tensor, N)
        records.append({
            "n_particles": N,
            "e_n": e_n,
            "e_n_eps": e_eps,
            "e_hartree_span": e_span,
            "m1": m1,
            "m2": m2,
            "gamma1_eigenvalues": sorted(g1.eigenvalues().tolist()),
            "gse2_terms": terms,
        })
        if mb["dump_density"]:
            np.save(os.path.join(out, f"gamma1_N{N}.npy"), g1.matrix)
            np.save(os.path.join(out, f"gamma2_N{N}.npy"),
                    reduced_density(psi, 2).matrix)
    record = {"records": records}
    write_json(os.path.join(out, "results.json"), record, kind="manybody")
    write_csv(os.path.join(out, "manybody.csv"),
              ["N", "e_n", "e_n_eps", "m1", "m2"],
              [(r["n_particles"], r["e_n"], r["e_n_eps"], r["m1"], r["m2"])
               for r in records])
    reports.render_manybody(records, os.path.join(out, "manybody.png"))
    print(dumps(record), end="")
    return EXIT_OK


def _run_definetti(cfg: RunConfig, out: str) -> int:
    from .definetti import definetti_error, lower_symbol_measure, measure_mass_bound
    from .manybody import SymmetricState, occupation_basis

    df = cfg.values["definetti"]
    d, N = df["d"], df["n_particles"]
    seed = cfg.values["output"]["seed"]
    rng = np.random.default_rng(seed)
    dim = occupation_basis(d, N).shape[0]
    records = []
    for k in range(df["states"]):
        amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        psi = SymmetricState(d, N, amps).normalized()
        mu = lower_symbol_measure(psi)
        err = definetti_error(psi, mu, samples=df["samples"], seed=seed + k)
        mass, lower = measure_mass_bound(psi, mu, samples=df["samples"],
                                         seed=seed + k)
        records.append({
            "error": err.value,
            "mass": mass.value,
            "mass_lower_bound": lower,
            "estimator_stderr": err.stderr,
            "inconclusive": err.inconclusive or mass.inconclusive,
        })
    record = {"records": records, "bound_8d_over_n": 8.0 * d / N}
    write_json(os.path.join(out, "results.json"), record, kind="definetti")
    write_csv(os.path.join(out, "definetti.csv"),
              ["state", "error", "mass", "mass_lower_bound", "stderr"],
              [(i, r["error"], r["mass"], r["mass_lower_bound"],
                r["estimator_stderr"]) for i, r in enumerate(records)])
    reports.render_definetti([r["error"] for r in records], 8.0 * d / N,
                             os.path.join(out, "definetti.png"))
    print(dumps(record), end="")
    if any(r["inconclusive"] for r in records):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _run_exponents(cfg: RunConfig, out: str) -> int:
    from .exponents import run_schedule, step_bound, thresholds

    ex = cfg.values["exponents"]
    s, beta = ex["s"], ex["beta"]
    c = ex["c"] or None
    schedule = run_schedule(s, beta, c=c, max_steps=ex["max_steps"])
    beta0, beta1 = thresholds(s)
    c_max, _ = step_bound(s, beta)
    record = {
        "s": float(Fraction(s)),
        "beta": float(Fraction(beta)),
        "beta0": float(beta0),
        "beta1": float(beta1),
        "eta0": float(schedule.eta0),
        "c": None if schedule.c is None else float(schedule.c),
        "steps": schedule.steps,
        "taus": [float(t) for t in schedule.taus],
        "verdict": schedule.verdict,
        "alpha_sup": float(schedule.final_alpha_sup),
        "exact": {
            "beta0": str(beta0),
            "beta1": str(beta1),
            "c_max": str(c_max),
            "alpha_sup": str(schedule.final_alpha_sup),
        },
    }
    write_json(os.path.join(out, "results.json"), record, kind="exponents")
    rows = []
    for i, eta in enumerate(schedule.etas):
        tau = schedule.taus[i] if i < len(schedule.taus) else ""
        rows.append((i, float(eta), float(tau) if tau != "" else ""))
    write_csv(os.path.join(out, "eta_trajectory.csv"), ["step", "eta", "tau"], rows)
    reports.render_eta_trajectory(schedule.etas,
                                  os.path.join(out, "eta_trajectory.png"))
    print(dumps(record), end="")
    return EXIT_OK


_RUNNERS = {
    "townes": _run_townes,
    "nls": _run_minimize,
    "hartree": _run_minimize,
    "sweep-lambda": _run_sweep_lambda,
    "stability": _run_stability,
    "manybody": _run_manybody,
    "definetti": _run_definetti,
    "exponents": _run_exponents,
}


def run(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    _write_manifest(cfg, out)
    return _RUNNERS[cfg.command](cfg, out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nls2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", default=None, help="config file (ini sections)")
        p.add_argument("--output", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
    args = parser.parse_args(argv)

    text = ""
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = validate(args.command, text)
        values = {k: dict(v) for k, v in cfg.values.items()}
        if args.output is not None:
            values["output"]["directory"] = args.output
        if args.seed is not None:
            values["output"]["seed"] = args.seed
        if args.workers is not None and "sweep" in values:
            values["sweep"]["workers"] = args.workers
        cfg = RunConfig(command=cfg.command, values=values)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return run(cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical / module failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
