"""Command-line experiments: ``qgsa <subcommand> [flags]``.

Every run writes ``report.json`` and ``curve.csv`` to ``--out``. A JSON
file passed with ``--config`` supplies defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import dac, exact, fermion, models, pauli, product_approx, sac
from . import statevector as sv

log = logging.getLogger("qgsa")

EXPERIMENTS = ("hubbard-product", "hubbard-sac", "hubbard-dac", "chem-sac", "chem-dac",
               "theta-scan")
EXACT_MAX_QUBITS = 24


class ConfigError(ValueError):
    pass


# argument parsing


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON file of flag defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta-min", type=float)
    p.add_argument("--theta-max", type=float)
    p.add_argument("--theta-points", type=int, default=401)
    p.add_argument("--tol", type=float, default=1e-8, help="golden-section tolerance")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--encoding", choices=("jw", "bk"))
    p.add_argument("--no-exact", action="store_true", help="skip the exact ground energy")
    p.add_argument("--verbose", "-v", action="store_true")


def _add_lattice(p: argparse.ArgumentParser):
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--periodic", action="store_true")
    p.add_argument("--t", type=float, default=1.0, dest="hop")
    p.add_argument("--v", type=float, default=1.0, dest="int_v")
    p.add_argument("--disorder-t", action="store_true")
    p.add_argument("--disorder-v", action="store_true")
    p.add_argument("--t-range", type=float, nargs=2, default=(0.5, 1.5))
    p.add_argument("--v-range", type=float, nargs=2, default=(0.5, 1.5))


def _add_sources(p: argparse.ArgumentParser):
    p.add_argument("--fcidump", type=Path)
    p.add_argument("--hamiltonian", type=Path, help="Pauli-Hamiltonian text file")
    p.add_argument("--toy", choices=("xx", "x"), help="built-in toy Hamiltonian")


def _add_sac(p: argparse.ArgumentParser):
    p.add_argument("--branch", choices=("auto", "P", "X"), default="auto")
    p.add_argument("--t-hat", type=int)


def _add_dac(p: argparse.ArgumentParser):
    p.add_argument("--method", choices=("exact", "trotter"), default="exact")
    p.add_argument("--steps", type=int, default=16, help="Trotter steps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgsa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS + ("export",):
        p = sub.add_parser(name)
        _add_common(p)
        if name.startswith("hubbard") or name in ("export", "theta-scan"):
            _add_lattice(p)
        if not name.startswith("hubbard"):
            _add_sources(p)
        if name.endswith("sac") or name in ("hubbard-product", "theta-scan"):
            _add_sac(p)
        if name.endswith("dac") or name == "theta-scan":
            _add_dac(p)
        if name == "theta-scan":
            p.add_argument("--algorithm", choices=("sac", "dac"), default="sac")
        if name == "chem-sac":
            p.add_argument("--t-sweep", action="store_true",
                           help="also report the optimum for every P(t), t = 1..k")
        if name != "export":
            p.add_argument("--state", default=None,
                           help="hf | checkerboard | product | zero | bit string")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            config = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.experiment]
        known = {a.dest for a in sub._actions}
        renames = {"t": "hop", "v": "int_v"}
        defaults = {}
        for key, value in config.items():
            dest = renames.get(key, key.replace("-", "_"))
            if dest not in known:
                raise ConfigError(f"unknown config key {key!r}")
            defaults[dest] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# problem assembly


def _lattice_spec(args) -> models.LatticeSpec:
    if args.rows is None or args.cols is None:
        raise ConfigError("lattice experiments need --rows and --cols")
    return models.make_lattice(args.rows, args.cols, args.periodic, t=args.hop, v=args.int_v,
                               disorder_t=args.disorder_t, disorder_v=args.disorder_v,
                               t_range=tuple(args.t_range), v_range=tuple(args.v_range),
                               seed=args.seed)


def _has_lattice(args) -> bool:
    return getattr(args, "rows", None) is not None


def load_problem(args) -> dict:
    """The Hamiltonian plus what is needed to build references and reports."""
    sources = [name for name in ("fcidump", "hamiltonian", "toy") if getattr(args, name, None)]
    if _has_lattice(args):
        sources.append("lattice")
    if len(sources) != 1:
        raise ConfigError(f"need exactly one Hamiltonian source, got {sources or 'none'}")
    src = sources[0]
    if src == "lattice":
        spec = _lattice_spec(args)
        enc = args.encoding or "jw"
        h = fermion.encode(models.build_spinless_hubbard(spec), enc)
        return {"h": h, "kind": "lattice", "lattice": spec, "encoding": enc, "units": "hopping"}
    if src == "fcidump":
        ints = fermion.read_fcidump(args.fcidump)
        enc = args.encoding or "bk"
        h = fermion.encode(fermion.build_fermion_hamiltonian(ints), enc)
        return {"h": h, "kind": "chem", "integrals": ints, "encoding": enc, "units": "hartree",
                "source": str(args.fcidump)}
    if src == "hamiltonian":
        return {"h": pauli.load(args.hamiltonian), "kind": "pauli", "units": "arbitrary",
                "source": str(args.hamiltonian)}
    label = {"xx": "XX", "x": "X"}[args.toy]
    return {"h": pauli.PauliSum.from_label(label), "kind": "pauli", "units": "arbitrary",
            "source": f"toy:{args.toy}"}


def reference_state(args, problem: dict, rng: np.random.Generator):
    """``(Preparation, description)`` for ``--state``."""
    n = problem["h"].n_qubits
    state = args.state
    if state is None:
        state = {"chem": "hf", "lattice": "checkerboard"}.get(problem["kind"], "zero")
    if state == "hf":
        if problem["kind"] != "chem":
            raise ConfigError("--state hf needs an FCIDUMP source")
        w, occ = models.hartree_fock_preparation(problem["integrals"], problem["encoding"])
        return w, {"state": "hf", "occupation": occ}
    if state == "checkerboard":
        if problem["kind"] != "lattice":
            raise ConfigError("--state checkerboard needs a lattice source")
        spec = problem["lattice"]
        w, occ = models.checkerboard_state(spec.rows, spec.cols, problem["encoding"])
        return w, {"state": "checkerboard", "occupation": occ}
    if state == "product":
        v = models.random_product_state(n, rng)
        return v.preparation(), {"state": "product", "bloch": v.bloch.tolist()}
    if state == "zero":
        return models.Preparation.flip(n, ()), {"state": "zero"}
    if len(state) == n and set(state) <= {"0", "1"}:
        flips = [q for q, b in enumerate(state) if b == "1"]
        return models.Preparation.flip(n, flips), {"state": "bits", "bits": state}
    raise ConfigError(f"unrecognised --state {state!r}")


def _grid(args, default) -> tuple[float, float, int]:
    lo = default[0] if args.theta_min is None else args.theta_min
    hi = default[1] if args.theta_max is None else args.theta_max
    return (lo, hi, args.theta_points)


def _exact(args, problem: dict, timings: dict, w=None):
    """Exact ground energy; for chemistry the iteration starts from the reference determinant."""
    h = problem["h"]
    if args.no_exact or h.n_qubits > EXACT_MAX_QUBITS:
        return None
    t0 = time.perf_counter()
    v0 = sv.prepare(w) if problem["kind"] == "chem" and w is not None else None
    res = exact.ground_energy(h, v0=v0)
    timings["exact"] = time.perf_counter() - t0
    return res


# experiments


def _report(args, problem, ref_info, reference, result, exact_res, counts, timings, extra=None):
    h = problem["h"]
    energies = {"reference": reference,
                "optimized": result.energy if result is not None else None,
                "exact": exact_res.energy if exact_res is not None else None,
                "baseline": pauli.identity_coefficient(h)}
    fraction = None
    if exact_res is not None and result is not None and reference > exact_res.energy + 1e-12:
        fraction = exact.correlation_fraction(reference, result.energy, exact_res.energy)
    rep = {
        "experiment": args.experiment, "seed": args.seed, "units": problem["units"],
        "n_qubits": h.n_qubits, "n_terms": len(h), "encoding": problem.get("encoding"),
        "source": problem.get("source"), "reference_state": ref_info,
        "energies": energies,
        "theta_star": result.theta_star if result is not None else None,
        "variance": result.variance if result is not None else None,
        "fraction": fraction, "counts": counts, "timings": timings, "threads": args.threads,
    }
    if problem["kind"] == "lattice":
        rep["lattice"] = problem["lattice"].to_dict()
    if exact_res is not None:
        rep["exact"] = exact_res.to_dict()
    if extra:
        rep.update(extra)
    return rep


def _run_sac(args, h, w, timings):
    grid = _grid(args, sac.DEFAULT_GRID)
    t0 = time.perf_counter()
    if args.t_hat is not None or args.branch != "auto":
        branch = "P" if args.branch == "auto" else args.branch
        plan = sac.sac_build(h, w, branch, t_hat=args.t_hat)
        res = sac.sac_optimize(h, w, plan, grid, args.tol)
    else:
        plan, res = sac.run_sac(h, w, "auto", grid, args.tol)
    timings["sac"] = time.perf_counter() - t0
    counts = sac.complexity_report(plan)
    return plan, res, counts


def _run_dac(args, h, w, timings):
    grid = _grid(args, dac.DEFAULT_GRID)
    t0 = time.perf_counter()
    plan = dac.dac_plan(h, w)
    res = dac.dac_optimize(h, sv.prepare(w), plan, args.method, grid, args.steps, args.tol)
    timings["dac"] = time.perf_counter() - t0
    return plan, res, plan.counts()


def run_experiment(args) -> tuple[dict, np.ndarray, np.ndarray]:
    """Returns the report and the curve samples."""
    timings: dict[str, float] = {}
    t_start = time.perf_counter()
    rng = np.random.default_rng(args.seed)
    problem = load_problem(args)
    h = problem["h"]
    sv.check_capacity(h.n_qubits)
    exp_name = args.experiment
    extra = {}

    if exp_name == "hubbard-product":
        t0 = time.perf_counter()
        exact_res = _exact(args, problem, timings)
        report1 = product_approx.improve_product_state(h, args.trials, rng, "minimize", args.seed)
        timings["product"] = time.perf_counter() - t0
        w = report1.best.preparation()
        ref_info = {"state": "best-product", "bloch": report1.best.bloch.tolist()}
        plan, res, counts = _run_sac(args, h, w, timings)
        extra["product"] = report1.to_dict()
        extra["sac"] = plan.to_dict()
        reference = res.reference_energy
    else:
        if exp_name.startswith("hubbard") and problem["kind"] != "lattice":
            raise ConfigError(f"{exp_name} needs a lattice")
        if exp_name.startswith("chem") and problem["kind"] != "chem":
            raise ConfigError(f"{exp_name} needs --fcidump")
        w, ref_info = reference_state(args, problem, rng)
        exact_res = _exact(args, problem, timings, w)
        algo = exp_name.split("-")[1] if exp_name != "theta-scan" else args.algorithm
        if algo == "sac":
            plan, res, counts = _run_sac(args, h, w, timings)
            extra["sac"] = plan.to_dict()
            if getattr(args, "t_sweep", False):
                t0 = time.perf_counter()
                sweep = sac.t_sweep(h, w, range(1, plan.k + 1), plan.t_hat,
                                    _grid(args, (-math.pi / 2, math.pi / 2)), args.tol)
                timings["t_sweep"] = time.perf_counter() - t0
                extra["t_sweep"] = [{"t": t, "theta_star": e.theta_star, "energy": e.energy}
                                    for t, e in sweep.items()]
        else:
            plan, res, counts = _run_dac(args, h, w, timings)
            extra["dac"] = {"method": args.method, "a_terms": plan.n_terms}
        reference = res.reference_energy
    timings["total"] = time.perf_counter() - t_start
    rep = _report(args, problem, ref_info, reference, res, exact_res, counts, timings, extra)
    return rep, res.thetas, res.energies


def run_export(args) -> str:
    problem = load_problem(args)
    header = f"qgsa export ({problem.get('source') or 'lattice'}, seed {args.seed})"
    return pauli.dumps(problem["h"], header)


# output


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def curve_text(thetas, energies) -> str:
    lines = ["theta,energy"]
    lines += [f"{t:.12g},{e:.12g}" for t, e in zip(thetas, energies)]
    return "\n".join(lines) + "\n"


def write_outputs(out: Path, files: dict[str, str]):
    """Write all files or none: stage to temporaries, then rename into place."""
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.")
            staged.append((tmp, out / name))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
        for tmp, final in staged:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"qgsa: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("qgsa: error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        if args.threads > 1:
            import numba
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        if args.experiment == "export":
            write_outputs(args.out, {"hamiltonian.txt": run_export(args)})
            return 0
        report, thetas, energies = run_experiment(args)
        write_outputs(args.out, {
            "report.json": json.dumps(report, indent=2, default=_json_default) + "\n",
            "curve.csv": curve_text(thetas, energies),
        })
    except (ConfigError, OSError, ValueError, ArithmeticError, sv.CapacityError) as exc:
        print(f"qgsa: error: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %s", args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
