"""Configuration, experiment orchestration, and data emission.

Configuration is TOML with declared sections; unknown keys are rejected
with exit code 2. Every run writes CSV files (UTF-8, comma separated,
scientific notation with 15 significant digits) plus a JSON-lines manifest
carrying the config hash, library versions, dimensions and timings. The
compute path never plots; the `report` subcommand renders PNG figures from
already-written CSVs next to the delimited output.

Exit codes: 0 ok (all acceptance windows pass in --check mode), 1 an
acceptance window failed in --check mode, 2 configuration error, 3 runtime
numerical failure.
"""

import argparse
import copy
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:  # py3.10
    import tomli as _toml


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration schema and loading
# ---------------------------------------------------------------------------

DEFAULT_CONFIG = {
    "seed": 20260810,
    "check_mode": False,
    "modes": {
        "lambda_uv": 1.0,
        "sigma_ir": 0.0,
        "n_radial": 2,
        "n_angular": 2,
        "radial_breaks": [],
    },
    "particles": {
        "n": 2,
        "n_x": 8,
        "box_length": 4.0,
        "masses": [1.0, 1.0],
        "charges": [1.6, -1.6],
        "epsilon": 0.1,
        "spin": False,
    },
    "dressing": {
        "photon_cutoff_L": 2,
        "chi_center": 0.2,
        "chi_width": 0.45,
        "chi_margin": 0.2,
        "sigma_ir": 1e-3,
    },
    "dynamics": {
        "t": 1.0,
        "epsilon_sweep": [0.4, 0.28, 0.2, 0.14, 0.1],
        "sigma_sweep": [0.1, 0.03, 0.01, 0.003],
        "sigma_schedule_power": 3,
        "krylov_threshold": 6000,
        "initial_state": {
            "centers": [1.4, 2.6],
            "widths": [0.5, 0.5],
            "momenta": [0.3, -0.3],
        },
    },
    "semiclassics": {
        "steps": 800,
        "s_nodes": 64,
        "phase_resolution_guard": 0.7853981633974483,
    },
    "output": {
        "directory": "runs",
    },
    "acceptance": {
        "effective": {
            "n_x": 32,
            "box_length": 8.0,
            "charge": 0.6,
            "packet_center": 3.2,
            "packet_width": 0.55,
            "packet_momentum": 0.45,
            "t": 1.0,
        },
        "invariance": {
            "n_x": 16,
            "box_length": 4.0,
            "charge": 0.6,
        },
        "radiated": {
            "lambda_uv": 0.3,
            "separation": 1.2,
            "t": 2.0,
        },
        "ir_scaling": {
            "n_x": 16,
            "box_length": 4.0,
            "charge": 0.6,
            "packet_momentum": 0.4,
            "photon_cutoff_L": 1,
        },
    },
}


def _check_keys(data, schema, path=""):
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(schema[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"configuration key {where} must be a section")
            _check_keys(value, schema[key], where)


def _deep_update(base, extra):
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value


def load_config(path=None, overrides=()):
    """Defaults, optional TOML file, then KEY=VALUE overrides, validated."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, "rb") as handle:
                data = _toml.load(handle)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error in {path}: {exc}") from exc
        _check_keys(data, DEFAULT_CONFIG)
        _deep_update(config, data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        node = config
        schema = DEFAULT_CONFIG
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in schema or not isinstance(schema[part], dict):
                raise ConfigError(f"unknown configuration key: {key}")
            node = node.setdefault(part, {})
            schema = schema[part]
        leaf = parts[-1]
        if leaf not in schema:
            raise ConfigError(f"unknown configuration key: {key}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node[leaf] = value
    _check_keys(config, DEFAULT_CONFIG)
    return config


def config_hash(config):
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# emission helpers
# ---------------------------------------------------------------------------

def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.15e}"
    return str(value)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(format_value(row[col]) for col in header) + "\n")
    return path


class ManifestWriter:
    def __init__(self, out_dir, config):
        self.path = Path(out_dir) / "manifest.jsonl"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.base = {
            "config_hash": config_hash(config),
            "versions": _versions(),
        }
        self._handle = open(self.path, "a", encoding="utf-8")

    def record(self, experiment, **fields):
        entry = dict(self.base)
        entry["experiment"] = experiment
        entry.update(_to_plain(fields))
        self._handle.write(json.dumps(entry, sort_keys=True) + "\n")
        self._handle.flush()

    def close(self):
        self._handle.close()


def _versions():
    import scipy

    from . import __version__

    return {"paulifierz": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _to_plain(obj):
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    return obj


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _base_grid(config):
    from . import modes

    mc = config["modes"]
    return modes.build_mode_grid(
        mc["lambda_uv"], mc["sigma_ir"], mc["n_radial"], mc["n_angular"],
        radial_breaks=tuple(mc["radial_breaks"]),
    )


def _base_space(config, epsilon=None):
    from . import particles

    pc = config["particles"]
    return particles.ParticleSpace(
        n=pc["n"], n_grid=pc["n_x"], box=pc["box_length"],
        masses=tuple(pc["masses"]), charges=tuple(pc["charges"]),
        epsilon=pc["epsilon"] if epsilon is None else epsilon,
        spin=pc["spin"],
    )


def _chi(config):
    from . import hamiltonians as ham

    dc = config["dressing"]
    return ham.CutoffFunction(dc["chi_center"], dc["chi_width"], dc["chi_margin"])


def cmd_dump_modes(config, out_dir, manifest):
    grid = _base_grid(config)
    rows = []
    for i in range(len(grid)):
        rows.append({
            "k_x": grid.k_vecs[i, 0], "k_y": grid.k_vecs[i, 1], "k_z": grid.k_vecs[i, 2],
            "helicity": int(grid.helicities[i]), "weight": grid.weights[i],
            "pol_x": grid.pols[i, 0], "pol_y": grid.pols[i, 1], "pol_z": grid.pols[i, 2],
        })
    path = write_csv(
        Path(out_dir) / "modes.csv",
        ["k_x", "k_y", "k_z", "helicity", "weight", "pol_x", "pol_y", "pol_z"],
        rows,
    )
    manifest.record("dump-modes", n_modes=len(grid), csv=str(path))
    return 0


def cmd_assemble(config, out_dir, manifest):
    from . import dynamics as dyn
    from . import fock
    from . import hamiltonians as ham

    grid = _base_grid(config)
    space = _base_space(config)
    basis = fock.enumerate_basis(grid, config["dressing"]["photon_cutoff_L"])
    sigma = config["dressing"]["sigma_ir"]
    eps = space.epsilon
    frame = dyn.DressingFrame(space, basis, eps, sigma, _chi(config))
    t0 = time.perf_counter()
    ops = {
        "h0": frame.h_term("h0", sigma),
        "h1": frame.h_term("h1", sigma),
        "h2": frame.h_term("h2", sigma),
        "H": frame.h_sigma,
        "T": frame.dressing_generator,
        "U": frame.dressing_unitary,
        "H_dressed": ham.dressed_hamiltonian(frame.dressing_unitary, frame.h_sigma),
        "h2_offdiag": ham.offdiagonal_hamiltonian(frame.model, max(sigma, 1e-12)),
    }
    for name, op in ops.items():
        entry = {
            "label": op.label,
            "dim": op.dim,
            "hermiticity_residual": op.hermiticity_residual(),
            "norm": float(np.linalg.norm(op.matrix, 2)),
            "epsilon": eps,
            "sigma": sigma,
        }
        if name == "U":
            entry["unitarity_residual"] = op.unitarity_residual()
        if name == "T":
            entry["antihermiticity_residual"] = float(
                np.linalg.norm(op.matrix + op.matrix.conj().T)
            )
        manifest.record("assemble", operator=name, runtime_s=time.perf_counter() - t0, **entry)
    return 0


def cmd_evolve(config, out_dir, manifest):
    from . import dynamics as dyn
    from . import fock
    from . import particles

    grid = _base_grid(config)
    space = _base_space(config)
    basis = fock.enumerate_basis(grid, config["dressing"]["photon_cutoff_L"])
    frame = dyn.DressingFrame(space, basis, space.epsilon,
                              config["dressing"]["sigma_ir"], _chi(config))
    ic = config["dynamics"]["initial_state"]
    psi_p = particles.gaussian_packet(space, ic["centers"], ic["widths"], ic["momenta"])
    state = frame.prepare_dressed_state(psi_p, 0)
    t_max = config["dynamics"]["t"]
    times = np.linspace(0.0, t_max, 21)
    h_mat = frame.h_full.matrix
    diag_q1 = np.repeat(space.grid_coordinates(0), space.dim_spin)
    rows = []
    t0 = time.perf_counter()
    for t in times:
        ev = frame.spectral_full.apply_propagator(t, space.epsilon, state)
        rho_p = np.sum(np.abs(ev.reshape(space.dim, basis.dim)) ** 2, axis=1)
        rows.append({
            "t": t,
            "norm": float(np.linalg.norm(ev)),
            "energy": float(np.real(np.vdot(ev, h_mat @ ev))),
            "photon_number": dyn.photon_content(frame.model, ev),
            "q1_mean": float(np.sum(diag_q1 * rho_p)),
            "overlap0": float(abs(np.vdot(state, ev))),
        })
    path = write_csv(Path(out_dir) / "evolve.csv",
                     ["t", "norm", "energy", "photon_number", "q1_mean", "overlap0"], rows)
    manifest.record("evolve", csv=str(path), dim=frame.model.dim,
                    runtime_s=time.perf_counter() - t0)
    return 0


def cmd_classical(config, out_dir, manifest):
    from . import semiclassics as sc

    grid = _base_grid(config)
    space = _base_space(config)
    ic = config["dynamics"]["initial_state"]
    t_max = config["dynamics"]["t"]
    x0 = np.array(ic["centers"][: space.n])
    p0 = np.array(ic["momenta"][: space.n])
    traj = sc.classical_trajectory(space, grid, x0, p0, t_max,
                                   steps=config["semiclassics"]["steps"])
    ddot = traj.dipole_acceleration(space)
    rows = []
    for i, s in enumerate(traj.times):
        row = {"s": s}
        for j in range(space.n):
            row[f"x_{j+1}"] = traj.positions[i, j]
            row[f"p_{j+1}"] = traj.momenta[i, j]
            row[f"f_{j+1}"] = traj.forces[i, j]
        row["dipole_accel"] = ddot[i]
        rows.append(row)
    header = ["s"]
    for j in range(space.n):
        header += [f"x_{j+1}", f"p_{j+1}", f"f_{j+1}"]
    header += ["dipole_accel"]
    path = write_csv(Path(out_dir) / "classical.csv", header, rows)
    manifest.record("classical", csv=str(path), energy_drift=traj.energy_drift)
    return 0


def cmd_invariance_sweep(config, out_dir, manifest, check=False):
    from .acceptance import criterion_invariance

    result = criterion_invariance(config)
    path = write_csv(Path(out_dir) / "invariance.csv",
                     ["epsilon", "sigma", "m", "norm", "runtime_s"], result.rows)
    manifest.record("invariance-sweep", csv=str(path), passed=result.passed,
                    details=result.details)
    print(result.summary())
    return 0 if (result.passed or not check) else 1


def cmd_effective_compare(config, out_dir, manifest, check=False):
    from .acceptance import criterion_effective_dynamics

    result = criterion_effective_dynamics(config)
    path = write_csv(Path(out_dir) / "effective_compare.csv",
                     ["epsilon", "sigma", "t", "trace_full", "trace_eff", "diff", "variant"],
                     result.rows)
    manifest.record("effective-compare", csv=str(path), passed=result.passed,
                    details=result.details)
    print(result.summary())
    return 0 if (result.passed or not check) else 1


def cmd_radiate(config, out_dir, manifest, check=False):
    from .acceptance import criterion_radiated

    result = criterion_radiated(config)
    path = write_csv(Path(out_dir) / "radiate.csv",
                     ["epsilon", "sigma", "norm_direct", "norm_formula", "fidelity",
                      "e_rad_direct", "e_rad_formula", "variant"], result.rows)
    manifest.record("radiate", csv=str(path), passed=result.passed, details=result.details)
    print(result.summary())
    return 0 if (result.passed or not check) else 1


def cmd_larmor(config, out_dir, manifest, check=False):
    from .acceptance import criterion_larmor

    result = criterion_larmor(config)
    path = write_csv(Path(out_dir) / "larmor.csv",
                     ["t", "p_rad", "e_rad", "e_rad_fd", "epsilon"], result.rows)
    manifest.record("larmor", csv=str(path), passed=result.passed, details=result.details)
    print(result.summary())
    return 0 if (result.passed or not check) else 1


def cmd_check_all(config, out_dir, manifest, check=False):
    from .acceptance import run_all

    results = run_all(config)
    rows = []
    all_pass = True
    for res in results:
        print(res.summary())
        rows.append({"criterion": res.name, "passed": res.passed,
                     "detail": res.one_line_detail()})
        manifest.record("check-all", criterion=res.name, passed=res.passed,
                        details=res.details, runtime_s=res.runtime_s)
        all_pass = all_pass and res.passed
    write_csv(Path(out_dir) / "acceptance.csv", ["criterion", "passed", "detail"], rows)
    print(f"[check-all] {'PASS' if all_pass else 'FAIL'}")
    return 0 if (all_pass or not check) else 1


def cmd_report(config, out_dir, manifest):
    """Render PNG figures from CSVs already present in the output directory."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    made = []
    loglog_sets = {
        "invariance.csv": ("epsilon", "norm", "m"),
        "radiate.csv": ("epsilon", "fidelity", "variant"),
        "effective_compare.csv": ("epsilon", "diff", "variant"),
    }
    for name, (xcol, ycol, group) in loglog_sets.items():
        path = out / name
        if not path.exists():
            continue
        data = _read_csv(path)
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        groups = sorted(set(data[group]))
        for gval in groups:
            sel = [i for i, g in enumerate(data[group]) if g == gval]
            xs = np.array([float(data[xcol][i]) for i in sel])
            ys = np.array([float(data[ycol][i]) for i in sel])
            order = np.argsort(xs)
            ax.loglog(xs[order], np.abs(ys[order]) + 1e-300, "o-", label=f"{group}={gval}")
        ax.set_xlabel(xcol)
        ax.set_ylabel(ycol)
        ax.legend(fontsize=7)
        fig.tight_layout()
        target = path.with_suffix(".png")
        fig.savefig(target, dpi=150)
        plt.close(fig)
        made.append(str(target))
    for name, xcol, ycols in (("larmor.csv", "t", ["p_rad", "e_rad_fd"]),
                              ("classical.csv", "s", ["dipole_accel"]),
                              ("evolve.csv", "t", ["photon_number", "q1_mean"])):
        path = out / name
        if not path.exists():
            continue
        data = _read_csv(path)
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        xs = np.array([float(v) for v in data[xcol]])
        for ycol in ycols:
            ax.plot(xs, [float(v) for v in data[ycol]], label=ycol)
        ax.set_xlabel(xcol)
        ax.legend(fontsize=7)
        fig.tight_layout()
        target = path.with_suffix(".png")
        fig.savefig(target, dpi=150)
        plt.close(fig)
        made.append(str(target))
    manifest.record("report", figures=made)
    print(f"[report] wrote {len(made)} figure(s)")
    return 0


def _read_csv(path):
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
        columns = {h: [] for h in header}
        for line in handle:
            for h, v in zip(header, line.strip().split(",")):
                columns[h].append(v)
    return columns


COMMANDS = {
    "dump-modes": cmd_dump_modes,
    "assemble": cmd_assemble,
    "evolve": cmd_evolve,
    "classical": cmd_classical,
    "invariance-sweep": cmd_invariance_sweep,
    "effective-compare": cmd_effective_compare,
    "radiate": cmd_radiate,
    "larmor": cmd_larmor,
    "check-all": cmd_check_all,
    "report": cmd_report,
}

CHECKABLE = {"invariance-sweep", "effective-compare", "radiate", "larmor", "check-all"}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="paulifierz",
        description="Slow charged particles coupled to a truncated quantized field",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="TOML configuration file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="config override (repeatable)")
    parser.add_argument("--check", action="store_true",
                        help="exit nonzero when an acceptance window fails")
    parser.add_argument("--threads", type=int, default=None,
                        help="BLAS thread count for dense linear algebra")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    if args.threads is not None:
        try:
            import threadpoolctl

            threadpoolctl.threadpool_limits(args.threads)
        except ImportError:
            pass

    try:
        config = load_config(args.config, args.override)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config["seed"] = args.seed
    if args.check:
        config["check_mode"] = True

    out_dir = Path(args.out or config["output"]["directory"])
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = ManifestWriter(out_dir, config)
    manifest.record("run", command=args.command, seed=config["seed"],
                    overrides=list(args.override))

    command = COMMANDS[args.command]
    try:
        if args.command in CHECKABLE:
            code = command(config, out_dir, manifest, check=args.check)
        else:
            code = command(config, out_dir, manifest)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical failure path
        manifest.record("error", command=args.command, error=repr(exc))
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    finally:
        manifest.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
