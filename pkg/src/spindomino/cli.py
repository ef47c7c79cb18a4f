"""Command-line front end.

Usage:
    spindomino sector --n 6 --topology ring-full
    spindomino evolve --n 8 --beta 1 --out run.csv
    spindomino compare --n-list 8,12,16,20 --out results/
    spindomino semiclassical --d-list 50,100,200
    spindomino verify --n 8

Exit codes: 0 ok, 1 configuration error, 2 resource guard, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import (
    DEFAULT_SECTOR_CAP,
    SpinConfiguration,
    Topology,
    TopologyKind,
    amplification_sector,
    enumerate_sector,
    format_end_terms,
    format_sector,
    parse_end_terms,
)
from .dynamics import (
    SectorState,
    compare_topologies,
    comparison_csv,
    comparison_json,
    default_times,
    evolution_csv,
    evolution_json,
    evolve,
    fmt,
    make_amplification_state,
    summarize,
)
from .errors import ContractViolationError, DenseCapExceededError, SectorTooLargeError, SizeGuardError
from .hamiltonian import CouplingSpec, build_sector_hamiltonian, full_hamiltonian_projection_check
from .oracle import MAX_DENSE_ORACLE_SITES, FullSpaceState, full_space_evolve, full_space_hamiltonian, full_space_reachability
from .semiclassics import convergence_csv, convergence_report

logger = logging.getLogger("spindomino")

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_VERIFY = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class VerificationFailed(Exception):
    pass


@dataclass
class RunConfig:
    n: int = 8
    n_list: list[int] = field(default_factory=lambda: [8, 12, 16, 20])
    topology: str = "open"
    end_terms: str | None = None
    h: float = 1.0
    alpha: complex = 0j
    beta: complex = 1 + 0j
    seed: str | None = None
    tmax: float | None = None
    samples: int | None = None
    d_list: list[int] = field(default_factory=lambda: [50, 100, 200, 400])
    out: str | None = None
    format: str = "csv"
    cap: int = DEFAULT_SECTOR_CAP
    inject_fault: bool = False

    def validate(self) -> RunConfig:
        try:
            self.n = int(self.n)
            self.cap = int(self.cap)
            self.h = float(self.h)
            self.alpha = complex(self.alpha)
            self.beta = complex(self.beta)
            self.n_list = [int(v) for v in self.n_list]
            self.d_list = [int(v) for v in self.d_list]
            self.samples = None if self.samples is None else int(self.samples)
            self.tmax = None if self.tmax is None else float(self.tmax)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value: {exc}") from None
        if self.topology not in {k.value for k in TopologyKind}:
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.end_terms is None:
            self.end_terms = "none" if self.topology == TopologyKind.RING_FULL.value else "right"
        if self.samples is not None and self.samples < 1:
            raise ConfigError("--samples must be positive")
        if any(d < 4 for d in self.d_list):
            raise ConfigError("--d-list entries must be >= 4")
        norm2 = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if norm2 == 0:
            raise ConfigError("alpha and beta cannot both vanish")
        if abs(norm2 - 1) > 1e-9:
            logger.warning("alpha, beta not normalized (|alpha|^2+|beta|^2=%g); renormalizing", norm2)
        scale = norm2**-0.5
        self.alpha *= scale
        self.beta *= scale
        try:
            self.topo()
            self.coupling()
            self.seed_config()
        except ContractViolationError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def topo(self, n: int | None = None) -> Topology:
        return Topology(self.n if n is None else n, TopologyKind(self.topology), parse_end_terms(self.end_terms))

    def coupling(self) -> CouplingSpec:
        return CouplingSpec(self.h)

    def seed_config(self) -> SpinConfiguration:
        if self.seed is None:
            return SpinConfiguration.single_flip(self.n)
        s = SpinConfiguration.from_string(self.seed)
        if s.n != self.n:
            raise ContractViolationError(f"seed has {s.n} sites but --n is {self.n}")
        return s

    def times(self, n: int | None = None) -> np.ndarray:
        return default_times(self.n if n is None else n, self.h, self.samples, self.tmax)


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--n-list", type=_int_list, dest="n_list")
    common.add_argument("--topology", choices=[k.value for k in TopologyKind])
    common.add_argument("--end-terms", dest="end_terms", choices=["none", "left", "right", "both"])
    common.add_argument("--h", type=float)
    common.add_argument("--alpha", type=complex)
    common.add_argument("--beta", type=complex)
    common.add_argument("--seed", help="u/d string, site 1 leftmost")
    common.add_argument("--tmax", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--d-list", type=_int_list, dest="d_list")
    common.add_argument("--out")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--config", help="JSON file with defaults; flags override it")
    common.add_argument("--cap", type=int, help="sector state cap")
    common.add_argument("--inject-fault", action="store_true", default=None, dest="inject_fault", help=argparse.SUPPRESS)

    parser = _Parser(prog="spindomino", description="Quantum-domino spin-chain simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("sector", parents=[common], help="enumerate the reachable sector")
    sub.add_parser("evolve", parents=[common], help="propagate the amplification input")
    sub.add_parser("compare", parents=[common], help="open vs ring closures over an n list")
    sub.add_parser("semiclassical", parents=[common], help="WKB convergence table")
    sub.add_parser("verify", parents=[common], help="brute-force consistency checks")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in known:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return RunConfig(**values).validate()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def run_sector(cfg: RunConfig) -> int:
    basis = enumerate_sector(cfg.seed_config(), cfg.topo(), cap=cfg.cap)
    if cfg.out is not None:
        if cfg.format == "json":
            topo = basis.topology
            payload = {
                "n": topo.n,
                "dim": basis.dimension,
                "topology": topo.kind.value,
                "endterms": format_end_terms(topo.end_terms),
                "states": [str(s) for s in basis.states],
            }
            _emit(json.dumps(payload, indent=1, sort_keys=True) + "\n", cfg.out)
        else:
            _emit(format_sector(basis), cfg.out)
    print(f"dim={basis.dimension}")
    return EXIT_OK


def run_evolve(cfg: RunConfig) -> int:
    excited = cfg.seed_config()
    basis = amplification_sector(cfg.topo(), excited=excited, cap=cfg.cap)
    H = build_sector_hamiltonian(basis, cfg.coupling())
    psi0 = make_amplification_state(basis, cfg.alpha, cfg.beta, excited=excited)
    result = evolve(H, psi0, cfg.times(), keep_states=False)
    logger.info("evolve: D=%d method=%s norm drift %.2e", basis.dimension, result.method, result.max_norm_drift)
    _emit(evolution_json(result) if cfg.format == "json" else evolution_csv(result), cfg.out)
    return EXIT_OK


def run_compare(cfg: RunConfig) -> int:
    comparisons = []
    ext = cfg.format
    for n in cfg.n_list:
        cmp = compare_topologies(n, cfg.coupling(), cfg.end_terms, cfg.times(n))
        comparisons.append(cmp)
        if cfg.out is not None:
            text = comparison_json(cmp) if ext == "json" else comparison_csv(cmp)
            _emit(text, str(Path(cfg.out) / f"compare_n{n}.{ext}"))
    rows = summarize(comparisons)
    if ext == "json":
        summary = json.dumps(
            [{"n": n, "max_delta": float(fmt(d)), "max_delta_ring_bond": None if np.isnan(r) else float(fmt(r))} for n, d, r in rows],
            indent=1,
            sort_keys=True,
        ) + "\n"
    else:
        summary = "n,max_delta,max_delta_ring_bond\n" + "".join(f"{n},{fmt(d)},{fmt(r)}\n" for n, d, r in rows)
    if cfg.out is not None:
        _emit(summary, str(Path(cfg.out) / f"summary.{ext}"))
    sys.stdout.write(summary)
    return EXIT_OK


def run_semiclassical(cfg: RunConfig) -> int:
    rows = convergence_report(cfg.d_list, h=cfg.h)
    if cfg.format == "json":
        text = json.dumps([asdict(r) for r in rows], indent=1, sort_keys=True) + "\n"
    else:
        text = convergence_csv(rows)
    _emit(text, cfg.out)
    return EXIT_OK


def verification_checks(cfg: RunConfig) -> list[tuple[str, bool, str]]:
    """Projection, reachability and dynamics agreement against the full-space oracle."""
    if cfg.n > MAX_DENSE_ORACLE_SITES:
        raise SizeGuardError(f"verify runs the brute-force oracle and needs n <= {MAX_DENSE_ORACLE_SITES}, got n={cfg.n}")
    topo, coupling, seed = cfg.topo(), cfg.coupling(), cfg.seed_config()
    basis = enumerate_sector(seed, topo, cap=cfg.cap)
    H = build_sector_hamiltonian(basis, coupling)
    if cfg.inject_fault and H.dimension > 1:
        H.matrix.data[0] *= 1.5
    checks = []
    report = full_hamiltonian_projection_check(topo, coupling, basis, hamiltonian=H)
    checks.append(("projection", report.passed, report.first_discrepancy() or f"D={basis.dimension}"))

    H_full = full_space_hamiltonian(topo, coupling)
    reach = full_space_reachability(seed, topo, H_full)
    same = reach == set(basis.states)
    checks.append(("reachability", same, f"oracle {len(reach)} states, sector {basis.dimension}"))

    times = cfg.times()
    res = evolve(H, SectorState.basis_state(basis, seed), times, keep_states=False)
    traj = full_space_evolve(H_full, FullSpaceState.basis_state(seed), times)
    err = float(np.max(np.abs(res.profile - traj.profile)))
    checks.append(("dynamics", err <= 1e-9, f"max polarization error {err:.3e}"))
    return checks


def run_verify(cfg: RunConfig) -> int:
    checks = verification_checks(cfg)
    if cfg.format == "json":
        text = json.dumps([{"check": c, "passed": ok, "detail": d} for c, ok, d in checks], indent=1, sort_keys=True) + "\n"
    else:
        text = "check,passed,detail\n" + "".join(f"{c},{'pass' if ok else 'FAIL'},{d}\n" for c, ok, d in checks)
    _emit(text, cfg.out)
    failed = [c for c in checks if not c[1]]
    if failed:
        name, _, detail = failed[0]
        raise VerificationFailed(f"{name} check failed: {detail}")
    return EXIT_OK


COMMANDS = {
    "sector": run_sector,
    "evolve": run_evolve,
    "compare": run_compare,
    "semiclassical": run_semiclassical,
    "verify": run_verify,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ContractViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SectorTooLargeError, SizeGuardError, DenseCapExceededError) as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
