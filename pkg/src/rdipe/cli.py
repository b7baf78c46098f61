"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 protocol error, 4 network error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import (
    CSV_COLUMNS,
    build_empirical_cdf,
    cdf_exact,
    epsilon2_sweep,
    loglog_slopes,
    sample_size_plan,
    value_distribution,
    write_csv,
)
from .errors import (
    CalibrationFailed,
    ChannelError,
    ConfigMismatch,
    InvalidChannelParam,
    ProtocolViolation,
    PurityTooLow,
    RdipeError,
)
from .noise import Channel, robustness_experiment, robustness_pair, write_robustness_report
from .protocol import ProtocolConfig, connect, run_session, serve
from .states import FAMILIES, MAX_DENSE_VECTOR, cosine_oracle, load_state_spec, make_family

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_PROTOCOL, EXIT_NETWORK = 0, 1, 2, 3, 4


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _int_range(text: str) -> list[int]:
    """``start:stop:step`` (stop included) or a comma list."""
    if ":" not in text:
        return _ints(text)
    parts = [int(v) for v in text.split(":")]
    start, stop = parts[0], parts[1]
    step = parts[2] if len(parts) > 2 else 1
    return list(range(start, stop + 1, step))


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _meta(args, **extra) -> dict:
    meta = {"command": args.command, "version": __version__, "seed": args.seed}
    meta.update(extra)
    return meta


# ---------------------------------------------------------------------------
# protocol commands


def _config(args, n: int, role: str) -> ProtocolConfig:
    if args.N1 is not None and args.N2 is not None:
        N1, N2 = args.N1, args.N2
    else:
        N1, N2 = sample_size_plan(n, args.epsilon, args.delta)
        N1, N2 = args.N1 or N1, args.N2 or N2
    return ProtocolConfig(n=n, N1=N1, N2=N2, N3=args.N3, epsilon=args.epsilon, delta=args.delta,
                          seed=args.seed, role=role, purity_mode=args.purity_mode)


def _summary(cfg: ProtocolConfig, f: float, state_a, state_b=None) -> dict:
    out = {"f": f, "N1": cfg.N1, "N2": cfg.N2, "N3": cfg.N3, "n": cfg.n, "epsilon": cfg.epsilon,
           "delta": cfg.delta, "seed": cfg.seed, "purity_mode": cfg.purity_mode, "version": __version__}
    if state_b is not None and cfg.n <= MAX_DENSE_VECTOR:
        c = cosine_oracle(state_a, state_b)
        out.update({"oracle_c": c, "abs_error": abs(f - c)})
    return out


def cmd_run(args) -> int:
    a, b = load_state_spec(args.state_a), load_state_spec(args.state_b)
    if a.n != b.n:
        raise ConfigMismatch(f"state A has {a.n} qubits, state B has {b.n}")
    cfg = _config(args, a.n, "alice")
    ta, tb = run_session(a, b, cfg, cfg.for_role("bob"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ta.write_jsonl(out / "transcript_alice.jsonl")
    tb.write_jsonl(out / "transcript_bob.jsonl")
    summary = _summary(cfg, ta.f, a, b)
    _dump(summary, out / "summary.json")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _networked(args, listen: bool) -> int:
    s = load_state_spec(args.state)
    cfg = _config(args, s.n, args.role)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"transcript_{cfg.role}.jsonl"
    if listen:
        f, t = serve(s, cfg, args.listen, path, accept_timeout=args.timeout, timeout=args.timeout)
    else:
        f, t = connect(s, cfg, args.peer, path, retries=args.retries, timeout=args.timeout)
    summary = _summary(cfg, f, s)
    summary["role"] = cfg.role
    _dump(summary, out / f"summary_{cfg.role}.json")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_serve(args) -> int:
    return _networked(args, True)


def cmd_connect(args) -> int:
    return _networked(args, False)


# ---------------------------------------------------------------------------
# analysis commands


def _state_for(args, n: int):
    rng = np.random.default_rng([args.seed, n])
    return make_family(args.family, n, rng, clifford=not args.no_clifford)


def cmd_cdf(args) -> int:
    s = _state_for(args, args.n)
    grid = np.unique(np.concatenate([np.logspace(-6, 0, args.points), _floats(args.eps) if args.eps else []]))
    meta = _meta(args, family=args.family, n=args.n)
    if args.exact:
        vals, _, _ = value_distribution(s)
        jumps = np.unique(np.round(vals, 12))
        xs = np.unique(np.concatenate([grid, jumps]))
        rows = [{"epsilon": float(x), "F": float(f)} for x, f in zip(xs, cdf_exact(s, xs))]
        meta["mode"] = "exact"
        write_csv(rows, args.out, meta, ("epsilon", "F"))
    else:
        rng = np.random.default_rng([args.seed, args.n, 1])
        K = None if args.K is None else args.K
        cdf = build_empirical_cdf(s, args.N, K, rng)
        lo, hi = cdf.band(grid, args.alpha)
        rows = [{"epsilon": float(x), "F": float(f), "band_lo": float(a), "band_hi": float(b)}
                for x, f, a, b in zip(grid, cdf(grid), lo, hi)]
        meta.update({"mode": "empirical", "N": args.N, "K": "inf" if K is None else K, "alpha": args.alpha})
        write_csv(rows, args.out, meta, ("epsilon", "F", "band_lo", "band_hi"))
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_resources(args) -> int:
    ns = _int_range(args.n_range)
    eps = _floats(args.epsilons)
    K = None if args.exact_K else args.K
    if K is None and not args.exact_K:
        raise ValueError("give --K or --exact-K")

    def make(n, rng):
        return make_family(args.family, n, rng, clifford=not args.no_clifford)

    # default N: DKW half-width eps/2 at level alpha for the smallest target
    N = args.N if args.N is not None else math.ceil(math.log(2 / args.alpha) / (2 * (min(eps) / 2) ** 2))
    rows = epsilon2_sweep(make, ns, eps, N, K, args.seed)
    meta = _meta(args, family=args.family, n_range=args.n_range, N=N, K="inf" if K is None else K,
                 epsilons=args.epsilons, alpha=args.alpha)
    write_csv(rows, args.out, meta, CSV_COLUMNS)
    for e in eps:
        inv = [1 / r["epsilon2_optimistic"] for r in rows if r["epsilon"] == e]
        slopes = loglog_slopes(ns, inv)
        print(f"epsilon={e}: 1/eps2 = {', '.join(f'{v:.4g}' for v in inv)}; "
              f"log-log slopes = {', '.join(f'{v:.3f}' for v in slopes)}")
    return EXIT_OK


def cmd_robustness(args) -> int:
    rho, sigma = robustness_pair(args.family, args.n, args.seed)
    report = robustness_experiment(rho, sigma, _floats(args.taus), Channel.parse(args.channel), args.runs,
                                   args.seed, args.delta, args.epsilon, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_robustness_report(report, out / "robustness.csv", out / "robustness.json")
    for r in report["rows"]:
        print(f"tau={r['tau']}: max|f-c|={r['max_error']:.4g} (bound {r['bound']:.4g}), "
              f"Delta={r['delta_tv']:.4g} (bound {r['delta_bound']:.4g}), N1={r['N1']}, N2={r['N2']}")
    return EXIT_OK if report["passed"] else EXIT_FAILED


def cmd_entangle(args) -> int:
    from .verify import entanglement_scaling

    rep = entanglement_scaling(tuple(_ints(args.ns)), args.samples, args.seed)
    cols = ("n", "samples", "mean_entropy", "entropy_stderr", "predicted_entropy", "mean_purity",
            "purity_stderr", "predicted_purity", "k", "k_prime", "passed")
    meta = _meta(args, ns=args.ns, samples=args.samples, slope=rep["fit"]["slope"], r2=rep["fit"]["r2"],
                 entropy_units="bits")
    write_csv(rep["rows"], args.out, meta, cols)
    print(f"slope={rep['fit']['slope']:.4f} bits/qubit, R^2={rep['fit']['r2']:.4f}")
    return EXIT_OK if rep["passed"] else EXIT_FAILED


def cmd_verify(args) -> int:
    from .verify import run_suite

    rep = run_suite(args.suite, args.seed)
    rep["version"] = __version__
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, r in rep["reports"].items():
        _dump(r, out / f"{name}.json")
    _dump({"suite": args.suite, "seed": args.seed, "version": __version__, "passed": rep["passed"],
           "checks": {k: (all(x["passed"] for x in v) if isinstance(v, list) else v["passed"])
                      for k, v in rep["reports"].items()}}, out / "summary.json")
    for k, v in rep["reports"].items():
        ok = all(x["passed"] for x in v) if isinstance(v, list) else v["passed"]
        print(f"{'PASS' if ok else 'FAIL'} {k}")
    return EXIT_OK if rep["passed"] else EXIT_FAILED


# ---------------------------------------------------------------------------
# parser


def _add_protocol_flags(p):
    p.add_argument("--epsilon", type=float, default=0.1, help="target accuracy for planning N1, N2")
    p.add_argument("--delta", type=float, default=3.0, help="confidence exponent: failure < exp(-delta)")
    p.add_argument("--N1", type=int, help="override the planned number of rounds")
    p.add_argument("--N2", type=int, help="override the planned shots per estimate")
    p.add_argument("--N3", type=int, default=0, help="Bell samples for estimated purities")
    p.add_argument("--purity-mode", choices=("exact", "estimated"), default="exact")
    p.add_argument("--out", default="rdipe_out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rdipe", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1, help="worker threads where supported")

    p = sub.add_parser("run", help="in-process two-party session")
    p.add_argument("--state-a", required=True)
    p.add_argument("--state-b", required=True)
    _add_protocol_flags(p)
    common(p)
    p.set_defaults(func=cmd_run)

    for name, flag, fn, role in (("serve", "--listen", cmd_serve, "alice"), ("connect", "--peer", cmd_connect, "bob")):
        p = sub.add_parser(name, help=f"one party of a TCP session ({flag} HOST:PORT)")
        p.add_argument(flag, required=True)
        p.add_argument("--state", required=True)
        p.add_argument("--role", choices=("alice", "bob"), default=role)
        p.add_argument("--retries", type=int, default=5)
        p.add_argument("--timeout", type=float, default=60.0)
        _add_protocol_flags(p)
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("cdf", help="exact or empirical CDF of squared expectations")
    p.add_argument("--family", choices=FAMILIES, default="w")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--N", type=int, default=50000)
    p.add_argument("--K", type=int, help="shots per squared estimate (default: exact)")
    p.add_argument("--alpha", type=float, default=0.01, help="DKW band level")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--eps", help="extra comma-separated evaluation points")
    p.add_argument("--no-clifford", action="store_true", help="skip the random Clifford rotation")
    p.add_argument("--out", default="cdf.csv")
    common(p)
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("resources", help="eps2 solving F_{N,K}(eps2) = eps across n")
    p.add_argument("--family", choices=FAMILIES, default="dicke2")
    p.add_argument("--n-range", default="8:64:8")
    p.add_argument("--N", type=int, help="Bell samples per n (default: DKW width eps/2 at --alpha)")
    p.add_argument("--alpha", type=float, default=0.01, help="DKW level for the default N")
    p.add_argument("--K", type=int)
    p.add_argument("--exact-K", action="store_true")
    p.add_argument("--epsilons", default="0.1,0.05,0.01")
    p.add_argument("--no-clifford", action="store_true")
    p.add_argument("--out", default="resources.csv")
    common(p)
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("robustness", help="protocol on calibrated noisy inputs")
    p.add_argument("--family", choices=FAMILIES, default="w")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--taus", default="0.02,0.05,0.1")
    p.add_argument("--channel", default="phase", help="depolarizing | pauli[:px,py,pz] | phase[@sites]")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--delta", type=float, default=3.0)
    p.add_argument("--epsilon", type=float, default=0.1, help="accuracy used when tau = 0")
    p.add_argument("--out", default="robustness_out")
    common(p)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("entangle", help="average half-system Renyi-2 entropy of random CW states")
    p.add_argument("--ns", default="4,6,8,10,12")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--out", default="entangle.csv")
    common(p)
    p.set_defaults(func=cmd_entangle)

    p = sub.add_parser("verify", help="numerical verification suite")
    p.add_argument("--suite", choices=("quick", "all"), default="all")
    p.add_argument("--out", default="verify_out")
    common(p)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChannelError as e:
        print(f"network error: {e}", file=sys.stderr)
        return EXIT_NETWORK
    except ProtocolViolation as e:
        print(f"protocol error: {e}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (ConfigMismatch, PurityTooLow, CalibrationFailed, InvalidChannelParam) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RdipeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"configuration error: {e!r}" if isinstance(e, KeyError) else f"configuration error: {e}",
              file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
