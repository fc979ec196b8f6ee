"""Command-line entry point: ``hybridqc <command> ...``.

Commands: compile, run, serve, qae {sweep,train}, classify {train,grid}, replay.
Every experiment command writes a JSON result file plus a CSV twin.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from .backend import SERVICE_ENV, BackendError, JobRequest, LocalBackend, RemoteBackend, JobService
from .circuit import ParseError, parse_program, print_program
from .compiler import compile_circuit, load_device
from .results import ResultFile, dumps_payload
from .simulator import NoiseModel

log = logging.getLogger("hybridqc")


class UsageError(Exception):
    pass


def _noise(text: str | None) -> NoiseModel | None:
    if not text:
        return None
    try:
        values = [float(v) for v in text.split(",")]
        return NoiseModel(*values)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"noise must be 'p1,p2,readout_flip': {exc}") from None


def _angle(text: str) -> float:
    """Float or simple pi expression (e.g. 'pi/2', '-pi')."""
    t = text.strip().replace(" ", "")
    sign = -1.0 if t.startswith("-") else 1.0
    t = t.lstrip("+-")
    try:
        if t.startswith("pi"):
            rest = t[2:]
            return sign * (math.pi / float(rest[1:]) if rest.startswith("/") else math.pi * (float(rest[1:]) if rest else 1.0))
        return sign * float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


def make_backend(spec: str, device: str):
    if spec == "local":
        return LocalBackend(load_device(device))
    url = os.environ.get(SERVICE_ENV) if spec == "remote" else spec
    if not url:
        raise UsageError(f"--backend remote needs {SERVICE_ENV} to be set")
    return RemoteBackend(url)


# --- experiment computations (shared by the commands and by replay) -------------------

def compute(config: dict) -> tuple[str, dict]:
    """Recompute ``(kind, payload)`` from a recorded config."""
    from .algorithms import classifier as clf
    from .algorithms import qae

    command = config["command"]
    noise = NoiseModel.from_dict(config.get("noise"))
    if command == "run":
        backend = make_backend(config["backend"], config["device"])
        result = backend.execute(JobRequest(config["program"], config["shots"], noise, config["seed"]))
        return "run", {"counts": result.counts(), "clbits": list(result.clbits),
                       "shots": result.shots, "seed": result.seed}
    if command in ("qae sweep", "qae train"):
        backend = make_backend(config["backend"], config["device"])
        data = qae.qae_dataset(config["n_points"], 0.0, math.pi, config["n_train"], config["data_seed"])
        cfg = qae.QaeConfig(config["mode"], config["shots"], backend, noise, config["seed"], config["exact"])
        if command == "qae sweep":
            sweep = qae.qae_sweep(data, cfg, config["points"], config["lo"], config["hi"])
            return "sweep", sweep.to_dict()
        report = qae.qae_train(data, cfg, config["x0"], max_evals=config["max_evals"])
        return "train", report.to_dict()
    if command in ("classify train", "classify grid"):
        backend = make_backend(config["backend"], config["device"])
        cfg = clf.ClassifierConfig(config["shots"], backend, noise, config["seed"], config["exact"])
        if command == "classify train":
            data = clf.xor_dataset(config["per_cluster"], config["spread"], config["data_seed"], config["variant"])
            report = clf.classifier_train(data, cfg, config["w_init"], max_evals=config["max_evals"])
            payload = report.to_dict()
            payload["initial_loss"], payload["initial_accuracy"] = clf.evaluate(config["w_init"], data, cfg)
            return "train", payload
        grid = clf.decision_grid((config["w0"], config["w1"]), config["points"], -math.pi, math.pi,
                                 None if config["analytic"] else cfg)
        axis = [float(t) for t in clf.grid_axis(config["points"], -math.pi, math.pi)]
        return "grid", {"axis": axis, "p1": [[float(v) for v in row] for row in grid]}
    raise UsageError(f"cannot compute {command!r}")


def replay(path: str | Path) -> bool:
    """Recompute a result file from its config; True when the payload is identical."""
    original = ResultFile.load(path)
    kind, payload = compute(original.config)
    return kind == original.kind and dumps_payload(payload) == dumps_payload(original.payload)


# --- command handlers -----------------------------------------------------------------

def _read_program(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse_program(text)


def _common_config(args) -> dict:
    return {"backend": args.backend, "device": args.device, "shots": args.shots, "seed": args.seed,
            "noise": args.noise.to_dict() if args.noise else None, "exact": getattr(args, "exact", False)}


def _write(args, kind: str, config: dict, payload: dict) -> int:
    result = ResultFile(kind, config, payload)
    out = Path(args.out) if args.out else Path("results") / f"{config['command'].replace(' ', '-')}-{args.seed}.json"
    json_path, csv_path = result.save(out)
    print(f"wrote {json_path} and {csv_path}")
    return 0


def cmd_compile(args) -> int:
    circuit = _read_program(args.program)
    compiled = compile_circuit(circuit, load_device(args.device))
    report = compiled.report()
    lines = [f"# device: {args.device}", f"# depth: {report['depth']}"]
    lines += [f"# gates: {', '.join(f'{k}={v}' for k, v in report['gate_counts'].items())}"]
    if report["initial_map"]:
        lines.append("# initial_map: " + ", ".join(f"%{k}->{v}" for k, v in report["initial_map"].items()))
    lines.append("# final_permutation: " + ", ".join(f"{k}->{v}" for k, v in report["final_permutation"].items()))
    text = "\n".join(lines) + "\n" + print_program(compiled.circuit)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    circuit = _read_program(args.program)
    if args.compile:
        circuit = compile_circuit(circuit, load_device(args.device)).circuit
    seed = args.seed
    if seed is None:
        from .algorithms.common import job_seed
        seed = job_seed(int.from_bytes(os.urandom(8), "little"))
    config = _common_config(args) | {"command": "run", "program": print_program(circuit), "seed": seed}
    kind, payload = compute(config)
    for bits, count in payload["counts"].items():
        print(f"{bits} {count}")
    args.seed = seed
    return _write(args, kind, config, payload)


def cmd_serve(args) -> int:
    service = JobService(args.host, args.port, load_device(args.device), args.noise)
    print(f"serving on {service.url} (set {SERVICE_ENV}={service.url})", flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.shutdown()
    return 0


def cmd_qae(args) -> int:
    config = _common_config(args) | {"command": f"qae {args.action}", "mode": args.mode,
                                     "n_points": args.n_points, "n_train": args.n_train,
                                     "data_seed": args.data_seed}
    if args.action == "sweep":
        config |= {"points": args.points, "lo": -math.pi, "hi": math.pi}
    else:
        config |= {"x0": args.x0, "max_evals": args.max_evals}
    kind, payload = compute(config)
    if kind == "sweep":
        best = min(range(len(payload["costs"])), key=lambda i: payload["costs"][i])
        print(f"min loss {payload['costs'][best]:.4f} at theta={payload['grid'][best]:.4f}")
    else:
        print(f"theta*={payload['optimize']['best_params'][0]:.5f} train={payload['train_loss']:.5f} "
              f"test={payload['test_loss']:.5f} evals={payload['optimize']['n_evals']}")
    return _write(args, kind, config, payload)


def cmd_classify(args) -> int:
    config = _common_config(args) | {"command": f"classify {args.action}"}
    if args.action == "train":
        config |= {"per_cluster": args.per_cluster, "spread": args.spread, "data_seed": args.data_seed,
                   "variant": args.variant, "w_init": list(args.w_init), "max_evals": args.max_evals}
    else:
        config |= {"w0": args.w0, "w1": args.w1, "points": args.points, "analytic": args.analytic}
    kind, payload = compute(config)
    if kind == "train":
        w = payload["optimize"]["best_params"]
        print(f"w*=({w[0]:.5f}, {w[1]:.5f}) loss={payload['train_loss']:.5f} accuracy={payload['accuracy']:.3f} "
              f"(untrained accuracy={payload['initial_accuracy']:.3f})")
    return _write(args, kind, config, payload)


def cmd_replay(args) -> int:
    same = replay(args.result)
    print("identical" if same else "DIFFERENT")
    return 0 if same else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridqc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def device_opt(p):
        p.add_argument("--device", default="agave8", help="bundled device name or JSON device file")

    def exec_opts(p, shots=10000, seed=0):
        device_opt(p)
        p.add_argument("--backend", default="local",
                       help=f"'local', 'remote' (uses ${SERVICE_ENV}) or a service URL")
        p.add_argument("--shots", type=int, default=shots)
        p.add_argument("--seed", type=int, default=seed)
        p.add_argument("--noise", type=_noise, default=None, metavar="P1,P2,READOUT")
        p.add_argument("--out", help="result JSON path (CSV written alongside)")

    p = sub.add_parser("compile", help="map, route and decompose a .qp program")
    device_opt(p)
    p.add_argument("program", help=".qp file or '-' for stdin")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="execute a .qp program")
    exec_opts(p, shots=1000, seed=None)
    p.add_argument("program")
    p.add_argument("--compile", action="store_true", help="compile for --device before running")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="start the job service")
    device_opt(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--noise", type=_noise, default=None, metavar="P1,P2,READOUT")
    p.set_defaults(func=cmd_serve)

    qae_p = sub.add_parser("qae", help="quantum autoencoder experiments")
    qae_sub = qae_p.add_subparsers(dest="action", required=True)
    for action in ("sweep", "train"):
        p = qae_sub.add_parser(action)
        exec_opts(p)
        p.add_argument("--mode", choices=("full", "halfway"), default="halfway")
        p.add_argument("--exact", action="store_true", help="exact probabilities instead of shots")
        p.add_argument("--n-points", type=int, default=40)
        p.add_argument("--n-train", type=int, default=8)
        p.add_argument("--data-seed", type=int, default=0)
        if action == "sweep":
            p.add_argument("--points", type=int, default=50)
        else:
            p.add_argument("--x0", type=_angle, default=math.pi / 1.2)
            p.add_argument("--max-evals", type=int, default=80)
        p.set_defaults(func=cmd_qae)

    cls_p = sub.add_parser("classify", help="XOR variational classifier")
    cls_sub = cls_p.add_subparsers(dest="action", required=True)
    p = cls_sub.add_parser("train")
    exec_opts(p)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--per-cluster", type=int, default=10)
    p.add_argument("--spread", type=float, default=0.3)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--variant", choices=("standard", "shifted"), default="standard")
    p.add_argument("--w-init", type=_angle, nargs=2, default=[0.1, 0.1])
    p.add_argument("--max-evals", type=int, default=200)
    p.set_defaults(func=cmd_classify)
    p = cls_sub.add_parser("grid")
    exec_opts(p)
    p.add_argument("--w0", type=_angle, required=True)
    p.add_argument("--w1", type=_angle, default=0.0)
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--sampled", dest="analytic", action="store_false",
                   help="estimate p1 through the backend instead of the closed form")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("replay", help="recompute a result file and compare payloads")
    p.add_argument("result")
    p.set_defaults(func=cmd_replay)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BackendError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
