"""``certikit``: solve CTL properties and certify the solver's trace.

Subcommands::

    certikit solve MODEL            model check only
    certikit certify MODEL          solve, then run prover and verifier in-process
    certikit certify-gc MODEL       the same with the garbage-collecting variant
    certikit serve-prover MODEL --listen HOST:PORT
    certikit run-verifier MODEL --connect HOST:PORT

Every spec of the model is checked unless ``--spec`` or ``--formula`` picks
one. Exit codes: 0 every property holds and was certified, 1 some property
fails (and its failure was certified), 2 certification rejected, 3 usage,
parse or transport error. Stats are ``key=value`` lines, one block per
property; only the ``time_*`` lines vary between runs with the same seed.
"""
from __future__ import annotations

import argparse
import secrets
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .circuit import CircuitError, parse_trace
from .modelcheck.checker import model_inputs
from .modelcheck.parser import Ctl, Model, ParseError, parse_ctl, parse_model
from .pipeline import (Instance, certify, instance_from_trace, prepare, trace_answer,
                       with_flipped_assertion)
from .protocol.channel import (StreamChannel, TransportError, connect, listen, parse_address,
                               serve)
from .protocol.messages import WireError
from .protocol.tamper import TamperingProver, TamperSpec, parse_tamper
from .protocol.verifier import ProtocolResult, run_protocol, run_protocol_gc

EXIT_HOLDS, EXIT_FAILS, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2, 3
SEED_LIMIT = 1 << 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


@dataclass
class RunConfig:
    mode: str
    model: Path
    seed: int
    repetitions: int = 1
    gc: bool = False
    spec: int | None = None
    formula: str | None = None
    tamper: TamperSpec | None = None
    stats: Path | None = None
    trace: Path | None = None
    from_trace: Path | None = None
    transcript: Path | None = None
    address: str | None = None
    timeout: float = 30.0


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < SEED_LIMIT:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _tamper(text: str) -> TamperSpec:
    try:
        return parse_tamper(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="certikit", description="Certified CTL model checking.")
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("model", type=Path, help="model file")
        p.add_argument("--spec", type=int, help="index of the CTLSPEC to check (default: all)")
        p.add_argument("--formula", help="check this CTL formula instead of the model's specs")
        p.add_argument("--stats", type=Path, help="write the stats block here instead of stdout")

    def protocol(p: argparse.ArgumentParser, verifier: bool = True) -> None:
        if verifier:
            p.add_argument("--seed", type=_seed, help="64-bit seed (default: random, echoed in stats)")
            p.add_argument("--repetitions", type=_positive, default=1)
            p.add_argument("--transcript", type=Path, help="write the wire transcript here")
        p.add_argument("--gc", action="store_true", help="certify bottom-up and collect garbage")
        p.add_argument("--tamper", type=_tamper, help="test only: corrupt the run (e.g. poly:0)")
        p.add_argument("--from-trace", type=Path, dest="from_trace",
                       help="read the trace from a file instead of solving")

    p = sub.add_parser("solve", help="model check and print the answer")
    common(p)
    p.add_argument("--trace", type=Path, help="write the recorded trace here")

    for name, text in (("certify", "solve and certify in one process"),
                       ("certify-gc", "like certify, bottom-up with garbage collection")):
        p = sub.add_parser(name, help=text)
        common(p)
        protocol(p)
        p.add_argument("--trace", type=Path, help="write the recorded trace here")

    p = sub.add_parser("serve-prover", help="answer a remote verifier's challenges")
    common(p)
    protocol(p, verifier=False)
    p.add_argument("--listen", required=True, help="HOST:PORT to listen on")
    p.add_argument("--timeout", type=float, default=30.0)

    p = sub.add_parser("run-verifier", help="certify against a remote prover")
    common(p)
    protocol(p)
    p.add_argument("--connect", required=True, help="HOST:PORT of the prover")
    p.add_argument("--timeout", type=float, default=30.0)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        mode=ns.mode, model=ns.model,
        seed=ns.seed if getattr(ns, "seed", None) is not None else secrets.randbits(64),
        repetitions=getattr(ns, "repetitions", 1),
        gc=getattr(ns, "gc", False) or ns.mode == "certify-gc",
        spec=ns.spec, formula=ns.formula, tamper=getattr(ns, "tamper", None),
        stats=ns.stats, trace=getattr(ns, "trace", None),
        from_trace=getattr(ns, "from_trace", None),
        transcript=getattr(ns, "transcript", None),
        address=getattr(ns, "listen", None) or getattr(ns, "connect", None),
        timeout=getattr(ns, "timeout", 30.0))
    if cfg.address is not None:
        try:
            parse_address(cfg.address)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if cfg.spec is not None and cfg.formula is not None:
        raise UsageError("--spec and --formula are mutually exclusive")
    if cfg.tamper is not None:
        remote_side = "run-verifier" if cfg.tamper.kind == "flip-assert" else "serve-prover"
        if cfg.mode in ("serve-prover", "run-verifier") and cfg.mode != remote_side:
            raise UsageError(f"--tamper {cfg.tamper.kind} belongs on {remote_side}")
    return cfg


# -- instances --------------------------------------------------------------

def _properties(cfg: RunConfig, model: Model) -> list[tuple[int | None, Ctl, str]]:
    if cfg.formula is not None:
        return [(None, parse_ctl(cfg.formula, set(model.labels)), cfg.formula)]
    if not model.specs:
        raise UsageError(f"{cfg.model} has no CTLSPEC; pass --formula")
    picked = range(len(model.specs)) if cfg.spec is None else [cfg.spec]
    out = []
    for i in picked:
        if not 0 <= i < len(model.specs):
            raise UsageError(f"--spec {i} out of range; the model has {len(model.specs)} specs")
        out.append((i, model.specs[i], model.spec_texts[i]))
    return out


def _instances(cfg: RunConfig) -> list[tuple[int | None, str, Instance]]:
    model = parse_model(cfg.model.read_text(), cfg.model.stem)
    props = _properties(cfg, model)
    if cfg.from_trace is not None:
        if len(props) != 1:
            raise UsageError("--from-trace needs a single property (--spec or --formula)")
        inputs = model_inputs(model)
        trace = parse_trace(cfg.from_trace.read_text(), inputs)
        idx, _, text = props[0]
        return [(idx, text, instance_from_trace(trace, inputs, model.n, trace_answer(trace)))]
    return [(idx, text, prepare(model, f)) for idx, f, text in props]


# -- stats ------------------------------------------------------------------

def _answer(inst: Instance) -> str:
    return {True: "true", False: "false", None: "unknown"}[inst.answer]


def stats_block(cfg: RunConfig, idx: int | None, text: str, inst: Instance,
                res: ProtocolResult | None = None, extra: dict | None = None) -> str:
    rows: list[tuple[str, object]] = [
        ("model", cfg.model.name),
        ("spec", "formula" if idx is None else idx),
        ("formula", text),
        ("mode", cfg.mode),
        ("answer", _answer(inst)),
        ("trace_length", inst.trace_length),
        ("circuit_size", len(inst.circuit)),
        ("base_circuit_size", len(inst.base)),
        ("n", inst.n),
    ]
    if res is not None:
        rows += [
            ("verdict", "accept" if res.accepted else "reject"),
            ("reason", res.reason or "-"),
            ("seed", cfg.seed),
            ("repetitions", cfg.repetitions),
            ("messages", res.messages),
            ("challenges", res.challenges),
            ("field_ops", res.field_ops),
            ("error_bound", f"{res.error_bound:.6e}"),
        ]
    for key, value in (extra or {}).items():
        rows.append((key, value))
    for key in sorted(inst.timings):
        rows.append((f"time_{key}", f"{inst.timings[key]:.6f}"))
    return "".join(f"{k}={v}\n" for k, v in rows)


def _emit(cfg: RunConfig, blocks: list[str]) -> None:
    text = "\n".join(blocks)
    if cfg.stats is None:
        sys.stdout.write(text)
    else:
        cfg.stats.write_text(text)


def _exit_code(results: Sequence[tuple[bool | None, bool]]) -> int:
    """Combine (answer, accepted) pairs into one exit code."""
    if any(not ok for _, ok in results):
        return EXIT_REJECTED
    if any(ans is not True for ans, _ in results):
        return EXIT_FAILS
    return EXIT_HOLDS


# -- modes ------------------------------------------------------------------

def _solve(cfg: RunConfig) -> int:
    insts = _instances(cfg)
    blocks = []
    for idx, text, inst in insts:
        blocks.append(stats_block(cfg, idx, text, inst))
        if cfg.trace is not None:
            _write_trace(cfg, inst, idx, len(insts))
    _emit(cfg, blocks)
    return _exit_code([(inst.answer, True) for _, _, inst in insts])


def _write_trace(cfg: RunConfig, inst: Instance, idx: int | None, count: int) -> None:
    path = cfg.trace
    if count > 1:
        path = path.with_name(f"{path.stem}.{idx}{path.suffix}")
    path.write_text(inst.trace.to_text())


def _certify(cfg: RunConfig) -> int:
    insts = _instances(cfg)
    blocks, results = [], []
    transcript = bytearray()
    for idx, text, inst in insts:
        pr = inst.prover(cfg.gc)
        if cfg.tamper is not None and cfg.tamper.kind == "flip-assert":
            _flipped(inst, cfg.tamper)  # range check before running
        t0 = time.perf_counter()
        res, channel = certify(inst, cfg.seed, cfg.repetitions, gc=cfg.gc, tamper=cfg.tamper)
        inst.timings["verify"] = time.perf_counter() - t0
        transcript += channel.transcript or b""
        extra = {"prover_nodes": pr.peak_nodes}
        if cfg.tamper is not None:
            extra.update(_tamper_stats(cfg.tamper, channel))
        blocks.append(stats_block(cfg, idx, text, inst, res, extra))
        results.append((inst.answer, res.accepted))
        if cfg.trace is not None:
            _write_trace(cfg, inst, idx, len(insts))
    if cfg.transcript is not None:
        cfg.transcript.write_bytes(bytes(transcript))
    _emit(cfg, blocks)
    return _exit_code(results)


def _flipped(inst: Instance, spec: TamperSpec) -> Instance:
    try:
        return with_flipped_assertion(inst, spec.index)
    except IndexError as exc:
        raise UsageError(str(exc)) from None


def _tamper_stats(spec: TamperSpec, channel) -> dict:
    out = {"tamper": str(spec)}
    responder = getattr(channel, "prover", None)
    if isinstance(responder, TamperingProver):
        out["tamper_fired"] = int(responder.fired)
        out["tamper_applicable"] = int(responder.applicable)
    return out


def _serve_prover(cfg: RunConfig) -> int:
    insts = _instances(cfg)
    srv = listen(cfg.address)
    srv.settimeout(cfg.timeout)
    blocks, results = [], []
    try:
        conn, _ = srv.accept()
    finally:
        srv.close()
    with conn:
        conn.settimeout(cfg.timeout)
        reader, writer = conn.makefile("rb"), conn.makefile("wb")
        for idx, text, inst in insts:
            prover = inst.prover(cfg.gc)
            responder = prover if cfg.tamper is None else TamperingProver(prover, cfg.tamper)
            t0 = time.perf_counter()
            verdict = serve(responder, reader, writer)
            inst.timings["serve"] = time.perf_counter() - t0
            if verdict is None:
                raise TransportError("verifier closed the connection before its verdict")
            extra = {"verdict": "accept" if verdict.accept else "reject",
                     "reason": verdict.reason or "-", "prover_nodes": prover.peak_nodes}
            if cfg.tamper is not None:
                extra["tamper"] = str(cfg.tamper)
                extra["tamper_fired"] = int(responder.fired)
            blocks.append(stats_block(cfg, idx, text, inst, extra=extra))
            results.append((inst.answer, verdict.accept))
    _emit(cfg, blocks)
    return _exit_code(results)


def _connect_retrying(cfg: RunConfig):
    deadline = time.monotonic() + cfg.timeout
    while True:
        try:
            return connect(cfg.address, timeout=cfg.timeout)
        except (ConnectionRefusedError, FileNotFoundError):
            if time.monotonic() > deadline:
                raise
            time.sleep(0.05)


def _run_verifier(cfg: RunConfig) -> int:
    insts = _instances(cfg)
    blocks, results = [], []
    transcript = bytearray()
    with _connect_retrying(cfg) as sock:
        channel = StreamChannel(sock.makefile("rb"), sock.makefile("wb"))
        for idx, text, inst in insts:
            target = inst if cfg.tamper is None else _flipped(inst, cfg.tamper)
            channel.transcript = bytearray()
            t0 = time.perf_counter()
            if cfg.gc:
                res = run_protocol_gc(target.circuit, target.fragments, channel, cfg.seed,
                                      cfg.repetitions, base_size=len(target.base))
            else:
                res = run_protocol(target.circuit, target.claims, channel, cfg.seed,
                                   cfg.repetitions, base_size=len(target.base))
            inst.timings["verify"] = time.perf_counter() - t0
            transcript += channel.transcript
            extra = {"tamper": str(cfg.tamper)} if cfg.tamper is not None else None
            blocks.append(stats_block(cfg, idx, text, inst, res, extra))
            results.append((inst.answer, res.accepted))
    if cfg.transcript is not None:
        cfg.transcript.write_bytes(bytes(transcript))
    _emit(cfg, blocks)
    return _exit_code(results)


MODES = {
    "solve": _solve,
    "certify": _certify,
    "certify-gc": _certify,
    "serve-prover": _serve_prover,
    "run-verifier": _run_verifier,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        return MODES[cfg.mode](cfg)
    except UsageError as exc:
        print(f"certikit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, CircuitError) as exc:
        print(f"certikit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"certikit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TransportError, WireError) as exc:
        print(f"certikit: transport error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
