"""Command-line entry point: ``walsh-prep {train,reproduce,bench,emit-circuit,generate}``.

Exit codes: 0 success, 1 runtime error (or failed reproduction checks), 2 usage/validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import platform
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import (
    UnsupportedTermError,
    count_gates,
    export_qasm,
    synthesize_evolution,
    synthesize_state_preparation,
)
from .datasets import DatasetError, linear_state, make_target, save_amplitudes, sine_state
from .pipeline import (
    FULL_ORACLE,
    WALSH_TRUNCATED,
    ParameterVector,
    PipelineConfig,
    init_params,
    prepared_state,
)
from .statevec import SizeError, save_state
from .train import (
    AMPLITUDE_SSE,
    AMPLITUDE_SSE_PLUS_PHASE,
    COMPLEX_SSE,
    DivergenceError,
    LossKind,
    TrainConfig,
    ValidationError,
    fit,
    sweep_dataset_sizes,
)
from .walsh import (
    TermSet,
    TopologyError,
    TopologyGraph,
    WalshSpectrum,
    ladder_graph,
    select_terms,
)

log = logging.getLogger("walsh_prep")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

METHOD_FLAGS = {"full": FULL_ORACLE, "walsh": WALSH_TRUNCATED}
LOSS_FLAGS = {"sse": AMPLITUDE_SSE, "sse+phase": AMPLITUDE_SSE_PLUS_PHASE, "complex": COMPLEX_SSE}
FIGURES = ("fig4a", "fig4b", "fig4c", "table1", "table2")

# published reference values and the acceptance thresholds they are checked against
TABLE1 = {"two_local": (36, 56), "hardware_efficient": (18, 20)}
TABLE2 = {
    ("linear", "two-local"): (2.2e-5, 1e-4),
    ("linear", "hardware-efficient"): (3.3e-4, 1e-3),
    ("sine", "two-local"): (2.0e-5, 1e-4),
    ("sine", "hardware-efficient"): (1.1e-4, 1e-3),
}


def default_root() -> Path:
    return Path(os.environ.get("WALSH_PREP_OUT", "runs"))


def versions() -> dict:
    return {"walsh_prep": __version__, "numpy": np.__version__, "python": platform.python_version()}


def load_topology(spec: str, n_qubits: int) -> TopologyGraph:
    if spec == "ladder":
        return ladder_graph(n_qubits)
    if spec.startswith("file:"):
        data = json.loads(Path(spec[5:]).read_text())
        if isinstance(data, list):
            data = {"n_qubits": n_qubits, "edges": data}
        return TopologyGraph.from_json(data)
    raise TopologyError(f"unknown topology {spec!r}; use 'ladder' or 'file:<path>'")


def build_term_set(terms: str, n_qubits: int, topology: str = "ladder") -> TermSet:
    if terms == "two-local":
        return select_terms(n_qubits, "k_local", k=2)
    if terms == "hardware-efficient":
        return select_terms(n_qubits, "topology", graph=load_topology(topology, n_qubits))
    if terms == "full":
        return select_terms(n_qubits, "full")
    raise ValidationError(f"unknown term set {terms!r}")


@dataclass
class RunConfig:
    target: str
    pipeline: PipelineConfig
    train: TrainConfig
    terms: str | None = None
    topology: str | None = None
    out_dir: str = ""
    threads: int = 1

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "pipeline": self.pipeline.to_json(),
            "train": self.train.to_json(),
            "terms": self.terms,
            "topology": self.topology,
            "out_dir": self.out_dir,
            "threads": self.threads,
        }

    @classmethod
    def from_json(cls, data: dict) -> RunConfig:
        return cls(
            target=data["target"],
            pipeline=PipelineConfig.from_json(data["pipeline"]),
            train=TrainConfig.from_json(data["train"]),
            terms=data.get("terms"),
            topology=data.get("topology"),
            out_dir=data.get("out_dir", ""),
            threads=int(data.get("threads", 1)),
        )


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        cfg = RunConfig.from_json(json.loads(Path(args.config).read_text()))
        if args.out:
            cfg.out_dir = args.out
        return cfg
    method = METHOD_FLAGS[args.method]
    term_set = None
    if method == WALSH_TRUNCATED:
        if not args.terms:
            raise ValidationError("--method walsh requires --terms {two-local,hardware-efficient,full}")
        term_set = build_term_set(args.terms, args.n, args.topology)
    pipeline = PipelineConfig(args.n, method, args.layers, term_set)
    loss = LossKind(LOSS_FLAGS[args.loss], args.phase_weight) if args.loss else None
    train = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        loss=loss,
        log_every=args.log_every,
        target_loss=args.target_loss if args.target_loss > 0 else None,
    )
    out = args.out or str(
        default_root() / _slug(f"train-{args.target}-n{args.n}-{args.method}-L{args.layers}-s{args.seed}")
    )
    return RunConfig(args.target, pipeline, train, args.terms, args.topology, out, args.threads)


def write_trace_csv(trace, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss"])
        for epoch, value in trace:
            w.writerow([epoch, repr(float(value))])


def write_rows_csv(rows: list[dict], path: Path, columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def write_checks(checks: list[dict], out: Path) -> bool:
    (out / "checks.json").write_text(json.dumps({"checks": checks, "versions": versions()}, indent=2))
    for c in checks:
        print(f"[{'PASS' if c['pass'] else 'FAIL'}] {c['name']}: {c['value']:.3g} (threshold {c['threshold']})")
    return all(c["pass"] for c in checks)


# -- commands ----------------------------------------------------------------

def cmd_train(config: RunConfig, figures: bool = True) -> int:
    p = config.pipeline
    target = make_target(config.target, p.n_qubits, config.train.seed)
    if target.n_qubits != p.n_qubits:
        raise ValidationError(f"target has {target.n_qubits} qubits but --n is {p.n_qubits}")
    report = fit(target, p, config.train)

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_json(), indent=2))
    body = report.to_json()
    body["config"] = config.to_json()
    body["versions"] = versions()
    body["threads"] = config.threads
    (out / "report.json").write_text(json.dumps(body, indent=2))
    write_trace_csv(report.loss_trace, out / "loss.csv")
    (out / "params.json").write_text(json.dumps(report.final_params.to_json(), indent=2))
    save_state(prepared_state(report.final_params, config.train.phase_eps), out / "prepared_state.bin")
    if figures:
        from .plotting import plot_loss_traces

        plot_loss_traces({f"n={p.n_qubits}, {p.layers} layer(s)": report.loss_trace}, out / "loss.png")
    print(f"final_loss {report.final_loss:.6e}")
    print(f"final_infidelity {report.final_infidelity:.6e}")
    print(f"output {out}")
    return EXIT_OK


def _trace_runs(layers: int, sizes, epochs: int, seed: int, trials: int):
    runs = []
    for n in sizes:
        for trial in range(trials):
            target = make_target("uniform", n, seed + 1000 * trial + n)
            report = fit(target, PipelineConfig(n, FULL_ORACLE, layers),
                         TrainConfig(epochs=epochs, seed=seed + trial, target_loss=1e-14))
            runs.append((n, trial, report))
    return runs


def cmd_reproduce(figure: str, out: Path | None = None, seed: int = 0, figures: bool = True,
                  sizes=None, trials: int | None = None, epochs: int | None = None,
                  threads: int = 1) -> int:
    if figure not in FIGURES:
        raise ValidationError(f"unknown figure {figure!r}; choose from {FIGURES}")
    out = Path(out) if out else default_root() / "reproduce" / figure
    out.mkdir(parents=True, exist_ok=True)
    checks: list[dict] = []

    if figure in ("fig4a", "fig4b"):
        layers = 1 if figure == "fig4a" else 2
        sizes = sizes or [6, 8, 10]
        epochs = epochs or 2000
        runs = _trace_runs(layers, sizes, epochs, seed, trials or 1)
        rows = [
            {"n_qubits": n, "layers": layers, "trial": t, "epoch": e, "loss": repr(float(v))}
            for n, t, rep in runs for e, v in rep.loss_trace
        ]
        write_rows_csv(rows, out / "loss_traces.csv", ["n_qubits", "layers", "trial", "epoch", "loss"])
        for n, t, rep in runs:
            write_trace_csv(rep.loss_trace, out / f"loss_n{n}_t{t}.csv")
            if n == 8:
                if layers == 2:
                    checks.append({"name": f"2-layer n=8 trial {t} final loss <= 1e-10",
                                   "value": rep.final_loss, "threshold": 1e-10,
                                   "pass": rep.final_loss <= 1e-10})
                else:
                    checks.append({"name": f"1-layer n=8 trial {t} final loss >= 1e-6",
                                   "value": rep.final_loss, "threshold": 1e-6,
                                   "pass": rep.final_loss >= 1e-6})
        if figures:
            from .plotting import plot_loss_traces

            plot_loss_traces({f"N={1 << n}" + (f" #{t}" if t else ""): rep.loss_trace for n, t, rep in runs},
                             out / f"{figure}.png", title=f"{layers} layer(s)")

    elif figure == "fig4c":
        sizes = sizes or [4, 6, 8, 10]
        res = sweep_dataset_sizes(sizes, ["uniform", "normal"], trials or 10,
                                  TrainConfig(epochs=epochs or 500, seed=seed), threads=threads)
        for row in res.rows:
            row["final_loss"] = repr(float(row["final_loss"]))
        write_rows_csv(res.rows, out / "sweep.csv",
                       ["n_qubits", "N", "distribution", "trial", "final_loss", "wall_clock_s"])
        write_rows_csv(res.summary, out / "summary.csv",
                       ["n_qubits", "N", "distribution", "mean_final_loss", "std_final_loss", "failed_trials"])
        for n in sizes:
            means = {r["distribution"]: r["mean_final_loss"] for r in res.summary if r["n_qubits"] == n}
            u, g = means["uniform"], means["normal"]
            ratio = max(u, g) / max(min(u, g), 1e-300) if math.isfinite(u) and math.isfinite(g) else math.inf
            checks.append({"name": f"n={n} uniform/normal mean-loss ratio < 10", "value": ratio,
                           "threshold": 10, "pass": ratio < 10})
        if figures:
            from .plotting import plot_sweep

            plot_sweep(res.summary, out / "fig4c.png")

    elif figure == "table1":
        n = 8
        result = {}
        for key, terms in (("two_local", "two-local"), ("hardware_efficient", "hardware-efficient")):
            ts = build_term_set(terms, n)
            spec = WalshSpectrum.from_arrays(n, ts.indices, np.ones(len(ts)))
            counts = count_gates(synthesize_evolution(spec))
            result[key] = counts.to_json()
            expected = TABLE1[key]
            got = (counts.one_qubit, counts.two_qubit)
            checks.append({"name": f"{key} gate counts == {expected}", "value": float(got == expected),
                           "threshold": 1, "pass": got == expected})
        (out / "gate_counts.json").write_text(json.dumps(result, indent=2))
        print(json.dumps(result))

    elif figure == "table2":
        n = 8
        epochs = epochs or 20000
        rows, panels = [], {}
        for dataset, make in (("linear", linear_state), ("sine", sine_state)):
            target = make(n)
            for terms in ("two-local", "hardware-efficient"):
                pcfg = PipelineConfig(n, WALSH_TRUNCATED, 2, build_term_set(terms, n))
                rep = fit(target, pcfg, TrainConfig(epochs=epochs, seed=seed, log_every=100))
                reference, threshold = TABLE2[(dataset, terms)]
                rows.append({"dataset": dataset, "terms": terms, "infidelity": repr(rep.final_infidelity),
                             "reference": reference, "threshold": threshold,
                             "pass": rep.final_infidelity <= threshold})
                (out / f"params_{dataset}_{terms}.json").write_text(json.dumps(rep.final_params.to_json(), indent=2))
                write_trace_csv(rep.loss_trace, out / f"loss_{dataset}_{terms}.csv")
                checks.append({"name": f"{dataset}/{terms} infidelity <= {threshold:g}",
                               "value": rep.final_infidelity, "threshold": threshold,
                               "pass": rep.final_infidelity <= threshold})
                prep = np.abs(prepared_state(rep.final_params).amps)
                panels[f"{dataset}, {terms}"] = (target.amps.real, prep, rep.final_infidelity)
        write_rows_csv(rows, out / "infidelity.csv", ["dataset", "terms", "infidelity", "reference", "threshold", "pass"])
        lines = [f"{'dataset':<8} {'two-local':>12} {'hardware-eff.':>14}"]
        for dataset in ("linear", "sine"):
            vals = {r["terms"]: float(r["infidelity"]) for r in rows if r["dataset"] == dataset}
            lines.append(f"{dataset:<8} {vals['two-local']:>12.2e} {vals['hardware-efficient']:>14.2e}")
        text = "\n".join(lines) + "\n"
        (out / "table2.txt").write_text(text)
        print(text, end="")
        if figures:
            from .plotting import plot_amplitudes

            plot_amplitudes(panels, out / "table2_amplitudes.png")

    ok = write_checks(checks, out)
    print(f"output {out}")
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_bench(n_list, epochs: int = 500, out: Path | None = None, seed: int = 0, figures: bool = True) -> int:
    out = Path(out) if out else default_root() / "bench"
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in n_list:
        target = make_target("uniform", n, seed)
        pcfg = PipelineConfig(n, FULL_ORACLE, 2)
        tcfg = TrainConfig(epochs=epochs, seed=seed, target_loss=None, log_every=max(epochs, 1))
        start = time.perf_counter()
        fit(target, pcfg, tcfg, init=init_params(pcfg, seed))
        rows.append({"n_qubits": n, "N": 1 << n, "seconds": time.perf_counter() - start})
    write_rows_csv(rows, out / "bench.csv", ["n_qubits", "N", "seconds"])
    for r in rows:
        print(f"N={r['N']:>9d}  {r['seconds']:.4f} s")
    if len(rows) >= 2:
        x = np.log([r["N"] * r["n_qubits"] for r in rows])
        y = np.log([r["seconds"] for r in rows])
        slope, intercept = np.polyfit(x, y, 1)
        print(f"log t = {slope:.3f} * log(N log2 N) + {intercept:.3f}  (informative only)")
    if figures:
        from .plotting import plot_bench

        plot_bench([r["N"] for r in rows], [r["seconds"] for r in rows], out / "bench.png")
    print(f"output {out}")
    return EXIT_OK


def cmd_emit_circuit(params_path: str | Path, out_path: str | Path) -> int:
    params = ParameterVector.from_json(json.loads(Path(params_path).read_text()))
    if params.config.method != WALSH_TRUNCATED:
        raise UnsupportedTermError(
            "full_oracle parameters need an arithmetic oracle; only walsh_truncated runs can be emitted as gates"
        )
    gates = synthesize_state_preparation(params.spectra())
    export_qasm(gates, out_path)
    c = count_gates(gates)
    print(f"wrote {out_path}: {len(gates)} gates ({c.one_qubit} one-qubit, {c.two_qubit} two-qubit)")
    return EXIT_OK


def cmd_generate(target: str, n_qubits: int, seed: int, out_path: str | Path) -> int:
    save_amplitudes(make_target(target, n_qubits, seed), out_path)
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walsh-prep", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one pipeline and write a run directory")
    t.add_argument("--config", help="run-config JSON (overrides the other flags)")
    t.add_argument("--target", default="uniform", help="uniform, normal, linear, sine or file:<path>")
    t.add_argument("--n", type=int, default=8)
    t.add_argument("--method", choices=sorted(METHOD_FLAGS), default="full")
    t.add_argument("--layers", type=int, choices=(1, 2), default=2)
    t.add_argument("--terms", choices=("two-local", "hardware-efficient", "full"))
    t.add_argument("--topology", default="ladder", help="ladder or file:<json edge list>")
    t.add_argument("--epochs", type=int, default=2000)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--loss", choices=sorted(LOSS_FLAGS))
    t.add_argument("--phase-weight", type=float, default=1.0)
    t.add_argument("--log-every", type=int, default=1)
    t.add_argument("--target-loss", type=float, default=1e-14, help="early-stop threshold; <= 0 disables")
    t.add_argument("--out")
    t.add_argument("--threads", type=int, default=1)
    t.add_argument("--no-figures", action="store_true")

    r = sub.add_parser("reproduce", help="regenerate a figure or table")
    r.add_argument("figure", choices=FIGURES)
    r.add_argument("--out")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--sizes", type=_int_list, help="qubit counts, e.g. 6,8,10")
    r.add_argument("--trials", type=int)
    r.add_argument("--epochs", type=int)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--no-figures", action="store_true")

    b = sub.add_parser("bench", help="time fixed-epoch training against N")
    b.add_argument("--n-list", type=_int_list, default=[4, 6, 8, 10, 12])
    b.add_argument("--epochs", type=int, default=500)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.add_argument("--no-figures", action="store_true")

    e = sub.add_parser("emit-circuit", help="export a trained walsh run as OpenQASM 2.0")
    e.add_argument("params_path")
    e.add_argument("out_path")

    g = sub.add_parser("generate", help="write a target amplitude file")
    g.add_argument("--target", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("out_path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "train":
            return cmd_train(config_from_args(args), figures=not args.no_figures)
        if args.command == "reproduce":
            return cmd_reproduce(args.figure, args.out, args.seed, not args.no_figures,
                                 args.sizes, args.trials, args.epochs, args.threads)
        if args.command == "bench":
            return cmd_bench(args.n_list, args.epochs, args.out, args.seed, not args.no_figures)
        if args.command == "emit-circuit":
            return cmd_emit_circuit(args.params_path, args.out_path)
        if args.command == "generate":
            return cmd_generate(args.target, args.n, args.seed, args.out_path)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValidationError, DatasetError, SizeError, TopologyError, UnsupportedTermError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    parser.error(f"unknown command {args.command}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
