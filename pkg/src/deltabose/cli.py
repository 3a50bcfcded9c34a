"""Command-line front end: ``deltabose {eval,compare,sweep,verify,decay}``.

Every command builds a :class:`JobSpec`, runs it, and writes one output
document (JSON or CSV; gnuplot-style columns for ``sweep``).  Output is
written atomically and is byte-identical for identical specs unless
``--timing`` is requested.  Exit codes: 0 success, 1 numerical failure,
2 invalid input, 3 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import oracles, propagator, verify
from .errors import DeltaBoseError, InvalidArgument
from .propagator import Method, PropagatorQuery

COMMANDS = ("eval", "compare", "sweep", "verify", "decay")
ORACLE_METHODS = ("mc", "pde", "free")
FORMATS = ("json", "csv")

# default comparison tolerances
EXACT_RTOL = 1e-7
PDE_RTOL = 1e-3
MC_SIGMAS = 3.0


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def _floats(text, name):
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip() != "")
    except ValueError:
        raise InvalidArgument(f"--{name} must be a comma-separated list of numbers, got {text!r}") from None


@dataclass
class JobSpec:
    command: str
    n: int | None = None
    x: tuple[float, ...] | None = None
    y: tuple[float, ...] | None = None
    t: float | None = None
    kappa: float | None = None
    methods: tuple[str, ...] = ()
    zero_point: bool = False
    tol: float = propagator.DEFAULT_TOL
    mu: str = "symmetric"
    format: str = "json"
    output: str | None = None
    seed: int = 0
    paths: int = 100_000
    steps: int | None = None
    estimator: str = oracles.BRIDGE
    pde_du: float = 1e-3
    suite: str | None = None
    param: str | None = None
    values: tuple[float, ...] = ()
    t_grid: tuple[float, ...] = (4.0, 5.0, 6.0, 7.0, 8.0)
    timing: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidArgument(f"unknown command {self.command!r}; choose from {list(COMMANDS)}")
        if self.format not in FORMATS:
            raise InvalidArgument(f"unknown format {self.format!r}; choose from {list(FORMATS)}")
        for name in ("x", "y"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, _floats(v, name))
        self.values = _floats(self.values, "values")
        self.t_grid = _floats(self.t_grid, "t-grid")
        if isinstance(self.methods, str):
            self.methods = tuple(m.strip() for m in self.methods.split(",") if m.strip())
        self.methods = tuple(self.methods)
        if self.command in ("eval", "compare", "sweep"):
            self._complete_query()

    def _complete_query(self):
        if self.zero_point:
            if self.n is None:
                raise InvalidArgument("--zero-point needs --n")
            self.x = self.y = (0.0,) * int(self.n)
            if not self.methods:
                self.methods = (Method.ZERO_POINT.value,)
        if self.x is None or self.y is None:
            raise InvalidArgument("need --x and --y (or --zero-point with --n)")
        if self.n is not None and int(self.n) != len(self.x):
            raise InvalidArgument(f"--n {self.n} does not match len(x) = {len(self.x)}")
        self.n = len(self.x)
        if self.t is None or self.kappa is None:
            raise InvalidArgument("need --t and --kappa")
        self.t, self.kappa = float(self.t), float(self.kappa)
        if not self.methods:
            self.methods = (Method.TW_REPULSIVE.value if self.kappa <= 0 else Method.THM2.value,)
        allowed = [m.value for m in propagator.allowed_methods(self.kappa)] + list(ORACLE_METHODS)
        for m in self.methods:
            if m not in allowed:
                raise InvalidArgument(f"method {m!r} is not valid for kappa={self.kappa:g}; allowed: {allowed}")

    def spec_fields(self) -> dict:
        """Input fields as stored in emitted records (no output path)."""
        d = dataclasses.asdict(self)
        d.pop("output")
        d.pop("timing")
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "JobSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidArgument(f"unknown job fields: {sorted(unknown)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# running


def _evaluate(spec: JobSpec, method: str, t=None, kappa=None) -> dict:
    t = spec.t if t is None else t
    kappa = spec.kappa if kappa is None else kappa
    start = time.perf_counter()
    if method == "mc":
        cfg = oracles.McConfig(paths=spec.paths, steps=spec.steps, seed=spec.seed, estimator=spec.estimator)
        r = oracles.feynman_kac_mc(spec.x, spec.y, t, kappa, cfg)
        rec = dict(method="mc", value_re=r.estimate, value_im=0.0, error_estimate=r.std_error,
                   imag_residue=0.0, evaluations=r.paths, meta=dict(paths=r.paths, steps=cfg.steps,
                   seed=spec.seed, estimator=spec.estimator))
    elif method == "pde":
        r = oracles.pde_propagator_n2(spec.x, spec.y, t, kappa, oracles.PdeConfig(du=spec.pde_du))
        rec = dict(method="pde", value_re=r.value, value_im=0.0, error_estimate=r.error_estimate,
                   imag_residue=0.0, evaluations=r.nodes * r.steps, meta=dict(nodes=r.nodes, steps=r.steps))
    elif method == "free":
        v = oracles.free_propagator(spec.x, spec.y, t)
        rec = dict(method="free", value_re=v, value_im=0.0, error_estimate=0.0, imag_residue=0.0,
                   evaluations=math.factorial(len(spec.x)), meta={})
    else:
        q = PropagatorQuery(spec.x, spec.y, t, kappa, method, spec.tol)
        r = propagator.evaluate(q, thm1=propagator.Thm1Config(spec.mu))
        rec = dict(method=r.method, value_re=r.value.real, value_im=r.value.imag,
                   error_estimate=r.error_estimate, imag_residue=r.imag_residue, evaluations=r.evaluations,
                   meta=dict(grid=r.grid_summary()))
    if spec.timing:
        rec["timing"] = time.perf_counter() - start
    return rec


def run_eval(spec: JobSpec) -> dict:
    return dict(spec=spec.spec_fields(), results=[_evaluate(spec, m) for m in spec.methods])


def _agree(a: dict, b: dict) -> tuple[float, float, bool]:
    va, vb = a["value_re"], b["value_re"]
    diff = abs(va - vb)
    rel = diff / max(abs(va), 1e-300)
    kinds = {a["method"], b["method"]}
    if "mc" in kinds:
        sig = math.hypot(a["error_estimate"], b["error_estimate"])
        ok = diff <= MC_SIGMAS * sig if sig > 0 else rel <= EXACT_RTOL
    elif "pde" in kinds:
        ok = rel <= PDE_RTOL
    else:
        ok = rel <= EXACT_RTOL
    return diff, rel, ok


def run_compare(spec: JobSpec) -> dict:
    if len(spec.methods) < 2:
        raise InvalidArgument("compare needs at least two methods")
    results = [_evaluate(spec, m) for m in spec.methods]
    pairs = []
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            diff, rel, ok = _agree(results[i], results[j])
            pairs.append(dict(a=results[i]["method"], b=results[j]["method"], abs_diff=diff, rel_diff=rel, passed=ok))
    return dict(spec=spec.spec_fields(), results=results, pairs=pairs,
                max_rel_diff=max(p["rel_diff"] for p in pairs), passed=all(p["passed"] for p in pairs))


def run_sweep(spec: JobSpec) -> dict:
    if spec.param not in ("t", "kappa"):
        raise InvalidArgument("sweep needs --param t or --param kappa")
    if not spec.values:
        raise InvalidArgument("sweep needs --values")
    rows = []
    for v in spec.values:
        t = v if spec.param == "t" else spec.t
        k = v if spec.param == "kappa" else spec.kappa
        for m in spec.methods:
            if m not in ORACLE_METHODS:
                allowed = [a.value for a in propagator.allowed_methods(k)]
                if m not in allowed:
                    raise InvalidArgument(f"method {m!r} is not valid at kappa={k:g}; allowed: {allowed}")
            rec = _evaluate(spec, m, t=t, kappa=k)
            rows.append(dict(param=v, **rec))
    return dict(spec=spec.spec_fields(), rows=rows)


def run_verify(spec: JobSpec) -> dict:
    if spec.suite not in verify.SUITES:
        raise InvalidArgument(f"verify needs --suite from {list(verify.SUITES)}")
    report = verify.run_suite(spec.suite, seed=spec.seed)
    return dict(spec=spec.spec_fields(), **report)


def run_decay(spec: JobSpec) -> dict:
    if spec.n is None or spec.kappa is None:
        raise InvalidArgument("decay needs --n and --kappa")
    method = spec.methods[0] if spec.methods else Method.ZERO_POINT.value
    slope = propagator.decay_rate(int(spec.n), float(spec.kappa), method, spec.t_grid, spec.tol)
    corrected = propagator.decay_rate(int(spec.n), float(spec.kappa), method, spec.t_grid, spec.tol, log_t_power=0.5)
    target = -float(spec.kappa) ** 2 * (int(spec.n) ** 3 - int(spec.n)) / 12.0
    return dict(spec=spec.spec_fields(), slope=slope, corrected_slope=corrected, target=target)


RUNNERS = dict(eval=run_eval, compare=run_compare, sweep=run_sweep, verify=run_verify, decay=run_decay)


# ---------------------------------------------------------------------------
# rendering

CSV_COLUMNS = ("command", "method", "n", "x", "y", "t", "kappa", "tol", "seed", "value_re", "value_im",
               "error_estimate", "imag_residue", "evaluations")


def _csv_cell(v):
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, (list, tuple)):
        return " ".join(fmt_float(e) for e in v)
    return "" if v is None else str(v)


def render(spec: JobSpec, result: dict) -> str:
    if spec.command == "sweep" and spec.format == "csv":
        return render_gnuplot(spec, result)
    if spec.format == "json":
        return json.dumps(result, indent=2) + "\n"
    if spec.command in ("eval", "compare"):
        cols = CSV_COLUMNS + (("timing",) if spec.timing else ())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        s = result["spec"]
        for r in result["results"]:
            row = dict(command=s["command"], n=s["n"], x=s["x"], y=s["y"], t=s["t"], kappa=s["kappa"],
                       tol=s["tol"], seed=s["seed"], **r)
            w.writerow([_csv_cell(row.get(c)) for c in cols])
        if spec.command == "compare":
            w.writerow([])
            w.writerow(["a", "b", "abs_diff", "rel_diff", "passed"])
            for p in result["pairs"]:
                w.writerow([p["a"], p["b"], fmt_float(p["abs_diff"]), fmt_float(p["rel_diff"]), p["passed"]])
        return buf.getvalue()
    if spec.command == "verify":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite", "check", "value", "contract", "passed"])
        for c in result["checks"]:
            w.writerow([result["suite"], c["name"], fmt_float(c["value"]), c["contract"], c["passed"]])
        return buf.getvalue()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "kappa", "slope", "corrected_slope", "target"])
    w.writerow([spec.n, fmt_float(spec.kappa), fmt_float(result["slope"]), fmt_float(result["corrected_slope"]),
                fmt_float(result["target"])])
    return buf.getvalue()


def render_gnuplot(spec: JobSpec, result: dict) -> str:
    """Whitespace-delimited columns, one block per method separated by blank lines."""
    lines = [f"# sweep over {spec.param}; n={spec.n} x={list(spec.x)} y={list(spec.y)} "
             f"t={fmt_float(spec.t)} kappa={fmt_float(spec.kappa)}",
             f"# columns: {spec.param} value_re value_im error_estimate"]
    for m in spec.methods:
        lines.append(f"# method {m}")
        for r in result["rows"]:
            if r["method"] != m:
                continue
            lines.append(" ".join(fmt_float(r[k]) for k in ("param", "value_re", "value_im", "error_estimate")))
        lines.append("")
        lines.append("")
    return "\n".join(lines[:-1])


def write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".deltabose-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_record_csv(text: str) -> list[dict]:
    """Parse the record rows of an eval/compare CSV back into typed dicts."""
    rows = []
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    for row in reader:
        if not row:
            break
        d = dict(zip(header, row))
        out = dict(command=d["command"], method=d["method"], n=int(d["n"]), seed=int(d["seed"]))
        for k in ("t", "kappa", "tol", "value_re", "value_im", "error_estimate", "imag_residue"):
            out[k] = float(d[k])
        out["x"] = tuple(float(v) for v in d["x"].split())
        out["y"] = tuple(float(v) for v in d["y"].split())
        out["evaluations"] = int(d["evaluations"])
        rows.append(out)
    return rows


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deltabose", description="Propagator of the delta-Bose gas.")
    p.add_argument("--job", help="JSON job file; its fields override the command line")
    sub = p.add_subparsers(dest="command")

    def common(sp, query=True):
        sp.add_argument("--format", choices=FORMATS, default="json")
        sp.add_argument("--output", "-o", help="output file (default: stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=propagator.DEFAULT_TOL)
        sp.add_argument("--timing", action="store_true", help="include wall-clock timings (breaks byte determinism)")
        if query:
            sp.add_argument("--n", type=int)
            sp.add_argument("--x", help="comma-separated ordered positions")
            sp.add_argument("--y", help="comma-separated ordered positions")
            sp.add_argument("--t", type=float)
            sp.add_argument("--kappa", type=float)
            sp.add_argument("--zero-point", action="store_true", help="x = y = 0 with the determinant formula")
            sp.add_argument("--mu", choices=("symmetric", "zero"), default="symmetric")
            sp.add_argument("--paths", type=int, default=100_000)
            sp.add_argument("--steps", type=int, help="MC time steps (default 64 bridge, 2048 kernel)")
            sp.add_argument("--estimator", choices=(oracles.BRIDGE, oracles.KERNEL), default=oracles.BRIDGE)
            sp.add_argument("--pde-du", type=float, default=1e-3)

    methods_help = "one of " + ", ".join([m.value for m in Method] + list(ORACLE_METHODS))
    sp = sub.add_parser("eval", help="evaluate the propagator")
    common(sp)
    sp.add_argument("--method", dest="methods", help=methods_help)
    sp = sub.add_parser("compare", help="compare several methods on one query")
    common(sp)
    sp.add_argument("--methods", required=False, help="comma-separated, " + methods_help)
    sp = sub.add_parser("sweep", help="sweep t or kappa; CSV output is gnuplot-ready")
    common(sp)
    sp.add_argument("--methods", "--method", dest="methods")
    sp.add_argument("--param", choices=("t", "kappa"))
    sp.add_argument("--values", help="comma-separated values, or start:stop:num")
    sp = sub.add_parser("verify", help="run a verification suite")
    common(sp, query=False)
    sp.add_argument("--suite", choices=verify.SUITES)
    sp = sub.add_parser("decay", help="fit the long-time decay rate at x = y = 0")
    common(sp, query=False)
    sp.add_argument("--n", type=int)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--method", dest="methods")
    sp.add_argument("--t-grid", default="4,5,6,7,8")
    return p


def _values(text):
    if text is None:
        return ()
    if ":" in text:
        a, b, num = text.split(":")
        return tuple(float(v) for v in np.linspace(float(a), float(b), int(num)))
    return _floats(text, "values")


def spec_from_args(ns: argparse.Namespace) -> JobSpec:
    fields = {f.name for f in dataclasses.fields(JobSpec)}
    d = {k: v for k, v in vars(ns).items() if k in fields and v is not None}
    d.pop("job", None)
    if "values" in d:
        d["values"] = _values(d["values"])
    if ns.job:
        try:
            with open(ns.job) as fh:
                job = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidArgument(f"cannot read job file {ns.job!r}: {exc}") from None
        if not isinstance(job, dict):
            raise InvalidArgument("job file must hold a JSON object")
        if "spec" in job and isinstance(job["spec"], dict):  # an emitted record
            job = job["spec"]
        d.update(job)
    if not d.get("command"):
        raise InvalidArgument("no command given")
    return JobSpec.from_dict(d)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        spec = spec_from_args(ns)
        result = RUNNERS[spec.command](spec)
        text = render(spec, result)
        if spec.output:
            write_atomic(spec.output, text)
        else:
            sys.stdout.write(text)
    except DeltaBoseError as exc:
        print(f"deltabose: error: {exc}", file=sys.stderr)
        return exc.exit_code
    if spec.command == "verify":
        return 0 if result["passed"] else 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
