"""End-to-end experiment runners: gate training curves, bottleneck sweep, gate chains.

Every runner is a pure function of its :class:`ExperimentConfig`. Results go to
``<out>/<experiment>/<run_id>/`` as ``records.csv``, one ``weights-<name>.txt``
per trained network and ``config.txt`` (the resolved config, in the same
``key = value`` format the CLI reads).
"""
import csv
import dataclasses
import hashlib
import io
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import exact, quantum, realrep, sampler
from . import net as nn
from .errors import ConfigError, Diverged, MissingWeights

CSV_COLUMNS = [
    "experiment", "index", "loss", "trace_residual_max", "trace_residual_mean",
    "antiherm_max", "antiherm_mean", "min_eig", "wall_ms",
]
EXPERIMENTS = ("quantumness", "fig1", "fig2", "fig3", "order_swap")
# smaller AdaDelta eps lowers the noise floor of the quantumness fit (1e-6: ~0.07, 1e-9: ~0.03);
# at 1e-10 the updates stall
QUANTUMNESS_EPS = 1e-9
CHAIN_PROBE_OFFSET = 7919
VERIFY_PROBE_OFFSET = 104729


def _parse_int_list(text):
    """``"12..20"`` or ``"12,14,16"`` or a mix such as ``"12..14,20"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


@dataclass
class ExperimentConfig:
    """Resolved settings of one experiment run.

    ``None`` marks "use the experiment's default"; :meth:`resolve` fills those
    in. Desk-scale defaults are used unless ``full_scale`` is set.
    """

    experiment: str = "fig1"
    seed: int = 1
    samples: Optional[int] = None
    epochs: Optional[int] = None
    batch: Optional[int] = None
    batch_schedule: Optional[List[int]] = None
    m: int = 15
    m_list: List[int] = field(default_factory=lambda: list(range(12, 21)))
    checkpoints: List[int] = field(default_factory=lambda: [500, 1000, 3000])
    gate: str = "cnot"
    hidden: List[int] = field(default_factory=lambda: [256, 256])
    activation: Optional[str] = None
    optimizer: Optional[str] = None
    lr: float = 0.08
    rho: float = 0.95
    eps: Optional[float] = None
    heldout: float = sampler.DEFAULT_HELDOUT
    eval_batch: int = 1000
    n_max: Optional[int] = None
    oracle: bool = False
    weights_hr: Optional[str] = None
    weights_cnot: Optional[str] = None
    full_scale: bool = False
    wall_time: bool = False

    def resolve(self):
        """Return a copy with experiment-specific defaults filled in."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        c = dataclasses.replace(self)
        c.gate = quantum.gate_name(c.gate)
        if c.experiment == "quantumness":
            c.samples = c.samples or (1_000_000 if c.full_scale else 100_000)
            c.epochs = c.epochs or 200
            c.batch_schedule = c.batch_schedule or [32, 64, 128, 256, 512]
            c.batch = c.batch or c.batch_schedule[-1]
            c.activation = c.activation or "relu"
            c.optimizer = c.optimizer or "adadelta"
            if c.optimizer == "adadelta" and c.eps is None:
                c.eps = QUANTUMNESS_EPS
        else:
            c.samples = c.samples or (100_000 if c.full_scale else 10_000)
            c.epochs = c.epochs or (3000 if c.full_scale else 500)
            c.batch = c.batch or 1000
            c.activation = c.activation or "linear"
            c.optimizer = c.optimizer or "adagrad"
        c.n_max = c.n_max if c.n_max is not None else (2 ** 15 if c.full_scale or c.oracle else 2 ** 10)
        if c.experiment == "fig2":
            c.epochs = max(c.checkpoints)
        for name in ("samples", "epochs", "batch", "eval_batch", "m"):
            if getattr(c, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if c.n_max < 0:
            raise ConfigError("n_max must be >= 0")
        if not c.m_list:
            raise ConfigError("m_list must not be empty")
        if c.optimizer not in ("adagrad", "adadelta"):
            raise ConfigError(f"unknown optimizer {c.optimizer!r}")
        if c.activation not in nn.ACTIVATIONS:
            raise ConfigError(f"unknown activation {c.activation!r}")
        if not 0.0 <= c.heldout < 1.0 or int(round(c.samples * c.heldout)) < 1:
            raise ConfigError("heldout fraction must leave at least one held-out sample")
        return c

    def train_config(self, seed=None, record_epochs=None) -> nn.TrainConfig:
        return nn.TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch,
            batch_schedule=self.batch_schedule if self.experiment == "quantumness" else None,
            optimizer=self.optimizer,
            lr=self.lr,
            rho=self.rho,
            eps=self.eps,
            seed=self.seed if seed is None else seed,
            record_epochs=record_epochs,
            wall_time=self.wall_time,
        )

    # -- key = value serialisation ---------------------------------------

    def to_lines(self):
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                text = ""
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, list):
                text = ",".join(str(v) for v in value)
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{f.name} = {text}")
        return lines

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def coerce(cls, key, text):
        """Convert a config-file/flag string to the type of field ``key``."""
        types = {
            "seed": int, "samples": int, "epochs": int, "batch": int, "m": int,
            "eval_batch": int, "n_max": int, "lr": float, "rho": float, "eps": float,
            "heldout": float,
        }
        lists = ("batch_schedule", "m_list", "checkpoints", "hidden")
        bools = ("oracle", "full_scale", "wall_time")
        if key not in cls.field_names():
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(text, str):
            text = text.strip()
            if text == "" and key not in ("experiment", "gate"):
                return None
        try:
            if key in types:
                return types[key](text)
            if key in lists:
                return text if isinstance(text, list) else _parse_int_list(text)
            if key in bools:
                if isinstance(text, bool):
                    return text
                if text.lower() in ("1", "true", "yes", "on"):
                    return True
                if text.lower() in ("0", "false", "no", "off"):
                    return False
                raise ValueError(f"not a boolean: {text!r}")
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
        return text

    def run_id(self):
        body = "\n".join(l for l in self.to_lines() if not l.startswith("wall_time"))
        return f"s{self.seed}-{hashlib.sha1(body.encode()).hexdigest()[:10]}"


def parse_config_text(text):
    """Parse ``key = value`` lines (``#`` starts a comment) into a dict of typed values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = ExperimentConfig.coerce(key, value)
    return values


# -- results ----------------------------------------------------------------

@dataclass
class RunResult:
    config: ExperimentConfig
    rows: List[dict]
    networks: Dict[str, nn.Network] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    run_dir: Optional[Path] = None

    def series(self, experiment):
        return [r for r in self.rows if r["experiment"] == experiment]


def record_row(experiment, rec: nn.EpochRecord):
    return {
        "experiment": experiment,
        "index": rec.index,
        "loss": rec.loss,
        "trace_residual_max": rec.trace_residual_max,
        "trace_residual_mean": rec.trace_residual_mean,
        "antiherm_max": rec.antiherm_max,
        "antiherm_mean": rec.antiherm_mean,
        "min_eig": rec.min_eig,
        "wall_ms": rec.wall_ms,
    }


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([repr(float(row[c])) if isinstance(row[c], float) else row[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def read_records(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["index"] = int(row["index"])
        for c in CSV_COLUMNS[2:]:
            row[c] = float(row[c])
    return rows


def write_run(result: RunResult, out_dir, run_id=None):
    """Persist records, weights and the resolved config; returns the run directory."""
    cfg = result.config
    run_dir = Path(out_dir) / cfg.experiment / (run_id or cfg.run_id())
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "records.csv").write_text(rows_to_csv(result.rows))
    (run_dir / "config.txt").write_text("\n".join(cfg.to_lines()) + "\n")
    for name, network in result.networks.items():
        nn.save_network(network, run_dir / f"weights-{name}.txt", config=_weights_config(cfg, name))
    result.run_dir = run_dir
    return run_dir


def _weights_config(cfg, name):
    d = dataclasses.asdict(cfg)
    d["network"] = name
    return d


# -- training experiments ---------------------------------------------------

def gate_dataset(cfg: ExperimentConfig, gate=None):
    spec = sampler.DatasetSpec("gate", cfg.samples, cfg.seed, gate or cfg.gate, cfg.heldout)
    return sampler.make_gate_dataset(spec)


def train_gate(cfg: ExperimentConfig, gate=None, m=None, dataset=None, seed=None, record_epochs=None):
    """Train a 64-m-64 net on one gate; returns ``(net, records)``."""
    m = cfg.m if m is None else m
    dataset = dataset if dataset is not None else gate_dataset(cfg, gate)
    seed = cfg.seed if seed is None else seed
    net = nn.init_network([64, m, 64], cfg.activation, seed=seed)
    return nn.train(net, dataset, cfg.train_config(seed=seed, record_epochs=record_epochs))


def run_fig1(cfg: ExperimentConfig) -> RunResult:
    """Training curve of one gate net (CNOT, m = 15 by default): loss and constraint metrics."""
    cfg = cfg.resolve()
    net, records = train_gate(cfg)
    name = f"fig1-{cfg.gate}-m{cfg.m}"
    return RunResult(cfg, [record_row(name, r) for r in records], {cfg.gate: net})


def run_fig2(cfg: ExperimentConfig) -> RunResult:
    """Bottleneck sweep: one net per ``m`` on a shared dataset, seeded ``seed + m``.

    A run that diverges is recorded in ``extra["diverged"]`` and the sweep continues.
    """
    cfg = cfg.resolve()
    data = gate_dataset(cfg)
    rows, nets, diverged = [], {}, {}
    final = {}
    for m in cfg.m_list:
        try:
            net, records = train_gate(cfg, m=m, dataset=data, seed=cfg.seed + m,
                                      record_epochs=cfg.checkpoints)
        except Diverged as exc:
            diverged[m] = str(exc)
            continue
        nets[f"{cfg.gate}-m{m}"] = net
        kept = [r for r in records if r.index in cfg.checkpoints]
        rows.extend(record_row(f"fig2-m{m}", r) for r in kept)
        final[m] = {r.index: r.loss for r in kept}
    return RunResult(cfg, rows, nets, {"loss": final, "diverged": diverged})


def run_quantumness(cfg: ExperimentConfig) -> RunResult:
    """Train the relu net approximating the quantumness map with AdaDelta and a batch schedule."""
    cfg = dataclasses.replace(cfg, experiment="quantumness").resolve()
    spec = sampler.DatasetSpec("quantumness", cfg.samples, cfg.seed, heldout_fraction=cfg.heldout)
    data = sampler.make_quantumness_dataset(spec)
    dims = [64] + list(cfg.hidden) + [64]
    net = nn.init_network(dims, cfg.activation, seed=cfg.seed)
    net, records = nn.train(net, data, cfg.train_config())
    result = RunResult(cfg, [record_row("quantumness", r) for r in records], {"quantumness": net})
    result.extra["redraws"] = data.redraws
    return result


# -- chains -----------------------------------------------------------------

def chain_layers(n_max):
    """Logged layer counts: 0 and the powers of two up to ``n_max``."""
    out = [0]
    n = 1
    while n <= n_max:
        out.append(n)
        n *= 2
    return out


def load_gate_networks(cfg: ExperimentConfig):
    """The HR and CNOT nets named by the config, or the analytic ones in oracle mode."""
    if cfg.oracle:
        return {"hr": exact.exact_gate_network("hr"), "cnot": exact.exact_gate_network("cnot")}
    nets = {}
    for gate, path in (("hr", cfg.weights_hr), ("cnot", cfg.weights_cnot)):
        if not path:
            raise MissingWeights(f"no weight file given for gate {gate!r} (use oracle mode or pass one)")
        nets[gate] = nn.load_network(path)
    return nets


def chain_probe(cfg: ExperimentConfig):
    """Fresh density inputs for chain evaluation, disjoint in seed from training data."""
    return sampler.sample_densities(cfg.seed + CHAIN_PROBE_OFFSET, cfg.eval_batch)


def evaluate_chain(nets, order, rho0, n_max, experiment, wall_time=False):
    """Feed each net's output to the next, ``order`` per layer, and compare with the exact chain.

    Returns one row per logged layer count; ``loss`` is the batch-mean squared
    Frobenius error against ``embed`` of the exact state.
    """
    spec = quantum.GateChainSpec(order, 0)
    u = spec.unitary()
    layers = chain_layers(n_max)
    rho = np.array(rho0, dtype=np.complex128)
    x = realrep.flatten(realrep.embed(rho))
    start = time.perf_counter()
    rows = []
    done = 0
    for n in layers:
        for _ in range(n - done):
            for g in spec.gates:
                x = nets[g](x)
            rho = quantum.evolve(rho, u)
        done = n
        if not np.all(np.isfinite(x)):
            raise Diverged(f"non-finite chain output at layer {n}")
        wall = (time.perf_counter() - start) * 1e3 if wall_time else 0.0
        target = realrep.flatten(realrep.embed(rho))
        rows.append(record_row(experiment, nn.evaluate_outputs(x, target, n, wall)))
    return rows


def run_fig3(cfg: ExperimentConfig, nets=None) -> RunResult:
    """Chain ``U = U_C U_HR`` (HR first) for up to ``n_max`` layers."""
    cfg = dataclasses.replace(cfg, experiment="fig3").resolve()
    nets = nets if nets is not None else load_gate_networks(cfg)
    rows = evaluate_chain(nets, ["hr", "cnot"], chain_probe(cfg), cfg.n_max, "fig3", cfg.wall_time)
    return RunResult(cfg, rows)


def run_order_swap(cfg: ExperimentConfig, nets=None) -> RunResult:
    """Chains in both gate orders, each against its own exact reference.

    Rows ``order_swap-exact_distance`` hold, in the loss column, the Frobenius
    distance between the two exact chains started from ``|00><00|``.
    """
    cfg = dataclasses.replace(cfg, experiment="order_swap").resolve()
    nets = nets if nets is not None else load_gate_networks(cfg)
    probe = chain_probe(cfg)
    rows = evaluate_chain(nets, ["hr", "cnot"], probe, cfg.n_max, "order_swap-hr_cnot", cfg.wall_time)
    rows += evaluate_chain(nets, ["cnot", "hr"], probe, cfg.n_max, "order_swap-cnot_hr", cfg.wall_time)
    ground = quantum.pure_state(0)
    a = quantum.chain_exact_trajectory(ground, quantum.GateChainSpec(["hr", "cnot"], 0), chain_layers(cfg.n_max))
    b = quantum.chain_exact_trajectory(ground, quantum.GateChainSpec(["cnot", "hr"], 0), chain_layers(cfg.n_max))
    distance = {}
    for n in chain_layers(cfg.n_max):
        d = float(np.linalg.norm(a[n] - b[n]))
        distance[n] = d
        rows.append({
            "experiment": "order_swap-exact_distance", "index": n, "loss": d,
            "trace_residual_max": 0.0, "trace_residual_mean": 0.0, "antiherm_max": 0.0,
            "antiherm_mean": 0.0, "min_eig": 0.0, "wall_ms": 0.0,
        })
    return RunResult(cfg, rows, extra={"exact_distance": distance})


# -- verification -----------------------------------------------------------

def _summary(outputs):
    m = quantum.quantum_metrics(realrep.unflatten(outputs))
    out = {}
    for name in ("trace_residual", "antiherm_norm", "complex_residual"):
        values = getattr(m, name)
        out[name] = {"max": float(np.max(values)), "mean": float(np.mean(values))}
    out["min_eigenvalue"] = {"min": float(np.min(m.min_eigenvalue)),
                             "mean": float(np.mean(m.min_eigenvalue))}
    return out


def verify_network(net: nn.Network, gate=None, seed=1, count=1000):
    """Constraint metrics of a gate net on fresh density inputs and on raw uniform inputs.

    If ``gate`` is given the density-input loss against the exact gate is
    reported as well. The raw-input probe shows whether outputs stay hermitian
    and normalised off the density-matrix manifold; only a net whose bottleneck
    discards everything but the 15 hermitian coordinates is expected to.
    """
    rho = sampler.sample_densities(seed + VERIFY_PROBE_OFFSET, count)
    x = realrep.flatten(realrep.embed(rho))
    out = net(x)
    report = {"density_inputs": _summary(out), "dims": net.dims}
    if gate is not None:
        target = realrep.flatten(realrep.embed(quantum.evolve(rho, quantum.gate(gate))))
        report["density_loss"] = nn.loss_mse(out, target)
        report["gate"] = quantum.gate_name(gate)
    raw = sampler.sample_raw(seed + VERIFY_PROBE_OFFSET + 1, count)
    report["raw_inputs"] = _summary(net(realrep.flatten(raw)))
    raw_ok = (report["raw_inputs"]["trace_residual"]["max"] < 1e-6
              and report["raw_inputs"]["antiherm_norm"]["max"] < 1e-6)
    report["raw_inputs_hermitian_normalized"] = bool(raw_ok)
    return report
