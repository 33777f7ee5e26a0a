"""Training loop with per-step spectral instrumentation, grids, and log summaries."""

import csv
import dataclasses
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from samedge.errors import ContractViolation, DivergedError
from samedge.harness.data import load_dataset
from samedge.harness.logs import LogWriter, StepRecord, read_log
from samedge.objectives import MlpModel, QuadraticModel, glorot_init
from samedge.optim import gd_edge, sam_direction, sam_edge
from samedge.quadlab import random_psd
from samedge.spectral import alignment, top_k_eigs

ZERO_GRAD_NORM = 1e-12
DIVERGENCE_FACTOR = 1e6

# sub-streams of the experiment seed
_DATA, _INIT, _BATCH, _SPECTRAL = 0, 1, 2, 3


def build_objective(config):
    """The objective and the initial parameter vector described by ``config``."""
    spec = config.objective
    seed = spec.seed
    if spec.kind == "quadratic":
        rng = np.random.default_rng([seed, _INIT])
        if spec.eigenvalues:
            model = QuadraticModel(np.diag(spec.eigenvalues))
        else:
            eig = random_psd(spec.dim, rng)
            model = QuadraticModel.from_eigen(eig.eigenvalues, eig.eigenvectors)
        return model, spec.init_scale * rng.standard_normal(spec.dim)
    data = load_dataset(config.data, seed=[seed, _DATA])
    widths = (data.inputs.shape[1],) + tuple(spec.hidden) + (data.targets.shape[1],)
    model = MlpModel(widths, data.inputs, data.targets, spec.activation)
    return model, glorot_init(widths, [seed, _INIT])


class _Batches:
    """Minibatches drawn without replacement, reshuffled every epoch."""

    def __init__(self, model, size, seed):
        self.model = model
        self.size = size
        self.rng = np.random.default_rng([seed, _BATCH])
        self.order = np.empty(0, dtype=np.int64)

    def next(self):
        if self.order.size < self.size:
            self.order = np.concatenate([self.order, self.rng.permutation(self.model.n)])
        index, self.order = self.order[:self.size], self.order[self.size:]
        return self.model.subset(np.sort(index))


def _nan_record(step, wall, loss, gn, k, eta, flags):
    return StepRecord(step=step, wall_s=wall, loss=loss, grad_norm=gn,
                      uphill_grad_norm=math.nan, lambda_mags=(math.nan,) * k,
                      gd_edge=gd_edge(eta) if eta > 0 else math.nan, sam_edge=math.nan,
                      align_iterate=math.nan, align_uphill=math.nan, flags=frozenset(flags))


def run_experiment(config, log_path=None):
    """Train as configured and return the logged :class:`StepRecord` list.

    Every ``spectral.period`` steps (and at the last step) a record is taken at
    the current iterate.  Training stops early when the loss exceeds the
    divergence threshold or stops being finite; the final record then carries
    the ``diverged`` flag.  ``log_path`` (default ``config.log.path``) receives
    the CSV log if non-empty.

    With ``log.clock = work`` the ``wall_s`` column counts gradient and HVP
    evaluations instead of seconds, so logs are reproducible byte for byte.
    """
    optim, spec = config.optim, config.spectral
    if optim.eta <= 0:
        raise ContractViolation("run_experiment needs eta > 0")
    model, w = build_objective(config)
    if spec.k > model.dim:
        raise ContractViolation(f"spectral.k={spec.k} exceeds parameter count {model.dim}")
    batches = None
    if config.data.batch_size and config.objective.kind == "mlp":
        batches = _Batches(model, min(config.data.batch_size, model.n), config.seed)

    log_path = config.log.path if log_path is None else log_path
    writer = LogWriter(log_path, spec.k) if log_path else None
    records = []
    work = 0
    start = time.perf_counter()

    def clock():
        return float(work) if config.log.clock == "work" else time.perf_counter() - start

    def emit(rec):
        records.append(rec)
        if writer:
            writer.write(rec)

    eta, rho = optim.eta, optim.rho
    threshold = optim.divergence_threshold
    zero_grad_seen = False
    try:
        for t in range(optim.max_steps + 1):
            try:
                loss, g = model.loss_and_gradient(w)
            except DivergedError:
                emit(_nan_record(t, clock(), math.nan, math.nan, spec.k, eta, ["diverged"]))
                break
            work += 1
            if threshold is None:
                threshold = DIVERGENCE_FACTOR * max(loss, 1e-12)
            if not (math.isfinite(loss) and math.isfinite(g.norm)) or loss > threshold:
                emit(_nan_record(t, clock(), loss, g.norm, spec.k, eta, ["diverged"]))
                break
            zero_grad = g.norm < ZERO_GRAD_NORM
            zero_grad_seen = zero_grad_seen or zero_grad
            uphill = g.grad
            if rho > 0 and not zero_grad and batches is None:
                uphill = model.gradient(w + (rho / g.norm) * g.grad).grad
                work += 1

            if t % spec.period == 0 or t == optim.max_steps:
                est = top_k_eigs(model, w, spec.k, spec.tol, spec.max_iters,
                                 seed=[config.seed, _SPECTRAL, t])
                work += est.hvp_calls
                flags = set()
                if zero_grad_seen:
                    flags.add("zero_grad")
                    zero_grad_seen = False
                if not est.converged:
                    flags.add("spectral_unconverged")
                if batches is not None and rho > 0 and not zero_grad:
                    uphill = model.gradient(w + (rho / g.norm) * g.grad).grad
                    work += 1
                v1 = est.principal
                emit(StepRecord(
                    step=t, wall_s=clock(), loss=loss, grad_norm=g.norm,
                    uphill_grad_norm=float(np.linalg.norm(uphill)),
                    lambda_mags=tuple(float(x) for x in est.magnitudes),
                    gd_edge=gd_edge(eta), sam_edge=sam_edge(eta, rho, g.norm),
                    align_iterate=alignment(g.grad, v1) if g.norm > 0 else math.nan,
                    align_uphill=(alignment(uphill, v1) if np.any(uphill) else math.nan),
                    flags=frozenset(flags)))
            if t == optim.max_steps:
                break

            if batches is not None:
                batch = batches.next()
                gb = batch.gradient(w)
                work += 1
                if rho > 0 and gb.norm >= ZERO_GRAD_NORM:
                    direction = sam_direction(batch, w, gb, rho)
                    work += 1
                else:
                    direction = gb.grad
            else:
                # zero gradient: the uphill offset is undefined, take a plain GD step
                direction = uphill
            w = w - eta * direction
    finally:
        if writer:
            writer.close()
    return records


def run_name(eta, rho):
    return f"eta{eta!r}_rho{rho!r}"


@dataclass(frozen=True)
class RunEntry:
    name: str
    eta: float
    rho: float
    log: str
    status: str
    diverged: bool
    records: int
    error: str = ""


MANIFEST_FIELDS = ["name", "eta", "rho", "log", "status", "diverged", "records", "error"]


def _grid_job(args):
    config, name, eta, rho, path = args
    try:
        records = run_experiment(config, log_path=path)
    except OSError as exc:
        return RunEntry(name, eta, rho, os.path.basename(path), "error", False, 0, str(exc))
    diverged = bool(records) and records[-1].diverged
    return RunEntry(name, eta, rho, os.path.basename(path), "ok", diverged, len(records))


def run_grid(base, etas, rhos, out_dir, workers=1):
    """Run every ``(eta, rho)`` combination; write one log per run plus ``manifest.csv``.

    Log names depend only on ``(eta, rho)``.  I/O failures are recorded in the
    manifest instead of aborting the grid.
    """
    etas, rhos = list(etas), list(rhos)
    if not etas:
        raise ContractViolation("eta list is empty")
    if not rhos:
        raise ContractViolation("rho list is empty")
    jobs = []
    for eta in etas:
        for rho in rhos:
            name = run_name(eta, rho)
            config = base.with_optim(eta=eta, rho=rho)
            jobs.append((config, name, eta, rho, os.path.join(out_dir, name + ".csv")))
    os.makedirs(out_dir, exist_ok=True)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_grid_job, jobs))
    else:
        entries = [_grid_job(job) for job in jobs]
    with open(os.path.join(out_dir, "manifest.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_FIELDS)
        for e in entries:
            row = dataclasses.asdict(e)
            row["diverged"] = str(e.diverged).lower()
            writer.writerow([row[f] for f in MANIFEST_FIELDS])
    return entries


@dataclass(frozen=True)
class Summary:
    records: int
    edge_ratio: float      # median |lambda_1| / sam_edge
    gd_edge_ratio: float   # median |lambda_1| / (2/eta)
    lambda1: float
    sam_edge: float
    align_iterate: float
    align_uphill: float
    final_loss: float
    diverged: bool


def summarize(log):
    """Medians over the last quartile of records.  ``log`` is a path or a record list.

    The SAM-edge column already equals ``2/eta`` when ``rho = 0``, so
    ``edge_ratio`` is against the GD edge for GD runs.
    """
    records = read_log(log) if isinstance(log, (str, os.PathLike)) else list(log)
    diverged = bool(records) and records[-1].diverged
    usable = [r for r in records if not r.diverged]
    if len(usable) < 10:
        raise ContractViolation(f"need at least 10 records, got {len(usable)}")
    tail = usable[len(usable) - max(1, len(usable) // 4):]
    lam = np.array([r.lambda1 for r in tail])
    sam = np.array([r.sam_edge for r in tail])
    gd = np.array([r.gd_edge for r in tail])
    return Summary(
        records=len(records),
        edge_ratio=float(np.median(lam / sam)),
        gd_edge_ratio=float(np.median(lam / gd)),
        lambda1=float(np.median(lam)),
        sam_edge=float(np.median(sam)),
        align_iterate=float(np.nanmedian([r.align_iterate for r in tail])),
        align_uphill=float(np.nanmedian([r.align_uphill for r in tail])),
        final_loss=records[-1].loss,
        diverged=diverged,
    )
