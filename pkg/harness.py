"""
Experiment configuration, seeded trial execution, parallel sweeps and
result output.

Trial seeds depend only on (base_seed, trial_index, value_index), so a sweep
yields the same rows whatever the worker count and completion order.
"""
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import pandas as pd
from tqdm import tqdm

from core_model import ParameterError, RngStream, derive_seed
from barrier import DEFAULT_H_EXACT, resolve_danger_mode
from strategies import STRATEGY_NAMES, make_strategy, radius_for_lambda, run_online
from offline import (BRUTE_FORCE_LIMIT, brute_force_offline, sample_pair_set,
                     solve_offline_barrier, solve_offline_random)
from aux_processes import (VERTEX_STRATEGIES, coupon_bound, run_balls_bins, run_coupon_2ccc,
                           run_vertex_achlioptas, timed)
from utils import export_to_excel, parse_config_text

logger = logging.getLogger(__name__)

MODES = ('online', 'offline', 'ballsbins', 'coupon', 'vertex')
OFFLINE_STRATEGIES = ('barrier', 'random', 'brute')
FORMATS = ('csv', 'json', 'xlsx')
SEED_ENV = 'GEOACH_SEED'

GEOMETRIC_HEADER = ['mode', 'n', 'c', 'r', 'strategy', 'seed', 'largest_size', 'largest_fraction',
                    'barrier_crossed', 'strategy_failed', 'runtime_ms']
HEADERS = {
    'online': GEOMETRIC_HEADER,
    'offline': GEOMETRIC_HEADER,
    'ballsbins': ['mode', 'n_bins', 'rounds', 'policy', 'seed', 'max_load', 'runtime_ms'],
    'coupon': ['mode', 'coupons', 'stop_remaining', 'seed', 'boxes_bought', 'bound', 'runtime_ms'],
    'vertex': ['mode', 'n', 'm', 'strategy', 'seed', 'largest_size', 'largest_fraction', 'runtime_ms'],
}
SUMMARY_METRIC = {
    'online': 'largest_fraction',
    'offline': 'largest_fraction',
    'ballsbins': 'max_load',
    'coupon': 'boxes_bought',
    'vertex': 'largest_fraction',
}


class ConfigError(ValueError):
    """Raised when an experiment configuration is invalid"""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class ExperimentConfig:
    mode: str = 'online'
    n: int = 10000
    c: list = field(default_factory=list)
    r: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    strategy: str = 'random'
    choices: int = 2
    K: float = 1.0
    h: int = 4
    h_exact: int = DEFAULT_H_EXACT
    slack: Optional[int] = None
    list_capacity: Optional[int] = None
    danger_mode: str = 'auto'
    target_eps: float = 0.1
    sample_every: Optional[int] = None
    trials: int = 1
    base_seed: int = 0
    workers: int = 1
    out: Optional[str] = None
    format: str = 'csv'
    n_bins: int = 1024
    rounds: Optional[int] = None
    policy: str = 'greedy'
    coupons: int = 10000
    stop_remaining: int = 100
    m: int = 0
    vertex_strategy: str = 'random'

    def sweep_key(self):
        """Name of the swept parameter: c, r or lam"""
        for key in ('c', 'r', 'lam'):
            if getattr(self, key):
                return key
        return None

    def sweep_values(self):
        if self.mode in ('online', 'offline'):
            key = self.sweep_key()
            return list(getattr(self, key)) if key else []
        return [None]


LIST_FIELDS = {'c', 'r', 'lam'}
OPTIONAL_INT_FIELDS = {'slack', 'list_capacity', 'sample_every', 'rounds'}
INT_FIELDS = {'n', 'choices', 'h', 'h_exact', 'trials', 'base_seed', 'workers', 'n_bins',
              'coupons', 'stop_remaining', 'm'}
FLOAT_FIELDS = {'K', 'target_eps'}
FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
FIELD_ALIASES = {name.lower(): name for name in FIELD_NAMES}


def _coerce(name, value):
    if name in LIST_FIELDS:
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        return [float(v) for v in str(value).split(',') if v.strip()]
    if name in OPTIONAL_INT_FIELDS:
        if value is None or str(value).strip().lower() in ('', 'none', 'auto'):
            return None
        return int(value)
    if name in INT_FIELDS:
        return int(value)
    if name in FLOAT_FIELDS:
        return float(value)
    if value is None:
        return None
    return str(value).strip()


def radius_from_c(mode, c, n, choices=2):
    """Connection radius for density parameter c"""
    if c <= 0:
        raise ParameterError(f"c must be positive, got {c}")
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    if mode == 'online':
        if n < 4:
            raise ParameterError(f"online radius needs n >= 4, got n={n}")
        loglog = math.log2(math.log2(n))
        return (c / (n * loglog ** (choices - 1))) ** (1.0 / (choices + 1))
    if mode == 'offline':
        return (c / n) ** (1.0 / (choices + 1))
    raise ParameterError(f"no radius rule for mode '{mode}'")


def validate_config(config):
    """Validate an experiment configuration before running it"""
    errors = []

    if config.mode not in MODES:
        errors.append(f"Mode must be one of {', '.join(MODES)}")
    if config.trials < 1:
        errors.append("Trials must be at least 1")
    if config.workers < 1:
        errors.append("Workers must be at least 1")
    if config.format not in FORMATS:
        errors.append(f"Format must be one of {', '.join(FORMATS)}")
    if config.format == 'xlsx' and not config.out:
        errors.append("Excel output needs an output path")

    if config.mode in ('online', 'offline'):
        given = [key for key in ('c', 'r', 'lam') if getattr(config, key)]
        if len(given) != 1:
            errors.append("Exactly one of c, r or lam must be given")
        if config.n < 1:
            errors.append("N must be at least 1")
        if config.choices < 1:
            errors.append("Choices must be at least 1")
        if any(v <= 0 for v in config.c):
            errors.append("Every c must be positive")
        if any(v < 0 for v in config.r):
            errors.append("Every r must be non-negative")
        if any(v < 0 for v in config.lam):
            errors.append("Every lam must be non-negative")
        if config.mode == 'online' and config.c and config.n < 4:
            errors.append("Online radius from c needs n >= 4")
        if config.K <= 0:
            errors.append("K must be positive")
        if config.h < 1:
            errors.append("H must be at least 1")
        if config.danger_mode not in ('auto', 'exact', 'surrogate'):
            errors.append("Danger mode must be auto, exact or surrogate")
        if config.slack is not None and not 0 <= config.slack <= config.h:
            errors.append("Slack must lie in [0, h]")
        if config.list_capacity is not None and config.list_capacity < 1:
            errors.append("List capacity must be at least 1")
        if config.sample_every is not None and config.sample_every < 1:
            errors.append("Sample every must be at least 1")

    if config.mode == 'online':
        if config.strategy not in STRATEGY_NAMES:
            errors.append(f"Online strategy must be one of {', '.join(STRATEGY_NAMES)}")
        if not 0 < config.target_eps <= 1:
            errors.append("Target eps must lie in (0, 1]")
    elif config.mode == 'offline':
        if config.strategy not in OFFLINE_STRATEGIES:
            errors.append(f"Offline strategy must be one of {', '.join(OFFLINE_STRATEGIES)}")
        if config.strategy == 'brute' and config.n > BRUTE_FORCE_LIMIT:
            errors.append(f"Brute force is limited to n <= {BRUTE_FORCE_LIMIT}")
        if config.strategy == 'barrier' and config.choices != 2:
            errors.append("The offline barrier strategy needs choices = 2")
    elif config.mode == 'ballsbins':
        if config.n_bins < 1:
            errors.append("N bins must be at least 1")
        if config.rounds is not None and config.rounds < 1:
            errors.append("Rounds must be at least 1")
        if config.policy not in ('greedy', 'one-choice'):
            errors.append("Policy must be greedy or one-choice")
        if config.choices < 1:
            errors.append("Choices must be at least 1")
    elif config.mode == 'coupon':
        if not 1 <= config.stop_remaining < config.coupons:
            errors.append("Stop remaining must satisfy 1 <= s < coupons")
    elif config.mode == 'vertex':
        if config.vertex_strategy not in VERTEX_STRATEGIES:
            errors.append(f"Vertex strategy must be one of {', '.join(VERTEX_STRATEGIES)}")
        if config.n < 1:
            errors.append("N must be at least 1")
        if not 0 <= config.m <= config.n * (config.n - 1) // 2:
            errors.append("M must lie in [0, n(n-1)/2]")

    return errors


def load_config(path=None, overrides=None, environ=None):
    """Build a config from defaults, an optional key = value file and overrides"""
    environ = os.environ if environ is None else environ
    values = {}
    errors = []

    if path:
        try:
            with open(path, 'r') as f:
                values.update(parse_config_text(f.read()))
        except (OSError, ValueError) as e:
            raise ConfigError([f"Cannot read config file {path}: {e}"])

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    if 'base_seed' not in values and environ.get(SEED_ENV):
        values['base_seed'] = environ.get(SEED_ENV)

    kwargs = {}
    for key, value in values.items():
        name = FIELD_ALIASES.get(key.lower())
        if name is None:
            errors.append(f"Unknown setting '{key}'")
            continue
        try:
            kwargs[name] = _coerce(name, value)
        except (TypeError, ValueError):
            errors.append(f"{name.replace('_', ' ').capitalize()} has an invalid value '{value}'")

    if errors:
        raise ConfigError(errors)
    config = ExperimentConfig(**kwargs)
    problems = validate_config(config)
    if problems:
        raise ConfigError(problems)
    return config


def _jsonable(value):
    if hasattr(value, 'item'):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _base_row(config, value, seed):
    row = {key: None for key in HEADERS[config.mode]}
    row['mode'] = config.mode
    row['seed'] = seed
    if config.mode in ('online', 'offline'):
        row['n'] = config.n
        row['strategy'] = config.strategy
        key = config.sweep_key()
        if key == 'c':
            row['c'] = value
            row['r'] = radius_from_c(config.mode, value, config.n, config.choices)
        elif key == 'lam':
            row['r'] = radius_for_lambda(value, config.n)
        else:
            row['r'] = value
    elif config.mode == 'ballsbins':
        row.update(n_bins=config.n_bins, rounds=config.rounds or config.n_bins, policy=config.policy)
    elif config.mode == 'coupon':
        row.update(coupons=config.coupons, stop_remaining=config.stop_remaining,
                   bound=coupon_bound(config.coupons, config.stop_remaining))
    elif config.mode == 'vertex':
        row.update(n=config.n, m=config.m, strategy=config.vertex_strategy)
    return row


def run_trial(config, value_index, trial_index):
    """Run one seeded trial and return its output row"""
    values = config.sweep_values()
    value = values[value_index]
    seed = derive_seed(config.base_seed, trial_index, value_index)
    rng = RngStream(seed)
    row = _base_row(config, value, seed)

    if config.mode == 'online':
        strategy = make_strategy(config.strategy, config.n, row['r'], K=config.K, h=config.h,
                                 slack=config.slack, list_capacity=config.list_capacity,
                                 danger_mode=config.danger_mode, h_exact=config.h_exact,
                                 target_eps=config.target_eps)
        record = run_online(config.n, row['r'], strategy, rng, choices=config.choices,
                            sample_every=config.sample_every, c=row['c'], seed=seed)
        row.update(record.as_row())
        row['series'] = [list(sample) for sample in record.series]
        row['details'] = record.details

    elif config.mode == 'offline':
        started = time.perf_counter()
        pairs = sample_pair_set(config.n, rng, config.choices)
        if config.strategy == 'barrier':
            _, report = solve_offline_barrier(pairs, config.K, row['r'], rng, h=config.h)
            row.update(largest_size=report.largest, largest_fraction=report.largest_fraction,
                       barrier_crossed=report.barrier_crossed,
                       strategy_failed=not (report.orientable and report.max_load_ok))
            row['details'] = report.as_details()
        else:
            if config.strategy == 'brute':
                _, largest = brute_force_offline(pairs, row['r'])
            else:
                _, largest = solve_offline_random(pairs, row['r'], rng)
            row.update(largest_size=largest, largest_fraction=largest / config.n,
                       strategy_failed=False)
        row['runtime_ms'] = (time.perf_counter() - started) * 1000.0

    elif config.mode == 'ballsbins':
        bins, elapsed = timed(run_balls_bins, config.n_bins, row['rounds'], config.policy, rng,
                              choices=config.choices)
        row.update(max_load=bins.max_load, runtime_ms=elapsed)

    elif config.mode == 'coupon':
        coupons, elapsed = timed(run_coupon_2ccc, config.coupons, config.stop_remaining, rng)
        row.update(boxes_bought=coupons.boxes_bought, runtime_ms=elapsed)

    elif config.mode == 'vertex':
        result, elapsed = timed(run_vertex_achlioptas, config.n, config.m,
                                config.vertex_strategy, rng)
        row.update(largest_size=result.largest, largest_fraction=result.largest_fraction,
                   runtime_ms=elapsed)

    row['value_index'] = value_index
    return row


def _run_task(task):
    config, value_index, trial_index = task
    try:
        return run_trial(config, value_index, trial_index)
    except Exception as e:
        value = config.sweep_values()[value_index]
        seed = derive_seed(config.base_seed, trial_index, value_index)
        try:
            row = _base_row(config, value, seed)
        except ParameterError:
            row = {key: None for key in HEADERS[config.mode]}
            row.update(mode=config.mode, seed=seed)
        row['value_index'] = value_index
        row['error'] = f"{type(e).__name__}: {e}"
        return row


@dataclass
class SweepResult:
    mode: str
    rows: list
    summary: pd.DataFrame
    meta: dict

    @property
    def failed(self):
        return sum(1 for row in self.rows if row.get('error'))

    def runs_frame(self):
        return pd.DataFrame(self.rows, columns=HEADERS[self.mode])


def summarize(rows, config):
    """Median and quartiles of the headline metric per swept value"""
    metric = SUMMARY_METRIC[config.mode]
    values = config.sweep_values()
    key = config.sweep_key() if config.mode in ('online', 'offline') else 'mode'
    records = []
    for index, value in enumerate(values):
        group = [row for row in rows if row['value_index'] == index]
        measured = pd.Series([row[metric] for row in group if not row.get('error')], dtype=float)
        records.append({
            key: value if key != 'mode' else config.mode,
            'trials': len(group),
            'failed': sum(1 for row in group if row.get('error')),
            'median': measured.median() if len(measured) else None,
            'q1': measured.quantile(0.25) if len(measured) else None,
            'q3': measured.quantile(0.75) if len(measured) else None,
        })
    return pd.DataFrame(records, columns=[key, 'trials', 'failed', 'median', 'q1', 'q3'])


def sweep(config, progress=False):
    """Run every (value, trial) combination and merge results in a fixed order"""
    tasks = [(config, vi, ti) for vi in range(len(config.sweep_values())) for ti in range(config.trials)]
    logger.info("Running %d %s trial(s) on %d worker(s)", len(tasks), config.mode, config.workers)

    with tqdm(total=len(tasks), disable=not progress, desc=config.mode) as bar:
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as executor:
                rows = []
                for row in executor.map(_run_task, tasks):
                    rows.append(row)
                    bar.update(1)
        else:
            rows = []
            for task in tasks:
                rows.append(_run_task(task))
                bar.update(1)

    for row in rows:
        if row.get('error'):
            logger.error("Trial with seed %s failed: %s", row['seed'], row['error'])

    meta = {'mode': config.mode, 'config': asdict(config)}
    if config.mode == 'online' and config.strategy == 'barrier':
        meta['danger_mode'] = resolve_danger_mode(config.h, config.h_exact, config.danger_mode)
    result = SweepResult(mode=config.mode, rows=rows, summary=summarize(rows, config), meta=meta)
    logger.info("Sweep finished: %d row(s), %d failed", len(rows), result.failed)
    return result


def render_results(result, fmt='csv'):
    """Serialize a sweep as CSV or JSON text, or Excel bytes"""
    runs = result.runs_frame()
    if fmt == 'csv':
        text = runs.to_csv(index=False, lineterminator='\n')
        return text + '\n' + result.summary.to_csv(index=False, lineterminator='\n')
    if fmt == 'json':
        rows = []
        for row in result.rows:
            entry = {key: row.get(key) for key in HEADERS[result.mode]}
            for extra in ('series', 'details', 'error'):
                if row.get(extra) is not None:
                    entry[extra] = row[extra]
            rows.append(entry)
        summary = result.summary.astype(object).where(result.summary.notna(), None)
        payload = {'rows': rows, 'summary': summary.to_dict('records'), 'meta': result.meta}
        return json.dumps(payload, indent=2, default=_jsonable) + '\n'
    if fmt == 'xlsx':
        return export_to_excel({'Runs': runs, 'Summary': result.summary})
    raise ConfigError([f"Unsupported format '{fmt}'"])


def write_results(result, path, fmt='csv'):
    content = render_results(result, fmt)
    if isinstance(content, bytes):
        with open(path, 'wb') as f:
            f.write(content)
    else:
        with open(path, 'w', newline='') as f:
            f.write(content)
    logger.info("Wrote %s results to %s", fmt, path)
    return path
