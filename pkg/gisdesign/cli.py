"""
Command line runner.

    gisdesign select   --config exp.cfg --out skeleton.csv
    gisdesign estimate --config exp.cfg --skeleton skeleton.csv --out profile.csv
    gisdesign compare  nis.csv mnx.csv

The configuration schema is described in docs/config.rst.
"""
import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Dict, Tuple, Optional, List, Sequence

import numpy as np
import pandas as pd

from .design.search import SelectionResult
from .design.selection import METHODS, SFS_DISTANCES, select, optimal_split
from .design.criteria import OBJECTIVES
from .estimator import TwoStageEstimator
from .exceptions import GisDesignError, ConfigError, InputError
from .family import FamilyGrid, SkeletonSet
from .mcse import LagWindow, WINDOWS
from .models import AutologisticFamily, GaussianFamily, SCANS
from .sampling import SampleCache
from .settings import SamplerConfig, Split, threads_env_var, default_burnin, default_t0, default_b, default_i_max
from .settings import default_skld_size, default_scan

logger = logging.getLogger(__name__)

FAMILIES = ("gaussian", "autologistic")
FLOAT_FORMAT = "%.17g"

KNOWN_KEYS = (
    "model.family",
    "model.rows",
    "model.cols",
    "model.scan",
    "grid.mean",
    "grid.sd",
    "grid.gamma",
    "grid.kappa",
    "design.method",
    "design.k",
    "design.reference",
    "design.fixed",
    "design.distance",
    "design.t0",
    "design.b",
    "design.i_max",
    "design.objective",
    "design.scaled_entropy",
    "budget.stage1",
    "budget.stage2",
    "budget.burnin",
    "budget.total",
    "budget.skld",
    "estimate.function",
    "window.kind",
    "window.truncation",
    "seed",
)

_TRUE = ("true", "yes", "1", "on")
_FALSE = ("false", "no", "0", "off")


class ExperimentConfig:
    """
    Flat ``key = value`` experiment configuration with dotted keys.

    Text after ``#`` is a comment. Every key may appear once. Values are kept as text and
    converted by the typed getters, which report the line of the offending key.
    """

    def __init__(self, entries: Dict[str, Tuple[str, int]], source: str = "<config>"):
        self.entries = entries
        self.source = source

    def __repr__(self):
        return repr(pd.Series({key: value for key, (value, _) in self.entries.items()}, dtype=object))

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        entries = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("expected 'key = value'", line=number)
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.lower()
            if key not in KNOWN_KEYS:
                raise ConfigError("unknown key", key=key, line=number)
            if key in entries:
                raise ConfigError(f"duplicate key, first set on line {entries[key][1]}", key=key, line=number)
            if not value:
                raise ConfigError("empty value", key=key, line=number)
            entries[key] = (value, number)
        return cls(entries, source)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise ConfigError(f"cannot read {path}: {error.strerror}")
        return cls.from_text(text, source=str(path))

    def line(self, key: str) -> Optional[int]:
        return self.entries[key][1] if key in self.entries else None

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, key=key, line=self.line(key))

    def get_str(self, key: str, default: Optional[str] = None, choices: Optional[Sequence[str]] = None) -> str:
        if key not in self.entries:
            if default is None:
                raise ConfigError("required key is missing", key=key)
            return default
        value = self.entries[key][0].lower() if choices is not None else self.entries[key][0]
        if choices is not None and value not in choices:
            raise self.error(key, f"'{value}' is not one of {', '.join(choices)}")
        return value

    def _convert(self, key: str, default, kind):
        if key not in self.entries:
            if default is None:
                raise ConfigError("required key is missing", key=key)
            return default
        text = self.entries[key][0]
        try:
            return kind(text)
        except ValueError:
            raise self.error(key, f"'{text}' is not a valid {kind.__name__}")

    def get_int(self, key: str, default: Optional[int] = None, min_value: Optional[int] = None) -> int:
        value = self._convert(key, default, int)
        if min_value is not None and value < min_value:
            raise self.error(key, f"must be at least {min_value}")
        return value

    def get_float(self, key: str, default: Optional[float] = None) -> float:
        value = self._convert(key, default, float)
        if not math.isfinite(value):
            raise self.error(key, "must be finite")
        return value

    def get_bool(self, key: str, default: bool) -> bool:
        if key not in self.entries:
            return default
        text = self.entries[key][0].lower()
        if text in _TRUE:
            return True
        if text in _FALSE:
            return False
        raise self.error(key, f"'{text}' is not a boolean")

    def get_axis(self, key: str, default: Optional[Sequence[float]] = None) -> np.ndarray:
        """
        Grid axis: a comma list, or ``start:stop:step`` with the stop included.
        """
        if key not in self.entries:
            if default is None:
                raise ConfigError("required key is missing", key=key)
            return np.asarray(default, dtype=float)
        text = self.entries[key][0]
        try:
            numbers = [float(v) for v in text.split(":" if ":" in text else ",")]
        except ValueError:
            raise self.error(key, f"'{text}' is not a list or a start:stop:step range")
        if ":" in text:
            if len(numbers) != 3:
                raise self.error(key, "a range is start:stop:step")
            start, stop, step = numbers
            if step <= 0 or stop < start:
                raise self.error(key, "range needs start <= stop and a positive step")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = np.round(start + step * np.arange(count), 12)
        else:
            values = np.array(numbers)
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise self.error(key, "axis values must be finite")
        if np.unique(values).size != values.size:
            raise self.error(key, "axis values must be distinct")
        return values

    def get_points(self, key: str) -> List[np.ndarray]:
        """Parameter vectors separated by ';', coordinates by ','."""
        if key not in self.entries:
            return []
        text = self.entries[key][0]
        try:
            return [np.array([float(v) for v in part.split(",")]) for part in text.split(";") if part.strip()]
        except ValueError:
            raise self.error(key, f"'{text}' is not a list of parameter vectors")


def build_grid(config: ExperimentConfig) -> FamilyGrid:
    family = config.get_str("model.family", choices=FAMILIES)
    try:
        if family == "gaussian":
            return GaussianFamily.from_axes(config.get_axis("grid.mean"), config.get_axis("grid.sd", [1.0]))
        rows = config.get_int("model.rows", min_value=2)
        cols = config.get_int("model.cols", rows, min_value=2)
        scan = config.get_str("model.scan", default_scan, choices=SCANS)
        return AutologisticFamily.from_axes(config.get_axis("grid.gamma"), config.get_axis("grid.kappa", [0.5]), rows, cols, scan)
    except (TypeError, ValueError) as error:
        if isinstance(error, ConfigError):
            raise
        raise ConfigError(f"malformed grid: {error}", key="grid")


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get(threads_env_var)
        if env is None:
            return 1
        try:
            threads = int(env)
        except ValueError:
            raise ConfigError(f"{threads_env_var}='{env}' is not an integer")
    if threads < 1:
        raise ConfigError(f"thread count must be positive, got {threads}")
    return threads


def sampler_config(config: ExperimentConfig, seed: Optional[int] = None, threads: Optional[int] = None) -> SamplerConfig:
    return SamplerConfig(
        stage1_size=config.get_int("budget.stage1", 2000, min_value=2),
        stage2_size=config.get_int("budget.stage2", 2000, min_value=2),
        burnin=config.get_int("budget.burnin", default_burnin, min_value=0),
        seed=config.get_int("seed", 0, min_value=0) if seed is None else seed,
        threads=resolve_threads(threads),
        scan=config.get_str("model.scan", default_scan, choices=SCANS),
    )


def build_window(config: ExperimentConfig) -> LagWindow:
    kind = config.get_str("window.kind", WINDOWS[0], choices=WINDOWS)
    truncation = config.get_int("window.truncation", 0, min_value=0) or None
    return LagWindow(kind, truncation)


def resolve_function(name: str, dim: int, key: str = "estimate.function"):
    """
    'one' is f = 1, 'identity' the average of the state coordinates (x itself in one dimension),
    an integer j the state coordinate j.
    """
    if name == "one":
        return lambda x: np.ones(x.shape[0])
    if name == "identity":
        return lambda x: x.mean(axis=1)
    try:
        j = int(name)
    except ValueError:
        raise ConfigError(f"'{name}' is not identity, one or a coordinate index", key=key)
    if not 0 <= j < dim:
        raise ConfigError(f"coordinate index {j} is outside 0..{dim - 1}", key=key)
    return lambda x: x[:, j]


def _function(config: ExperimentConfig, grid: FamilyGrid):
    if "estimate.function" not in config:
        return None
    return resolve_function(config.get_str("estimate.function").lower(), grid.state_dim)


def _grid_index(config: ExperimentConfig, grid: FamilyGrid, key: str, point) -> int:
    try:
        return grid.index_of(point)
    except InputError as error:
        raise config.error(key, str(error))


def _selection_options(method: str, config: ExperimentConfig, grid: FamilyGrid, sampler: SamplerConfig) -> dict:
    fixed = [_grid_index(config, grid, "design.fixed", p) for p in config.get_points("design.fixed")]
    if method == "sfe":
        return dict(fixed=fixed)
    if method == "sfs":
        return dict(
            fixed=fixed,
            config=sampler,
            distance=config.get_str("design.distance", "mc", choices=SFS_DISTANCES),
            skld_size=config.get_int("budget.skld", default_skld_size, min_value=2),
        )
    window = build_window(config)
    if method == "seq":
        objective = config.get_str("design.objective", "u", choices=OBJECTIVES)
        return dict(config=sampler, window=window, objective=objective, f=_function(config, grid))
    annealing = dict(
        config=sampler,
        window=window,
        t0=config.get_float("design.t0", default_t0),
        b=config.get_int("design.b", default_b, min_value=1),
        i_max=config.get_int("design.i_max", default_i_max, min_value=1),
        seed=sampler.seed,
        fixed=fixed,
    )
    if method == "mnx":
        budget = config.get_int("budget.total", 0, min_value=0) or None
        objective = config.get_str("design.objective", "u", choices=OBJECTIVES)
        return dict(annealing, budget=budget, objective=objective, f=_function(config, grid))
    return dict(annealing, scaled=config.get_bool("design.scaled_entropy", True))


def trace_path(out) -> Path:
    out = Path(out)
    return out.with_name(f"{out.stem}_trace.csv")


def write_skeleton(result: SelectionResult, grid: FamilyGrid, path, seed: int) -> None:
    """
    Skeleton table (grid index, coordinates, reference flag) with '# key = value' metadata lines,
    and the selection trace next to it.
    """
    path = Path(path)
    meta = {
        "method": result.method,
        "k": result.skeleton.k,
        "criterion": FLOAT_FORMAT % result.criterion_value,
        "seed": seed,
        "grid_size": len(grid),
    }
    if result.split is not None:
        meta["split_stage1"], meta["split_stage2"] = result.split
    indices = list(result.skeleton.indices)
    table = pd.DataFrame(np.asarray(grid.points)[indices], columns=_xi_columns(grid))
    table.insert(0, "grid_index", indices)
    table["reference"] = [int(i == result.skeleton.reference) for i in indices]
    with path.open("w", encoding="utf-8", newline="") as f:
        for key, value in meta.items():
            f.write(f"# {key} = {value}\n")
        table.to_csv(f, index=False, float_format=FLOAT_FORMAT)
    result.trace_frame.to_csv(trace_path(path), index=False, float_format=FLOAT_FORMAT)


def read_skeleton(path, grid: FamilyGrid) -> Tuple[SkeletonSet, dict]:
    """
    Skeleton set and metadata from a file written by `write_skeleton`.

    Raises
    ------
    InputError
        If the indices or coordinates do not match the grid.
    """
    path = Path(path)
    meta = {}
    try:
        with path.open(encoding="utf-8") as f:
            for line in f:
                if not line.startswith("#"):
                    break
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
        table = pd.read_csv(path, comment="#")
    except OSError as error:
        raise InputError(f"cannot read skeleton file {path}: {error.strerror}")
    columns = _xi_columns(grid)
    missing = [c for c in ["grid_index", "reference"] + columns if c not in table.columns]
    if missing:
        raise InputError(f"skeleton file {path} lacks columns {missing}")
    indices = [int(i) for i in table["grid_index"]]
    if any(not 0 <= i < len(grid) for i in indices):
        raise InputError(f"skeleton file {path} has grid indices outside 0..{len(grid) - 1}")
    if not np.allclose(table[columns].to_numpy(dtype=float), np.asarray(grid.points)[indices], atol=1e-9):
        raise InputError(f"skeleton file {path} does not match the configured grid")
    references = table.loc[table["reference"] == 1, "grid_index"].tolist()
    if len(references) != 1:
        raise InputError(f"skeleton file {path} must flag exactly one reference")
    return SkeletonSet(indices, reference=int(references[0])), meta


def _xi_columns(grid: FamilyGrid) -> List[str]:
    return [f"xi_{i + 1}" for i in range(len(grid.coordinate_names))]


def cmd_select(config_path, out, seed: Optional[int] = None, threads: Optional[int] = None) -> SelectionResult:
    """Run the configured selection and write the skeleton and trace files."""
    start = time.time()
    config = ExperimentConfig.from_file(config_path)
    grid = build_grid(config)
    sampler = sampler_config(config, seed, threads)
    method = config.get_str("design.method", choices=METHODS)
    reference_points = config.get_points("design.reference")
    if len(reference_points) != 1:
        raise config.error("design.reference", "exactly one reference parameter vector is required")
    reference = _grid_index(config, grid, "design.reference", reference_points[0])
    k = 1 if method == "nis" else config.get_int("design.k", min_value=1)
    if k > len(grid):
        raise config.error("design.k", f"k = {k} exceeds the grid size {len(grid)}")
    options = {} if method == "nis" else _selection_options(method, config, grid, sampler)
    result = select(method, grid, k, reference, **options)
    write_skeleton(result, grid, out, sampler.seed)
    logger.info(f"{method} selection {result.skeleton.sorted_indices()} written to {out} in {time.time() - start:.2f} sec")
    return result


def _stage_sizes(config: ExperimentConfig, cache: SampleCache, skeleton: SkeletonSet, meta: dict, window: LagWindow) -> Split:
    """Per-proposal stage sizes for the final run."""
    k = skeleton.k
    sampler = cache.config
    total = config.get_int("budget.total", 0, min_value=0) or k * (sampler.stage1_size + sampler.stage2_size)
    if k == 1:
        return Split(0, total)
    if total < 2 * k:
        raise config.error("budget.total", f"a total budget of at least {2 * k} is needed")
    if meta.get("split_stage1") and int(meta["split_stage1"]) + int(meta.get("split_stage2", 0)) == total:
        split = Split(int(meta["split_stage1"]), int(meta["split_stage2"]))
    else:
        pilot = TwoStageEstimator(cache.grid, cache.bank(skeleton), window).upsilon()
        pilot = pilot[pilot["u"] > 0]
        split = optimal_split(total, pilot["stage1"], pilot["stage2"], pilot["u"], k=k)
    logger.info(f"stage split N = {split.stage1}, n = {split.stage2} of M = {total}")
    sizes = Split(max(split.stage1 // k, 2), max(split.stage2 // k, 2))
    used = k * (sizes.stage1 + sizes.stage2)
    if used != total:
        # chains in a bank share one length per stage
        logger.warning(f"equal chain lengths use {used} of the {total} draws in budget.total")
    return sizes


def cmd_estimate(config_path, skeleton_path, out, seed: Optional[int] = None, threads: Optional[int] = None) -> pd.DataFrame:
    """Two-stage estimation over the grid with a selected skeleton; writes the profile table."""
    start = time.time()
    config = ExperimentConfig.from_file(config_path)
    grid = build_grid(config)
    sampler = sampler_config(config, seed, threads)
    window = build_window(config)
    skeleton, meta = read_skeleton(skeleton_path, grid)
    cache = SampleCache(grid, sampler)
    sizes = _stage_sizes(config, cache, skeleton, meta, window)
    bank = cache.bank(skeleton, stage1_size=sizes.stage1, stage2_size=sizes.stage2)
    est = TwoStageEstimator(grid, bank, window, threads=sampler.threads)
    table = est.profile(_function(config, grid))
    table = table.rename(columns=dict(zip(grid.coordinate_names, _xi_columns(grid))))
    table.to_csv(out, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"profile of {len(grid)} targets written to {out} in {time.time() - start:.2f} sec")
    return table


def cmd_compare(paths: Sequence, out=None) -> pd.DataFrame:
    """
    Per profile: max relative SE over the grid, its argmax, mean relative SE and the ratio of
    the max to the max of the first profile.
    """
    if not paths:
        raise InputError("at least one profile is needed")
    rows = []
    for path in paths:
        try:
            table = pd.read_csv(path)
        except OSError as error:
            raise InputError(f"cannot read profile {path}: {error.strerror}")
        xi = [c for c in table.columns if c.startswith("xi_")]
        if "rel_se" not in table.columns or not xi:
            raise InputError(f"{path} is not a profile table")
        rel = table["rel_se"]
        if rel.isna().all():
            raise InputError(f"{path} has no finite relative SE")
        worst = rel.idxmax()
        rows.append(
            {
                "profile": str(path),
                "max_rel_se": rel.max(),
                "argmax": "(" + ", ".join(format(v, ".6g") for v in table.loc[worst, xi]) + ")",
                "mean_rel_se": rel.mean(),
            }
        )
    summary = pd.DataFrame(rows)
    summary["ratio"] = summary["max_rel_se"] / summary["max_rel_se"].iloc[0]
    if out is not None:
        summary.to_csv(out, index=False, float_format=FLOAT_FORMAT)
    return summary


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gisdesign",
        description="generalized importance sampling over a family of densities with designed proposals",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub):
        sub.add_argument("--config", required=True, help="experiment configuration file")
        sub.add_argument("--seed", type=int, default=None, help="master seed, overrides the config")
        sub.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${threads_env_var} or 1)")

    p_select = commands.add_parser("select", help="select a skeleton set")
    common(p_select)
    p_select.add_argument("--out", default="skeleton.csv", help="skeleton file; the trace goes to <stem>_trace.csv")

    p_estimate = commands.add_parser("estimate", help="estimate over the grid with a skeleton set")
    common(p_estimate)
    p_estimate.add_argument("--skeleton", required=True, help="skeleton file written by select")
    p_estimate.add_argument("--out", default="profile.csv", help="profile table")

    p_compare = commands.add_parser("compare", help="compare profile tables")
    p_compare.add_argument("profiles", nargs="+", help="profile tables written by estimate")
    p_compare.add_argument("--out", default=None, help="also write the summary to this file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    try:
        if args.command == "select":
            result = cmd_select(args.config, args.out, args.seed, args.threads)
            print(f"{result.method}: skeleton {list(result.skeleton.sorted_indices())}, criterion {result.criterion_value:.6g}")
        elif args.command == "estimate":
            table = cmd_estimate(args.config, args.skeleton, args.out, args.seed, args.threads)
            print(f"{len(table)} targets, max rel_se {table['rel_se'].max():.6g}")
        else:
            summary = cmd_compare(args.profiles, args.out)
            print(summary.to_string(index=False))
    except GisDesignError as error:
        print(f"gisdesign: error: {error}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
