import json
from pathlib import Path

import pandas as pd


__all__ = ('load_config', 'collect_runs', 'unique_cols')

IGNORED_COLUMNS = frozenset(["the_dir", "wall_time_s", "config_hash", "config.seed",
                             "config.log_dir"])


def load_config(run_dir) -> dict:
    "The sacred config.json of `run_dir` flattened to dotted keys, or {}"
    path = Path(run_dir)/"config.json"
    if not path.exists():
        return {}
    with open(path) as f:
        config = json.load(f)
    return pd.json_normalize(config, sep=".").iloc[0].to_dict()


def collect_runs(base_dir, results_name="results.csv") -> pd.DataFrame:
    """Every result row of every run directory below `base_dir`, with the
    run's configuration in `config.*` columns and the directory in `the_dir`"""
    frames = []
    for run_dir in sorted(Path(base_dir).iterdir()):
        if run_dir.name == "_sources" or not (run_dir/results_name).exists():
            continue
        results = pd.read_csv(run_dir/results_name, dtype={"config_hash": str})
        config = load_config(run_dir)
        results = results.assign(**{f"config.{k}": [v] * len(results) for k, v in config.items()})
        results["the_dir"] = run_dir
        frames.append(results)
    if not frames:
        return pd.DataFrame()
    return pd.concat(frames, ignore_index=True)


def unique_cols(df: pd.DataFrame, ignore=IGNORED_COLUMNS):
    "columns whose values differ between rows"
    varying = []
    for col in df.columns:
        if col in ignore:
            continue
        try:
            if df[col].nunique(dropna=False) > 1:
                varying.append(col)
        except TypeError:
            # unhashable values, e.g. lists of sweep values
            pass
    return varying
