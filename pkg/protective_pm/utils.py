import numpy as np
import torch as t
from tqdm import tqdm


__all__ = ('raised_cosine', 'smooth_bump_unnormalized', 'map_in_workers')

# exp(-SHARPNESS/(tau(1-tau))); 2 keeps the midpoint rule at 1e-10 from 64 steps on
SMOOTH_BUMP_SHARPNESS = 2.


def raised_cosine(t, t_total: float):
    "g(t) = (1 - cos(2 pi t/T))/T on [0, T], zero outside"
    t = np.asarray(t, dtype=np.float64)
    inside = (t > 0) & (t < t_total)
    g = (1. - np.cos(2*np.pi*t/t_total)) / t_total
    return np.where(inside, g, 0.)


def smooth_bump_unnormalized(t, t_total: float, sharpness: float = SMOOTH_BUMP_SHARPNESS):
    "exp(-a/(tau(1-tau))) with tau = t/T; C-infinity and flat at both ends"
    t = np.asarray(t, dtype=np.float64)
    tau = t / t_total
    inside = (tau > 0) & (tau < 1)
    safe = np.where(inside, tau, 0.5)
    return np.where(inside, np.exp(-sharpness / (safe * (1. - safe))), 0.)


class _Jobs(t.utils.data.Dataset):
    def __init__(self, fn, jobs):
        self.fn = fn
        self.jobs = jobs

    def __len__(self):
        return len(self.jobs)

    def __getitem__(self, i):
        return self.fn(self.jobs[i])


def _as_is(outcome):
    return outcome


def map_in_workers(fn, jobs, n_workers: int = 1, progressbar: bool = False,
                   desc: str = None) -> list:
    """[fn(job) for job in jobs], in order. With `n_workers` > 1 the jobs run
    in the worker processes of a DataLoader; `fn` and the jobs must pickle."""
    jobs = list(jobs)
    if n_workers > 1:
        outcomes = t.utils.data.DataLoader(_Jobs(fn, jobs), batch_size=None,
                                           num_workers=n_workers, collate_fn=_as_is)
    else:
        outcomes = map(fn, jobs)
    if progressbar:
        outcomes = tqdm(outcomes, total=len(jobs), desc=desc)
    return list(outcomes)
