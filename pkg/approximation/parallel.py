import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .conf import koopman_setting

logger = logging.getLogger(__name__)

MIN_CHUNK = 256


def chunked_map(func, points, threads=None):
    """
    Evaluate a vectorized function over the rows of `points`, splitting the rows
    across at most KB_THREADS worker threads. Row order of the result matches the input.
    """
    points = np.asarray(points, dtype=float)
    threads = threads or koopman_setting('THREADS')
    if threads <= 1 or len(points) < 2 * MIN_CHUNK:
        return np.asarray(func(points))

    n_chunks = min(threads, len(points) // MIN_CHUNK)
    chunks = np.array_split(points, n_chunks)
    logger.debug("Evaluating %d points in %d chunks", len(points), n_chunks)
    with ThreadPoolExecutor(max_workers=n_chunks) as executor:
        results = list(executor.map(lambda chunk: np.asarray(func(chunk)), chunks))
    return np.concatenate(results, axis=0)
