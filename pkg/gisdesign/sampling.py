"""
Seeded chain generation with a per-grid-index cache.

Every chain is generated from the seed ``Streams.seed(master, stream, grid_index)``, so a chain
depends only on the grid point, the stream (stage 1, stage 2, ...) and its length. Revisiting a
grid point in a design search reuses the stored chain.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Tuple, Dict

from .common.helpers import Streams
from .common.validators import validate_integer
from .family import FamilyGrid, SkeletonSet, SampleBank, ChainSample
from .settings import SamplerConfig, STREAM_STAGE1, STREAM_STAGE2

logger = logging.getLogger(__name__)


class SampleCache:
    """
    Chains keyed by (stream, grid index, length), generated on first request.

    Concurrent reads are safe; inserts are serialized with a lock.

    Parameters
    ----------
    grid : FamilyGrid
        Family with a sampler.

    config : SamplerConfig, default SamplerConfig()
        Stage sizes, burn-in, master seed and worker count.
    """

    def __init__(self, grid: FamilyGrid, config: SamplerConfig = SamplerConfig()):
        validate_integer("stage1_size", config.stage1_size, min_value=0)
        validate_integer("stage2_size", config.stage2_size, min_value=0)
        validate_integer("threads", config.threads, min_value=1)
        self.grid = grid
        self.config = config
        self._chains: Dict[Tuple[int, int, int], ChainSample] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._chains)

    def chain(self, stream: int, index: int, size: int) -> ChainSample:
        key = (int(stream), int(index), int(size))
        chain = self._chains.get(key)
        if chain is not None:
            return chain
        seed = Streams.seed(self.config.seed, stream, index)
        chain = self.grid.sample(index, size, burnin=self.config.burnin, seed=seed)
        with self._lock:
            chain = self._chains.setdefault(key, chain)
        logger.debug(f"generated stream {stream} chain for grid index {index} ({size} rows)")
        return chain

    def prefetch(self, requests: Sequence[Tuple[int, int, int]]) -> None:
        """
        Generate the (stream, index, size) chains that are not cached yet, on `config.threads` workers.
        """
        missing = sorted({tuple(int(v) for v in r) for r in requests if tuple(int(v) for v in r) not in self._chains})
        if not missing:
            return
        if self.config.threads == 1 or len(missing) == 1:
            for request in missing:
                self.chain(*request)
            return
        with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
            list(executor.map(lambda r: self.chain(*r), missing))

    def bank(
        self,
        skeleton: SkeletonSet,
        *,
        stage1_size: Optional[int] = None,
        stage2_size: Optional[int] = None,
    ) -> SampleBank:
        """
        Sample bank for a skeleton set with `stage1_size` and `stage2_size` rows per proposal.

        A size of 0 leaves that stage out. Defaults come from the sampler config.
        """
        stage1_size = self.config.stage1_size if stage1_size is None else stage1_size
        stage2_size = self.config.stage2_size if stage2_size is None else stage2_size
        requests = []
        if stage1_size:
            requests += [(STREAM_STAGE1, i, stage1_size) for i in skeleton.indices]
        if stage2_size:
            requests += [(STREAM_STAGE2, i, stage2_size) for i in skeleton.indices]
        self.prefetch(requests)
        stage1 = stage2 = None
        if stage1_size:
            stage1 = [self.chain(STREAM_STAGE1, i, stage1_size).relabel(pos) for pos, i in enumerate(skeleton.indices)]
        if stage2_size:
            stage2 = [self.chain(STREAM_STAGE2, i, stage2_size).relabel(pos) for pos, i in enumerate(skeleton.indices)]
        return SampleBank(skeleton, self.grid.densities(skeleton.indices), stage1=stage1, stage2=stage2)
