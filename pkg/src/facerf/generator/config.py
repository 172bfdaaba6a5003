"""Generator architecture configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from ..config import DEFAULT, RenderConfig


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class GeneratorConfig:
    height: int = 64
    width: int = 64
    k_samples: int = 16          # K radiance samples per ray
    id_dim: int = 64
    w_dim: int = 64              # mapping-network output width
    mapping_depth: int = 2
    base_channels: int = 96      # channels at the 4x4 seed, halved per block
    min_channels: int = 24
    cond_channels: int = 24      # condition-map channels fed to SPADE
    cond_hidden: int = 32
    spade_hidden: int = 16
    pe_freqs: int = 4            # positional-encoding bands for camera/light

    def __post_init__(self):
        if self.height != self.width:
            raise ValueError("square outputs only (one 4x4 seed, equal block counts)")
        if not _is_pow2(self.height) or self.height < 8:
            raise ValueError("resolution must be a power of two >= 8")
        if self.k_samples < 2:
            raise ValueError("k_samples must be >= 2")

    @property
    def n_blocks(self) -> int:
        n = 0
        res = 4
        while res < self.height:
            res *= 2
            n += 1
        return n

    @property
    def out_channels(self) -> int:
        return 4 * self.k_samples + 2

    @property
    def latent_cat_dim(self) -> int:
        # z_exp + encoded z_cam + encoded light direction + 6 z_ill intensities
        return 20 + 2 * self.pe_freqs * 3 * 2 + 6

    @property
    def cond_in_channels(self) -> int:
        # latent concat broadcast over the grid, plus the (x, y) coordinate
        # channels that let the condition convs produce spatial patterns
        return self.latent_cat_dim + 2

    def channels_at(self, level: int) -> int:
        return max(self.base_channels >> level, self.min_channels)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(**d)
