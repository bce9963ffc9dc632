"""Fusion mechanisms: concatenation, autoencoder bottleneck, adversarial.

All three map a pair of equal-dimension latents (z_v, z_t) to one fused
vector of the configured output dimension, so the classifier interface
does not care which mechanism a model was built with.

The adversarial mechanism keeps one generator/discriminator pair per
modality: the text-side generator maps z_t (plus normal noise) toward
the visual latent distribution, where z_v carries the true label, and
the visual-side module mirrors that with the roles swapped. A
feed-forward combiner turns the two generator outputs into the fused
vector. Discriminator scores are clamped away from {0, 1} before any
log so the adversarial objective stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from . import numcore as nc
from .exceptions import ConfigError, ShapeError
from .layers import DenseLayer
from .numcore import Tensor

D_CLAMP = 1e-7  # discriminator outputs live in [D_CLAMP, 1 - D_CLAMP]


@dataclass
class FusionResult:
    """Fused vector plus the mechanism's auxiliary outputs."""

    z_fuse: Tensor
    z: Optional[Tensor] = None        # concatenated input latents (auto)
    z_hat: Optional[Tensor] = None    # reconstruction (auto)
    z_g: Dict[str, Tensor] = field(default_factory=dict)       # generator outputs per modality
    d_scores: Dict[str, Tensor] = field(default_factory=dict)  # D(real), D(z_g) per modality


def _check_pair(z_v: Tensor, z_t: Tensor, dim: int) -> None:
    if z_v.shape != z_t.shape:
        raise ShapeError(f"fuse: latent shapes {z_v.shape} and {z_t.shape} differ")
    if z_v.shape[-1] != dim:
        raise ShapeError(f"fuse: latent dim {z_v.shape[-1]} does not match configured {dim}")


def _as_batch(z: Tensor) -> Tuple[Tensor, bool]:
    if z.ndim == 1:
        return z.reshape(1, z.shape[0]), True
    return z, False


class ConcatFusion:
    """Concatenation baseline, optionally followed by a projection layer.

    Without the projection the fused vector is the raw 2d concatenation;
    with it, a dense layer (relu by default, so the fused code is not a
    purely linear readout) maps 2d down to out_dim.
    """

    kind = "concat"

    def __init__(self, latent_dim: int, out_dim: Optional[int] = None,
                 activation: str = "relu", rng: Optional[np.random.Generator] = None):
        self.latent_dim = latent_dim
        self.projection = None
        if out_dim is None:
            self.out_dim = 2 * latent_dim
        else:
            self.out_dim = out_dim
            self.projection = DenseLayer(2 * latent_dim, out_dim, activation,
                                         rng, name="fusion.proj")

    def parameters(self) -> List[Tensor]:
        return self.projection.parameters() if self.projection else []

    def discriminator_parameters(self) -> List[Tensor]:
        return []

    def fuse_batch(self, z_v: Tensor, z_t: Tensor,
                   rng: Optional[np.random.Generator] = None) -> FusionResult:
        _check_pair(z_v, z_t, self.latent_dim)
        z = nc.concat([z_v, z_t], axis=-1 if z_v.ndim == 1 else 1)
        z_fuse = self.projection(z) if self.projection else z
        return FusionResult(z_fuse=z_fuse, z=z)


class AutoFusion:
    """Autoencoder over [z_v; z_t]; the bottleneck code is the fused vector.

    The bottleneck must compress (out_dim < 2d). Training adds the
    reconstruction penalty auto_fusion_loss so the code retains as much
    of both latents as it can.
    """

    kind = "auto"

    def __init__(self, latent_dim: int, out_dim: int,
                 rng: Optional[np.random.Generator] = None):
        if not out_dim < 2 * latent_dim:
            raise ConfigError(f"auto-fusion bottleneck {out_dim} must be smaller than "
                              f"the concatenated latents (2x{latent_dim})")
        self.latent_dim = latent_dim
        self.out_dim = out_dim
        self.encoder = DenseLayer(2 * latent_dim, out_dim, "tanh", rng, name="fusion.enc")
        self.decoder = DenseLayer(out_dim, 2 * latent_dim, "identity", rng, name="fusion.dec")

    def parameters(self) -> List[Tensor]:
        return self.encoder.parameters() + self.decoder.parameters()

    def discriminator_parameters(self) -> List[Tensor]:
        return []

    def fuse_batch(self, z_v: Tensor, z_t: Tensor,
                   rng: Optional[np.random.Generator] = None) -> FusionResult:
        _check_pair(z_v, z_t, self.latent_dim)
        z = nc.concat([z_v, z_t], axis=-1 if z_v.ndim == 1 else 1)
        z_fuse = self.encoder(z)
        z_hat = self.decoder(z_fuse)
        return FusionResult(z_fuse=z_fuse, z=z, z_hat=z_hat)


class GanFusionModule:
    """One adversarial module: a generator G(source + noise) and a
    discriminator D scoring vectors of the target modality's dimension."""

    def __init__(self, latent_dim: int, noise_dim: int, name: str,
                 rng: Optional[np.random.Generator] = None,
                 hidden_dim: Optional[int] = None):
        if noise_dim < 1:
            raise ConfigError("noise_dim must be positive")
        self.latent_dim = latent_dim
        self.noise_dim = noise_dim
        self.name = name
        hidden = hidden_dim if hidden_dim is not None else 2 * latent_dim
        self.gen_hidden = DenseLayer(latent_dim + noise_dim, hidden, "relu", rng,
                                     name=f"{name}.gen_hidden")
        self.gen_out = DenseLayer(hidden, latent_dim, "identity", rng, name=f"{name}.gen_out")
        self.disc_hidden = DenseLayer(latent_dim, hidden, "relu", rng,
                                      name=f"{name}.disc_hidden")
        self.disc_out = DenseLayer(hidden, 1, "sigmoid", rng, name=f"{name}.disc_out")

    def generator_parameters(self) -> List[Tensor]:
        return self.gen_hidden.parameters() + self.gen_out.parameters()

    def discriminator_parameters(self) -> List[Tensor]:
        return self.disc_hidden.parameters() + self.disc_out.parameters()

    def sample_noise(self, batch: int, rng: Optional[np.random.Generator]) -> np.ndarray:
        """Standard normal noise; zeros when no generator is supplied
        (deterministic inference)."""
        if rng is None:
            return np.zeros((batch, self.noise_dim))
        return rng.standard_normal((batch, self.noise_dim))

    def generate(self, source: Tensor, noise: np.ndarray) -> Tensor:
        if noise.shape != (source.shape[0], self.noise_dim):
            raise ShapeError(f"generate: noise {noise.shape} does not match "
                             f"({source.shape[0]}, {self.noise_dim})")
        g_in = nc.concat([source, Tensor(noise)], axis=1)
        return self.gen_out(self.gen_hidden(g_in))

    def discriminate(self, z_d: Tensor) -> Tensor:
        """Probability that z_d came from the real target distribution,
        clamped into [D_CLAMP, 1 - D_CLAMP]."""
        score = self.disc_out(self.disc_hidden(z_d))
        return nc.clamp(score, D_CLAMP, 1.0 - D_CLAMP)


@dataclass
class GanLossParts:
    j_adv: Tensor           # log D(real) + log(1 - D(z_g)), minibatch mean
    z_g: Tensor
    d_real: Tensor
    d_fake: Tensor


def gan_adv_loss(module: GanFusionModule, real: Tensor, source: Tensor,
                 rng: Optional[np.random.Generator] = None,
                 noise: Optional[np.ndarray] = None) -> GanLossParts:
    """Adversarial objective of one module, as the discriminator sees it.

    The discriminator ascends this; the generator descends it (or the
    non-saturating surrogate, see generator_loss).
    """
    real_b, _ = _as_batch(real)
    source_b, _ = _as_batch(source)
    if real_b.shape != source_b.shape:
        raise ShapeError(f"gan_adv_loss: latent shapes {real.shape} and {source.shape} differ")
    if noise is None:
        noise = module.sample_noise(source_b.shape[0], rng)
    z_g = module.generate(source_b, noise)
    d_real = module.discriminate(real_b)
    d_fake = module.discriminate(z_g)
    j_adv = nc.add(nc.tmean(nc.tlog(d_real)), nc.tmean(nc.tlog(nc.sub(1.0, d_fake))))
    return GanLossParts(j_adv=j_adv, z_g=z_g, d_real=d_real, d_fake=d_fake)


def generator_loss(parts: GanLossParts, saturating: bool = False) -> Tensor:
    """Generator-side term to MINIMIZE for one module.

    Default is the non-saturating form -E[log D(z_g)]; the flag restores
    the original minimax term E[log(1 - D(z_g))].
    """
    if saturating:
        return nc.tmean(nc.tlog(nc.sub(1.0, parts.d_fake)))
    return nc.neg(nc.tmean(nc.tlog(parts.d_fake)))


def total_gan_loss(t_component: Tensor, v_component: Tensor) -> Tensor:
    """J_adv = J_adv(text module) + J_adv(visual module)."""
    out = nc.add(t_component, v_component)
    if not np.isfinite(out.data).all():
        raise ConfigError("total_gan_loss: non-finite component")
    return out


class GanFusion:
    """Both adversarial modules plus the feed-forward combiner.

    The combiner consumes the two generator outputs ([z_g_text; z_g_visual]);
    set append_raw_latents to also feed it the raw encoder latents.
    """

    kind = "gan"

    def __init__(self, latent_dim: int, out_dim: int, noise_dim: Optional[int] = None,
                 append_raw_latents: bool = False, saturating: bool = False,
                 rng: Optional[np.random.Generator] = None):
        self.latent_dim = latent_dim
        self.out_dim = out_dim
        self.noise_dim = noise_dim if noise_dim is not None else max(1, latent_dim // 4)
        self.append_raw_latents = append_raw_latents
        self.saturating = saturating
        self.text_module = GanFusionModule(latent_dim, self.noise_dim, "fusion.gan_t", rng)
        self.visual_module = GanFusionModule(latent_dim, self.noise_dim, "fusion.gan_v", rng)
        in_dim = 4 * latent_dim if append_raw_latents else 2 * latent_dim
        self.combiner = DenseLayer(in_dim, out_dim, "relu", rng, name="fusion.combiner")

    def parameters(self) -> List[Tensor]:
        """Every fusion parameter, discriminators included."""
        return (self.generator_parameters()
                + self.text_module.discriminator_parameters()
                + self.visual_module.discriminator_parameters())

    def generator_parameters(self) -> List[Tensor]:
        """Parameters updated by the main (generator-side) descent step."""
        return (self.text_module.generator_parameters()
                + self.visual_module.generator_parameters()
                + self.combiner.parameters())

    def discriminator_parameters(self) -> List[Tensor]:
        return (self.text_module.discriminator_parameters()
                + self.visual_module.discriminator_parameters())

    def fuse_batch(self, z_v: Tensor, z_t: Tensor,
                   rng: Optional[np.random.Generator] = None,
                   noise: Optional[Dict[str, np.ndarray]] = None) -> FusionResult:
        _check_pair(z_v, z_t, self.latent_dim)
        batch = z_v.shape[0]
        noise = noise or {}
        noise_t = noise.get("t", self.text_module.sample_noise(batch, rng))
        noise_v = noise.get("v", self.visual_module.sample_noise(batch, rng))
        z_g_t = self.text_module.generate(z_t, noise_t)
        z_g_v = self.visual_module.generate(z_v, noise_v)
        pieces = [z_g_t, z_g_v]
        if self.append_raw_latents:
            pieces += [z_v, z_t]
        z_fuse = self.combiner(nc.concat(pieces, axis=1))
        d_scores = {
            "t_real": self.text_module.discriminate(z_v),
            "t_fake": self.text_module.discriminate(z_g_t),
            "v_real": self.visual_module.discriminate(z_t),
            "v_fake": self.visual_module.discriminate(z_g_v),
        }
        return FusionResult(z_fuse=z_fuse, z_g={"t": z_g_t, "v": z_g_v}, d_scores=d_scores)


Mechanism = Union[ConcatFusion, AutoFusion, GanFusion]


def fuse(z_v: Tensor, z_t: Tensor, mechanism: Mechanism,
         rng: Optional[np.random.Generator] = None) -> FusionResult:
    """Fuse a single latent pair (or aligned batches) with any mechanism."""
    z_v_b, squeeze_v = _as_batch(z_v)
    z_t_b, squeeze_t = _as_batch(z_t)
    if squeeze_v != squeeze_t:
        raise ShapeError(f"fuse: latent shapes {z_v.shape} and {z_t.shape} differ")
    result = mechanism.fuse_batch(z_v_b, z_t_b, rng)
    if squeeze_v:
        result.z_fuse = result.z_fuse.reshape(result.z_fuse.shape[-1])
        if result.z is not None:
            result.z = result.z.reshape(result.z.shape[-1])
        if result.z_hat is not None:
            result.z_hat = result.z_hat.reshape(result.z_hat.shape[-1])
        result.z_g = {k: v.reshape(v.shape[-1]) for k, v in result.z_g.items()}
        result.d_scores = {k: v.reshape(1) for k, v in result.d_scores.items()}
    return result


def auto_fusion_loss(z: Tensor, z_hat: Tensor) -> Tensor:
    """Reconstruction penalty ||z_hat - z||^2 (minibatch mean for batches)."""
    if z.shape != z_hat.shape:
        raise ShapeError(f"auto_fusion_loss: shapes {z.shape} and {z_hat.shape} differ")
    if z.ndim == 1:
        return nc.squared_norm(nc.sub(z_hat, z))
    diff = nc.sub(z_hat, z)
    return nc.tmean(nc.tsum(nc.mul(diff, diff), axis=1))
