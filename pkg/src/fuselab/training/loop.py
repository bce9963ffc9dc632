"""The training loop, including alternating minimax updates for the
adversarial mechanism.

Per batch:
  concat      one descent step on J_C
  auto        one descent step on J_C + lambda * J_auto
  gan         k discriminator ascent steps on J_adv (touching only
              discriminator parameters), then one descent step on
              J_C + lambda * (generator-side adversarial term) touching
              encoders, generators, combiner, and classifier

The reported J_F column is always the fusion objective itself (J_auto,
or J_adv = text module + visual module); the J column is the quantity
the main step actually minimized.

All randomness (batch order, adversarial noise) flows from the single
configured seed, so identical runs produce bitwise-identical curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import numcore as nc
from ..datakit import BatchStream, Dataset, Publication
from ..exceptions import ConfigError, DivergenceError, DomainError, InputError
from ..fusion import GanFusion, auto_fusion_loss, gan_adv_loss, generator_loss
from ..metrics import MetricsReport, evaluate
from ..numcore import Tensor, clip_grad_norm, zero_grads
from .model import FusionModel
from .objectives import batch_cross_entropy, one_hot
from .optim import DEFAULT_LR, make_optimizer


@dataclass
class TrainConfig:
    epochs: int = 5
    batch_size: int = 32
    optimizer: str = "adam"              # "sgd" | "adam"
    lr: Optional[float] = None           # default 1e-2 (sgd) / 1e-3 (adam)
    disc_lr: Optional[float] = None      # default: same as lr
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lam: float = 1.0                     # fusion-loss weight
    disc_steps: int = 1                  # k discriminator steps per main step
    seed: int = 0
    clip_norm: float = 5.0               # recurrent-path gradient clip
    class_weights: Optional[List[float]] = None
    # Let the fusion term (generator-side adversarial loss, or the
    # reconstruction loss) reach the encoders, as in a fully end-to-end
    # objective. Turning this off confines that term to the fusion module's
    # own parameters, which prevents the reconstruction/adversarial pressure
    # from collapsing the latents before the classification signal forms.
    fusion_loss_updates_encoders: bool = True
    patience: Optional[int] = None       # epochs without val improvement

    def __post_init__(self):
        if self.optimizer not in DEFAULT_LR:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.lr is None:
            self.lr = DEFAULT_LR[self.optimizer]
        if self.disc_lr is None:
            self.disc_lr = self.lr
        if self.lr <= 0 or self.disc_lr <= 0:
            raise ConfigError("learning rates must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be positive")
        if self.disc_steps < 1:
            raise ConfigError("disc_steps (k) must be >= 1")
        if self.lam < 0:
            raise ConfigError("fusion-loss weight lambda must be >= 0")


@dataclass
class LossReport:
    step: int
    j_c: float
    j_f: float
    j: float
    parts: Dict[str, float] = field(default_factory=dict)

    CSV_HEADER = "step,J_C,J_F,J"

    def csv_row(self) -> str:
        return f"{self.step},{self.j_c!r},{self.j_f!r},{self.j!r}"


@dataclass
class TrainResult:
    model: FusionModel
    curves: List[LossReport]
    val_reports: List[MetricsReport] = field(default_factory=list)
    stopped_early: bool = False

    def loss_csv(self) -> str:
        lines = [LossReport.CSV_HEADER] + [r.csv_row() for r in self.curves]
        return "\n".join(lines) + "\n"


def _finite_or_raise(value: float, step: int, what: str) -> float:
    if not np.isfinite(value):
        raise DivergenceError(f"{what} became non-finite at step {step}", step=step)
    return value


def _targets(model: FusionModel, pubs: Sequence[Publication]) -> np.ndarray:
    try:
        idx = [model.label_space.index(p.label) for p in pubs]
    except Exception as exc:
        raise ConfigError(f"dataset labels do not match the model label space: {exc}")
    return one_hot(idx, model.label_space.num_classes)


def train(model: FusionModel, dataset: Dataset, config: TrainConfig,
          val_dataset: Optional[Dataset] = None) -> TrainResult:
    """Train in place and return the model with its per-step loss curves."""
    if len(dataset) < 1:
        raise InputError("train: empty dataset")
    if set(dataset.label_space.names) != set(model.label_space.names):
        raise ConfigError(f"dataset label space {list(dataset.label_space.names)} "
                          f"does not match model {list(model.label_space.names)}")

    is_gan = isinstance(model.mechanism, GanFusion)
    main_opt = make_optimizer(config.optimizer, model.main_parameters(), config.lr,
                              config.beta1, config.beta2, config.eps)
    disc_opt = None
    if is_gan:
        disc_opt = make_optimizer(config.optimizer, model.discriminator_parameters(),
                                  config.disc_lr, config.beta1, config.beta2, config.eps)

    rng = np.random.default_rng(config.seed)
    stream = BatchStream(dataset, config.batch_size, seed=config.seed)
    all_params = model.parameters()
    recurrent = model.recurrent_parameters()

    curves: List[LossReport] = []
    val_reports: List[MetricsReport] = []
    best_val = -np.inf
    stale_epochs = 0
    stopped_early = False
    step = 0

    for _ in range(config.epochs):
        for batch in stream:
            targets = _targets(model, batch)

            try:
                curves.append(_train_step(model, batch, targets, config, rng,
                                          main_opt, disc_opt, is_gan, step,
                                          all_params, recurrent))
            except DomainError as exc:
                raise DivergenceError(f"non-finite value at step {step}: {exc}",
                                      step=step)
            step += 1

        if val_dataset is not None and len(val_dataset):
            report = evaluate_model(model, val_dataset)
            val_reports.append(report)
            if config.patience is not None:
                if report.macro_f1 > best_val + 1e-12:
                    best_val = report.macro_f1
                    stale_epochs = 0
                else:
                    stale_epochs += 1
                    if stale_epochs >= config.patience:
                        stopped_early = True
                        break

    return TrainResult(model, curves, val_reports, stopped_early)


def _train_step(model: FusionModel, batch: Sequence[Publication],
                targets: np.ndarray, config: TrainConfig,
                rng: np.random.Generator, main_opt, disc_opt, is_gan: bool,
                step: int, all_params, recurrent) -> LossReport:
    if is_gan:
        step_discriminator(model, batch, config, disc_opt, rng, step)

    zero_grads(all_params)
    probs, result, latents = model.forward_batch(batch, rng)
    j_c = batch_cross_entropy(targets, probs, config.class_weights)
    parts: Dict[str, float] = {}
    j_f_value = 0.0

    if model.config.input_modes != "multimodal" or result is None:
        j = j_c
    elif isinstance(model.mechanism, GanFusion):
        j_adv_t, j_adv_v, gen_term = _gan_terms(
            model, result, latents, rng, config.fusion_loss_updates_encoders)
        j_f_value = float(j_adv_t.data) + float(j_adv_v.data)
        parts = {"j_adv_t": float(j_adv_t.data), "j_adv_v": float(j_adv_v.data),
                 "gen_term": float(gen_term.data)}
        j = nc.add(j_c, nc.mul(config.lam, gen_term)) if config.lam else j_c
    elif result.z_hat is not None:
        if config.fusion_loss_updates_encoders:
            j_auto = auto_fusion_loss(result.z, result.z_hat)
        else:
            # reconstruct detached latents; J_auto trains only the fusion
            # autoencoder
            mech = model.mechanism
            z_det = result.z.detach()
            j_auto = auto_fusion_loss(z_det, mech.decoder(mech.encoder(z_det)))
        j_f_value = float(j_auto.data)
        parts = {"j_auto": j_f_value}
        j = nc.add(j_c, nc.mul(config.lam, j_auto)) if config.lam else j_c
    else:
        j = j_c

    _finite_or_raise(float(j.data), step, "training objective")
    j.backward()
    if recurrent and config.clip_norm:
        clip_grad_norm(recurrent, config.clip_norm)
    main_opt.step()

    return LossReport(
        step=step,
        j_c=_finite_or_raise(float(j_c.data), step, "J_C"),
        j_f=_finite_or_raise(j_f_value, step, "J_F"),
        j=float(j.data),
        parts=parts,
    )


def step_discriminator(model: FusionModel, batch: Sequence[Publication],
                       config: TrainConfig, disc_opt, rng: np.random.Generator,
                       step: int) -> None:
    """k ascent updates on J_adv; only discriminator parameters change.

    Latents are detached: the discriminator objective must not shape the
    encoders, and the ascent step only applies to D anyway.
    """
    mech: GanFusion = model.mechanism
    for _ in range(config.disc_steps):
        zero_grads(model.parameters())
        latents = _encode_detached(model, batch)
        parts_t = gan_adv_loss(mech.text_module, real=latents["visual"],
                               source=latents["text"], rng=rng)
        parts_v = gan_adv_loss(mech.visual_module, real=latents["text"],
                               source=latents["visual"], rng=rng)
        j_adv = nc.add(parts_t.j_adv, parts_v.j_adv)
        _finite_or_raise(float(j_adv.data), step, "J_adv")
        nc.neg(j_adv).backward()  # ascent on J_adv
        disc_opt.step()
    zero_grads(model.parameters())


def _encode_detached(model: FusionModel, batch: Sequence[Publication]) -> Dict[str, Tensor]:
    return {
        "text": model._encode_texts(batch).detach(),
        "visual": model._encode_visuals(batch).detach(),
    }


def _gen_term_from_fake(d_fake: Tensor, saturating: bool) -> Tensor:
    if saturating:
        return nc.tmean(nc.tlog(nc.sub(1.0, d_fake)))
    return nc.neg(nc.tmean(nc.tlog(d_fake)))


def _gan_terms(model: FusionModel, result, latents, rng: np.random.Generator,
               adv_updates_encoders: bool):
    """The two adversarial objectives (for reporting) and the generator-side
    term that joins the main objective."""
    mech: GanFusion = model.mechanism
    d = result.d_scores
    j_adv_t = nc.add(nc.tmean(nc.tlog(d["t_real"])),
                     nc.tmean(nc.tlog(nc.sub(1.0, d["t_fake"]))))
    j_adv_v = nc.add(nc.tmean(nc.tlog(d["v_real"])),
                     nc.tmean(nc.tlog(nc.sub(1.0, d["v_fake"]))))
    if adv_updates_encoders:
        gen_term = nc.add(_gen_term_from_fake(d["t_fake"], mech.saturating),
                          _gen_term_from_fake(d["v_fake"], mech.saturating))
    else:
        # rebuild generator scores from detached latents so the adversarial
        # term cannot reach the encoders
        parts_t = gan_adv_loss(mech.text_module, real=latents["visual"].detach(),
                               source=latents["text"].detach(), rng=rng)
        parts_v = gan_adv_loss(mech.visual_module, real=latents["text"].detach(),
                               source=latents["visual"].detach(), rng=rng)
        gen_term = nc.add(generator_loss(parts_t, mech.saturating),
                          generator_loss(parts_v, mech.saturating))
    return j_adv_t, j_adv_v, gen_term


def evaluate_model(model: FusionModel, dataset: Dataset,
                   threads: int = 1) -> MetricsReport:
    truths, preds = predict_dataset(model, dataset, threads)
    return evaluate(truths, preds, dataset.label_space)


def predict_dataset(model: FusionModel, dataset: Dataset,
                    threads: int = 1) -> Tuple[List[str], List[str]]:
    if len(dataset) < 1:
        raise InputError("evaluate: empty dataset")
    truths = [p.label for p in dataset]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            preds = list(pool.map(lambda p: model.predict(p)[1], dataset.publications))
    else:
        preds = [model.predict(p)[1] for p in dataset.publications]
    return truths, preds
