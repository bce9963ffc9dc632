"""fuselab: multimodal fusion learning toolkit.

Dual-modality encoders, three fusion mechanisms (concatenation,
autoencoder bottleneck, adversarial), a joint training objective,
social-text normalization, and classification metrics -- all on a small
float64 autodiff core so every gradient can be verified against finite
differences.
"""

__version__ = "0.1.0"
