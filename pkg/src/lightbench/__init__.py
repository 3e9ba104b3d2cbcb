"""Detector-robustness workbench over a disentangled latent object space.

Synthetic traffic-light scenes, black-box detection scoring, latent-space
adversarial search, latent analytics (tiles, dimension ranking, clustering),
and augmentation experiments, all reproducible from a single seed.
"""

__version__ = "0.1.0"
