"""Graph generation by matching the generator of a heat-kernel diffusion.

Modules:
    graph       graphs, Laplacians, spectral decompositions, JSONL IO
    diffusion   heat kernels, forward diffusion, true generators, limits
    nn          MLP surrogate generator with manual backprop, Adam, checkpoints
    trainer     the generator-matching training loop
    sampler     base distributions, Euler integration, thresholding
    datasets    SBM / DCSBM / planar generators, splits, edge-list import
    evaluation  graph statistics, orbit counts, kernel MMD, uniqueness
    config      flat key = value run configuration and presets
    pipeline    train / sample / evaluate glue
    cli         the ``g3`` command
"""

__version__ = "0.1.0"
