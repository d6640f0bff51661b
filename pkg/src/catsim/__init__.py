"""catsim: engineered two-photon dissipation for bosonic cat qubits.

Deterministic numerical experiments on a memory-buffer superconducting
device: cat-state stabilization, dissipation-enhanced Wigner tomography,
holonomic/Zeno/driven cat-qubit gates, and transient squeezed-cat
preparation.
"""

__version__ = "0.1.0"
