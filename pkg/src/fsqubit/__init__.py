"""Desk-scale simulator and analysis pipeline for a metastable-strontium
fine-structure qubit: driven Lambda-system dynamics with dissipation,
canonical pulse sequences, trap-polarizability engineering, and the
damped-oscillation signal-extraction chain."""

__version__ = "0.1.0"

from . import atom, driven, dsp, formulas, lindblad, rates, sequences, trap  # noqa: F401
