"""Cryptic sightseeing-spot discovery from subjective tourist records.

Pipeline stages: image signatures (edit-distance similarity against
landmark references), a clonal-selection immune classifier with memory
cells, an interactively growable hierarchical SOM, and the three-group
discovery rule that flags highly rated but under-photographed spots.
"""

__version__ = "0.1.0"
