"""On-line signature verification toolkit.

Pen-trajectory ingestion and preprocessing, dynamic feature extraction,
left-to-right hidden Markov models with Gaussian mixture emissions,
an enrollment/trial evaluation protocol with EER/DET reporting, a seeded
synthetic dataset generator, and an HTTP verification service.
"""

__version__ = "0.1.0"
