"""daf: streaming corpus-auditing toolkit.

Scans line-oriented text and image-caption datasets, computes
representation and content analyses (identity-term distributions,
signal histograms, provenance statistics, disaggregated association
tables), packages results as standardized analysis cards with action
recommendations, and applies remove/tag mitigations.
"""

__version__ = "0.1.0"
