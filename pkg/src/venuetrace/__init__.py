"""Privacy-preserving venue check-in backend.

Ingests QR check-ins, stores them in consensus-replicated ledger silos,
trains a contamination classifier on synthetic questionnaire data, and
serves time-decayed exposure-risk scores plus an investigator search API.
"""

__version__ = "0.1.0"
