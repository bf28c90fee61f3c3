"""Mine monolingual text for low-resource languages from chat-completion endpoints.

The pipeline has four stages, each usable as a library or through the
``lexglean`` command line tool:

* ``taxonomy``   -- elicitation prompt templates and run configuration
* ``generation`` -- resumable batch calls against a chat-completion API
                    (or a deterministic mock backend)
* ``langid`` / ``textstats`` -- trigram language identification and
                    deterministic text metrics
* ``evaluation`` / ``reporting`` -- per-output scoring, per-condition
                    aggregation, corpus filtering and report tables
"""
from __future__ import annotations

from pathlib import Path

__version__ = "0.1.0"


def data_dir() -> Path:
    """Directory holding the packaged taxonomy, configs and seed corpora."""
    return Path(__file__).resolve().parent / "data"
