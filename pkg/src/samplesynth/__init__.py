"""samplesynth: inferring sampler program text from data.

A small typed s-expression language for sampler programs, a hierarchical
grammar prior over program text with reuse of constants and compound
procedures, statistical-test penalties, and a Metropolis-Hastings search that
finds programs whose repeated evaluation matches target data. A FastAPI
service exposes the machinery; the ``synth`` CLI is a thin client.
"""

__version__ = "0.1.0"
