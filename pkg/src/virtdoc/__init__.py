"""Virtual doctor: non-invasive T2DM risk screening.

Simulated sensors feed an interview state machine that queries a from-scratch
neural network, calibrates its score into a probability, adjusts it with the
interview answers, and routes the patient through a twilight-zone rule.
"""

__version__ = "0.1.0"
