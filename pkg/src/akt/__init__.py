"""akt: a deterministic workbench for teaching a simulated arm multi-step
tasks through utterances, gestures and physical guidance, with statistical
reuse of previously taught control knowledge."""

__version__ = "0.1.0"
