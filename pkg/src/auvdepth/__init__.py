"""Model-free depth control workbench for a planar AUV.

Packages a nonlinear planar vehicle simulator, three depth-control MDP
environments, a deterministic-policy-gradient trainer with prioritized
experience replay, LQI and NMPC model-based baselines, and an experiment
CLI that emits metrics and plot-ready CSV data.
"""

__version__ = "0.1.0"
