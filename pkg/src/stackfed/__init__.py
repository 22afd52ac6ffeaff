"""Satisfaction-aware incentive lab for federated data caching.

Closed-form Stackelberg equilibria between a rewarding server and
data-caching nodes, a multi-agent actor-critic learner that recovers the
same equilibrium from experience, and a small federated-averaging
simulator that turns equilibrium decisions into training outcomes.
"""

__version__ = "0.1.0"
