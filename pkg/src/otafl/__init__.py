"""Over-the-air federated learning with a movable antenna array.

Subpackages: channel models, over-the-air aggregation, the federated
training loop with its gap-bound tracker, the per-round decision
environment, a small differentiable-network kernel, actor-critic agents,
and the experiment harness.
"""

__version__ = "0.1.0"
