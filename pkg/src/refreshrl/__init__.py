"""Multi-worker actor-critic training engine with replay-buffer refreshing.

A small, self-contained RL system: deterministic snapshot-resettable toy
environments, a fully connected actor-critic network with hand-derived
gradients, prioritized replay with sum-tree sampling, a self-imitation
worker, and a "refresher" worker that teleports the agent back to stored
states and re-rolls them with a newer policy, keeping the new trajectory
only when it beats the stored return.
"""

__version__ = "0.1.0"
