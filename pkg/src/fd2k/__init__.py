"""Distributed symmetric-key generation from correlated sensor signals.

Two nodes observe noisy copies of the same physical process, train a pair
of actor-critic agents (centralized critics, decentralized actors, periodic
federated averaging of the actors) to pick signal features worth keying on,
and then derive matching binary keys without exchanging key material.  The
package also ships an SP 800-22 style randomness suite and an
eavesdropper-resistance evaluation harness.
"""

__version__ = "0.1.0"
