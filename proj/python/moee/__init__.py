# SPDX-License-Identifier: Apache-2.0
"""MoE activation embeddings: toy engine, activation containers, embeddings and metrics."""

from ._moee import *  # noqa: F401,F403
from ._moee import MoeeError, __doc__  # noqa: F401

__version__ = "0.1.0"
