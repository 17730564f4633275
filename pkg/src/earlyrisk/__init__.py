"""Early academic-risk prediction from passive sensing, on synthetic cohorts."""
from __future__ import annotations

import logging
import os

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
if os.environ.get("ERL_LOG"):
    logging.basicConfig(level=os.environ["ERL_LOG"].upper(), format="%(levelname)s %(name)s: %(message)s")
