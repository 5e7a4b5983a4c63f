import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


def minimal_scene_doc(**overrides) -> dict:
    """A small valid scene document; overrides replace top-level sections."""
    doc = {
        "volume": {"phantom": "constant(100)", "dims": 16},
        "transfer_function": {
            "points": [[0.0, 1.0, 1.0, 1.0, 0.0],
                       [200.0, 1.0, 1.0, 1.0, 0.9]],
        },
        "background": {"mode": "constant", "color": [1.0, 1.0, 1.0]},
        "camera": {
            "position": [7.5, 7.5, -40.0],
            "target": [7.5, 7.5, 7.5],
            "vertical_fov": 40.0,
        },
        "render": {"width": 16, "height": 16, "iterations": 1, "seed": 0},
    }
    doc.update(overrides)
    return doc


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
