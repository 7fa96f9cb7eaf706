"""Built-in benchmark scenes.

Three desk-scale scenes at 240x180: a five-shape clustering scene, a
four-shape tracking scene restricted to even-sided polygons (their
motion-weighted outline centroid coincides with the area centroid, so
centroid error against truth is meaningful), and a seven-shape long scene
where one object leaves the field of view partway through.

Shapes that sit close to each other are given opposite polarities; the
polarity gap dominates the spatial bandwidth, so only same-polarity pairs
need generous spatial separation.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

from .errors import ContractViolationError
from .synth import Keyframes, SceneSpec, ShapeSpec, regular_polygon


def bounce_keys(
    a: Tuple[float, float],
    b: Tuple[float, float],
    speed: float,
    duration: float,
) -> Keyframes:
    """Back-and-forth path between two points at constant speed."""
    d = math.hypot(b[0] - a[0], b[1] - a[1])
    if d <= 0 or speed <= 0:
        raise ContractViolationError("bounce needs distinct endpoints and positive speed")
    leg = d / speed
    t: List[float] = [0.0]
    xs: List[float] = [a[0]]
    ys: List[float] = [a[1]]
    pos = 0
    while t[-1] < duration:
        t.append(t[-1] + leg)
        target = b if pos == 0 else a
        xs.append(target[0])
        ys.append(target[1])
        pos ^= 1
    return Keyframes(t=tuple(t), x=tuple(xs), y=tuple(ys))


def reference_scene(duration: float = 0.6, seed: int = 7, noise_rate: float = 5000.0) -> SceneSpec:
    """Five shapes with mixed sizes and crossing-free paths.

    Spatially close pairs carry opposite polarities; same-polarity pairs
    keep their centers at least ~55 px apart at all times.
    """
    shapes = (
        ShapeSpec(
            shape_id=0,
            vertices=regular_polygon(5, 19.0, phase=math.pi / 2),
            polarity=1,
            keys=Keyframes(
                t=(0.0, 0.3, 0.6),
                x=(40.0, 70.0, 45.0),
                y=(48.0, 60.0, 50.0),
                angle=(0.0, 0.8, 1.5),
            ),
        ),
        ShapeSpec(
            shape_id=1,
            vertices=regular_polygon(6, 15.0),
            polarity=0,
            keys=Keyframes(
                t=(0.0, 0.3, 0.6),
                x=(120.0, 95.0, 125.0),
                y=(40.0, 60.0, 45.0),
                scale=(1.0, 1.1, 1.0),
            ),
        ),
        ShapeSpec(
            shape_id=2,
            vertices=regular_polygon(4, 12.0),
            polarity=1,
            keys=Keyframes(
                t=(0.0, 0.3, 0.6),
                x=(195.0, 175.0, 200.0),
                y=(45.0, 70.0, 50.0),
            ),
        ),
        ShapeSpec(
            shape_id=3,
            vertices=regular_polygon(3, 11.0, phase=math.pi / 2),
            polarity=0,
            keys=Keyframes(
                t=(0.0, 0.3, 0.6),
                x=(70.0, 95.0, 65.0),
                y=(135.0, 122.0, 140.0),
            ),
        ),
        ShapeSpec(
            shape_id=4,
            vertices=regular_polygon(7, 16.0),
            polarity=1,
            keys=Keyframes(
                t=(0.0, 0.3, 0.6),
                x=(170.0, 195.0, 165.0),
                y=(130.0, 140.0, 125.0),
                angle=(0.0, -0.7, -1.4),
            ),
        ),
    )
    return SceneSpec(
        width=240,
        height=180,
        duration=duration,
        shapes=shapes,
        spacing=0.5,
        noise_rate=noise_rate,
        seed=seed,
    )


def tracking_scene(duration: float = 1.5, seed: int = 11, noise_rate: float = 3000.0) -> SceneSpec:
    """Four even-sided polygons on constant-velocity straight paths.

    Paths are chosen so same-polarity centers stay over 50 px apart and
    any two centers stay over 20 px apart; with a 15 px association gate
    no measurement ever falls in the gate of the wrong track.
    """
    shapes = (
        ShapeSpec(
            shape_id=0,
            vertices=regular_polygon(8, 20.0),
            polarity=1,
            keys=Keyframes(
                t=(0.0, duration),
                x=(35.0, 140.0),
                y=(45.0, 95.0),
            ),
        ),
        ShapeSpec(
            shape_id=1,
            vertices=regular_polygon(6, 16.0),
            polarity=0,
            keys=Keyframes(
                t=(0.0, duration),
                x=(120.0, 220.0),
                y=(40.0, 72.0),
            ),
        ),
        ShapeSpec(
            shape_id=2,
            vertices=regular_polygon(4, 14.0),
            polarity=1,
            keys=Keyframes(
                t=(0.0, duration),
                x=(175.0, 60.0),
                y=(125.0, 150.0),
            ),
        ),
        ShapeSpec(
            shape_id=3,
            vertices=regular_polygon(6, 13.0, phase=math.pi / 6),
            polarity=0,
            keys=Keyframes(
                t=(0.0, duration),
                x=(40.0, 85.0),
                y=(150.0, 120.0),
            ),
        ),
    )
    return SceneSpec(
        width=240,
        height=180,
        duration=duration,
        shapes=shapes,
        spacing=0.6,
        noise_rate=noise_rate,
        seed=seed,
    )


def stability_scene(duration: float = 10.0, seed: int = 23, noise_rate: float = 1200.0) -> SceneSpec:
    """Seven shapes on small loops; one darts out of view around t=3.2 s."""
    exiter_keys = Keyframes(
        t=(0.0, 0.8, 1.6, 2.4, 3.2, 4.1, duration),
        x=(150.0, 162.0, 150.0, 162.0, 150.0, 310.0, 310.0),
        y=(95.0, 103.0, 95.0, 103.0, 95.0, 95.0, 95.0),
    )
    shapes = (
        ShapeSpec(
            shape_id=0,
            vertices=regular_polygon(6, 14.0),
            polarity=1,
            keys=bounce_keys((40.0, 45.0), (70.0, 60.0), 50.0, duration),
        ),
        ShapeSpec(
            shape_id=1,
            vertices=regular_polygon(4, 12.0),
            polarity=0,
            keys=bounce_keys((120.0, 40.0), (95.0, 62.0), 55.0, duration),
        ),
        ShapeSpec(
            shape_id=2,
            vertices=regular_polygon(8, 13.0),
            polarity=1,
            keys=bounce_keys((200.0, 45.0), (225.0, 60.0), 48.0, duration),
        ),
        ShapeSpec(
            shape_id=3,
            vertices=regular_polygon(6, 12.0, phase=math.pi / 6),
            polarity=0,
            keys=bounce_keys((40.0, 135.0), (68.0, 120.0), 52.0, duration),
        ),
        ShapeSpec(
            shape_id=4,
            vertices=regular_polygon(5, 13.0, phase=math.pi / 2),
            polarity=1,
            keys=bounce_keys((120.0, 140.0), (95.0, 152.0), 50.0, duration),
        ),
        ShapeSpec(
            shape_id=5,
            vertices=regular_polygon(6, 14.0, phase=math.pi / 6),
            polarity=0,
            keys=bounce_keys((200.0, 135.0), (216.0, 150.0), 53.0, duration),
        ),
        ShapeSpec(
            shape_id=6,
            vertices=regular_polygon(4, 12.0),
            polarity=1,
            keys=exiter_keys,
        ),
    )
    return SceneSpec(
        width=240,
        height=180,
        duration=duration,
        shapes=shapes,
        spacing=0.9,
        noise_rate=noise_rate,
        seed=seed,
    )


SCENE_BUILDERS = {
    "reference": reference_scene,
    "tracking": tracking_scene,
    "stability": stability_scene,
}


def build_scene(name: str) -> SceneSpec:
    """Look up a built-in scene by name."""
    if name not in SCENE_BUILDERS:
        raise ContractViolationError(
            f"unknown scene {name!r}; available: {sorted(SCENE_BUILDERS)}"
        )
    return SCENE_BUILDERS[name]()
