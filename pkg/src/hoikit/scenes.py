"""Procedural interaction scenes with geometric ground truth.

Each scene renders 1-3 articulated person blobs and 1-4 objects into a
single-channel image; every instance keeps its own unoccluded binary mask.
Ground-truth interactions are defined by exact geometric predicates:

    hold: the object's box center lies within ``hold_radius`` of a hand.
    sit:  the person's centroid is horizontally over the object, above its
          center, and the person's bottom edge falls inside the object's
          vertical extent.
    look: the ray from the head center along the facing direction (rendered
          as a nose protrusion, so it is visible in the mask) intersects the
          object's box.

Scenes resample until at least one positive triplet exists; generation is a
pure function of the seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, MissingArtifactError
from .masks import save_mask_png

INTERACTION_CLASSES = ("hold", "sit", "look")
HOLD, SIT, LOOK = 0, 1, 2

HUMAN_CLASS_ID = 0
OBJECT_FAMILIES = ("rectangle", "ellipse", "triangle", "ring")  # class ids 1..4

EMPTY_BOX = (0.0, 0.0, 0.0, 0.0)


@dataclass
class SceneInstance:
    kind: str  # "human" | "object"
    class_id: int
    box: np.ndarray  # (4,) normalized x1, y1, x2, y2
    mask: np.ndarray  # (H, W) float32 {0, 1}, unoccluded
    hands: list[tuple[float, float]] = field(default_factory=list)
    head: tuple[float, float] | None = None
    facing: tuple[float, float] | None = None  # unit vector
    head_radius: float = 0.0
    base_mask: np.ndarray | None = None  # body without the nose; generation-internal


@dataclass
class SceneTriplet:
    human_idx: int
    object_idx: int
    interaction_class: int
    object_occluded: bool = False


@dataclass
class HOITriplet:
    """Prediction/evaluation unit: two boxes, an interaction class, a score."""

    human_box: tuple[float, float, float, float]
    object_box: tuple[float, float, float, float]
    interaction_class: int
    score: float = 0.0
    object_occluded: bool = False


@dataclass
class SyntheticScene:
    scene_id: str
    size: int
    instances: list[SceneInstance]
    triplets: list[SceneTriplet]
    image: np.ndarray = None  # rendered lazily; pure function of instances

    def human_indices(self) -> list[int]:
        return [i for i, inst in enumerate(self.instances) if inst.kind == "human"]

    def object_indices(self) -> list[int]:
        return [i for i, inst in enumerate(self.instances) if inst.kind == "object"]


@dataclass
class SceneGenConfig:
    size: int = 64
    max_humans: int = 3
    max_objects: int = 4
    hold_radius: float = 0.09
    occluded_prob: float = 0.0
    max_resamples: int = 50


# --- low-level rasterization --------------------------------------------------


def _grids(size: int) -> tuple[np.ndarray, np.ndarray]:
    c = (np.arange(size) + 0.5) / size
    gy, gx = np.meshgrid(c, c, indexing="ij")
    return gx, gy


def _disc(gx, gy, cx, cy, r) -> np.ndarray:
    return (gx - cx) ** 2 + (gy - cy) ** 2 <= r * r


def _rect(gx, gy, cx, cy, hw, hh) -> np.ndarray:
    return (np.abs(gx - cx) <= hw) & (np.abs(gy - cy) <= hh)


def _thick_segment(gx, gy, p0, p1, thickness) -> np.ndarray:
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    denom = dx * dx + dy * dy
    px, py = gx - p0[0], gy - p0[1]
    if denom < 1e-12:
        d2 = px * px + py * py
    else:
        t = np.clip((px * dx + py * dy) / denom, 0.0, 1.0)
        d2 = (px - t * dx) ** 2 + (py - t * dy) ** 2
    return d2 <= thickness * thickness


def _triangle(gx, gy, pts) -> np.ndarray:
    def edge(p, q):
        return (q[0] - p[0]) * (gy - p[1]) - (q[1] - p[1]) * (gx - p[0])

    d1, d2, d3 = edge(pts[0], pts[1]), edge(pts[1], pts[2]), edge(pts[2], pts[0])
    neg = (d1 < 0) | (d2 < 0) | (d3 < 0)
    pos = (d1 > 0) | (d2 > 0) | (d3 > 0)
    return ~(neg & pos)


def _mask_box(mask: np.ndarray) -> np.ndarray:
    rows = np.any(mask > 0, axis=1)
    cols = np.any(mask > 0, axis=0)
    if not rows.any():
        raise InvalidInputError("empty instance mask")
    r0, r1 = np.where(rows)[0][[0, -1]]
    c0, c1 = np.where(cols)[0][[0, -1]]
    h, w = mask.shape
    return np.array([c0 / w, r0 / h, (c1 + 1) / w, (r1 + 1) / h], dtype=np.float64)


# --- instance builders ----------------------------------------------------------


def _head_mask(gx, gy, head, head_r, facing) -> np.ndarray:
    """Gaze-oriented head: an ellipse elongated along the facing direction
    plus a nose protrusion, so the facing is legible in the rendered image."""
    ang = math.atan2(facing[1], facing[0])
    dx, dy = gx - head[0], gy - head[1]
    ct, st = math.cos(ang), math.sin(ang)
    u = dx * ct + dy * st
    v = -dx * st + dy * ct
    grid = (u / (1.6 * head_r)) ** 2 + (v / head_r) ** 2 <= 1.0
    nose_end = (head[0] + 3.0 * head_r * facing[0], head[1] + 3.0 * head_r * facing[1])
    grid |= _thick_segment(gx, gy, head, nose_end, 0.016)
    return grid.astype(np.float32)


def _make_human(gx, gy, rng: np.random.Generator, cfg: SceneGenConfig) -> SceneInstance:
    cx = rng.uniform(0.25, 0.75)
    cy = rng.uniform(0.3, 0.6)
    tw = rng.uniform(0.08, 0.13)
    th = rng.uniform(0.16, 0.24)
    head_r = rng.uniform(0.035, 0.05)
    head = (cx, cy - th / 2 - head_r)
    facing_angle = rng.uniform(0, 2 * math.pi)
    facing = (math.cos(facing_angle), math.sin(facing_angle))

    base = _rect(gx, gy, cx, cy, tw / 2, th / 2)

    hands = []
    shoulder_y = cy - th / 2 + 0.02
    for side in (-1, 1):
        shoulder = (cx + side * tw / 2, shoulder_y)
        ang = rng.uniform(-0.35 * math.pi, 0.6 * math.pi)  # from raised to hanging
        arm_len = rng.uniform(0.09, 0.15)
        hand = (
            shoulder[0] + side * arm_len * math.cos(ang),
            shoulder[1] + arm_len * math.sin(ang),
        )
        hand = (min(max(hand[0], 0.02), 0.98), min(max(hand[1], 0.02), 0.98))
        base |= _thick_segment(gx, gy, shoulder, hand, 0.016)
        base |= _disc(gx, gy, hand[0], hand[1], 0.025)
        hands.append(hand)
    for side in (-1, 1):
        hip = (cx + side * tw / 4, cy + th / 2)
        foot = (hip[0] + side * rng.uniform(0.0, 0.05), hip[1] + rng.uniform(0.08, 0.14))
        base |= _thick_segment(gx, gy, hip, foot, 0.016)

    base = base.astype(np.float32)
    mask = np.maximum(base, _head_mask(gx, gy, head, head_r, facing))
    return SceneInstance(
        kind="human",
        class_id=HUMAN_CLASS_ID,
        box=_mask_box(mask),
        mask=mask,
        hands=hands,
        head=head,
        facing=facing,
        head_radius=head_r,
        base_mask=base,
    )


def _make_object(
    gx, gy, rng: np.random.Generator, center: tuple[float, float], scale: float
) -> SceneInstance:
    family = int(rng.integers(len(OBJECT_FAMILIES)))
    cx, cy = center
    hw = scale * rng.uniform(0.8, 1.2)
    hh = scale * rng.uniform(0.6, 1.1)
    name = OBJECT_FAMILIES[family]
    if name == "rectangle":
        mask = _rect(gx, gy, cx, cy, hw, hh)
    elif name == "ellipse":
        mask = ((gx - cx) / hw) ** 2 + ((gy - cy) / hh) ** 2 <= 1.0
    elif name == "triangle":
        pts = [(cx - hw, cy + hh), (cx + hw, cy + hh), (cx + rng.uniform(-0.3, 0.3) * hw, cy - hh)]
        mask = _triangle(gx, gy, pts)
    else:  # ring
        outer = ((gx - cx) / hw) ** 2 + ((gy - cy) / hh) ** 2 <= 1.0
        inner = ((gx - cx) / (0.5 * hw)) ** 2 + ((gy - cy) / (0.5 * hh)) ** 2 <= 1.0
        mask = outer & ~inner
    mask = mask.astype(np.float32)
    if mask.sum() < 4:  # degenerate at raster resolution; fall back to a rectangle
        mask = _rect(gx, gy, cx, cy, max(hw, 0.03), max(hh, 0.03)).astype(np.float32)
    return SceneInstance(
        kind="object", class_id=1 + family, box=_mask_box(mask), mask=mask
    )


# --- interaction predicates ----------------------------------------------------


def box_center(box) -> tuple[float, float]:
    return ((box[0] + box[2]) / 2, (box[1] + box[3]) / 2)


def predicate_hold(human: SceneInstance, obj: SceneInstance, hold_radius: float) -> bool:
    ocx, ocy = box_center(obj.box)
    return any(
        math.hypot(hx - ocx, hy - ocy) <= hold_radius for hx, hy in human.hands
    )


def predicate_sit(human: SceneInstance, obj: SceneInstance) -> bool:
    hcx, hcy = box_center(human.box)
    ocx, ocy = box_center(obj.box)
    return (
        obj.box[0] <= hcx <= obj.box[2]
        and hcy < ocy
        and obj.box[1] <= human.box[3] <= obj.box[3]
    )


def predicate_look(human: SceneInstance, obj: SceneInstance) -> bool:
    ox, oy = human.head
    dx, dy = human.facing
    tmin, tmax = 0.0, math.inf
    for o, d, lo, hi in ((ox, dx, obj.box[0], obj.box[2]), (oy, dy, obj.box[1], obj.box[3])):
        if abs(d) < 1e-12:
            if not lo <= o <= hi:
                return False
        else:
            t1, t2 = (lo - o) / d, (hi - o) / d
            if t1 > t2:
                t1, t2 = t2, t1
            tmin, tmax = max(tmin, t1), min(tmax, t2)
    return tmax >= tmin


def evaluate_predicates(
    human: SceneInstance, obj: SceneInstance, hold_radius: float
) -> list[int]:
    classes = []
    if predicate_hold(human, obj, hold_radius):
        classes.append(HOLD)
    if predicate_sit(human, obj):
        classes.append(SIT)
    if predicate_look(human, obj):
        classes.append(LOOK)
    return classes


# --- scene assembly --------------------------------------------------------------


def instance_intensity(inst: SceneInstance, index: int) -> float:
    if inst.kind == "human":
        return 0.88 + 0.03 * (index % 4)
    return 0.25 + 0.12 * inst.class_id


def render_scene_image(instances: list[SceneInstance], size: int) -> np.ndarray:
    """Deterministic rendering: objects first, then humans on top."""
    image = np.zeros((size, size), dtype=np.float32)
    order = [i for i, x in enumerate(instances) if x.kind == "object"] + [
        i for i, x in enumerate(instances) if x.kind == "human"
    ]
    for i in order:
        inst = instances[i]
        image[inst.mask > 0] = instance_intensity(inst, i)
    return image


def generate_scene(seed: int, cfg: SceneGenConfig | None = None, scene_id: str | None = None) -> SyntheticScene:
    """One scene, bit-deterministic per seed, with at least one positive triplet."""
    cfg = cfg or SceneGenConfig()
    rng = np.random.default_rng(seed)
    gx, gy = _grids(cfg.size)

    for _ in range(cfg.max_resamples):
        humans = [_make_human(gx, gy, rng, cfg) for _ in range(int(rng.integers(1, cfg.max_humans + 1)))]
        all_hands = [hand for h in humans for hand in h.hands]
        objects = []
        n_objects = int(rng.integers(1, cfg.max_objects + 1))
        for _ in range(n_objects):
            mode = rng.choice(["hand", "under", "free"], p=[0.35, 0.3, 0.35])
            anchor = humans[int(rng.integers(len(humans)))]
            if mode == "hand":
                hx, hy = anchor.hands[int(rng.integers(2))]
                r = rng.uniform(0, cfg.hold_radius * 0.5)
                ang = rng.uniform(0, 2 * math.pi)
                center = (hx + r * math.cos(ang), hy + r * math.sin(ang))
                scale = rng.uniform(0.03, 0.06)
            elif mode == "under":
                hcx, _ = box_center(anchor.box)
                center = (hcx + rng.uniform(-0.02, 0.02), anchor.box[3] + rng.uniform(-0.02, 0.04))
                scale = rng.uniform(0.08, 0.14)
            else:
                # keep free objects out of the hold-boundary annulus so the
                # hold decision margin stays clean at raster resolution
                for _attempt in range(40):
                    center = (rng.uniform(0.12, 0.88), rng.uniform(0.12, 0.88))
                    d = min(
                        (math.hypot(center[0] - hx, center[1] - hy) for hx, hy in all_hands),
                        default=1.0,
                    )
                    if not 0.6 * cfg.hold_radius <= d <= 1.5 * cfg.hold_radius:
                        break
                scale = rng.uniform(0.05, 0.1)
            center = (min(max(center[0], 0.08), 0.92), min(max(center[1], 0.08), 0.92))
            objects.append(_make_object(gx, gy, rng, center, scale))

        # frequently aim one head at an object so "look" has coverage
        if rng.random() < 0.8:
            h = humans[int(rng.integers(len(humans)))]
            target = objects[int(rng.integers(len(objects)))]
            tx, ty = box_center(target.box)
            norm = math.hypot(tx - h.head[0], ty - h.head[1])
            if norm > 1e-6:
                h.facing = ((tx - h.head[0]) / norm, (ty - h.head[1]) / norm)
                # rebuild from the headless body with the re-oriented head
                h.mask = np.maximum(
                    h.base_mask, _head_mask(gx, gy, h.head, h.head_radius, h.facing)
                )
                h.box = _mask_box(h.mask)

        instances = humans + objects
        triplets = []
        for hi, human in enumerate(instances):
            if human.kind != "human":
                continue
            for oi, obj in enumerate(instances):
                if obj.kind != "object":
                    continue
                for cls in evaluate_predicates(human, obj, cfg.hold_radius):
                    occluded = bool(rng.random() < cfg.occluded_prob)
                    triplets.append(SceneTriplet(hi, oi, cls, occluded))
        if triplets:
            scene = SyntheticScene(
                scene_id=scene_id or f"scene-{seed}",
                size=cfg.size,
                instances=instances,
                triplets=triplets,
            )
            scene.image = render_scene_image(instances, cfg.size)
            return scene
    raise RuntimeError(f"scene generator failed to produce a positive triplet (seed {seed})")


def generate_scenes(count: int, seed: int, cfg: SceneGenConfig | None = None) -> list[SyntheticScene]:
    root = np.random.SeedSequence(seed)
    child_seeds = [int(s.generate_state(1)[0]) for s in root.spawn(count)]
    return [
        generate_scene(child_seeds[i], cfg, scene_id=f"scene-{seed}-{i:05d}")
        for i in range(count)
    ]


def gt_triplets_for_eval(scene: SyntheticScene) -> list[HOITriplet]:
    """Ground-truth triplets in evaluation form (occluded objects get the empty box)."""
    out = []
    for t in scene.triplets:
        human_box = tuple(float(v) for v in scene.instances[t.human_idx].box)
        if t.object_occluded:
            object_box = EMPTY_BOX
        else:
            object_box = tuple(float(v) for v in scene.instances[t.object_idx].box)
        out.append(
            HOITriplet(
                human_box=human_box,
                object_box=object_box,
                interaction_class=t.interaction_class,
                object_occluded=t.object_occluded,
            )
        )
    return out


# --- dataset persistence ----------------------------------------------------------
#
# Line-delimited JSON, one record per scene with the field order:
#   scene_id, image_size, instances [kind, class_id, box, mask_ref],
#   triplets [human_idx, object_idx, interaction_class, object_occluded]
# Masks are 8-bit grayscale PNGs referenced relative to the dataset file.


def save_scene_dataset(scenes: list[SyntheticScene], path: str | Path) -> None:
    path = Path(path)
    mask_dir = path.parent / (path.stem + "_masks")
    mask_dir.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for scene in scenes:
            inst_records = []
            for i, inst in enumerate(scene.instances):
                ref = f"{mask_dir.name}/{scene.scene_id}_i{i}.png"
                save_mask_png(inst.mask, path.parent / ref)
                inst_records.append(
                    {
                        "kind": inst.kind,
                        "class_id": inst.class_id,
                        "box": [round(float(v), 10) for v in inst.box],
                        "mask_ref": ref,
                    }
                )
            record = {
                "scene_id": scene.scene_id,
                "image_size": scene.size,
                "instances": inst_records,
                "triplets": [
                    {
                        "human_idx": t.human_idx,
                        "object_idx": t.object_idx,
                        "interaction_class": t.interaction_class,
                        "object_occluded": t.object_occluded,
                    }
                    for t in scene.triplets
                ],
            }
            f.write(json.dumps(record, separators=(",", ":")) + "\n")


def load_scene_dataset(path: str | Path) -> list[SyntheticScene]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"scene dataset not found: {path}")
    from PIL import Image

    scenes = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            instances = []
            for ir in rec["instances"]:
                with Image.open(path.parent / ir["mask_ref"]) as img:
                    mask = (np.asarray(img.convert("L")) >= 128).astype(np.float32)
                instances.append(
                    SceneInstance(
                        kind=ir["kind"],
                        class_id=ir["class_id"],
                        box=np.asarray(ir["box"], dtype=np.float64),
                        mask=mask,
                    )
                )
            triplets = [
                SceneTriplet(
                    t["human_idx"], t["object_idx"], t["interaction_class"], t["object_occluded"]
                )
                for t in rec["triplets"]
            ]
            scene = SyntheticScene(rec["scene_id"], rec["image_size"], instances, triplets)
            scene.image = render_scene_image(instances, rec["image_size"])
            scenes.append(scene)
    return scenes
