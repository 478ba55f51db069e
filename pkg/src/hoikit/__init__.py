"""hoikit: keypoint-based human-object interaction detection at desk scale."""

__version__ = "0.1.0"
