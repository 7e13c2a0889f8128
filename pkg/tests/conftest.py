import pytest

from failscope.dataset import (
    Dataset,
    FeatureCatalog,
    FeatureDescriptor,
    Instance,
)


@pytest.fixture
def small_catalog():
    return FeatureCatalog([
        FeatureDescriptor("has_ball", "content", "crowd", "binary"),
        FeatureDescriptor("has_pan", "content", "crowd", "binary"),
        FeatureDescriptor("detected_ball", "content", "system", "binary"),
        FeatureDescriptor("term_count", "content", "crowd", "count"),
        FeatureDescriptor("detector_precision", "component", "crowd", "continuous"),
        FeatureDescriptor("confidence_avg", "component", "system", "continuous"),
    ])


def make_instance(
    inst_id,
    label="satisfactory",
    features=None,
    votes=None,
    crowd_terms=("ball",),
    system_terms=("ball",),
):
    base = {"term_count": 1.0, "detector_precision": 0.9, "confidence_avg": 0.8}
    base.update(features or {})
    return Instance(
        id=inst_id,
        feature_values=base,
        label=label,
        votes=votes,
        content_terms={"crowd": tuple(crowd_terms), "system": tuple(system_terms)},
    )


@pytest.fixture
def small_dataset(small_catalog):
    instances = [
        make_instance("a", "satisfactory", {"has_ball": 1.0}, votes=(1, 1, 1)),
        make_instance("b", "unsatisfactory", {"has_pan": 1.0}, votes=(0, 0, 1)),
        make_instance("c", "satisfactory", {"has_ball": 1.0, "detected_ball": 1.0}, votes=(1, 0, 1)),
    ]
    return Dataset(small_catalog, tuple(instances), provenance="fixture")
