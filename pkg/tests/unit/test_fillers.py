"""
Unit Tests for Window Fillers
=============================
"""

import numpy as np
import pytest

from src.core.evidence.fillers import (
    ConditionalFiller,
    MarginalFiller,
    WindowFiller,
    make_filler,
)
from src.core.evidence.maps import EvidenceError
from src.core.nn.architectures import make_rng
from src.core.patches.gaussian import conditional_params, ring_for_window
from src.models.schemas import ExplainConfig, Sampling
from tests.utils.mocks import MockDiscreteFiller, create_mock_fillers

CONDITIONAL = ExplainConfig(k=4, l=8, sampling=Sampling.CONDITIONAL)
MARGINAL = ExplainConfig(k=4, l=8, sampling=Sampling.MARGINAL)


@pytest.mark.unit
class TestMakeFiller:
    """Test model-to-filler wrapping and its consistency checks."""

    def test_conditional(self, conditional_model):
        assert isinstance(make_filler(conditional_model, CONDITIONAL), ConditionalFiller)

    def test_marginal(self, marginal_model):
        assert isinstance(make_filler(marginal_model, MARGINAL), MarginalFiller)

    def test_conditional_model_with_marginal_sampling(self, conditional_model):
        with pytest.raises(EvidenceError, match="sampling is 'marginal'"):
            make_filler(conditional_model, MARGINAL)

    def test_marginal_model_with_conditional_sampling(self, marginal_model):
        with pytest.raises(EvidenceError, match="sampling is 'conditional'"):
            make_filler(marginal_model, CONDITIONAL)

    def test_geometry_mismatch(self, conditional_model, marginal_model):
        with pytest.raises(EvidenceError, match="fitted with k=4, l=8"):
            make_filler(conditional_model, ExplainConfig(k=3, l=8, sampling=Sampling.CONDITIONAL))
        with pytest.raises(EvidenceError, match="fitted with k=4"):
            make_filler(marginal_model, ExplainConfig(k=2))

    def test_filler_passed_through(self):
        filler = create_mock_fillers(k=4)["binary"]
        assert make_filler(filler, MARGINAL) is filler

    def test_filler_window_checked(self):
        with pytest.raises(EvidenceError, match="filler window k=1"):
            make_filler(MockDiscreteFiller([0.0, 1.0]), MARGINAL)

    def test_unsupported_model(self):
        with pytest.raises(EvidenceError, match="unsupported window model"):
            make_filler("model.evgm", MARGINAL)  # type: ignore[arg-type]


@pytest.mark.unit
class TestConditionalFiller:
    """Test fills conditioned on the outer patch."""

    def test_mean_matches_conditional_params(self, conditional_model, digits):
        image = digits.images[3]
        filler = ConditionalFiller(conditional_model)
        offset, ring = ring_for_window(conditional_model, image, 5, 9)
        expected, _ = conditional_params(conditional_model, offset, ring)
        np.testing.assert_array_equal(filler.mean(image, 5, 9), expected.reshape(1, 4, 4))

    def test_samples_shape_and_determinism(self, conditional_model, digits):
        filler: WindowFiller = ConditionalFiller(conditional_model)
        image = digits.images[0]
        a = filler.samples(image, 0, 24, make_rng(3), 6)
        b = filler.samples(image, 0, 24, make_rng(3), 6)
        assert a.shape == (6, 1, 4, 4)
        assert a.tobytes() == b.tobytes()

    def test_samples_depend_on_context(self, conditional_model, digits):
        filler = ConditionalFiller(conditional_model)
        a = filler.mean(digits.images[0], 12, 12)
        b = filler.mean(digits.images[1], 12, 12)
        assert not np.array_equal(a, b)


@pytest.mark.unit
class TestMarginalFiller:
    """Test context-free fills."""

    def test_mean_ignores_image(self, marginal_model, digits):
        filler = MarginalFiller(marginal_model)
        np.testing.assert_array_equal(filler.mean(digits.images[0], 0, 0), marginal_model.mean)
        np.testing.assert_array_equal(filler.mean(digits.images[5], 10, 3), marginal_model.mean)

    def test_samples_shape(self, marginal_model, digits):
        draws = MarginalFiller(marginal_model).samples(digits.images[0], 0, 0, make_rng(1), 9)
        assert draws.shape == (9, 1, 4, 4)


@pytest.mark.unit
class TestMockFillers:
    """Sanity checks for the deterministic test fillers."""

    def test_discrete_samples_cycle(self):
        draws = MockDiscreteFiller([0.0, 1.0]).samples(np.zeros((1, 3, 3)), 0, 0, make_rng(0), 4)
        np.testing.assert_array_equal(draws.reshape(-1), [0.0, 1.0, 0.0, 1.0])
