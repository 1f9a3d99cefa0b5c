import math

import pytest

from modules.core import InvalidArgumentError
from modules.model import (
    BitChannelModel,
    EncryptionParams,
    Priors,
    ToleranceSpec,
    admissible_axis_limits,
    effective_probs,
    gaussian_shift_preset,
    require_admissible,
    validate_admissible,
)


class TestBitChannelModel:
    def test_rejects_p_below_half(self):
        with pytest.raises(InvalidArgumentError):
            BitChannelModel(p=0.4, q=0.6)

    def test_rejects_asymmetric_pair(self):
        with pytest.raises(InvalidArgumentError, match="p \\+ q = 1"):
            BitChannelModel(p=0.7, q=0.2)

    def test_invalid_argument_is_a_value_error(self):
        with pytest.raises(ValueError):
            BitChannelModel.from_p(1.0)

    def test_gaussian_preset(self, gaussian_model):
        assert gaussian_model.p == pytest.approx(0.691462, abs=1e-6)
        assert gaussian_model.q == pytest.approx(1.0 - gaussian_model.p)

    @pytest.mark.parametrize("theta,sigma", [(0.0, 1.0), (1.0, -1.0)])
    def test_gaussian_preset_rejects_nonpositive(self, theta, sigma):
        with pytest.raises(InvalidArgumentError):
            gaussian_shift_preset(theta, sigma)


class TestEffectiveProbs:
    def test_identity_encryption(self, model_07):
        eff = effective_probs(model_07, EncryptionParams())
        assert eff.p_tilde == pytest.approx(0.7)
        assert eff.q_tilde == pytest.approx(0.3)
        assert eff.eta == pytest.approx(eff.eta_tilde)

    def test_quarter_flips(self, model_07):
        eff = effective_probs(model_07, EncryptionParams(0.25, 0.25))
        assert eff.p_tilde == pytest.approx(0.6)
        assert eff.q_tilde == pytest.approx(0.4)
        assert eff.eta == pytest.approx(math.log(7.0 / 3.0))
        assert eff.mu == pytest.approx(1.5)
        assert eff.nu == pytest.approx(1.5)

    def test_gap_scales_with_flip_mass(self, gaussian_model):
        for enc in (EncryptionParams(0.1, 0.3), EncryptionParams(0.6, 0.7), EncryptionParams(0.0, 0.2)):
            eff = effective_probs(gaussian_model, enc)
            scale = 1.0 - enc.psi0 - enc.psi1
            assert eff.p_tilde - eff.q_tilde == pytest.approx(scale * (gaussian_model.p - gaussian_model.q))

    def test_full_flip_swaps_hypotheses(self, model_07):
        eff = effective_probs(model_07, EncryptionParams(1.0, 1.0))
        assert eff.p_tilde == pytest.approx(0.3)
        assert eff.q_tilde == pytest.approx(0.7)
        assert not eff.admissible


class TestAdmissibility:
    def test_small_flips_are_admissible(self, model_07):
        report = validate_admissible(model_07, EncryptionParams(0.05, 0.05))
        assert report.admissible
        assert report.violations == []

    def test_large_psi1_breaks_p_tilde(self, model_07):
        report = validate_admissible(model_07, EncryptionParams(0.0, 0.3))
        assert not report.admissible
        assert any("p_tilde" in v for v in report.violations)

    def test_require_admissible_raises(self, model_07):
        with pytest.raises(InvalidArgumentError, match="not admissible"):
            require_admissible(model_07, EncryptionParams(0.5, 0.0))

    def test_axis_limits(self, model_07):
        psi0_limit, psi1_limit = admissible_axis_limits(model_07)
        assert psi0_limit == pytest.approx(0.4 / 1.4)
        assert psi1_limit == pytest.approx(1.0 - 1.0 / 1.4)
        # the limits are exactly where the effective probabilities reach 1/2
        assert effective_probs(model_07, EncryptionParams(psi0_limit, 0.0)).q_tilde == pytest.approx(0.5)
        assert effective_probs(model_07, EncryptionParams(0.0, psi1_limit)).p_tilde == pytest.approx(0.5)


class TestValueTypes:
    def test_flip_probability_range(self):
        with pytest.raises(InvalidArgumentError):
            EncryptionParams(1.2, 0.0)

    def test_symmetric_flag(self):
        assert EncryptionParams(0.05, 0.05).is_symmetric
        assert not EncryptionParams(0.0, 0.1).is_symmetric

    def test_priors_sum_to_one(self):
        with pytest.raises(InvalidArgumentError):
            Priors(0.5, 0.6)
        assert Priors.from_pi0(0.3).pi1 == pytest.approx(0.7)

    def test_tolerance(self):
        tol = ToleranceSpec(0.265, 0.2077)
        assert tol.kappa == 0.265
        assert tol.for_hypothesis(1) == 0.2077
        with pytest.raises(InvalidArgumentError):
            ToleranceSpec(-0.1, 0.2)
