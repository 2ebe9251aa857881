import math

import pytest

import fluxread as fr
from fluxread.constants import E_CHARGE, H_PLANCK, HBAR, PHI0


def test_phi0_value():
    assert PHI0 == pytest.approx(HBAR / (2 * E_CHARGE), rel=0, abs=0)
    assert PHI0 == pytest.approx(3.291059783e-16, rel=1e-9)


def test_to_dimensionless_working_values(pp, dp):
    # independent arithmetic from the raw element values
    L0 = PHI0 / pp.I0
    assert dp.L0 == pytest.approx(L0, rel=1e-14)
    assert dp.lam == pytest.approx(pp.L / L0, rel=1e-14)
    assert dp.lam_r == pytest.approx(pp.Lr / L0, rel=1e-14)
    assert dp.mu == pytest.approx(pp.M / L0, rel=1e-14)
    assert dp.delta_cap == pytest.approx(dp.lam * dp.lam_r - dp.mu**2, rel=1e-14)
    assert dp.E_J == pytest.approx(PHI0 * pp.I0 / H_PLANCK / 1e9, rel=1e-14)
    assert dp.m == pytest.approx(PHI0**2 * pp.C, rel=1e-14)
    assert dp.m_r == pytest.approx(PHI0**2 * pp.Cr, rel=1e-14)
    # rounded anchor values
    assert dp.lam == pytest.approx(3.72, abs=0.005)
    assert dp.lam_r == pytest.approx(119, abs=0.5)
    assert dp.mu == pytest.approx(5.17, abs=0.01)
    assert dp.delta_cap == pytest.approx(415, abs=0.5)
    assert dp.E_J == pytest.approx(844, abs=1.0)


def test_bare_resonator_frequency(dp):
    assert dp.f_r * 1e9 == pytest.approx(0.5e9, rel=1e-3)


def test_zero_mutual(pp):
    dp0 = fr.to_dimensionless(pp.with_(M=0.0))
    assert dp0.mu == 0.0
    assert dp0.delta_cap == pytest.approx(dp0.lam * dp0.lam_r, rel=1e-15)


def test_degenerate_coupling_rejected(pp):
    with pytest.raises(fr.DegenerateCouplingError):
        fr.to_dimensionless(pp.with_(M=1.0000001 * math.sqrt(pp.L * pp.Lr)))
    with pytest.raises(fr.DegenerateCouplingError):
        pp.with_(M=5e-9)  # M^2 > L*Lr for the working L, Lr


@pytest.mark.parametrize("field", ["C", "L", "I0", "Cr", "Lr"])
def test_nonpositive_elements_rejected(pp, field):
    with pytest.raises(ValueError):
        pp.with_(**{field: 0.0})
    with pytest.raises(ValueError):
        pp.with_(**{field: -1e-12})


def test_currents_zero_at_bias_point(dp):
    I, I_r = fr.currents_from_fluxes(dp.phi_p, 0.0, dp)
    assert I == 0.0
    assert I_r == 0.0


def test_currents_decoupled_form(pp):
    dp0 = fr.to_dimensionless(pp.with_(M=0.0))
    phi, phi_r = dp0.phi_p + 0.1, 0.05
    I, I_r = fr.currents_from_fluxes(phi, phi_r, dp0)
    assert I == pytest.approx(PHI0 * (phi - dp0.phi_p) / pp.L, rel=1e-12)
    assert I_r == pytest.approx(PHI0 * phi_r / pp.Lr, rel=1e-12)


def test_current_flux_round_trip_working(dp):
    phi, phi_r = dp.phi_p + 0.1, 0.05
    I, I_r = fr.currents_from_fluxes(phi, phi_r, dp)
    phi2, phi_r2 = fr.fluxes_from_currents(I, I_r, dp)
    assert phi2 == pytest.approx(phi, rel=1e-12)
    assert phi_r2 == pytest.approx(phi_r, rel=1e-12)


def test_current_flux_round_trip_property(rng):
    for _ in range(25):
        L = 10 ** rng.uniform(-10.5, -8.5)
        Lr = 10 ** rng.uniform(-9, -7.5)
        M = rng.uniform(0.0, 0.95) * math.sqrt(L * Lr)
        pp = fr.PhysicalParams().with_(L=L, Lr=Lr, M=M)
        dp = fr.to_dimensionless(pp)
        phi = dp.phi_p + rng.uniform(-2, 2)
        phi_r = rng.uniform(-10, 10)
        I, I_r = fr.currents_from_fluxes(phi, phi_r, dp)
        phi2, phi_r2 = fr.fluxes_from_currents(I, I_r, dp)
        assert phi2 == pytest.approx(phi, rel=1e-12, abs=1e-12)
        assert phi_r2 == pytest.approx(phi_r, rel=1e-12, abs=1e-12)


def test_scale_consistency(pp, dp):
    s = 1.7
    dps = fr.to_dimensionless(pp.with_(L=pp.L * s, Lr=pp.Lr * s, M=pp.M * s))
    assert dps.lam == pytest.approx(s * dp.lam, rel=1e-13)
    assert dps.lam_r == pytest.approx(s * dp.lam_r, rel=1e-13)
    assert dps.mu == pytest.approx(s * dp.mu, rel=1e-13)
    assert dps.delta_cap == pytest.approx(s**2 * dp.delta_cap, rel=1e-13)


def test_mr_initial_state(dp):
    st = fr.mr_initial_state(dp, 0.0)
    assert st.phi_r == 0.0 and st.p_r == 0.0
    st10 = fr.mr_initial_state(dp, 10.0)
    # arithmetic oracle sqrt(2 * phi0^2 Cr * n hbar*2pi f)
    oracle = math.sqrt(2.0 * dp.m_r * 10.0 * H_PLANCK * dp.f_r * 1e9)
    assert st10.p_r == pytest.approx(oracle, rel=1e-14)
    assert st10.p_r > 0  # positive root: theta starts at 0 increasing
    st40 = fr.mr_initial_state(dp, 40.0)
    assert st40.p_r / st10.p_r == pytest.approx(2.0, rel=1e-12)
    assert st10.delta is None and st10.p is None
    with pytest.raises(ValueError):
        fr.mr_initial_state(dp, -1.0)


def test_kinetic_coefficient_unit_contract(dp):
    # hbar^2/(2 m h) expressed in GHz
    assert dp.kinetic_coeff == pytest.approx(
        HBAR**2 / (2 * dp.m * H_PLANCK) / 1e9, rel=1e-14)


def test_config_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment line\n"
        "C_fF = 650\n"
        "M_nH = 1.8\n"
        "phi_p = 4.95\n"
        "n_quanta 12\n"
    )
    pp = fr.load_config(cfg)
    assert pp.C == pytest.approx(650e-15)
    assert pp.M == pytest.approx(1.8e-9)
    assert pp.phi_p == 4.95
    assert pp.n_quanta == 12
    assert pp.L == fr.PhysicalParams().L  # untouched keys keep working values


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("C_pF = 0.7\n")
    with pytest.raises(ValueError, match="unknown key"):
        fr.load_config(cfg)
