import numpy as np
import pytest

from fbmc_pevd.pevd import (PEVDParams, hermitian_eig, jacobi_rotation, pevd_decompose,
                            spectral_majorization_defect)
from fbmc_pevd.polymat import (LaurentPoly, PolyMatrix, diag_from_polys, diagonal_of,
                               pm_eval, pm_fro_norm, pm_parah)

from conftest import random_parahermitian, random_pm


def reconstruction_error(r, res):
    return pm_fro_norm(r - res.Q @ res.A @ pm_parah(res.Q)) / pm_fro_norm(r)


def unitarity_error(q):
    n = q.rows
    return max(pm_fro_norm(q @ pm_parah(q) - PolyMatrix.identity(n)),
               pm_fro_norm(pm_parah(q) @ q - PolyMatrix.identity(n)))


class TestParams:
    def test_rejects_unknown_algorithm(self):
        with pytest.raises(ValueError):
            PEVDParams("qr")

    def test_rejects_zero_iterations(self):
        with pytest.raises(ValueError):
            PEVDParams(max_iterations=0)

    def test_rejects_negative_mu(self):
        with pytest.raises(ValueError):
            PEVDParams(trim_threshold=-1e-3)

    def test_case_insensitive(self):
        assert PEVDParams("SMD").algorithm == "smd"


class TestJacobi:
    @pytest.mark.parametrize("a,d,b", [(2.0, 1.0, 0.5 + 0.5j), (1.0, 3.0, -2j), (1.0, 1.0, 1.0)])
    def test_diagonalizes(self, a, d, b):
        s = np.array([[a, b], [np.conj(b), d]])
        g = jacobi_rotation(a, d, b)
        np.testing.assert_allclose(g @ g.conj().T, np.eye(2), atol=1e-15)
        t = g @ s @ g.conj().T
        assert abs(t[0, 1]) < 1e-14
        assert t[0, 0].real >= t[1, 1].real

    def test_hermitian_eig(self, rng):
        x = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        s = x + x.conj().T
        w, v = hermitian_eig(s)
        np.testing.assert_allclose(np.sort(w)[::-1], np.linalg.eigvalsh(s)[::-1], atol=1e-12)
        assert np.all(np.diff(w) <= 0)
        np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, s, atol=1e-12)


class TestDecomposeExamples:
    @pytest.mark.parametrize("algo", ["sbr2", "smd"])
    def test_identity(self, algo):
        res = pevd_decompose(PolyMatrix.identity(3), PEVDParams(algo, 5))
        assert pm_fro_norm(res.Q - PolyMatrix.identity(3)) == 0
        assert pm_fro_norm(res.A - PolyMatrix.identity(3)) == 0
        assert np.all(res.trace == 0)

    @pytest.mark.parametrize("algo", ["sbr2", "smd"])
    def test_ordered_diagonal_untouched(self, algo):
        r = PolyMatrix.constant(np.diag([3.0, 2.0, 1.0]))
        res = pevd_decompose(r, PEVDParams(algo, 10))
        assert pm_fro_norm(res.A - r) == 0
        assert pm_fro_norm(res.Q - PolyMatrix.identity(3)) == 0

    def test_unordered_diagonal_is_sorted(self):
        r = PolyMatrix.constant(np.diag([1.0, 3.0]))
        res = pevd_decompose(r, PEVDParams("sbr2", 3))
        np.testing.assert_allclose(np.diag(res.A.slice_at(0)).real, [3.0, 1.0])
        assert reconstruction_error(r, res) < 1e-15

    @pytest.mark.parametrize("algo", ["sbr2", "smd"])
    def test_random_3x6_order4(self, algo):
        rng = np.random.default_rng(7)
        g = random_pm(rng, 3, 6, 5)
        r = g @ pm_parah(g)
        res = pevd_decompose(r, PEVDParams(algo, 30))
        assert reconstruction_error(r, res) <= 1e-8
        ratio = res.trace[-1] / pm_fro_norm(r) ** 2
        print(f"{algo}: off-diagonal energy ratio after 30 iterations {ratio:.3e}")
        assert ratio <= 1e-3


class TestDecomposeErrors:
    def test_non_square(self):
        with pytest.raises(ValueError):
            pevd_decompose(PolyMatrix.zeros(2, 3))

    def test_not_parahermitian(self, rng):
        with pytest.raises(ValueError):
            pevd_decompose(random_pm(rng, 3, 3, 3, -1))

    def test_non_finite(self):
        c = np.eye(2)[None].astype(complex)
        c[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            pevd_decompose(PolyMatrix(c))


SEEDS = range(10)


@pytest.fixture(scope="module")
def ensemble():
    """Decompositions of 6x6 para-Hermitian matrices of order 8, both algorithms."""
    out = []
    for seed in SEEDS:
        r = random_parahermitian(np.random.default_rng(seed), 6, 8)
        out.append((r, {a: pevd_decompose(r, PEVDParams(a, 30)) for a in ("sbr2", "smd")}))
    return out


@pytest.mark.parametrize("algo", ["sbr2", "smd"])
class TestDecomposeInvariants:
    def test_reconstruction(self, ensemble, algo):
        for r, res in ensemble:
            assert reconstruction_error(r, res[algo]) <= 1e-8

    def test_paraunitary(self, ensemble, algo):
        for _, res in ensemble:
            assert unitarity_error(res[algo].Q) <= 1e-8

    def test_energy_conserved(self, ensemble, algo):
        for r, res in ensemble:
            assert pm_fro_norm(res[algo].A) ** 2 == pytest.approx(pm_fro_norm(r) ** 2, rel=1e-8)

    def test_eigenvalues_symmetric(self, ensemble, algo):
        for _, res in ensemble:
            a = res[algo].A
            for i in range(a.rows):
                p = a.entry(i, i)
                m = max(abs(p.lag_min), abs(p.lag_max))
                w = p.window(-m, m)
                assert np.max(np.abs(w - np.conj(w[::-1]))) <= 1e-8

    def test_trace_non_increasing(self, ensemble, algo):
        worst = 0.0
        for r, res in ensemble:
            t = res[algo].trace
            worst = max(worst, np.max(np.diff(t)) / t[0])
        print(f"{algo}: largest trace increase {worst:.2e} of the initial value")
        assert worst <= 1e-12

    def test_trace_length(self, ensemble, algo):
        for _, res in ensemble:
            assert len(res[algo].trace) == res[algo].iterations_run + 1 == 31


def test_smd_beats_sbr2(ensemble):
    violations = sum(res["smd"].trace[-1] > res["sbr2"].trace[-1] for _, res in ensemble)
    assert violations <= 1


def test_stop_threshold_ends_early():
    r = random_parahermitian(np.random.default_rng(3), 4, 4)
    res = pevd_decompose(r, PEVDParams("sbr2", 500, stop_threshold=1e-3))
    assert res.iterations_run < 500
    assert len(res.trace) == res.iterations_run + 1


def test_trim_bounds_order():
    r = random_parahermitian(np.random.default_rng(4), 4, 6)
    full = pevd_decompose(r, PEVDParams("smd", 20))
    trimmed = pevd_decompose(r, PEVDParams("smd", 20, trim_threshold=1e-3))
    assert trimmed.Q.n_lags <= full.Q.n_lags
    assert trimmed.A.n_lags <= full.A.n_lags


def test_deterministic():
    r = random_parahermitian(np.random.default_rng(5), 4, 6)
    a = pevd_decompose(r, PEVDParams("sbr2", 15))
    b = pevd_decompose(r, PEVDParams("sbr2", 15))
    assert np.array_equal(a.Q.coeffs, b.Q.coeffs)
    assert np.array_equal(a.trace, b.trace)


def test_trace_csv(tmp_path):
    r = random_parahermitian(np.random.default_rng(6), 3, 4)
    res = pevd_decompose(r, PEVDParams("sbr2", 4))
    path = tmp_path / "trace.csv"
    res.write_trace_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,off_diag_energy,Q_order,A_order"
    assert len(lines) == 6


class TestMajorization:
    def test_ordered_constant(self):
        a = PolyMatrix.constant(np.diag([3.0, 2.0, 1.0]))
        assert spectral_majorization_defect(a, 16) == 0.0

    def test_inverted_pair(self):
        a = PolyMatrix.constant(np.diag([1.0, 2.0]))
        assert spectral_majorization_defect(a, 32) == pytest.approx(32.0)

    def test_requires_diagonal(self):
        with pytest.raises(ValueError):
            spectral_majorization_defect(PolyMatrix.constant(np.ones((2, 2))))

    def test_pevd_output_nearly_majorized(self):
        r = random_parahermitian(np.random.default_rng(11), 4, 6)
        res = pevd_decompose(r, PEVDParams("sbr2", 60))
        d = diagonal_of(res.A)
        mass = sum(np.sum(np.abs(np.diag(pm_eval(d, 2 * np.pi * g / 64).real)))
                   for g in range(64))
        defect = spectral_majorization_defect(d, 64)
        print(f"majorization defect {defect / mass:.3%} of diagonal PSD mass")
        assert defect <= 0.05 * mass
