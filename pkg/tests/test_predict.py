import math

import numpy as np
import pytest

from msextrap.errors import DomainError, ProblemError
from msextrap.predict import (
    ForecastProblem,
    OptimizerConfig,
    Variant,
    analytic_psi1,
    bootstrap_Y,
    build_learning_samples,
    draw_bootstrap_indices,
    extension_sites,
    forecast_field_2d,
    forecast_path,
    grad_phi,
    grad_q,
    learning_translations,
    max_linear,
    nearest_sites,
    sgd_minimize,
    target_phi,
)
from msextrap.simulate import GridSpec, Path, simulate_max_stable
from msextrap.taildep import ModelSpec, complete_dependence, independence, pair_tdf, TailDepFn


def _series(rng, length=203, kind="br", sigma=1.68):
    return simulate_max_stable(ModelSpec(kind, sigma), GridSpec.line(length), rng)


def test_max_linear():
    x = np.array([3.0, 1.0, 2.0])
    assert max_linear([0, 1, 0], x) == 1.0
    assert max_linear([1, 1, 1], x) == 3.0
    assert max_linear([0, 0, 2], x) == 4.0
    with pytest.raises(DomainError):
        max_linear([1, 1], x)
    with pytest.raises(DomainError):
        max_linear([0, 0, 0], x)


def test_learning_sample_layout(rng):
    prob = build_learning_samples(_series(rng), 2, 1, 100)
    assert prob.forecast_sites[:, 0].tolist() == [201, 202]
    assert prob.target.tolist() == [203]
    assert prob.shifts[:, 0].tolist() == list(range(-2, -201, -2))
    windows = prob.forecast_sites[:, 0][None, :] + prob.shifts
    assert windows.min() == 1 and windows.max() == 200
    assert len(np.unique(windows)) == 200  # non-overlapping


def test_learning_samples_long_series(rng):
    s = _series(rng, 2141)
    prob = build_learning_samples(s, 21, 20, 100, step=20)
    assert prob.forecast_sites[-1, 0] == 2121
    assert prob.target[0] == 2141
    W, X0, xf = prob.design()
    assert W.shape == (100, 21) and xf.shape == (21,)
    # learning target for the first window sits inside the forecast window, never in the held-out tail
    assert prob.target[0] + prob.shifts[:, 0].max() <= 2121


def test_learning_samples_errors(rng):
    s = _series(rng, 50)
    with pytest.raises(ProblemError, match="203"):
        build_learning_samples(s, 2, 1, 100)
    with pytest.raises(ProblemError):
        build_learning_samples(s, 2, 1, 10, step=3)


def test_problem_validation(rng):
    s = _series(rng, 20)
    with pytest.raises(ProblemError):
        ForecastProblem(s, [[10], [11]], [11], [[-2]])  # target in forecast sample
    with pytest.raises(ProblemError):
        ForecastProblem(s, [[10], [11]], [12], [[-1]])  # overlap
    with pytest.raises(ProblemError):
        ForecastProblem(s, [[10], [11]], [12], [[-10]])  # leaves grid


def test_problem_json_roundtrip(rng):
    prob = build_learning_samples(_series(rng, 30), 3, 2, 5, gamma=1.5, variant="bootstrap")
    cfg = OptimizerConfig(eta=0.05, seed=3)
    back, opt = ForecastProblem.from_json(prob.to_json(cfg))
    assert opt == cfg
    assert back.variant is Variant.BOOTSTRAP and back.gamma == 1.5
    for a, b in zip(prob.design(), back.design()):
        assert np.array_equal(a, b)


def _tiny(gamma=0.0, variant="non-bootstrap"):
    # N=2, n=1: sites 1..4, forecast {3}, target 4, windows {2}, {1}
    vals = np.array([0.7, 2.0, 1.5, 0.9])
    p = Path(GridSpec.line(4), vals)
    return ForecastProblem(p, [[3]], [4], [[-1], [-2]], gamma=gamma, variant=variant)


def test_phi_tiny_by_hand():
    prob = _tiny(gamma=2.0)
    lam = 1.3
    H = lambda x: math.exp(-1 / x)
    # window j=1: X=2.0 target 1.5 ; j=2: X=0.7 target 2.0
    pairs = [(2.0, 1.5), (0.7, 2.0)]
    U = [H(lam * x) for x, _ in pairs]
    exc = sum(2 * H(max(t, lam * x)) - H(lam * x) - 0.5 for x, t in pairs) / 2
    # Q_1 penalty: 1/3 + U1^2 - (U1)/2 ; Q_2: 1/3 + U2^2 - (U2 + 2 max(U1,U2))/2
    pen = (1 / 3 + U[0] ** 2 - U[0] / 2 + 1 / 3 + U[1] ** 2 - (U[1] + 2 * max(U)) / 2) / 2
    assert target_phi([lam], prob) == pytest.approx(exc + 2.0 * pen, abs=1e-14)
    assert target_phi([lam], _tiny(0.0)) == pytest.approx(exc, abs=1e-14)


def test_phi_bootstrap_by_hand():
    prob = _tiny(gamma=1.0, variant="bootstrap")
    H = lambda x: math.exp(-1 / x)
    hidx = np.array([1, 1])
    U = [H(2.0), H(0.7)]
    exc = (2 * H(2.0) - U[0] - 0.5 + 2 * H(2.0) - U[1] - 0.5) / 2
    pen = sum(1 / 3 - max(U[j], U[hidx[j]]) + U[j] ** 2 for j in range(2)) / 2
    assert target_phi([1.0], prob, hidx=hidx) == pytest.approx(exc + pen, abs=1e-14)


def test_gradient_single_coordinate_formula():
    prob = _tiny()
    lam = 0.8
    for j, (x, t) in enumerate([(2.0, 1.5), (0.7, 2.0)]):
        m = lam * x
        h = math.exp(-1 / m) / m**2
        expected = ((2.0 if t < m else 0.0) - 1.0) * h * x
        assert grad_q([lam], prob, j)[0] == pytest.approx(expected)


def test_inactive_coordinate_has_zero_gradient():
    vals = np.array([1.0, 5.0, 1.0, 5.0, 2.0])
    p = Path(GridSpec.line(5), vals)
    prob = ForecastProblem(p, [[3], [4]], [5], [[-2]], gamma=0.0)
    g = grad_q([1.0, 1.0], prob, 0)
    assert g[0] == 0.0 and g[1] != 0.0


@pytest.mark.parametrize("variant", ["non-bootstrap", "bootstrap"])
def test_gradient_finite_differences(variant, rng):
    s = _series(rng, 3 * 30 + 3 + 1)
    prob = build_learning_samples(s, 3, 1, 30, gamma=3.0, variant=variant)
    hidx = draw_bootstrap_indices(30, rng)
    for _ in range(40):
        lam = np.exp(rng.normal(size=3))
        g = grad_phi(lam, prob, hidx=hidx)
        mean_q = np.mean([grad_q(lam, prob, j, hidx=hidx) for j in range(30)], axis=0)
        assert np.allclose(g, mean_q, rtol=1e-10, atol=1e-14)
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1e-6
            fd = (target_phi(lam + e, prob, hidx=hidx) - target_phi(lam - e, prob, hidx=hidx)) / 2e-6
            assert g[i] == pytest.approx(fd, rel=1e-4, abs=1e-9)


def test_bootstrap_self_pairing_is_exact():
    prob = _tiny(gamma=4.0, variant="bootstrap")
    hidx = np.array([0, 1])  # every window paired with itself
    lam = np.array([1.1])
    fd = (target_phi(lam + 1e-6, prob, hidx=hidx) - target_phi(lam - 1e-6, prob, hidx=hidx)) / 2e-6
    assert grad_phi(lam, prob, hidx=hidx)[0] == pytest.approx(fd, rel=1e-6)


def test_bootstrap_Y(rng):
    prob = _tiny(variant="bootstrap")
    y = bootstrap_Y(prob, [1.0], hidx=np.array([1, 1]))
    assert np.allclose(y, math.exp(-1 / 0.7))
    vals = np.ones(7)
    same = ForecastProblem(Path(GridSpec.line(7), vals), [[5]], [7], [[-1], [-2], [-3]])
    assert np.unique(bootstrap_Y(same, [1.0], rng)).size == 1
    one = ForecastProblem(Path(GridSpec.line(4), [1, 2, 3, 4.0]), [[3]], [4], [[-1]])
    a = bootstrap_Y(one, [1.0], np.random.default_rng(1))
    assert a.shape == (1,) and a[0] == math.exp(-1 / 2)


def test_bootstrap_resampling_distribution(rng):
    s = _series(rng, 2 * 40 + 2 + 1)
    prob = build_learning_samples(s, 2, 1, 40)
    W, _, _ = prob.design()
    lam = np.array([0.5, 0.9])
    pool = np.exp(-1 / (W * lam).max(axis=1))
    ys = np.concatenate([bootstrap_Y(prob, lam, rng) for _ in range(500)])
    assert set(np.round(ys, 12)) <= set(np.round(pool, 12))
    # each window resampled about equally often
    counts = np.array([np.sum(np.isclose(ys, p)) for p in pool])
    assert counts.min() > 0.6 * len(ys) / 40


def test_sgd_improves_and_is_reproducible(rng):
    prob = build_learning_samples(_series(rng), 2, 1, 100, gamma=2.0)
    cfg = OptimizerConfig(seed=11)
    r1 = sgd_minimize(prob, cfg)
    r2 = sgd_minimize(prob, cfg)
    assert r1.phi <= target_phi(np.ones(2), prob)
    assert r1.phi == pytest.approx(target_phi(r1.weights.lam, prob))
    assert np.array_equal(r1.weights.lam, r2.weights.lam)
    assert r1.n_iter < cfg.max_iters


def test_sgd_patience_one_returns_start():
    # a start sitting at the minimum: every step makes things worse
    vals = np.array([1.0, 1.0, 1.0, 1.0])
    prob = ForecastProblem(Path(GridSpec.line(4), vals), [[3]], [4], [[-1], [-2]], gamma=0.0)
    lam0 = np.array([1.0])
    start = target_phi(lam0, prob)
    res = sgd_minimize(prob, OptimizerConfig(patience=1), lam0=lam0)
    if res.n_iter == 1 and res.trace[0] >= start:
        assert np.array_equal(res.weights.lam, lam0)
        assert res.phi == start


def test_sgd_patience_one_worsening_step(rng):
    prob = build_learning_samples(_series(rng), 2, 1, 100, gamma=5.0)
    # search a seed whose first step worsens the target
    for seed in range(50):
        res = sgd_minimize(prob, OptimizerConfig(patience=1, seed=seed))
        if res.trace[0] >= target_phi(np.ones(2), prob):
            assert res.n_iter == 1
            assert np.array_equal(res.weights.lam, np.ones(2))
            return
    pytest.skip("no worsening first step found")


@pytest.mark.parametrize("method,log_param", [("adam", True), ("classic-sgd", True), ("classic-sgd", False)])
def test_optimizer_variants_run(method, log_param, rng):
    prob = build_learning_samples(_series(rng), 2, 1, 100, gamma=1.0)
    res = sgd_minimize(prob, OptimizerConfig(method=method, reparametrize_log=log_param, max_iters=3000))
    assert np.all(res.weights.lam >= 0)
    assert res.phi <= target_phi(np.ones(2), prob)


def test_psi1_limits_and_unit_vector():
    for theta in (1.01, 1.3, 1.7, 2.0):
        l = TailDepFn(3, lambda x, t=theta: pair_tdf(ModelSpec("br", 1.0), 1.0)(x[:2]) * 0 + _l3(x, t))
        gamma = 2.5
        assert analytic_psi1(l, np.full(2, 1e-8), gamma) == pytest.approx(gamma / 3, abs=1e-6)
        assert analytic_psi1(l, np.full(2, 1e8), gamma) == pytest.approx(gamma / 3, abs=1e-6)
        v = analytic_psi1(l, np.array([1.0, 0.0]), gamma)
        assert v == pytest.approx((theta - 3) / (2 * (theta + 1)))
        assert v < 0


def _l3(x, theta):
    # logistic model: coordinates pairwise with extremal coefficient theta
    r = math.log2(theta)
    top = float(np.max(x))
    if top == 0.0:
        return 0.0
    return top * float(np.sum((x / top) ** (1 / r)) ** r)


def test_psi1_independent_depends_on_sum_only(rng):
    l = independence(4)
    for c in (0.3, 1.0, 2.5):
        vals = []
        for _ in range(20):
            w = rng.dirichlet(np.ones(3)) * c
            vals.append(analytic_psi1(l, w, 1.0))
        assert np.ptp(vals) < 1e-15


def test_psi1_complete_dependence_solution_set():
    l = complete_dependence(3)
    grid = np.linspace(0.01, 3, 300)
    vals = [analytic_psi1(l, np.array([y, y / 2]), 1.0) for y in grid]
    y0 = grid[int(np.argmin(vals))]
    # any w with the same sup-norm gives the same value
    for w in ([y0, 0.0], [y0, y0], [0.1, y0]):
        assert analytic_psi1(l, np.array(w), 1.0) == pytest.approx(min(vals))


def test_forecast_path(rng):
    s = _series(rng, 3 * 40 + 3 + 3)
    preds = forecast_path(s, 3, 3, 40, gamma=1.0)
    assert preds.shape == (3,) and np.all(preds > 0)
    assert forecast_path(s, 0, 3, 40, gamma=1.0).size == 0
    with pytest.raises(ProblemError):
        forecast_path(s, 4, 3, 40, gamma=1.0)


def test_nearest_sites_tie_breaking():
    obs = GridSpec.square(3).sites
    t = np.array([2, 4])  # just right of the middle column
    near = nearest_sites(obs, t, 2)
    assert near[0].tolist() == [2, 3]
    # (1,3) and (3,3) are equidistant: angle picks (3,3) at 5 pi/4 vs (1,3) at ... deterministic
    assert np.array_equal(nearest_sites(obs, t, 2), near)
    assert len({tuple(s) for s in nearest_sites(obs, t, 4).tolist()}) == 4


def test_extension_sites_count():
    assert len(extension_sites(3, 1)) == 7
    assert len(extension_sites(50, 10)) == 60 * 60 - 50 * 50


def test_learning_translations_and_errors():
    fs = np.array([[3, 3], [3, 2]])
    shifts = learning_translations(6, fs, np.array([3, 4]), 5)
    assert len(shifts) == 5
    for k in shifts:
        assert not {tuple(s) for s in (fs + k).tolist()} & {(3, 3), (3, 2)}
    with pytest.raises(ProblemError):
        learning_translations(3, fs, np.array([3, 4]), 100)


def test_forecast_field_2d(rng):
    field = simulate_max_stable(ModelSpec("smith", 0.594, 2), GridSpec.square(8), rng)
    out = forecast_field_2d(field, 1, gamma=1.0, N=10, config=OptimizerConfig(max_iters=500))
    assert out.grid.side() == 9
    m = out.as_matrix()
    assert np.array_equal(m[:8, :8], field.as_matrix())
    assert np.all(m > 0)
    with pytest.raises(DomainError):
        forecast_field_2d(field, 0, gamma=1.0)
