import numpy as np
import pytest

from rbfmean.envgen import (
    AnomalySpec,
    ArProcess,
    CartpolePlant,
    LinearFeedbackController,
    LinearPlant,
    PDController,
    apply_semantic,
    ar_sample,
    default_linear_benchmark,
    inject_arno,
    inject_arns,
    make_ar_spec,
    noise_matrix,
    simulate,
)
from rbfmean.errors import ConfigError, ShapeError
from rbfmean.rng import rng_from


class TestArProcess:
    def test_order_validation(self):
        with pytest.raises(ConfigError):
            ArProcess(order=3, coefs=(0.1, 0.1, 0.1), noise_std=1.0)
        with pytest.raises(ConfigError):
            ArProcess(order=2, coefs=(0.5,), noise_std=1.0)

    @pytest.mark.parametrize("coefs", [(1.0,), (-1.0,), (1.2,)])
    def test_ar1_stationarity(self, coefs):
        with pytest.raises(ConfigError):
            ArProcess(order=1, coefs=coefs, noise_std=1.0)

    @pytest.mark.parametrize("coefs", [(0.6, 0.5), (-1.5, -0.6), (0.0, 1.0)])
    def test_ar2_stationarity_triangle(self, coefs):
        with pytest.raises(ConfigError):
            ArProcess(order=2, coefs=coefs, noise_std=1.0)

    def test_iid_case_has_no_lag_correlation(self):
        sample = ar_sample(ArProcess(order=1, coefs=(0.0,), noise_std=1.0, seed=1), 100_000)
        lag1 = np.corrcoef(sample[:-1], sample[1:])[0, 1]
        assert abs(lag1) < 3.0 / np.sqrt(100_000)

    def test_ar1_lag_correlation_matches_coefficient(self):
        sample = ar_sample(ArProcess(order=1, coefs=(0.9,), noise_std=1.0, seed=2), 100_000)
        lag1 = np.corrcoef(sample[:-1], sample[1:])[0, 1]
        assert abs(lag1 - 0.9) < 0.02

    def test_zero_noise_gives_zero_sequence(self):
        sample = ar_sample(ArProcess(order=2, coefs=(0.5, 0.3), noise_std=0.0, seed=3), 500)
        assert np.all(sample == 0.0)

    def test_deterministic_per_seed(self):
        proc = ArProcess(order=1, coefs=(0.8,), noise_std=1.0, seed=4)
        assert np.array_equal(ar_sample(proc, 100), ar_sample(proc, 100))

    @pytest.mark.parametrize("order,coefs", [(1, (0.8,)), (1, (-0.9,)), (2, (0.5, 0.3)), (2, (1.2, -0.4))])
    def test_running_variance_stays_bounded(self, order, coefs):
        proc = ArProcess(order=order, coefs=coefs, noise_std=1.0, seed=5)
        sample = ar_sample(proc, 10_000)
        chunk_vars = [np.var(chunk) for chunk in np.array_split(sample[500:], 10)]
        assert max(chunk_vars) / max(min(chunk_vars), 1e-12) < 100.0


class TestNoiseMatrix:
    def test_rows_are_distinct(self):
        proc = ArProcess(order=1, coefs=(0.8,), noise_std=1.0)
        mat = noise_matrix(proc, 3, 200, seed=6)
        assert not np.array_equal(mat[0], mat[1])
        assert not np.array_equal(mat[1], mat[2])

    def test_deterministic(self):
        proc = ArProcess(order=2, coefs=(0.5, 0.3), noise_std=0.7)
        assert np.array_equal(noise_matrix(proc, 4, 50, seed=7), noise_matrix(proc, 4, 50, seed=7))

    def test_zero_std_zero_matrix(self):
        proc = ArProcess(order=1, coefs=(0.8,), noise_std=0.0)
        assert np.all(noise_matrix(proc, 2, 50, seed=8) == 0.0)


class TestPlants:
    def test_unforced_cartpole_tips_over(self):
        plant = CartpolePlant()
        rng = rng_from(0)
        state = np.array([0.0, 0.0, 0.02, 0.0])
        thetas = [state[2]]
        for _ in range(400):
            state = plant.step(state, np.array([0.0]), rng)
            thetas.append(state[2])
        thetas = np.array(thetas)
        saturated = np.nonzero(thetas >= plant.theta_limit)[0]
        assert saturated.size > 0, "pole never reached the saturation angle"
        first = saturated[0]
        assert np.all(np.diff(thetas[: first + 1]) > 0)
        assert np.all(np.abs(thetas) <= plant.theta_limit)

    def test_pd_keeps_pole_up(self):
        plant, ctrl = CartpolePlant(), PDController()
        for seed in range(3):
            ep = simulate(plant, ctrl, 200, seed)
            assert np.abs(ep.data[2]).max() < plant.theta_limit

    def test_cartpole_saturation_never_nan(self):
        plant = CartpolePlant()
        rng = rng_from(1)
        state = np.array([0.0, 0.0, 0.2, 5.0])
        for _ in range(200):
            state = plant.step(state, np.array([30.0]), rng)
        assert np.all(np.isfinite(state))
        assert abs(state[0]) <= plant.x_limit and abs(state[2]) <= plant.theta_limit

    def test_linear_plant_requires_stable_a(self):
        with pytest.raises(ConfigError):
            LinearPlant(a_matrix=np.eye(2) * 1.1, b_matrix=np.ones((2, 1)))

    def test_degenerate_linear_plant_reproduces_noise_stream(self):
        # A = 0, B = 0: columns are exactly the per-step process noise draws
        plant = LinearPlant(
            a_matrix=np.zeros((3, 3)), b_matrix=np.zeros((3, 1)), process_noise_std=1.0, init_std=1.0
        )
        ctrl = LinearFeedbackController(k_matrix=np.zeros((1, 3)))
        ep = simulate(plant, ctrl, 50, seed=11)
        rng = rng_from(11, 0)
        expected0 = rng.normal(0.0, 1.0, size=3)  # initial state draw
        np.testing.assert_array_equal(ep.data[:, 0], expected0)
        for t in range(1, 50):
            noise = rng.normal(0.0, 1.0, size=3)
            np.testing.assert_array_equal(ep.data[:, t], noise)

    def test_default_benchmark_closed_loop(self):
        plant, ctrl = default_linear_benchmark()
        ep = simulate(plant, ctrl, 500, seed=12)
        assert np.all(np.isfinite(ep.data))
        assert np.abs(ep.data).max() < 50.0


class TestAnomalySpecs:
    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            AnomalySpec(kind="bogus", level="minor", params={}, onset=5)

    def test_onset_must_leave_clean_prefix(self):
        with pytest.raises(ConfigError):
            make_ar_spec("arno", "light", 1, onset=0)

    def test_multiplicative_params_positive(self):
        with pytest.raises(ConfigError):
            AnomalySpec(kind="action_factor", level="minor", params={"factor": 0.0}, onset=5)
        with pytest.raises(ConfigError):
            make_ar_spec("arno", "light", 1, onset=5, level_mult=-1.0)

    def test_injectors(self):
        obs = np.array([1.0, 2.0])
        assert np.array_equal(inject_arno(obs, np.zeros(2)), obs)
        state, action = inject_arns(np.array([1.0, 1.0]), np.array([0.5]), np.array([0.1, 0.2, 0.3]))
        np.testing.assert_allclose(state, [1.1, 1.2])
        np.testing.assert_allclose(action, [0.8])
        with pytest.raises(ShapeError):
            inject_arns(np.array([1.0]), np.array([0.5]), np.array([0.1]))

    def test_apply_semantic_kinds(self):
        rng = rng_from(0)
        u = np.array([2.0])
        spec = AnomalySpec(kind="action_factor", level="minor", params={"factor": 1.5}, onset=5)
        np.testing.assert_allclose(apply_semantic(u, spec, rng), [3.0])
        spec = AnomalySpec(kind="action_offset", level="minor", params={"offset": -1.0}, onset=5)
        np.testing.assert_allclose(apply_semantic(u, spec, rng), [1.0])
        spec = AnomalySpec(kind="action_noise", level="minor", params={"std": 0.0}, onset=5)
        np.testing.assert_allclose(apply_semantic(u, spec, rng), u)


ALL_SPECS = [
    make_ar_spec("arno", "strong", 1, onset=25),
    make_ar_spec("arns", "medium", 2, onset=25),
    AnomalySpec(kind="action_factor", level="severe", params={"factor": 3.0}, onset=25),
    AnomalySpec(kind="action_noise", level="minor", params={"std": 1.0}, onset=25),
    AnomalySpec(kind="action_offset", level="severe", params={"offset": 4.0}, onset=25),
    AnomalySpec(kind="body_mass_factor", level="severe", params={"factor": 3.0}, onset=25),
    AnomalySpec(kind="force_vector", level="minor", params={"force": 2.0}, onset=25),
]


class TestSimulate:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
    def test_anomaly_locality_cartpole(self, spec):
        plant, ctrl = CartpolePlant(), PDController()
        clean = simulate(plant, ctrl, 60, seed=13)
        anom = simulate(plant, ctrl, 60, seed=13, spec=spec)
        assert np.array_equal(clean.data[:, :25], anom.data[:, :25])
        assert not np.array_equal(clean.data[:, 25:], anom.data[:, 25:])
        assert anom.onset == 25

    def test_anomaly_locality_linear(self):
        plant, ctrl = default_linear_benchmark()
        for spec in ALL_SPECS:
            if spec.kind == "body_mass_factor":
                continue
            clean = simulate(plant, ctrl, 60, seed=14)
            anom = simulate(plant, ctrl, 60, seed=14, spec=spec)
            assert np.array_equal(clean.data[:, :25], anom.data[:, :25])

    def test_body_mass_invalid_on_linear(self):
        plant, ctrl = default_linear_benchmark()
        spec = AnomalySpec(kind="body_mass_factor", level="minor", params={"factor": 1.5}, onset=25)
        with pytest.raises(ConfigError):
            simulate(plant, ctrl, 60, seed=15, spec=spec)

    def test_identity_magnitudes_reproduce_clean_run(self):
        plant, ctrl = CartpolePlant(), PDController()
        clean = simulate(plant, ctrl, 60, seed=16)
        for spec in (
            AnomalySpec(kind="action_factor", level="minor", params={"factor": 1.0}, onset=25),
            AnomalySpec(kind="action_offset", level="minor", params={"offset": 0.0}, onset=25),
            AnomalySpec(kind="action_noise", level="minor", params={"std": 0.0}, onset=25),
            AnomalySpec(kind="body_mass_factor", level="minor", params={"factor": 1.0}, onset=25),
            AnomalySpec(kind="force_vector", level="minor", params={"force": 0.0}, onset=25),
        ):
            anom = simulate(plant, ctrl, 60, seed=16, spec=spec)
            np.testing.assert_array_equal(anom.data, clean.data)

    def test_arno_on_constant_plant_is_identity(self):
        # constant clean episode -> zero per-dimension std -> zero noise matrix
        plant = LinearPlant(
            a_matrix=np.zeros((2, 2)), b_matrix=np.zeros((2, 1)), process_noise_std=0.0, init_std=0.0
        )
        ctrl = LinearFeedbackController(k_matrix=np.zeros((1, 2)))
        clean = simulate(plant, ctrl, 40, seed=17)
        anom = simulate(plant, ctrl, 40, seed=17, spec=make_ar_spec("arno", "strong", 1, onset=10))
        np.testing.assert_array_equal(anom.data, clean.data)

    def test_simulate_deterministic(self):
        plant, ctrl = default_linear_benchmark()
        spec = make_ar_spec("arns", "light", 1, onset=20)
        a = simulate(plant, ctrl, 80, seed=18, spec=spec)
        b = simulate(plant, ctrl, 80, seed=18, spec=spec)
        assert np.array_equal(a.data, b.data)

    def test_onset_inside_episode(self):
        plant, ctrl = CartpolePlant(), PDController()
        with pytest.raises(ConfigError):
            simulate(plant, ctrl, 20, seed=19, spec=make_ar_spec("arno", "light", 1, onset=20))

    def test_arns_hand_rolled_step_oracle(self):
        # A = 0, B = I: post-onset columns are exactly u_t + action-noise + process noise
        n = 3
        plant = LinearPlant(
            a_matrix=np.zeros((n, n)), b_matrix=np.eye(n), process_noise_std=0.3, init_std=1.0
        )
        k = 0.2 * np.eye(n)
        ctrl = LinearFeedbackController(k_matrix=k)
        onset, T, seed = 10, 30, 20
        spec = make_ar_spec("arns", "medium", 1, onset=onset)
        ep = simulate(plant, ctrl, T, seed=seed, spec=spec)

        clean = simulate(plant, ctrl, T, seed=seed)
        clean_actions = np.stack([-k @ clean.data[:, t - 1] for t in range(1, T)], axis=1)
        proc = ArProcess(order=1, coefs=(0.8,), noise_std=1.0)
        noise = noise_matrix(proc, 2 * n, T, seed)
        scale = np.concatenate([clean.data.std(axis=1), clean_actions.std(axis=1)])
        noise *= scale[:, None]  # level_mult for "medium" is 1.0

        rng = rng_from(seed, 0)
        rng.normal(0.0, 1.0, size=n)  # initial state draw
        state = ep.data[:, 0]
        for t in range(1, T):
            eps_t = rng.normal(0.0, 0.3, size=n)
            u = -k @ ep.data[:, t - 1]
            if t >= onset:
                expected = (u + noise[n:, t]) + eps_t
                np.testing.assert_allclose(ep.data[:, t], expected, rtol=0, atol=1e-12)

    def test_meta_and_labels(self):
        plant, ctrl = CartpolePlant(), PDController()
        spec = make_ar_spec("arno", "light", 2, onset=30)
        ep = simulate(plant, ctrl, 60, seed=21, spec=spec, meta={"scenario": "x"})
        assert ep.onset == spec.onset
        assert ep.meta["kind"] == "arno"
        assert ep.meta["scenario"] == "x"
        labels = ep.labels()
        assert labels.sum() == 30
