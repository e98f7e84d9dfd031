import pytest

from cesbl_ra.config import (
    ConfigError,
    ExperimentSpec,
    SystemConfig,
    build_experiment,
    load_experiment,
    load_system,
    parse_config_text,
)


def test_defaults_match_the_reference_scenario():
    cfg = SystemConfig()
    assert (cfg.M, cfg.N_p, cfg.L, cfg.t_m) == (64, 64, 64, 4)
    assert (cfg.a, cfg.b, cfg.c, cfg.d) == (30.0, 1e-4, 0.125, 1e-4)
    assert cfg.lam == 0.01 and cfg.tol == 1e-8 and cfg.max_iters == 500
    assert cfg.n_hat == 320 and cfg.l_hat == 68


def test_invalid_scenarios_rejected():
    with pytest.raises(ConfigError):
        SystemConfig(K=0)
    with pytest.raises(ConfigError):
        SystemConfig(N_p=2, t_m=1, K=5)
    with pytest.raises(ConfigError):
        SystemConfig(lam=2.0)
    with pytest.raises(ConfigError):
        SystemConfig(theta2=0.0)


def test_guard_interval_warning(caplog):
    SystemConfig(t_m=4, t_g=4)
    assert "guard interval" in caplog.text


def test_solver_config_uses_per_real_entry_variance():
    assert SystemConfig().solver_config(0.5).sigma2 == 0.25


def test_detector_threshold_follows_snr():
    assert SystemConfig(snr_db=15.0).detector_config().theta1 == pytest.approx(0.96935, abs=1e-5)
    assert SystemConfig(theta1=0.9).detector_config().theta1 == 0.9


def test_parse_rejects_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("M = 8\nbogus = 1\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("M = 8\nM = 9\n")
    with pytest.raises(ConfigError, match="expected"):
        parse_config_text("M 8\n")


def test_build_experiment_from_text():
    text = """
    # small K sweep
    M = 16
    N_p = 8
    L = 12
    t_m = 2
    snr_db = inf
    sweep = K
    values = 2, 4, 6
    trials = 3
    solvers = ce_sbl
    seed = 11
    """
    spec = build_experiment(parse_config_text(text))
    assert spec.values == (2, 4, 6) and spec.trials == 3 and spec.seed == 11
    assert spec.solvers == ("ce_sbl",)
    assert spec.point(4).K == 4 and spec.base.noiseless


def test_profiles():
    spec = build_experiment({}, "fast")
    assert (spec.base.M, spec.base.N_p, spec.base.L, spec.base.t_m) == (32, 32, 32, 4)
    assert max(spec.values) <= 20 and spec.trials == 50
    paper = build_experiment({}, "paper")
    assert paper.base.M == 64
    with pytest.raises(ConfigError):
        build_experiment({}, "huge")


def test_snr_sweep_values_are_floats():
    spec = build_experiment(parse_config_text("sweep = snr_db\nvalues = 0, 10, inf\nK = 4\nN_p = 8\nt_m = 1"))
    assert spec.values == (0.0, 10.0, float("inf"))


def test_sweep_point_validated_per_value():
    with pytest.raises(ConfigError):
        build_experiment(parse_config_text("N_p = 4\nt_m = 1\nsweep = K\nvalues = 4, 9"))


def test_experiment_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec(sweep="M")
    with pytest.raises(ConfigError):
        ExperimentSpec(trials=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(solvers=("omp",))


def test_file_loaders(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("M = 16\nN_p = 8\nL = 8\nK = 3\nt_m = 1\nvalues = 1,2\ntrials = 2\n")
    spec = load_experiment(path, seed=7)
    assert spec.seed == 7 and spec.values == (1, 2)
    assert load_system(path).M == 16
