import pytest

from gpopt import ConfigError, Kernel
from gpopt.config import load_config, parse_config, parse_text

TEXT = """
# himmelblau comparison
objective = himmelblau
policy = gpmi, gpucb,ei   # three runs
delta = 1e-3
horizon = 50
trials = 8
master_seed = 11
"""


def test_policy_list_expands():
    cfgs = parse_config(TEXT)
    assert [c.policy for c in cfgs] == ["gpmi", "gpucb", "ei"]
    for c in cfgs:
        assert (c.objective, c.delta, c.horizon, c.trials, c.master_seed) == (
            "himmelblau", 1e-3, 50, 8, 11)


def test_comments_and_blank_lines_only():
    assert parse_text("# nothing\n\n   \n") == {}
    assert [c.policy for c in parse_config("")] == ["gpmi"]


def test_kernel_keys():
    (cfg,) = parse_config("kernel = matern\nnu = 2\nlength_scale = 0.3\n")
    assert cfg.kernel == Kernel("matern", length_scale=0.3, nu=2.0)
    with pytest.raises(ConfigError):
        parse_config("length_scale = 0.3\n")


@pytest.mark.parametrize("text, where", [
    ("objective himmelblau", "line 1"),
    ("\nwidth = 3", "line 2"),
    ("trials = 3\ntrials = 4", "line 2"),
    ("horizon =", "line 1"),
])
def test_syntax_errors_name_the_line(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_text(text)


@pytest.mark.parametrize("text", ["trials = many", "delta = 2", "policy = ,",
                                  "policy = thompson", "objective = tsunami"])
def test_bad_values(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text(TEXT, encoding="utf-8")
    assert len(load_config(p)) == 3
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
