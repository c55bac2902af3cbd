import numpy as np
import pytest
from numpy.testing import assert_allclose

from garo.algebra import E0, embed_point
from garo.costs import tool_line
from garo.errors import ConfigError, DegeneracyError
from garo.primitives import make_line
from garo.targets import compile_expression, default_tool, normalize, parse_target


def test_static_target_is_normalized():
    spec = parse_target("line:0,0,0;1,0,0")
    assert not spec.moving
    x = spec.static()
    assert_allclose(x.norm(), 1.0)
    ref = make_line([0, 0, 0], [1, 0, 0])
    assert x.allclose(ref / ref.norm())
    assert spec.as_target() is not None


def test_moving_target_follows_script():
    spec = parse_target("point:0.5, 0.2*sin(t), 0.4")
    assert spec.moving
    times = np.array([0.0, 0.5, 1.0])
    x = spec.primitive_at(times)
    assert x.shape == (3,)
    for k, t in enumerate(times):
        assert x[k].allclose(normalize(embed_point([0.5, 0.2 * np.sin(t), 0.4])))
    assert callable(spec.as_target())


def test_expression_language():
    f = compile_expression("2*pi - cos(t)**2 + sqrt(4) / abs(-2) + exp(0) - tanh(0) + e - e")
    assert_allclose(f(0.0), 2 * np.pi - 1 + 1 + 1)
    assert_allclose(compile_expression("-t")(np.array([1.0, 2.0])), [-1.0, -2.0])
    assert_allclose(compile_expression("3")(np.zeros(4)), np.full(4, 3.0))


@pytest.mark.parametrize("text", ["__import__('os')", "t.real", "open(1)", "[1, 2]", "sin(t, t)", "x + 1", "1 +"])
def test_expression_rejects_unsafe_or_invalid(text):
    with pytest.raises(ConfigError):
        compile_expression(text)


def test_task_kinds_and_tools():
    assert parse_target("pointing:0.6,0.3,0.2").primitive_kind == "point"
    assert parse_target("grasp:0.5,0,0.3;0.4,0.1,0.3;0.3,0,0.3").primitive_kind == "circle"
    assert default_tool("pointing").allclose(tool_line())
    assert default_tool("point").allclose(E0)


@pytest.mark.parametrize("text", ["widget:0,0,0", "0,0,0", "line:0,0,0", "point:1,2"])
def test_bad_literals(text):
    with pytest.raises(ConfigError):
        parse_target(text)


def test_degenerate_literal_raises_early():
    with pytest.raises(DegeneracyError):
        parse_target("circle:0,0,0;1,0,0;2,0,0")
