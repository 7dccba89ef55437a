"""Parsing of the compact object specs used in configs and CLI flags.

Grammar: ``tag{key=value,key=value}`` with Python-literal values, e.g.
``quadratic{B=[[1,0],[0,2]]}``, ``weibull{p=1.5,scale=1,d=2}``,
``exp_linear{w=[1,-1]}``. A bare tag means no parameters.
"""
from __future__ import annotations

import ast

import numpy as np

from .empirical import (Gaussian, RademacherScaled, SymmetricWeibull,
                        UniformBox)
from .errors import ConfigError
from .young import (make_bounded_support, make_logcosh, make_power,
                    make_quadratic, make_radial)


def parse_spec(text: str):
    """Split ``tag{k=v,...}`` into (tag, {k: parsed_v})."""
    text = text.strip()
    if "{" not in text:
        return text, {}
    if not text.endswith("}"):
        raise ConfigError(text, "unterminated parameter block")
    tag, _, body = text.partition("{")
    body = body[:-1]
    params = {}
    for item in _split_top_level(body):
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(text, f"expected key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            params[key.strip()] = ast.literal_eval(raw.strip())
        except (ValueError, SyntaxError):
            params[key.strip()] = raw.strip()
    return tag.strip(), params


def _split_top_level(body: str):
    out, depth, cur = [], 0, []
    for ch in body:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur).strip())
    return out


def _arr(z):
    return np.asarray(z, dtype=float)


# name -> (nu, nu_prime) for the radial family
_NU_REGISTRY = {
    "half": (lambda z: 0.5 * _arr(z), lambda z: np.full_like(_arr(z), 0.5)),
    "identity": (lambda z: _arr(z), lambda z: np.ones_like(_arr(z))),
    "pow2": (lambda z: _arr(z) ** 2, lambda z: 2.0 * _arr(z)),
    "pow3": (lambda z: _arr(z) ** 3, lambda z: 3.0 * _arr(z) ** 2),
}


def young_from_spec(text: str):
    """Build a generating function from its spec string."""
    tag, p = parse_spec(text)
    try:
        if tag == "quadratic":
            return make_quadratic(np.asarray(p["B"], dtype=float))
        if tag == "power":
            return make_power(float(p["p"]), float(p.get("c", 1.0)),
                              int(p.get("d", 1)))
        if tag == "bounded":
            return make_bounded_support(float(p["K"]), float(p.get("c", 1.0)))
        if tag == "radial":
            name = str(p["nu"])
            if name not in _NU_REGISTRY:
                raise ConfigError(text, f"unknown nu {name!r} "
                                  f"(have {sorted(_NU_REGISTRY)})")
            nu, nu_prime = _NU_REGISTRY[name]
            return make_radial(nu, np.asarray(p["Q"], dtype=float),
                               nu_prime=nu_prime)
        if tag == "logcosh":
            return make_logcosh(int(p.get("d", 1)), float(p.get("scale", 1.0)))
    except KeyError as exc:
        raise ConfigError(text, f"missing parameter {exc}") from None
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(text, str(exc)) from None
    raise ConfigError(text, f"unknown function family {tag!r}")


def distribution_from_spec(text: str):
    """Build a sampleable distribution from its spec string."""
    tag, p = parse_spec(text)
    try:
        if tag == "gaussian":
            return Gaussian(np.asarray(p["Q"], dtype=float),
                            require_full_rank=bool(p.get("full_rank", False)))
        if tag == "weibull":
            return SymmetricWeibull(float(p["p"]), float(p.get("scale", 1.0)),
                                    int(p.get("d", 1)))
        if tag == "rademacher":
            return RademacherScaled(float(p.get("scale", 1.0)),
                                    int(p.get("d", 1)))
        if tag == "uniform":
            return UniformBox(np.asarray(p["hw"], dtype=float))
    except KeyError as exc:
        raise ConfigError(text, f"missing parameter {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(text, str(exc)) from None
    raise ConfigError(text, f"unknown distribution {tag!r}")


def function_from_spec(text: str):
    """Evaluable target functions for the monotonicity checkers.

    Returns (callable over (m, d) points, dimension).
    """
    tag, p = parse_spec(text)
    if tag == "exp_linear":
        w = np.asarray(p["w"], dtype=float).ravel()
        a = float(p.get("a", 1.0))

        def f(x):
            return a * np.exp(np.atleast_2d(x) @ w)

        return f, w.size
    if tag == "gaussian_mgf":
        Q = np.atleast_2d(np.asarray(p["Q"], dtype=float))

        def f(x):
            x = np.atleast_2d(x)
            return np.exp(0.5 * np.einsum("ij,jk,ik->i", x, Q, x))

        return f, Q.shape[0]
    if tag == "cosh":
        d = int(p.get("d", 1))
        scale = float(p.get("scale", 1.0))

        def f(x):
            return np.prod(np.cosh(scale * np.atleast_2d(x)), axis=1)

        return f, d
    if tag == "constant":
        d = int(p.get("d", 1))
        v = float(p.get("v", 1.0))

        def f(x):
            return np.full(np.atleast_2d(x).shape[0], v)

        return f, d
    raise ConfigError(text, f"unknown target function {tag!r}")
