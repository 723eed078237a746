"""scikit-learn style wrapper: fit computes the equilibrium data, predict evaluates u_phi."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .cli import RunConfig, build
from .measure import measure_atoms
from .transfer import EMPIRICAL, eigendata


class ThermodynamicEstimator(BaseEstimator):
    """Pressure, eigenfunction and equilibrium state for one configured system.

    Parameters mirror the CLI config keys.  ``fit`` ignores X; it exists
    so the object slots into pipelines and parameter searches.
    """

    def __init__(self, system="circle", potential="constant", d=2, k=2, adjacency="11;10",
                 c="0,0", value="0", beta="1", amplitude="0.1", t="-1", n=10, mode=EMPIRICAL,
                 allow_fallback=True):
        self.system = system
        self.potential = potential
        self.d = d
        self.k = k
        self.adjacency = adjacency
        self.c = c
        self.value = value
        self.beta = beta
        self.amplitude = amplitude
        self.t = t
        self.n = n
        self.mode = mode
        self.allow_fallback = allow_fallback

    def _config(self):
        cfg = RunConfig()
        for key in ("system", "potential", "d", "k", "adjacency", "c", "value", "beta",
                    "amplitude", "t", "n", "mode", "allow_fallback"):
            setattr(cfg, key, getattr(self, key))
        return cfg.validate()

    def fit(self, X=None, y=None):
        system, pot = build(self._config())
        ed = eigendata(system, pot, self.n, self.mode, self.allow_fallback)
        self.system_ = system
        self.potential_ = pot
        self.eigendata_ = ed
        self.pressure_ = float(ed.P.mid)
        self.pressure_radius_ = float(ed.P.rad)
        self.mode_ = ed.mode
        return self

    def _check(self):
        if not hasattr(self, "eigendata_"):
            raise NotFittedError("call fit first")

    def predict(self, X):
        """u_phi at the given points (floats for the circle, Words for shifts)."""
        self._check()
        return np.array([self.eigendata_.u_at(x) for x in X])

    def measure(self):
        self._check()
        return measure_atoms(self.system_, self.potential_, self.n, self.mode_,
                             self.allow_fallback, ed=self.eigendata_)

    def score(self, X=None, y=None):
        # negative certified radius: larger is better
        self._check()
        return -self.pressure_radius_
