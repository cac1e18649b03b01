"""Thermally broadened transition fits and lever arm extraction.

A charge transition measured against gate voltage follows a hyperbolic
tangent riding on a linear background. Its voltage width measures the
electron temperature divided by the lever arm, so the width in kelvin
volts per eV is the quantity that survives calibration. Fitting widths
against mixing chamber temperature separates the lever arm from the
electron base temperature, after which voltage differences convert to
energies with propagated uncertainties.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .constants import BOLTZMANN_EV_PER_K
from .errors import ConfigError, IllConditioned, NoTransitionFound, NonConvergence

__all__ = [
    "TransitionTrace",
    "TransitionFit",
    "LeverArmFit",
    "load_trace_csv",
    "fit_transition",
    "fit_lever_arm",
    "fit_lever_arm_from_traces",
    "voltage_to_energy",
    "synthesize_transition_trace",
]


@dataclass(eq=False)
class TransitionTrace:
    """One current-versus-voltage sweep across a transition."""

    voltage: np.ndarray
    current: np.ndarray
    mixing_temp_k: float | None = None
    label: str = ""

    def __post_init__(self) -> None:
        self.voltage = np.asarray(self.voltage, dtype=float)
        self.current = np.asarray(self.current, dtype=float)
        if self.voltage.shape != self.current.shape or self.voltage.ndim != 1:
            raise ConfigError("voltage and current must be matching 1d arrays")
        if self.voltage.size < 10:
            raise ConfigError(f"trace needs at least 10 points, got {self.voltage.size}")
        order = np.argsort(self.voltage, kind="stable")
        self.voltage = self.voltage[order]
        self.current = self.current[order]
        if np.any(np.diff(self.voltage) == 0.0):
            raise ConfigError("trace voltages must be strictly monotone")

    def to_csv(self, path) -> None:
        header = ["# columns: gate voltage (V), current (arbitrary units)"]
        if self.mixing_temp_k is not None:
            header.append(f"# T_MC_K: {float(self.mixing_temp_k)!r}")
        header.append("voltage_V,current_au")
        lines = [
            f"{float(v)!r},{float(i)!r}" for v, i in zip(self.voltage, self.current)
        ]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(header + lines) + "\n")


def load_trace_csv(path, sidecar=None) -> TransitionTrace:
    """Read a trace CSV; mixing temperature from comment, column, or sidecar.

    The sidecar is a JSON file holding ``{"T_MC_K": value}``. A ``T_MC_K``
    column (constant) or a ``# T_MC_K:`` comment works without one.
    """
    t_mc: float | None = None
    rows: list[dict[str, str]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        header: list[str] | None = None
        for raw in csv.reader(fh):
            if not raw:
                continue
            if raw[0].lstrip().startswith("#"):
                text = ",".join(raw).lstrip("# ").strip()
                if text.startswith("T_MC_K:"):
                    t_mc = float(text.split(":", 1)[1])
                continue
            if header is None:
                header = [c.strip() for c in raw]
                for need in ("voltage_V", "current_au"):
                    if need not in header:
                        raise ConfigError(f"trace {path} lacks column {need}")
                continue
            rows.append(dict(zip(header, (c.strip() for c in raw))))
    if not rows:
        raise ConfigError(f"trace {path} has no data rows")
    voltage = np.array([float(r["voltage_V"]) for r in rows])
    current = np.array([float(r["current_au"]) for r in rows])
    if "T_MC_K" in rows[0]:
        t_mc = float(rows[0]["T_MC_K"])
    if sidecar is not None:
        with open(sidecar, encoding="utf-8") as fh:
            t_mc = float(json.load(fh)["T_MC_K"])
    return TransitionTrace(voltage=voltage, current=current, mixing_temp_k=t_mc)


def _transition_model(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    amp, width, center, slope, offset = p
    return amp * np.tanh((v - center) / width) + slope * v + offset


def _transition_jacobian(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    amp, width, center, slope, offset = p
    u = (v - center) / width
    sech2 = 1.0 / np.cosh(u) ** 2
    jac = np.empty((v.size, 5))
    jac[:, 0] = np.tanh(u)
    jac[:, 1] = -amp * u * sech2 / width
    jac[:, 2] = -amp * sech2 / width
    jac[:, 3] = v
    jac[:, 4] = 1.0
    return jac


def _initial_guess(v: np.ndarray, i: np.ndarray) -> np.ndarray:
    n = v.size
    k = max(3, n // 6)
    edge_lo = np.polyfit(v[:k], i[:k], 1)
    edge_hi = np.polyfit(v[-k:], i[-k:], 1)
    slope0 = 0.5 * (edge_lo[0] + edge_hi[0])
    detrended = i - slope0 * v
    window = max(1, n // 20)
    kernel = np.ones(window) / window
    # edge-padded smoothing: zero padding would fake cliffs at the ends,
    # and a cliff can outrun the real step in the gradient search below
    padded = np.pad(detrended, (window, window), mode="edge")
    smooth = np.convolve(padded, kernel, mode="same")[window:-window]
    lo = float(np.median(smooth[:k]))
    hi = float(np.median(smooth[-k:]))
    amp0 = 0.5 * (hi - lo)
    offset0 = 0.5 * (hi + lo)
    grad = np.gradient(smooth, v)
    interior = np.abs(grad[k : n - k])
    center0 = float(v[k + int(np.argmax(interior))])

    # quartile crossings of the step give the width: the model spans its
    # central half over 1.0986 widths
    width0 = 0.0
    if abs(amp0) > 0.0:
        rising = (smooth - offset0) * np.sign(amp0)
        above1 = np.nonzero(rising >= -0.5 * abs(amp0))[0]
        above3 = np.nonzero(rising >= 0.5 * abs(amp0))[0]
        if above1.size and above3.size:
            width0 = abs(v[above3[0]] - v[above1[0]]) / 1.0986
    if width0 <= 0.0:
        width0 = (v[-1] - v[0]) / 10.0
    return np.array([amp0, width0, center0, slope0, offset0])


@dataclass(frozen=True)
class TransitionFit:
    """Fitted transition parameters with one-sigma uncertainties.

    ``width_v`` is the voltage width of the tanh argument; dividing by
    twice the Boltzmann constant gives the calibration-free broadening in
    kelvin volts per eV.
    """

    amplitude: float
    width_v: float
    center_v: float
    slope: float
    offset: float
    amplitude_err: float
    width_err: float
    center_err: float
    slope_err: float
    offset_err: float
    residual_rms: float
    n_points: int
    mixing_temp_k: float | None = None

    @property
    def broadening_kv_per_ev(self) -> float:
        return self.width_v / (2.0 * BOLTZMANN_EV_PER_K)

    @property
    def broadening_err(self) -> float:
        return self.width_err / (2.0 * BOLTZMANN_EV_PER_K)

    def electron_temperature_k(self, lever_arm_ev_per_v: float) -> float:
        return self.broadening_kv_per_ev * lever_arm_ev_per_v

    def model(self, voltage: np.ndarray) -> np.ndarray:
        p = np.array([self.amplitude, self.width_v, self.center_v, self.slope, self.offset])
        return _transition_model(p, np.asarray(voltage, dtype=float))

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "amplitude_err": self.amplitude_err,
            "width_v": self.width_v,
            "width_err": self.width_err,
            "center_v": self.center_v,
            "center_err": self.center_err,
            "slope": self.slope,
            "slope_err": self.slope_err,
            "offset": self.offset,
            "offset_err": self.offset_err,
            "broadening_kv_per_ev": self.broadening_kv_per_ev,
            "broadening_err": self.broadening_err,
            "residual_rms": self.residual_rms,
            "n_points": self.n_points,
            "mixing_temp_k": self.mixing_temp_k,
        }


def fit_transition(trace: TransitionTrace, *, max_iter: int = 200) -> TransitionFit:
    """Least-squares fit of the broadened step with analytic derivatives.

    Raises NoTransitionFound when the fitted step does not rise above
    three times the residual noise, and NonConvergence when the refiner
    exhausts its budget.
    """
    v, i = trace.voltage, trace.current
    p0 = _initial_guess(v, i)

    def residuals(p):
        return _transition_model(p, v) - i

    def jacobian(p):
        return _transition_jacobian(p, v)

    result = least_squares(
        residuals, p0, jac=jacobian, method="lm", max_nfev=max_iter * len(p0)
    )
    if result.status == 0:
        raise NonConvergence(
            f"transition fit stopped after {result.nfev} evaluations without converging"
        )
    p = result.x
    if p[1] < 0.0:
        # the model is even under flipping width and amplitude together
        p = p.copy()
        p[0], p[1] = -p[0], -p[1]

    n, k = v.size, p.size
    rms = float(np.sqrt(np.mean(result.fun**2)))
    if abs(p[0]) < 3.0 * rms:
        raise NoTransitionFound(
            f"step amplitude {abs(p[0]):.3e} is below three times the "
            f"residual noise {rms:.3e}"
        )
    span = float(v[-1] - v[0])
    if not (v[0] <= p[2] <= v[-1]) or p[1] > span:
        raise NoTransitionFound(
            f"no resolvable transition inside the data window: the best fit "
            f"wants center {p[2]:.3e} V and width {p[1]:.3e} V over a "
            f"{span:.3e} V span"
        )
    jtj = _transition_jacobian(p, v).T @ _transition_jacobian(p, v)
    scale = float(np.sum(result.fun**2)) / max(n - k, 1)
    cov = np.linalg.pinv(jtj) * scale
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return TransitionFit(
        amplitude=float(p[0]),
        width_v=float(p[1]),
        center_v=float(p[2]),
        slope=float(p[3]),
        offset=float(p[4]),
        amplitude_err=float(err[0]),
        width_err=float(err[1]),
        center_err=float(err[2]),
        slope_err=float(err[3]),
        offset_err=float(err[4]),
        residual_rms=rms,
        n_points=n,
        mixing_temp_k=trace.mixing_temp_k,
    )


@dataclass(frozen=True)
class LeverArmFit:
    """Lever arm and electron base temperature from broadening data.

    The broadening in kelvin volts per eV saturates at the base electron
    temperature over the lever arm and grows as mixing temperature over
    the lever arm once heating wins.
    """

    lever_arm_ev_per_v: float
    base_temp_k: float
    lever_arm_err: float
    base_temp_err: float
    residual_rms: float
    n_points: int
    mixing_temps_k: tuple[float, ...] = ()
    broadenings_kv_per_ev: tuple[float, ...] = ()
    covariance: tuple[tuple[float, float], tuple[float, float]] = (
        (0.0, 0.0),
        (0.0, 0.0),
    )

    def electron_temperature_k(self, mixing_temp_k: float) -> float:
        return math.sqrt(mixing_temp_k**2 + self.base_temp_k**2)

    def model(self, mixing_temps_k) -> np.ndarray:
        t = np.asarray(mixing_temps_k, dtype=float)
        return np.sqrt(t**2 + self.base_temp_k**2) / self.lever_arm_ev_per_v

    def to_dict(self) -> dict:
        return {
            "lever_arm_ev_per_v": self.lever_arm_ev_per_v,
            "lever_arm_err": self.lever_arm_err,
            "base_temp_k": self.base_temp_k,
            "base_temp_err": self.base_temp_err,
            "residual_rms": self.residual_rms,
            "n_points": self.n_points,
            "mixing_temps_k": list(self.mixing_temps_k),
            "broadenings_kv_per_ev": list(self.broadenings_kv_per_ev),
            "covariance": [list(row) for row in self.covariance],
        }


def fit_lever_arm(
    mixing_temps_k,
    broadenings_kv_per_ev,
    broadening_errs=None,
) -> LeverArmFit:
    """Fit broadening versus mixing temperature.

    Model: the electron temperature adds the base temperature and the
    mixing temperature in quadrature, and the broadening is that over the
    lever arm. Raises IllConditioned when the data never leave the
    saturated regime, which leaves the two parameters degenerate.
    """
    t = np.asarray(mixing_temps_k, dtype=float)
    tau = np.asarray(broadenings_kv_per_ev, dtype=float)
    if t.shape != tau.shape or t.ndim != 1:
        raise ConfigError("temperatures and broadenings must be matching 1d arrays")
    if t.size < 3:
        raise ConfigError(f"lever arm fit needs at least 3 points, got {t.size}")
    if np.any(t < 0.0) or np.any(tau <= 0.0):
        raise ConfigError("temperatures must be non-negative and broadenings positive")
    sigma = np.ones_like(tau)
    if broadening_errs is not None:
        sigma = np.asarray(broadening_errs, dtype=float)
        if sigma.shape != tau.shape or np.any(sigma <= 0.0):
            raise ConfigError("broadening errors must be positive and match the data")

    hot = int(np.argmax(t))
    alpha0 = max(t[hot] / tau[hot], 1e-12)
    base_sq = (float(np.min(tau)) * alpha0) ** 2 - float(np.min(t)) ** 2
    base0 = math.sqrt(max(base_sq, (0.05 * t[hot]) ** 2))

    def residuals(p):
        alpha, base = p
        return (np.sqrt(t**2 + base**2) / alpha - tau) / sigma

    def jacobian(p):
        alpha, base = p
        root = np.sqrt(t**2 + base**2)
        jac = np.empty((t.size, 2))
        jac[:, 0] = -root / alpha**2 / sigma
        jac[:, 1] = base / (alpha * root) / sigma
        return jac

    result = least_squares(residuals, np.array([alpha0, base0]), jac=jacobian, method="lm")
    if result.status == 0:
        raise NonConvergence("lever arm fit exhausted its evaluation budget")
    alpha, base = float(result.x[0]), abs(float(result.x[1]))
    if base > 3.0 * float(np.max(t)):
        raise IllConditioned(
            f"every mixing temperature (max {np.max(t):.3g} K) lies far below "
            f"the fitted base temperature {base:.3g} K; the lever arm and base "
            "temperature cannot be separated"
        )
    n, k = t.size, 2
    scale = float(np.sum(result.fun**2)) / max(n - k, 1)
    cov = np.linalg.pinv(jacobian(result.x).T @ jacobian(result.x)) * scale
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return LeverArmFit(
        lever_arm_ev_per_v=alpha,
        base_temp_k=base,
        lever_arm_err=float(err[0]),
        base_temp_err=float(err[1]),
        residual_rms=float(np.sqrt(np.mean(result.fun**2))),
        n_points=n,
        mixing_temps_k=tuple(float(x) for x in t),
        broadenings_kv_per_ev=tuple(float(x) for x in tau),
        covariance=(
            (float(cov[0, 0]), float(cov[0, 1])),
            (float(cov[1, 0]), float(cov[1, 1])),
        ),
    )


def fit_lever_arm_from_traces(traces, *, max_iter: int = 200) -> tuple[LeverArmFit, list[TransitionFit]]:
    """Fit every trace, then fit the lever arm to the fitted broadenings."""
    fits = []
    for trace in traces:
        if trace.mixing_temp_k is None:
            raise ConfigError("every trace needs a mixing temperature for the lever arm fit")
        fits.append(fit_transition(trace, max_iter=max_iter))
    lever = fit_lever_arm(
        [f.mixing_temp_k for f in fits],
        [f.broadening_kv_per_ev for f in fits],
        [max(f.broadening_err, 1e-12) for f in fits],
    )
    return lever, fits


def voltage_to_energy(
    delta_v: float,
    lever_arm_ev_per_v: float,
    *,
    delta_v_err: float = 0.0,
    lever_arm_err: float = 0.0,
) -> tuple[float, float]:
    """Convert a voltage difference to energy with propagated uncertainty.

    Independent relative errors add in quadrature.
    """
    energy = lever_arm_ev_per_v * delta_v
    err = math.hypot(lever_arm_ev_per_v * delta_v_err, delta_v * lever_arm_err)
    return energy, abs(err)


def synthesize_transition_trace(
    voltages,
    *,
    amplitude: float,
    center_v: float,
    broadening_kv_per_ev: float | None = None,
    electron_temp_k: float | None = None,
    lever_arm_ev_per_v: float | None = None,
    slope: float = 0.0,
    offset: float = 0.0,
    noise_rms: float = 0.0,
    seed: int = 0,
    mixing_temp_k: float | None = None,
) -> TransitionTrace:
    """Generate a trace from known parameters, for tests and demos.

    Give the broadening directly, or an electron temperature together with
    a lever arm.
    """
    if broadening_kv_per_ev is None:
        if electron_temp_k is None or lever_arm_ev_per_v is None:
            raise ConfigError(
                "give broadening_kv_per_ev, or electron_temp_k with lever_arm_ev_per_v"
            )
        broadening_kv_per_ev = electron_temp_k / lever_arm_ev_per_v
    if broadening_kv_per_ev <= 0.0:
        raise ConfigError("broadening must be positive")
    v = np.asarray(voltages, dtype=float)
    width = 2.0 * BOLTZMANN_EV_PER_K * broadening_kv_per_ev
    p = np.array([amplitude, width, center_v, slope, offset])
    current = _transition_model(p, v)
    if noise_rms > 0.0:
        rng = np.random.Generator(np.random.Philox(key=seed))
        current = current + noise_rms * rng.standard_normal(v.size)
    return TransitionTrace(voltage=v, current=current, mixing_temp_k=mixing_temp_k)
